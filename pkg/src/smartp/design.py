"""Two-stage SMART structure: arms, treatment paths, regimes, probabilities.

A design is specified by a matrix triple:

* ``mu``  - per-path mean vectors (rows = paths, columns = sub-units);
* ``st1`` - one row per stage-1 arm: (# responder options, # non-responder
  options, response rate);
* ``dtr`` - one row per regime: (regime #, responder path #,
  non-responder path #, arm #), all 1-based.

Stage-1 randomization probabilities support three modes.  ``balanced``
weights each arm by ``(gamma/n_resp + (1-gamma)/n_nonresp)^{-1}``
(normalized), equalizing expected per-regime allocation.  ``max`` weights
each arm by ``max(n_resp, n_nonresp)``.  ``equal`` is uniform.  The
``pi1_literal`` compatibility flag reproduces a quirk of a widely used
printed form of these weights in which arms after the first treat their non-responder share as a
single option; it is off by default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Stage1Mode(str, Enum):
    BALANCED = "balanced"
    MAX = "max"
    EQUAL = "equal"


@dataclass(frozen=True)
class Stage1Arm:
    index: int  # 0-based
    n_resp_options: int
    n_nonresp_options: int
    response_rate: float

    def __post_init__(self):
        if self.n_resp_options < 1 or self.n_nonresp_options < 1:
            raise ValueError(f"arm {self.index + 1}: option counts must be >= 1")
        if not 0.0 <= self.response_rate <= 1.0:
            raise ValueError(f"arm {self.index + 1}: response rate must be in [0,1]")


@dataclass(frozen=True)
class TreatmentPath:
    index: int  # 0-based
    arm: int  # 0-based arm index
    responder: bool
    mu: tuple[float, ...]  # per-sub-unit mean


@dataclass(frozen=True)
class Regime:
    index: int  # 0-based
    responder_path: int
    nonresp_path: int
    arm: int


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass(frozen=True)
class SmartDesign:
    n_units: int
    arms: tuple[Stage1Arm, ...]
    paths: tuple[TreatmentPath, ...]
    regimes: tuple[Regime, ...]
    stage1_mode: Stage1Mode = Stage1Mode.BALANCED
    pi1_literal: bool = False


def validate(design: SmartDesign) -> list[Violation]:
    """Check structural invariants; returns an empty list when the design is sound."""
    out: list[Violation] = []
    n_arms = len(design.arms)
    for p in design.paths:
        if not 0 <= p.arm < n_arms:
            out.append(Violation("path-arm", f"path {p.index + 1} references arm {p.arm + 1}"))
        if len(p.mu) != design.n_units:
            out.append(
                Violation(
                    "path-mu",
                    f"path {p.index + 1} mean vector has length {len(p.mu)}, expected {design.n_units}",
                )
            )
        if not all(np.isfinite(p.mu)):
            out.append(Violation("path-mu", f"path {p.index + 1} mean vector is not finite"))
    for arm in design.arms:
        n_r = sum(1 for p in design.paths if p.arm == arm.index and p.responder)
        n_nr = sum(1 for p in design.paths if p.arm == arm.index and not p.responder)
        if n_r != arm.n_resp_options:
            out.append(
                Violation(
                    "arm-paths",
                    f"arm {arm.index + 1} declares {arm.n_resp_options} responder options "
                    f"but has {n_r} responder paths",
                )
            )
        if n_nr != arm.n_nonresp_options:
            out.append(
                Violation(
                    "arm-paths",
                    f"arm {arm.index + 1} declares {arm.n_nonresp_options} non-responder options "
                    f"but has {n_nr} non-responder paths",
                )
            )
    n_paths = len(design.paths)
    for r in design.regimes:
        for label, idx, want_resp in (
            ("responder", r.responder_path, True),
            ("non-responder", r.nonresp_path, False),
        ):
            if not 0 <= idx < n_paths:
                out.append(
                    Violation("regime-path", f"regime {r.index + 1} references path {idx + 1}")
                )
                continue
            p = design.paths[idx]
            if p.responder != want_resp:
                out.append(
                    Violation(
                        "regime-path",
                        f"regime {r.index + 1} uses path {idx + 1} as its {label} path "
                        f"but that path is {'responder' if p.responder else 'non-responder'}",
                    )
                )
            if p.arm != r.arm:
                out.append(
                    Violation(
                        "regime-arm",
                        f"regime {r.index + 1} is on arm {r.arm + 1} but path {idx + 1} "
                        f"is on arm {p.arm + 1}",
                    )
                )
    return out


def require_valid(design: SmartDesign) -> None:
    bad = validate(design)
    if bad:
        msgs = "; ".join(v.detail for v in bad)
        raise ValueError(f"invalid design: {msgs}")


def _arm_weight(arm: Stage1Arm, mode: Stage1Mode, literal_tail: bool) -> float:
    n_nr = 1 if literal_tail else arm.n_nonresp_options
    if mode is Stage1Mode.MAX:
        return float(max(arm.n_resp_options, n_nr))
    g = arm.response_rate
    return 1.0 / (g / arm.n_resp_options + (1.0 - g) / n_nr)


def stage1_probs(design: SmartDesign) -> np.ndarray:
    """Stage-1 allocation probability per arm (sums to 1)."""
    mode = design.stage1_mode
    if mode is Stage1Mode.EQUAL:
        n = len(design.arms)
        return np.full(n, 1.0 / n)
    w = np.array(
        [
            _arm_weight(arm, mode, design.pi1_literal and arm.index > 0)
            for arm in design.arms
        ]
    )
    return w / w.sum()


def stage2_prob(design: SmartDesign, path_index: int) -> float:
    """Stage-2 allocation probability of the given path (0-based)."""
    p = design.paths[path_index]
    arm = design.arms[p.arm]
    return 1.0 / arm.n_resp_options if p.responder else 1.0 / arm.n_nonresp_options


def path_tables(design: SmartDesign) -> dict[str, np.ndarray]:
    """Per-path vectors: p_st1, p_st2, res, ga, initr (initr is 1-based)."""
    pi1 = stage1_probs(design)
    p_st1 = np.array([pi1[p.arm] for p in design.paths])
    p_st2 = np.array([stage2_prob(design, p.index) for p in design.paths])
    res = np.array([1 if p.responder else 0 for p in design.paths])
    ga = np.array([design.arms[p.arm].response_rate for p in design.paths])
    initr = np.array([p.arm + 1 for p in design.paths])
    return {"p_st1": p_st1, "p_st2": p_st2, "res": res, "ga": ga, "initr": initr}


def design_from_matrices(
    mu: np.ndarray,
    st1: np.ndarray,
    dtr: np.ndarray,
    stage1_mode: Stage1Mode | str = Stage1Mode.BALANCED,
    pi1_literal: bool = False,
) -> SmartDesign:
    """Build a design from the (mu, st1, dtr) matrix triple (1-based ids in dtr)."""
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    st1 = np.atleast_2d(np.asarray(st1, dtype=float))
    dtr = np.atleast_2d(np.asarray(dtr, dtype=float))
    mode = Stage1Mode(stage1_mode)
    arms = tuple(
        Stage1Arm(i, int(row[0]), int(row[1]), float(row[2])) for i, row in enumerate(st1)
    )
    # path -> (arm, responder) comes from the dtr rows; responder paths are the
    # ones named in the responder column
    n_paths = mu.shape[0]
    arm_of = {}
    resp_of = {}
    for row in dtr:
        rp, nrp, arm = int(row[1]) - 1, int(row[2]) - 1, int(row[3]) - 1
        for idx, is_resp in ((rp, True), (nrp, False)):
            if not 0 <= idx < n_paths:
                raise ValueError(f"dtr references path {idx + 1} but mu has {n_paths} rows")
            if idx in resp_of and (resp_of[idx] != is_resp or arm_of[idx] != arm):
                raise ValueError(f"path {idx + 1} is used inconsistently across dtr rows")
            arm_of[idx] = arm
            resp_of[idx] = is_resp
    missing = [i + 1 for i in range(n_paths) if i not in arm_of]
    if missing:
        raise ValueError(f"paths {missing} are not reachable from any dtr row")
    paths = tuple(
        TreatmentPath(i, arm_of[i], resp_of[i], tuple(mu[i])) for i in range(n_paths)
    )
    regimes = tuple(
        Regime(i, int(row[1]) - 1, int(row[2]) - 1, int(row[3]) - 1)
        for i, row in enumerate(dtr)
    )
    design = SmartDesign(mu.shape[1], arms, paths, regimes, mode, pi1_literal)
    require_valid(design)
    return design


def periodontitis_default(
    gamma1: float = 0.25,
    gamma2: float = 0.5,
    mu: np.ndarray | None = None,
    n_units: int = 28,
    stage1_mode: Stage1Mode | str = Stage1Mode.BALANCED,
    pi1_literal: bool = False,
) -> SmartDesign:
    """The built-in two-arm design: 10 paths, 8 regimes.

    Arm 1 (e.g. scaling/root planing) and arm 2 (e.g. laser) each keep
    responders on the initial treatment (1 option) and re-randomize
    non-responders over 4 adjunct options.  Path order: arm-1 responder,
    arm-1 non-responders x4, arm-2 responder, arm-2 non-responders x4.
    """
    if mu is None:
        mu = np.zeros((10, n_units))
    st1 = np.array([[1, 4, gamma1, 1], [1, 4, gamma2, 2]])
    dtr = np.column_stack(
        [
            np.arange(1, 9),
            np.repeat([1, 6], 4),
            np.array([2, 3, 4, 5, 7, 8, 9, 10]),
            np.repeat([1, 2], 4),
        ]
    )
    return design_from_matrices(mu, st1, dtr, stage1_mode, pi1_literal)
