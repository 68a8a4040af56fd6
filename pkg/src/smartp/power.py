"""Sample-size formula and the Wald test.

The required cluster count for a two-sided level-alpha test with power
1 - beta is ``N = ceil(2 (z_{alpha/2} - z_{1-beta})^2 sigma^2 / delta^2)``,
where sigma^2 is half the N-scaled variance of the effect estimator
(``Var(delta_hat) = 2 sigma^2 / N``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .missing import normal_cdf, normal_quantile


class TestKind(str, Enum):
    __test__ = False  # not a pytest class

    SINGLE_REGIME = "single"
    SHARED_PAIR = "shared-pair"
    DISTINCT_PAIR = "distinct-pair"


@dataclass(frozen=True)
class TestSpec:
    __test__ = False  # not a pytest class

    kind: TestKind
    alpha: float = 0.05
    beta: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")


@dataclass(frozen=True)
class SampleSizeResult:
    """Everything the sample-size command reports (variances on the N x Var scale)."""

    n: int
    delta: float  # |effect size|
    delta_std: float  # |effect| / sqrt(sig_e_sq / 2)
    ybard1: float
    ybard2: float
    sig_d1_sq: float
    sig_d2_sq: float
    sig_d1d2: float
    sig_e_sq: float
    p_st1: tuple[float, ...]
    p_st2: tuple[float, ...]
    res: tuple[int, ...]
    ga: tuple[float, ...]
    initr: tuple[int, ...]


def required_n(delta: float, sigma_sq: float, alpha: float, beta: float) -> int:
    """Smallest integer N achieving the target power."""
    if delta == 0.0:
        raise ValueError("effect size must be nonzero")
    if not sigma_sq > 0.0:
        raise ValueError(f"sigma^2 must be > 0, got {sigma_sq}")
    z_a = normal_quantile(1.0 - alpha / 2.0)
    z_b = normal_quantile(beta)
    n = 2.0 * (z_a - z_b) ** 2 * sigma_sq / delta**2
    return max(1, math.ceil(n - 1e-12))


def analytic_power(delta: float, sigma_sq: float, n: int, alpha: float) -> float:
    """Normal-approximation power, dominant tail only."""
    z_a = normal_quantile(1.0 - alpha / 2.0)
    return normal_cdf(abs(delta) * math.sqrt(n / (2.0 * sigma_sq)) - z_a)


def wald_z(delta_hat: float, sigma_sq: float, n: int) -> float:
    """Z = delta_hat / sqrt(2 sigma^2 / N)."""
    if not sigma_sq > 0.0:
        raise ValueError(f"sigma^2 must be > 0, got {sigma_sq}")
    return delta_hat / math.sqrt(2.0 * sigma_sq / n)


def reject(z: float, alpha: float) -> bool:
    return abs(z) > normal_quantile(1.0 - alpha / 2.0)
