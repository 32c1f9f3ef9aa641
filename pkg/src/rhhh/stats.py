"""Normal quantiles and the sampling-convergence formulas used by RHHH.

The randomized sketch only gives guarantees once enough packets have been
seen.  This module computes that threshold (``psi``), the residual sampling
error for a given packet count, and the normal quantiles they depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ConfidenceParams",
    "normal_cdf",
    "normal_quantile",
    "psi",
    "epsilon_s_of_n",
]

# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_quantile(alpha: float) -> float:
    """Return ``z`` such that ``normal_cdf(z) == alpha``.

    Acklam's approximation (relative error ~1e-9) followed by one Halley
    step on the erfc-based CDF, which brings the absolute error well below
    1e-8 over ``(1e-12, 1 - 1e-12)``.

    Raises:
        ValueError: if ``alpha`` is not strictly inside (0, 1).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if alpha == 0.5:
        return 0.0
    # Refine on the smaller tail so the residual keeps its precision.
    if alpha > 0.5:
        return -normal_quantile(1.0 - alpha)
    x = _acklam(alpha)
    e = normal_cdf(x) - alpha
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@dataclass(frozen=True)
class ConfidenceParams:
    """Error/confidence budget split between the counters and the sampling.

    ``epsilon = epsilon_a + epsilon_s`` and ``delta = delta_a + 2 * delta_s``.
    """

    epsilon: float
    delta: float
    epsilon_a: float
    epsilon_s: float
    delta_a: float
    delta_s: float

    def __post_init__(self) -> None:
        for name in ("epsilon", "delta", "epsilon_a", "epsilon_s", "delta_a", "delta_s"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
        if abs(self.epsilon_a + self.epsilon_s - self.epsilon) > 1e-12:
            raise ValueError("epsilon_a + epsilon_s must equal epsilon")
        if abs(self.delta_a + 2.0 * self.delta_s - self.delta) > 1e-12:
            raise ValueError("delta_a + 2 * delta_s must equal delta")

    @classmethod
    def from_eps_delta(cls, epsilon: float, delta: float) -> "ConfidenceParams":
        """Default split: half of epsilon to each side, delta_a = delta/2, delta_s = delta/4."""
        return cls(
            epsilon=epsilon,
            delta=delta,
            epsilon_a=epsilon / 2.0,
            epsilon_s=epsilon - epsilon / 2.0,
            delta_a=delta / 2.0,
            delta_s=(delta - delta / 2.0) / 2.0,
        )

    @classmethod
    def from_split(cls, epsilon_a: float, epsilon_s: float,
                   delta_a: float, delta_s: float) -> "ConfidenceParams":
        return cls(
            epsilon=epsilon_a + epsilon_s,
            delta=delta_a + 2.0 * delta_s,
            epsilon_a=epsilon_a,
            epsilon_s=epsilon_s,
            delta_a=delta_a,
            delta_s=delta_s,
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "epsilon_a": self.epsilon_a,
            "epsilon_s": self.epsilon_s,
            "delta_a": self.delta_a,
            "delta_s": self.delta_s,
        }


def psi(params: ConfidenceParams, v: int) -> float:
    """Minimum stream length after which the sampling error is within epsilon_s.

    ``Z_{1 - delta_s/2} * v / epsilon_s**2``.  Returned as a real; callers
    round up when comparing against packet counts.
    """
    if v < 1:
        raise ValueError(f"v must be >= 1, got {v!r}")
    z = normal_quantile(1.0 - params.delta_s / 2.0)
    return z * v / (params.epsilon_s * params.epsilon_s)


def epsilon_s_of_n(n: float, delta_s: float, v: int) -> float:
    """Sampling error actually achieved after ``n`` packets."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n!r}")
    if v < 1:
        raise ValueError(f"v must be >= 1, got {v!r}")
    z = normal_quantile(1.0 - delta_s / 2.0)
    return math.sqrt(z * v / n)
