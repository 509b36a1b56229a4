"""Prediction intervals around streaming point regressors.

MveModel assumes Gaussian errors: it tracks the running standard deviation
of the base model's prequential errors and centers a z-scaled interval on
every prediction. AdaPiModel multiplies that half-width by an adaptive
scale that chases a target coverage level and never falls below a floor.
Both follow test-then-train: the interval scored for an instance is
computed before its label touches any state.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

# Acklam's rational approximation to the normal quantile (relative error
# < 1.15e-9 everywhere), sharpened here with one Halley step.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def inverse_normal_cdf(p: float) -> float:
    """z with |Phi(z) - p| < 1e-9 on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        z = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        z = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        z = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # Halley refinement against the erfc-based CDF
    err = normal_cdf(z) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(z * z / 2.0)
    return z - u / (1.0 + z * u / 2.0)


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} > upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper


class MveModel:
    """Mean-and-variance estimation intervals over any base regressor.

    half-width = z * sigma, z = Phi^-1((1 + confidence) / 2), sigma the
    running (population) standard deviation of prequential errors. With
    fewer than two observed errors sigma is 0 and the interval degenerates
    to a point.
    """

    def __init__(self, base, confidence: float = 0.95):
        if not 0.0 < confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")
        self.base = base
        self.confidence = confidence
        self.z = inverse_normal_cdf((1.0 + confidence) / 2.0)
        self.n = 0
        self.err_mean = 0.0
        self.err_sq_mean = 0.0

    def error_std(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(max(0.0, self.err_sq_mean - self.err_mean**2))

    def half_width(self) -> float:
        return self.z * self.error_std()

    def predict(self, x: np.ndarray) -> float:
        return self.base.predict(x)

    def predict_with_interval(self, x: np.ndarray) -> tuple[float, Interval]:
        y_hat = self.base.predict(x)
        h = self.half_width()
        return y_hat, Interval(y_hat - h, y_hat + h)

    def predict_interval(self, x: np.ndarray) -> Interval:
        return self.predict_with_interval(x)[1]

    def _observe_error(self, e: float) -> None:
        self.n += 1
        self.err_mean += (e - self.err_mean) / self.n
        self.err_sq_mean += (e * e - self.err_sq_mean) / self.n

    def learn(self, x: np.ndarray, y: float) -> None:
        self._observe_error(y - self.base.predict(x))
        self.base.learn(x, y)

    def state_hash(self) -> int:
        h = hashlib.sha256()
        h.update(struct.pack("<Qqdd", self.base.state_hash(), self.n, self.err_mean, self.err_sq_mean))
        return int.from_bytes(h.digest()[:8], "big")


class AdaPiModel(MveModel):
    """MVE with a coverage-feedback multiplier on the half-width.

    Each label updates an exponentially weighted coverage estimate (decay
    0.999 keeps it responsive after drifts) and then rescales:
    scale <- max(floor, scale * (1 + rate * (confidence - estimate))),
    widening while under-covering and narrowing while over-covering.
    """

    def __init__(
        self,
        base,
        confidence: float = 0.95,
        scale_floor: float = 0.01,
        adaptation_rate: float = 0.02,
        coverage_decay: float = 0.999,
    ):
        super().__init__(base, confidence)
        self.scale = 1.0
        self.scale_floor = scale_floor
        self.adaptation_rate = adaptation_rate
        self.coverage_decay = coverage_decay
        self.coverage_estimate = confidence

    def half_width(self) -> float:
        return self.scale * self.z * self.error_std()

    def learn(self, x: np.ndarray, y: float) -> None:
        y_hat, interval = self.predict_with_interval(x)
        covered = 1.0 if interval.contains(y) else 0.0
        d = self.coverage_decay
        self.coverage_estimate = d * self.coverage_estimate + (1.0 - d) * covered
        self.scale = max(
            self.scale_floor,
            self.scale * (1.0 + self.adaptation_rate * (self.confidence - self.coverage_estimate)),
        )
        self._observe_error(y - y_hat)
        self.base.learn(x, y)

    def state_hash(self) -> int:
        h = hashlib.sha256()
        h.update(struct.pack("<Qdd", super().state_hash(), self.scale, self.coverage_estimate))
        return int.from_bytes(h.digest()[:8], "big")
