"""Change detection on error streams.

Detectors consume a non-negative error signal one value at a time and
return True when the recent signal is inconsistent with its history.
Thresholds here are scale-adaptive: they track the running mean of the
signal (an MAE scale) so one parametrization works across target scales.
"""

from __future__ import annotations

from typing import Protocol


class DriftDetector(Protocol):
    def update(self, error: float) -> bool: ...

    def reset(self) -> None: ...


class PageHinkley:
    """Page-Hinkley test on absolute errors.

    Accumulates deviations of the signal above its running mean (minus an
    allowance alpha) and alarms when the accumulation rises more than
    lambda above its historical minimum. Both alpha and lambda are
    expressed as multiples of the running mean error.
    """

    def __init__(
        self,
        lambda_factor: float = 50.0,
        alpha_factor: float = 0.005,
        min_instances: int = 30,
    ):
        self.lambda_factor = lambda_factor
        self.alpha_factor = alpha_factor
        self.min_instances = min_instances
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.mean = 0.0
        self.cum = 0.0
        self.cum_min = 0.0

    def update(self, error: float) -> bool:
        self.n += 1
        self.mean += (error - self.mean) / self.n
        self.cum += error - self.mean - self.alpha_factor * self.mean
        self.cum_min = min(self.cum_min, self.cum)
        if self.n < self.min_instances:
            return False
        return self.cum - self.cum_min > self.lambda_factor * self.mean


class NoDetector:
    """Placeholder that never alarms."""

    def update(self, error: float) -> bool:
        return False

    def reset(self) -> None:
        pass
