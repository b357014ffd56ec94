"""Step-size schedules tau(t) as picklable callables of rescaled time t = k/n."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ConstantStep:
    tau: float

    def __call__(self, t: float) -> float:
        return self.tau

    @property
    def bound(self) -> float:
        return abs(self.tau)

    def to_config(self):
        return self.tau


@dataclass(frozen=True)
class DecayingStep:
    """tau(t) = tau0 / (1 + rate * t)."""

    tau0: float
    rate: float = 1.0

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")

    def __call__(self, t: float) -> float:
        return self.tau0 / (1.0 + self.rate * t)

    @property
    def bound(self) -> float:
        return abs(self.tau0)

    def to_config(self):
        return {"kind": "decaying", "tau0": self.tau0, "rate": self.rate}


def schedule_from_config(value) -> ConstantStep | DecayingStep:
    """Build a schedule from a number or a ``{"kind": ..., ...}`` mapping."""
    if isinstance(value, (ConstantStep, DecayingStep)):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ConstantStep(float(value))
    if isinstance(value, dict):
        kind = value.get("kind", "constant")
        if kind == "constant":
            return ConstantStep(float(value["tau"]))
        if kind == "decaying":
            return DecayingStep(float(value["tau0"]), float(value.get("rate", 1.0)))
        raise ValueError(f"unknown schedule kind {kind!r}")
    raise ValueError(f"cannot build a step schedule from {value!r}")
