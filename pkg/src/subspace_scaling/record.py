"""Time-indexed principal-cosine trajectories across Monte Carlo trials."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class RunningMoments:
    """Welford accumulator over arrays of a fixed shape."""

    def __init__(self, shape):
        self.count = 0
        self.mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def push(self, x) -> None:
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self._m2 = self._m2 + delta * (x - self.mean)

    @property
    def std(self) -> np.ndarray:
        # Sample std; a single trial has no spread.
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self._m2 / (self.count - 1))


@dataclass
class TrajectoryRecord:
    """Empirical principal cosines.

    ``cosines`` has shape (trials, times, d). ``mean``/``std`` are per
    (time, direction), std being the sample standard deviation over trials.
    ``Q`` optionally holds the full cosine similarity matrices with shape
    (trials, times, d, d).
    """

    times: np.ndarray
    cosines: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    skips: np.ndarray
    Q: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_trials(cls, times, trials, Q=None, skips=None, meta=None):
        """Aggregate per-trial cosine arrays, joined in the given order."""
        trials = [np.asarray(c, dtype=float) for c in trials]
        if not trials:
            raise ValueError("need at least one trial")
        acc = RunningMoments(trials[0].shape)
        for c in trials:
            acc.push(c)
        return cls(
            times=np.asarray(times, dtype=float),
            cosines=np.stack(trials),
            mean=acc.mean,
            std=acc.std,
            skips=np.zeros(len(trials), dtype=int) if skips is None else np.asarray(skips, dtype=int),
            Q=None if Q is None else np.stack([np.asarray(q, dtype=float) for q in Q]),
            meta=dict(meta or {}),
        )

    @property
    def n_trials(self) -> int:
        return self.cosines.shape[0]

    @property
    def sem(self) -> np.ndarray:
        return self.std / np.sqrt(self.n_trials)
