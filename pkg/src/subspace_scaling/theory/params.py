"""Parameters shared by every limiting ODE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schedules import ConstantStep, DecayingStep, schedule_from_config


@dataclass(frozen=True)
class OdeParams:
    """Model and algorithm constants on the theory side.

    ``tau`` is used by Oja/GROUSE, ``mu`` by PETRELS. The signal strength and
    the subsampling ratio only ever enter through ``alam2 = alpha * lambdas**2``.
    """

    lambdas: np.ndarray
    sigma: float
    alpha: float
    tau: ConstantStep | DecayingStep = ConstantStep(0.5)
    mu: float | None = None

    def __post_init__(self):
        lambdas = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        if lambdas.ndim != 1 or lambdas.size < 1:
            raise ValueError("lambdas must be a non-empty vector")
        if np.any(lambdas < 0):
            raise ValueError("lambdas must be nonnegative")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("mu must be positive")
        lambdas.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "tau", schedule_from_config(self.tau))

    @property
    def d(self) -> int:
        return self.lambdas.size

    @property
    def alam2(self) -> np.ndarray:
        return self.alpha * self.lambdas**2

    @property
    def constant_tau(self) -> float | None:
        """The step size if it does not depend on time, else None."""
        if isinstance(self.tau, ConstantStep):
            return self.tau.tau
        if self.tau.rate == 0.0:
            return self.tau.tau0
        return None

    def require_mu(self) -> float:
        if self.mu is None:
            raise ValueError("this PETRELS quantity needs mu")
        return self.mu

    def packed(self) -> np.ndarray:
        """Flat parameter vector read by the compiled right-hand sides.

        Layout: [d, sigma^2, tau0, rate, mu, alam2_1..alam2_d] with
        tau(t) = tau0 / (1 + rate t).
        """
        if isinstance(self.tau, ConstantStep):
            tau0, rate = self.tau.tau, 0.0
        else:
            tau0, rate = self.tau.tau0, self.tau.rate
        mu = 0.0 if self.mu is None else self.mu
        head = np.array([self.d, self.sigma**2, tau0, rate, mu], dtype=float)
        return np.concatenate([head, self.alam2])
