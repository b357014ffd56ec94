"""One-dimensional PETRELS: nullclines, fixed points and the critical discount.

In d = 1 the reduced system becomes two scalar ODEs in (Q^2, G):

    dQ^2/dt = G Q^2 [2 aL - s^4 G - 2 Q^2 (1 + s^2 G/2) aL]
    dG/dt   = G [mu - G (s^2 G + 1)(Q^2 aL + s^2)]

with aL = alpha lambda^2. Setting each bracket to zero gives the nullclines
Q^2 = f(G) and Q^2 = h(G).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import OdeParams

_G_MIN, _G_MAX = 1e-12, 1e6


class UnsupportedDimensionError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


def _scalar_params(p: OdeParams) -> tuple[float, float, float]:
    if p.d != 1:
        raise UnsupportedDimensionError("this PETRELS result is only available for d = 1")
    return float(p.alam2[0]), p.sigma**2, p.require_mu()


def critical_mu_from_snr(snr):
    """(2 snr + 1/2)^2 - 1/4 where snr = alpha lambda^2 / sigma^2."""
    snr = np.asarray(snr, dtype=float)
    out = (2.0 * snr + 0.5) ** 2 - 0.25
    return float(out) if out.ndim == 0 else out


def petrels_critical_mu(p: OdeParams) -> float:
    """mu below which one-dimensional PETRELS has an informative fixed point."""
    if p.d != 1:
        raise UnsupportedDimensionError("the critical discount is only available for d = 1")
    alam2, s2 = float(p.alam2[0]), p.sigma**2
    if s2 == 0.0:
        return math.inf
    return critical_mu_from_snr(alam2 / s2)


def nullcline_f(G, p: OdeParams):
    """Q^2 on the curve dQ^2/dt = 0 (away from Q^2 = 0)."""
    alam2, s2, _ = _scalar_params(p)
    G = np.asarray(G, dtype=float)
    return (alam2 - 0.5 * s2 * s2 * G) / ((1.0 + 0.5 * s2 * G) * alam2)


def nullcline_h(G, p: OdeParams):
    """Q^2 on the curve dG/dt = 0 (away from G = 0)."""
    alam2, s2, mu = _scalar_params(p)
    G = np.asarray(G, dtype=float)
    return (mu / (G * (s2 * G + 1.0)) - s2) / alam2


@dataclass(frozen=True)
class Informative:
    q2: float
    G: float
    residual: float = 0.0


@dataclass(frozen=True)
class Uninformative:
    G: float

    @property
    def q2(self) -> float:
        return 0.0


def petrels_fixed_point(p: OdeParams) -> Informative | Uninformative:
    """Stable fixed point of the (Q^2, G) system.

    Below the critical discount the nullclines cross in the feasible region
    and the crossing is located by bisection on G. Otherwise Q^2 = 0 and G
    solves s^2 G (s^2 G + 1) = mu.
    """
    alam2, s2, mu = _scalar_params(p)
    if alam2 == 0.0 and s2 == 0.0:
        raise SolverError("no signal and no noise: G grows without bound")
    if mu < petrels_critical_mu(p):
        def gap(G):
            return float(nullcline_h(G, p) - nullcline_f(G, p))

        lo = _G_MIN
        hi = _G_MAX if s2 == 0.0 else min(_G_MAX, 2.0 * alam2 / (s2 * s2))
        if not (gap(lo) > 0.0 > gap(hi)):
            raise SolverError("could not bracket the nullcline intersection")
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if gap(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        G = lo if abs(gap(lo)) <= abs(gap(hi)) else hi
        return Informative(q2=float(nullcline_f(G, p)), G=G, residual=abs(gap(G)))
    if s2 == 0.0:
        raise SolverError("no fixed point: G grows without bound when sigma = 0 and Q = 0")
    # positive root of s2^2 G^2 + s2 G - mu = 0
    G = (math.sqrt(1.0 + 4.0 * mu) - 1.0) / (2.0 * s2)
    return Uninformative(G=G)
