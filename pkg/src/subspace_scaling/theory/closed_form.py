"""Analytical solutions for Oja/GROUSE in the variable P = (Q Q^T)^{-1}.

P obeys the linear ODE dP/dt = A - P B - B P with diagonal
A = tau (2 + tau s^2) aL and B = tau (aL - (tau/2) s^4 I), aL = alpha Lambda^2.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .params import OdeParams


def _check_spd(P0: np.ndarray, d: int) -> np.ndarray:
    P0 = np.array(P0, dtype=float, ndmin=2)
    if P0.shape != (d, d):
        raise ValueError(f"P0 must be {d}x{d}")
    if np.max(np.abs(P0 - P0.T)) > 1e-10 * max(1.0, np.max(np.abs(P0))):
        raise ValueError("P0 must be symmetric")
    if np.linalg.eigvalsh(0.5 * (P0 + P0.T))[0] <= 0:
        raise ValueError("P0 must be positive definite")
    return P0


def p_coefficients(p: OdeParams, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals (a, b) of A and B at step size tau."""
    s2, alam2 = p.sigma**2, p.alam2
    return tau * (2.0 + tau * s2) * alam2, tau * (alam2 - 0.5 * tau * s2 * s2)


def z_diagonal(p: OdeParams, tau: float, t: float) -> np.ndarray:
    """z_l(t) = a_l (1 - exp(-2 b_l t)) / (2 b_l), and a_l t when b_l = 0.

    The decaying exponential is the one that solves the P equation; with a
    positive exponent z would blow up in the informative regime, which the
    RK4 oracle in the tests rules out.
    """
    a, b = p_coefficients(p, tau)
    c = 2.0 * b
    z = np.empty_like(a)
    zero = c == 0.0
    z[zero] = a[zero] * t
    # expm1 keeps the near-degenerate case accurate
    z[~zero] = -a[~zero] * np.expm1(-c[~zero] * t) / c[~zero]
    return z


def oja_grouse_closed_form(P0, p: OdeParams, t: float) -> np.ndarray:
    """P(t) = e^{-tB} P0 e^{-tB} + diag(z(t)) for a constant step size."""
    tau = p.constant_tau
    if tau is None:
        raise ValueError("the closed form needs a constant step size; use oja_grouse_closed_form_general")
    P0 = _check_spd(P0, p.d)
    if t == 0:
        return P0.copy()
    _, b = p_coefficients(p, tau)
    e = np.exp(-b * t)
    return e[:, None] * P0 * e[None, :] + np.diag(z_diagonal(p, tau, t))


def oja_grouse_closed_form_general(P0, p: OdeParams, t: float, quad_steps: int = 2000) -> np.ndarray:
    """P(t) for a time-varying tau(t) using composite Simpson quadrature.

    P(t) = Phi P0 Phi + int_0^t Phi(t,s) A(s) Phi(t,s) ds with
    Phi(t,s) = exp(-int_s^t B). Everything is diagonal, so this is d scalar
    convolutions on a grid of ``quad_steps`` panels (rounded up to even).
    """
    P0 = _check_spd(P0, p.d)
    if t == 0:
        return P0.copy()
    if t < 0:
        raise ValueError("t must be nonnegative")
    panels = max(2, int(quad_steps) + int(quad_steps) % 2)
    s = np.linspace(0.0, t, panels + 1)
    taus = np.array([p.tau(si) for si in s])
    a = np.stack([p_coefficients(p, ts)[0] for ts in taus], axis=1)  # (d, grid)
    b = np.stack([p_coefficients(p, ts)[1] for ts in taus], axis=1)
    beta = cumulative_simpson(b, x=s, axis=1, initial=0.0)
    phi = np.exp(-beta[:, -1])
    conv = simpson(a * np.exp(-2.0 * (beta[:, -1:] - beta)), x=s, axis=1)
    return phi[:, None] * P0 * phi[None, :] + np.diag(conv)


def cos2_from_P(P: np.ndarray) -> np.ndarray:
    """Squared cosines, the eigenvalues of P^{-1}, sorted descending."""
    vals = 1.0 / np.linalg.eigvalsh(0.5 * (P + P.T))
    return np.clip(np.sort(vals)[::-1], 0.0, None)


def steady_state_cos2(lambda_l: float, p: OdeParams) -> float:
    """Limit of cos^2 for one direction: max(0, (2 aL - tau s^4) / (aL (2 + tau s^2)))."""
    tau = p.constant_tau
    if tau is None:
        raise ValueError("the steady state is defined for a constant step size")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    alam2 = p.alpha * float(lambda_l) ** 2
    if alam2 == 0.0:
        return 0.0
    s2 = p.sigma**2
    return max(0.0, (2.0 * alam2 - tau * s2 * s2) / (alam2 * (2.0 + tau * s2)))


def oja_grouse_critical_tau(p: OdeParams) -> float:
    """Largest step size with an informative steady state in every direction."""
    s4 = p.sigma**4
    if s4 == 0.0:
        return np.inf
    return 2.0 * p.alpha / s4 * float(np.min(p.lambdas) ** 2)
