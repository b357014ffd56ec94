"""Right-hand sides of the limiting ODEs.

The matrix functions ``rhs_F``, ``rhs_H`` and ``rhs_petrels_full`` are thin
wrappers over compiled kernels; the same kernels drive the integrator, so the
tested formulas and the integrated ones cannot drift apart. The ``*_system``
builders bundle a kernel with packed parameters for :func:`integrate`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from ..linalg import SINGULAR_TOL, SingularMatrixError
from .params import OdeParams

# prm layout, see OdeParams.packed
_D, _S2, _TAU0, _RATE, _MU, _ALAM2 = 0, 1, 2, 3, 4, 5

# validity checks performed by the integrator after every step
CHECK_FINITE, CHECK_PETRELS_FULL = 0, 1


@njit(cache=True)
def _tau(t, prm):
    return prm[_TAU0] / (1.0 + prm[_RATE] * t)


@njit(cache=True)
def _F(Q, G, alam2, s2):
    d = Q.shape[0]
    L = np.diag(alam2)
    LQ = L @ Q
    M = Q.T @ LQ
    inner = LQ - 0.5 * s2 * s2 * (Q @ G) - Q @ (np.eye(d) + 0.5 * s2 * G) @ M
    return inner @ G


@njit(cache=True)
def _H(Q, G, alam2, s2, mu):
    d = Q.shape[0]
    eye = np.eye(d)
    M = Q.T @ np.diag(alam2) @ Q
    return G @ (mu * eye - G @ (s2 * G + eye) @ (M + s2 * eye))


@njit(cache=True)
def _J(A, K, W, alam2, s2, mu):
    d = A.shape[0]
    eye = np.eye(d)
    L = np.diag(alam2)
    Wi = np.linalg.inv(W)
    Ai = np.linalg.inv(A)
    S = Wi @ (K.T @ L @ K + s2 * W) @ Wi
    J1 = S - mu * A
    J2 = (L + s2 * eye) @ K @ Wi @ Ai - K @ S @ Ai
    J3 = s2 * Ai @ S @ Ai
    return J1, J2, J3


@njit(cache=True)
def oja_grouse_kernel(t, y, prm):
    d = int(prm[_D])
    Q = y.reshape((d, d))
    G = _tau(t, prm) * np.eye(d)
    return _F(Q, G, prm[_ALAM2:], prm[_S2]).ravel()


@njit(cache=True)
def petrels_reduced_kernel(t, y, prm):
    d = int(prm[_D])
    m = d * d
    Q = y[:m].reshape((d, d))
    G = y[m:].reshape((d, d))
    alam2, s2 = prm[_ALAM2:], prm[_S2]
    out = np.empty(2 * m)
    out[:m] = _F(Q, G, alam2, s2).ravel()
    out[m:] = _H(Q, G, alam2, s2, prm[_MU]).ravel()
    return out


@njit(cache=True)
def petrels_full_kernel(t, y, prm):
    d = int(prm[_D])
    m = d * d
    A = y[:m].reshape((d, d))
    K = y[m:2 * m].reshape((d, d))
    W = y[2 * m:].reshape((d, d))
    J1, J2, J3 = _J(A, K, W, prm[_ALAM2:], prm[_S2], prm[_MU])
    out = np.empty(3 * m)
    out[:m] = J1.ravel()
    out[m:2 * m] = J2.ravel()
    out[2 * m:] = J3.ravel()
    return out


@njit(cache=True)
def p_ode_kernel(t, y, prm):
    """dP/dt = A - P B - B P with diagonal A and B."""
    d = int(prm[_D])
    P = y.reshape((d, d))
    tau, s2, alam2 = _tau(t, prm), prm[_S2], prm[_ALAM2:]
    a = tau * (2.0 + tau * s2) * alam2
    b = tau * (alam2 - 0.5 * tau * s2 * s2)
    out = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            out[i, j] = -(b[i] + b[j]) * P[i, j]
        out[i, i] += a[i]
    return out.ravel()


@njit(cache=True)
def phase_kernel(t, y, prm):
    """(Q^2, G) system of one-dimensional PETRELS."""
    q2, G = y[0], y[1]
    s2, mu, L = prm[_S2], prm[_MU], prm[_ALAM2]
    out = np.empty(2)
    out[0] = G * q2 * (2.0 * L - s2 * s2 * G - 2.0 * q2 * (1.0 + 0.5 * s2 * G) * L)
    out[1] = G * (mu - G * (s2 * G + 1.0) * (q2 * L + s2))
    return out


KERNELS = (oja_grouse_kernel, petrels_reduced_kernel, petrels_full_kernel, p_ode_kernel, phase_kernel)
KERNEL_IDS = {k: i for i, k in enumerate(KERNELS)}


@njit(cache=True)
def eval_kernel(kind, t, y, prm):
    """Dispatch on a kernel id. Passing compiled functions as arguments would
    defeat numba's on-disk cache, so the integrator goes through this switch."""
    if kind == 0:
        return oja_grouse_kernel(t, y, prm)
    if kind == 1:
        return petrels_reduced_kernel(t, y, prm)
    if kind == 2:
        return petrels_full_kernel(t, y, prm)
    if kind == 3:
        return p_ode_kernel(t, y, prm)
    return phase_kernel(t, y, prm)

@dataclass(frozen=True)
class CompiledRhs:
    """A compiled kernel ``f(t, y, prm)`` plus its packed parameters."""

    kernel: Callable
    prm: np.ndarray
    check: int = CHECK_FINITE
    name: str = ""

    @property
    def kind(self) -> int:
        return KERNEL_IDS[self.kernel]

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.kernel(float(t), np.ascontiguousarray(y, dtype=float), self.prm)


def oja_grouse_system(p: OdeParams) -> CompiledRhs:
    """dQ/dt = F(Q, tau(t) I)."""
    return CompiledRhs(oja_grouse_kernel, p.packed(), name="oja_grouse")


def petrels_reduced_system(p: OdeParams) -> CompiledRhs:
    """dQ/dt = F(Q, G), dG/dt = H(Q, G)."""
    p.require_mu()
    return CompiledRhs(petrels_reduced_kernel, p.packed(), name="petrels_reduced")


def petrels_full_system(p: OdeParams) -> CompiledRhs:
    p.require_mu()
    return CompiledRhs(petrels_full_kernel, p.packed(), CHECK_PETRELS_FULL, name="petrels_full")


def p_ode_system(p: OdeParams) -> CompiledRhs:
    return CompiledRhs(p_ode_kernel, p.packed(), name="p_ode")


def phase_system(p: OdeParams) -> CompiledRhs:
    if p.d != 1:
        raise ValueError("the (Q^2, G) system is one-dimensional")
    p.require_mu()
    return CompiledRhs(phase_kernel, p.packed(), name="phase")


def _mat(M, d):
    M = np.array(M, dtype=float, ndmin=2)
    if M.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got {M.shape}")
    return M


def rhs_F(Q, G, p: OdeParams) -> np.ndarray:
    """F(Q, G) = [aL Q - (s^4/2) Q G - Q (I + s^2 G/2) Q^T aL Q] G with aL = alpha Lambda^2."""
    return _F(_mat(Q, p.d), _mat(G, p.d), p.alam2, p.sigma**2)


def rhs_H(Q, G, p: OdeParams) -> np.ndarray:
    """H(Q, G) = G [mu - G (s^2 G + I)(Q^T aL Q + s^2 I)]."""
    return _H(_mat(Q, p.d), _mat(G, p.d), p.alam2, p.sigma**2, p.require_mu())


def _check_pd(name, M):
    sym = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(sym)[0] <= SINGULAR_TOL:
        raise SingularMatrixError(f"{name} is numerically singular or indefinite")


def rhs_petrels_full(A, K, W, p: OdeParams):
    """(J1, J2, J3) for the (A, K, W) system."""
    A, K, W = (_mat(M, p.d) for M in (A, K, W))
    _check_pd("A", A)
    _check_pd("W", W)
    return _J(A, K, W, p.alam2, p.sigma**2, p.require_mu())
