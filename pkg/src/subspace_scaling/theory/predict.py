"""Predicted principal cosines from theory states and whole prediction curves."""

from __future__ import annotations

import numpy as np

from ..linalg import psd_inv_sqrt, singular_cosines
from .closed_form import cos2_from_P, oja_grouse_closed_form, oja_grouse_closed_form_general
from .integrate import integrate
from .params import OdeParams
from .rhs import oja_grouse_system, petrels_full_system, petrels_reduced_system
from .states import OjaGrouse, OdeState, PetrelsFull, PetrelsReduced, PhasePoint, PState

OJA_GROUSE_METHODS = ("closed", "general", "rk4")
PETRELS_METHODS = ("full", "reduced")


def predicted_cosines(state: OdeState) -> np.ndarray:
    """Principal cosines encoded by a theory state, sorted descending."""
    if isinstance(state, (OjaGrouse, PetrelsReduced)):
        return singular_cosines(state.Q)
    if isinstance(state, PetrelsFull):
        return singular_cosines(state.K @ psd_inv_sqrt(0.5 * (state.W + state.W.T)))
    if isinstance(state, PState):
        return np.sqrt(np.clip(cos2_from_P(state.P), 0.0, 1.0))
    if isinstance(state, PhasePoint):
        return np.array([np.sqrt(max(state.q2, 0.0))])
    raise TypeError(f"no cosine readout for {type(state).__name__}")


def initial_Q(q0, d: int) -> np.ndarray:
    """q0 * I for a scalar, otherwise the given d x d matrix."""
    if np.ndim(q0) == 0:
        return float(q0) * np.eye(d)
    Q0 = np.array(q0, dtype=float)
    if Q0.shape != (d, d):
        raise ValueError(f"initial Q must be {d}x{d}")
    return Q0


def predict_oja_grouse(p: OdeParams, q0, times, method: str = "closed", h: float = 1e-3,
                       quad_steps: int = 2000) -> np.ndarray:
    """Predicted cosines (len(times) x d) shared by Oja and GROUSE."""
    times = np.asarray(times, dtype=float)
    Q0 = initial_Q(q0, p.d)
    if method == "rk4":
        states = integrate(oja_grouse_system(p), OjaGrouse(Q0), float(times.max(initial=0.0)), h=h, times=times)
        by_t = {s.t: s for s in states}
        return np.array([predicted_cosines(by_t[t]) for t in times])
    if method not in OJA_GROUSE_METHODS:
        raise ValueError(f"method must be one of {OJA_GROUSE_METHODS}")
    P0 = np.linalg.inv(Q0 @ Q0.T)
    P0 = 0.5 * (P0 + P0.T)
    rows = []
    for t in times:
        if method == "closed":
            P = oja_grouse_closed_form(P0, p, t)
        else:
            P = oja_grouse_closed_form_general(P0, p, t, quad_steps)
        rows.append(np.sqrt(np.clip(cos2_from_P(P), 0.0, 1.0)))
    return np.array(rows)


def petrels_initial_state(p: OdeParams, q0, delta: float, method: str = "full") -> OdeState:
    """Limits of (A, K, W) or (Q, G) at t = 0 for an orthonormal X_0 and R_0 = (delta/n) I.

    A = R^{-1}/n starts at I/delta, W = X^T X at I, so G = W^{-1/2} A^{-1} W^{-1/2} = delta I.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    d = p.d
    Q0 = initial_Q(q0, d)
    if method == "full":
        return PetrelsFull(A=np.eye(d) / delta, K=Q0, W=np.eye(d))
    if method == "reduced":
        return PetrelsReduced(Q=Q0, G=delta * np.eye(d))
    raise ValueError(f"method must be one of {PETRELS_METHODS}")


def predict_petrels(p: OdeParams, q0, times, delta: float, method: str = "full",
                    h: float = 1e-3) -> np.ndarray:
    """Predicted PETRELS cosines (len(times) x d) from the full or reduced system."""
    times = np.asarray(times, dtype=float)
    state0 = petrels_initial_state(p, q0, delta, method)
    system = petrels_full_system(p) if method == "full" else petrels_reduced_system(p)
    states = integrate(system, state0, float(times.max(initial=0.0)), h=h, times=times)
    by_t = {s.t: s for s in states}
    return np.array([predicted_cosines(by_t[t]) for t in times])


def predict(algo: str, p: OdeParams, q0, times, delta: float = 10.0, method: str | None = None,
            h: float = 1e-3) -> np.ndarray:
    """Theory curve for one of the trackers."""
    if algo in ("oja", "grouse"):
        if method is None:
            method = "closed" if p.constant_tau is not None else "general"
        return predict_oja_grouse(p, q0, times, method=method, h=h)
    if algo == "petrels":
        return predict_petrels(p, q0, times, delta, method=method or "full", h=h)
    raise ValueError(f"unknown algorithm {algo!r}")
