"""Streaming subspace trackers: Oja with imputation, GROUSE and simplified PETRELS.

All three share one shape: a :class:`TrackerState` goes in together with one
:class:`~subspace_scaling.model.Observation`, and a new state comes out. The
input state is never modified. Steps rejected by the conditioning guard leave
the estimate alone and bump ``skips``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import _kernels
from .linalg import cosine_similarity, masked_least_squares, orthonormalize
from .model import Observation, SubspaceModel, sample_observation
from .record import TrajectoryRecord
from .schedules import ConstantStep, schedule_from_config

ALGORITHMS = ("oja", "grouse", "petrels")

# Norms below this make the GROUSE rotation ill-defined.
_GROUSE_TINY = 1e-14

# PETRELS (X, R) may grow like gamma^-k; past these bounds the pair is rescaled
# by an exact power of two, which leaves every later step bitwise equivalent.
_RESCALE_HI = 2.0**200
_RESCALE_LO = 2.0**-200


@dataclass(frozen=True)
class TrackerParams:
    """Algorithm parameters.

    step: tau(t) for Oja/GROUSE. mu: PETRELS discount, gamma = 1 - mu/n.
    delta: PETRELS initial gain scale, R_0 = (delta/n) I. alpha: weight of the
    PETRELS gain update, normally the subsampling ratio. eps: guard on
    lambda_min(X^T Omega X); defaults to alpha/2. eps_prime: Oja guard on the
    Gram matrix of the un-normalized update. reorth_every: GROUSE cadence of
    symmetric re-orthogonalization. check_woodbury: verify each PETRELS gain
    update against a direct inverse (slow, for debugging).
    """

    step: Callable[[float], float] = ConstantStep(0.5)
    mu: float = 5.0
    delta: float = 10.0
    alpha: float = 0.5
    eps: float | None = None
    eps_prime: float = 0.1
    reorth_every: int = 1000
    check_woodbury: bool = False

    def __post_init__(self):
        object.__setattr__(self, "step", schedule_from_config(self.step))
        if self.eps is None:
            object.__setattr__(self, "eps", self.alpha / 2)
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < self.eps < self.alpha:
            raise ValueError("need 0 < eps < alpha")
        if not 0.0 < self.eps_prime < 1.0:
            raise ValueError("need 0 < eps_prime < 1")
        if self.mu <= 0 or self.delta <= 0:
            raise ValueError("mu and delta must be positive")
        if self.reorth_every < 1:
            raise ValueError("reorth_every must be >= 1")


@dataclass(frozen=True)
class TrackerState:
    algo: str
    X: np.ndarray
    params: TrackerParams
    R: np.ndarray | None = None
    k: int = 0
    skips: int = 0
    # PETRELS only: the true iterate is (X * 2^e, R * 4^e).
    scale_exp: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def init_state(algo: str, X0: np.ndarray, params: TrackerParams) -> TrackerState:
    """Fresh state at k = 0; PETRELS starts from R_0 = (delta/n) I."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    X0 = np.array(X0, dtype=float)
    n, d = X0.shape
    if algo == "petrels" and params.mu >= n:
        raise ValueError("PETRELS needs mu < n so that gamma = 1 - mu/n is positive")
    R = (params.delta / n) * np.eye(d) if algo == "petrels" else None
    return TrackerState(algo=algo, X=X0, params=params, R=R)


def _skipped(state: TrackerState) -> TrackerState:
    return replace(state, k=state.k + 1, skips=state.skips + 1)


def _idx(obs: Observation) -> np.ndarray:
    return np.ascontiguousarray(obs.idx, dtype=np.int64)


def oja_step(state: TrackerState, obs: Observation) -> TrackerState:
    p = state.params
    tau = p.step(state.k / state.n)
    X, status = _kernels.oja_update(state.X, obs.y, _idx(obs), tau, p.eps, p.eps_prime)
    if status != _kernels.ACCEPTED:
        return _skipped(state)
    return replace(state, X=X, k=state.k + 1)


def grouse_step(state: TrackerState, obs: Observation) -> TrackerState:
    p = state.params
    tau = p.step(state.k / state.n)
    X, status = _kernels.grouse_update(state.X, obs.y, _idx(obs), tau, p.eps, _GROUSE_TINY)
    if status != _kernels.ACCEPTED:
        return _skipped(state)
    k = state.k + 1
    if k % p.reorth_every == 0:
        X = orthonormalize(X)
    return replace(state, X=X, k=k)


def petrels_step(state: TrackerState, obs: Observation) -> TrackerState:
    p = state.params
    gamma = 1.0 - p.mu / state.n
    eps = math.ldexp(p.eps, -2 * state.scale_exp)
    X, R, status, beta = _kernels.petrels_update(
        state.X, state.R, obs.y, _idx(obs), gamma, p.alpha, eps
    )
    if status != _kernels.ACCEPTED:
        return _skipped(state)
    if beta <= 1e-14:
        raise FloatingPointError(f"PETRELS beta={beta:.3e}; gain matrix is corrupted")
    if p.check_woodbury:
        w, _ = masked_least_squares(state.X, obs, eps)
        direct = np.linalg.inv(gamma * np.linalg.inv(state.R) + p.alpha * np.outer(w, w))
        err = np.max(np.abs(R - direct)) / max(1.0, np.max(np.abs(direct)))
        if err > 1e-8:
            raise AssertionError(f"Woodbury update deviates from direct inverse by {err:.2e}")
    e = state.scale_exp
    top = float(np.max(np.abs(R)))
    if not _RESCALE_LO <= top <= _RESCALE_HI:
        shift = math.frexp(top)[1] // 2
        X, R, e = np.ldexp(X, -shift), np.ldexp(R, -2 * shift), e + shift
    return replace(state, X=X, R=R, k=state.k + 1, scale_exp=e)


STEPS = {"oja": oja_step, "grouse": grouse_step, "petrels": petrels_step}


def step(state: TrackerState, obs: Observation) -> TrackerState:
    """Dispatch to the update of ``state.algo``."""
    return STEPS[state.algo](state, obs)


def estimate(state: TrackerState) -> np.ndarray:
    """Orthonormal basis of the current estimate."""
    if state.algo == "petrels":
        return orthonormalize(state.X)
    return state.X


def record_indices(record_times, n: int) -> np.ndarray:
    """Step indices floor(n t) for rescaled times t."""
    # The small offset keeps e.g. n*0.7 = 699.999... on step 700.
    return np.floor(np.asarray(record_times, dtype=float) * n + 1e-9).astype(int)


def run_stream(
    state: TrackerState,
    model: SubspaceModel,
    steps: int,
    record_times,
    rng: np.random.Generator,
    store_Q: bool = False,
) -> TrajectoryRecord:
    """Drive one tracker over ``steps`` observations and record principal cosines.

    The cosines at rescaled time t are those of the estimate after
    floor(n t) steps. Returns a single-trial record; ``meta["final_state"]``
    holds the last state.
    """
    times = np.asarray(record_times, dtype=float)
    if times.size and np.any(np.diff(times) < 0):
        raise ValueError("record_times must be sorted ascending")
    n = model.n
    ks = record_indices(times, n)
    if ks.size and ks[-1] > steps:
        raise ValueError("record_times extend beyond the simulated horizon")
    step_fn = STEPS[state.algo]

    cos_rows, q_rows = [], []

    def snapshot():
        cs = cosine_similarity(model.U, estimate(state))
        cos_rows.append(cs.cosines)
        if store_Q:
            q_rows.append(cs.Q)

    pending = iter(ks)
    nxt = next(pending, None)
    k0 = state.k
    for j in range(steps + 1):
        while nxt is not None and nxt == j:
            snapshot()
            nxt = next(pending, None)
        if j == steps:
            break
        state = step_fn(state, sample_observation(model, k0 + j, rng))

    d = model.d
    cosines = np.array(cos_rows).reshape(len(times), d)
    Q = np.array(q_rows).reshape(len(times), d, d) if store_Q else None
    return TrajectoryRecord.from_trials(
        times,
        [cosines],
        Q=None if Q is None else [Q],
        skips=[state.skips],
        meta={"final_state": state, "steps": steps},
    )
