"""Fixed-step classical Runge-Kutta integration.

Steps have length ``h`` except the last one before each output time, which
is shortened so that every output time is hit exactly. No adaptivity, so a
given (rhs, state, h) always produces the same numbers.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .rhs import CHECK_PETRELS_FULL, CompiledRhs, eval_kernel
from .states import OdeState

# A remaining interval shorter than this fraction of h counts as zero.
_LANDING = 1e-9
# Reciprocal condition number below which a matrix no longer counts as definite.
_COND_FLOOR = 1e-14


class IntegrationBreakdown(RuntimeError):
    """The state left the region where the ODE is defined."""

    def __init__(self, t: float, reason: str):
        super().__init__(f"integration broke down at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


@njit(cache=True)
def _pd(y, offset, d):
    # Scale-free test: A and W legitimately drift to tiny/huge magnitudes at
    # large discounts, so only a non-positive or unresolvable spectrum counts.
    M = y[offset:offset + d * d].reshape((d, d))
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    return ev[0] > _COND_FLOOR * ev[-1]


@njit(cache=True)
def _valid(y, prm, check):
    for v in y:
        if not np.isfinite(v):
            return 1
    if check == CHECK_PETRELS_FULL:
        d = int(prm[0])
        if not _pd(y, 0, d):
            return 2
        if not _pd(y, 2 * d * d, d):
            return 3
    return 0


@njit(cache=True)
def _rk4_compiled(kind, prm, check, y0, t0, out_times, h):
    m = out_times.shape[0]
    Y = np.empty((m, y0.shape[0]))
    y = y0.copy()
    t = t0
    for j in range(m):
        target = out_times[j]
        start = t
        i = 0
        while True:
            ts = start + i * h
            rem = target - ts
            if rem <= _LANDING * h:
                break
            dt = h if rem > h * (1.0 + _LANDING) else rem
            k1 = eval_kernel(kind, ts, y, prm)
            k2 = eval_kernel(kind, ts + 0.5 * dt, y + 0.5 * dt * k1, prm)
            k3 = eval_kernel(kind, ts + 0.5 * dt, y + 0.5 * dt * k2, prm)
            k4 = eval_kernel(kind, ts + dt, y + dt * k3, prm)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            code = _valid(y, prm, check)
            if code != 0:
                return Y, code, ts + dt
            i += 1
        t = target
        Y[j] = y
    return Y, 0, t


def _rk4_python(f, y0, t0, out_times, h):
    Y = np.empty((len(out_times), y0.size))
    y = y0.copy()
    t = t0
    for j, target in enumerate(out_times):
        start, i = t, 0
        while True:
            ts = start + i * h
            rem = target - ts
            if rem <= _LANDING * h:
                break
            dt = h if rem > h * (1.0 + _LANDING) else rem
            k1 = f(ts, y)
            k2 = f(ts + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = f(ts + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = f(ts + dt, y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise IntegrationBreakdown(ts + dt, "non-finite state")
            i += 1
        t = target
        Y[j] = y
    return Y


_REASONS = {1: "non-finite state", 2: "A lost positive definiteness", 3: "W lost positive definiteness"}


def output_times(t0: float, t_end: float, sample_dt: float | None = None, times=None) -> np.ndarray:
    """Recording grid: t0 + j*sample_dt up to t_end, always including t0 and t_end.

    An explicit ``times`` list replaces the regular grid (t_end is appended if
    missing).
    """
    if times is not None:
        grid = np.unique(np.asarray(times, dtype=float))
        if grid.size and grid[0] < t0 - 1e-12:
            raise ValueError("requested times precede the initial time")
        if grid.size == 0 or grid[-1] < t_end:
            grid = np.append(grid, t_end)
        if grid[-1] > t_end + 1e-12:
            raise ValueError("requested times extend beyond t_end")
        return grid
    if sample_dt is None:
        return np.array([t0, t_end]) if t_end > t0 else np.array([t0])
    if sample_dt <= 0:
        raise ValueError("sample_dt must be positive")
    count = int(math.floor((t_end - t0) / sample_dt + 1e-9))
    grid = t0 + sample_dt * np.arange(count + 1)
    if t_end - grid[-1] > 1e-9 * sample_dt:
        grid = np.append(grid, t_end)
    return grid


def integrate(rhs, state0: OdeState, t_end: float, h: float = 1e-3, sample_dt=None, times=None):
    """Integrate from ``state0`` to ``t_end`` and return the states on the recording grid.

    ``rhs`` is either a :class:`CompiledRhs` from one of the ``*_system``
    builders, or any callable ``rhs(t, state) -> derivative`` where the
    derivative is an array (single-field states) or a tuple of arrays in
    field order.
    """
    if h <= 0:
        raise ValueError("step size h must be positive")
    if t_end < state0.t:
        raise ValueError("t_end precedes the initial time")
    grid = output_times(state0.t, t_end, sample_dt, times)
    y0 = state0.pack()
    if isinstance(rhs, CompiledRhs):
        Y, code, t_fail = _rk4_compiled(rhs.kind, rhs.prm, rhs.check, y0, float(state0.t), grid, float(h))
        if code:
            raise IntegrationBreakdown(t_fail, _REASONS[code])
    else:
        def f(t, y):
            out = rhs(t, state0.unpack(y, t))
            if isinstance(out, tuple):
                out = np.concatenate([np.ravel(np.asarray(o, dtype=float)) for o in out])
            return np.ravel(np.asarray(out, dtype=float))

        Y = _rk4_python(f, y0, float(state0.t), grid, float(h))
    return [state0.unpack(Y[j], grid[j]) for j in range(grid.size)]
