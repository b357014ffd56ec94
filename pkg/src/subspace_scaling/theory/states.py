"""Theory-side states. Each variant flattens to a vector for the integrator."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np


class OdeState:
    """Base class: every non-``t`` field is a float or a float array."""

    t: float

    def _names(self):
        return [f.name for f in fields(self) if f.name != "t"]

    def pack(self) -> np.ndarray:
        return np.concatenate([np.ravel(np.asarray(getattr(self, k), dtype=float)) for k in self._names()])

    def unpack(self, vec: np.ndarray, t: float):
        """A state shaped like ``self`` holding the entries of ``vec`` at time t."""
        out, pos = {}, 0
        for k in self._names():
            ref = getattr(self, k)
            shape = np.shape(ref)
            size = int(np.prod(shape)) if shape else 1
            chunk = vec[pos:pos + size]
            out[k] = float(chunk[0]) if not shape else chunk.reshape(shape).copy()
            pos += size
        return replace(self, t=float(t), **out)


def _square(name, M):
    M = np.array(M, dtype=float, ndmin=2)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square")
    return M


@dataclass(frozen=True)
class OjaGrouse(OdeState):
    Q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "Q", _square("Q", self.Q))


@dataclass(frozen=True)
class PetrelsReduced(OdeState):
    """(Q, G) with both diagonal; valid when K(0) is diagonal."""

    Q: np.ndarray
    G: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        Q, G = _square("Q", self.Q), _square("G", self.G)
        if Q.shape != G.shape:
            raise ValueError("Q and G must have the same shape")
        for name, M in (("Q", Q), ("G", G)):
            if np.any(M - np.diag(np.diag(M))):
                raise ValueError(f"the reduced PETRELS system needs a diagonal {name}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "G", G)


@dataclass(frozen=True)
class PetrelsFull(OdeState):
    A: np.ndarray
    K: np.ndarray
    W: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        mats = [_square(k, getattr(self, k)) for k in ("A", "K", "W")]
        if len({m.shape for m in mats}) != 1:
            raise ValueError("A, K and W must have the same shape")
        for k, m in zip(("A", "K", "W"), mats):
            object.__setattr__(self, k, m)


@dataclass(frozen=True)
class PState(OdeState):
    """P = (Q Q^T)^{-1} for the linear Oja/GROUSE reformulation."""

    P: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "P", _square("P", self.P))


@dataclass(frozen=True)
class PhasePoint(OdeState):
    """(Q^2, G) for one-dimensional PETRELS."""

    q2: float
    G: float
    t: float = 0.0


@dataclass(frozen=True)
class VectorState(OdeState):
    """Free-form state for user-supplied right-hand sides."""

    y: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.array(self.y, dtype=float)))
