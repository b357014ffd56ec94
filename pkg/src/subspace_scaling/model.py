"""Generative model for partially observed streaming data.

Each sample is ``s_k = U c_k + a_k`` with ``c_k ~ N(0, diag(lambdas**2))`` and
noise ``a_k`` of variance ``sigma**2`` per entry. Every coordinate is observed
independently with probability ``alpha``; unobserved entries of ``y_k`` are
stored as zeros next to a boolean mask.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .linalg import orthonormalize

NOISE_KINDS = ("gaussian", "rademacher")

_SUBF_MAGIC = b"SUBF"
_SUBF_HEADER = struct.Struct("<4sII4x")  # magic, n, d, 4 reserved bytes -> 16 bytes


@dataclass(frozen=True)
class SubspaceModel:
    """Ground-truth parameters of the observation stream.

    ``noise`` selects the distribution of the entries of ``a_k``; both
    choices have zero mean and variance ``sigma**2``. Gaussian is the
    default, the Rademacher option exists for the fast PETRELS engine.
    """

    U: np.ndarray
    lambdas: np.ndarray
    sigma: float
    alpha: float
    noise: str = "gaussian"
    n: int = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        lambdas = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        if U.ndim != 2:
            raise ValueError("U must be an n x d matrix")
        n, d = U.shape
        if d < 1 or d > n:
            raise ValueError(f"need 1 <= d <= n, got n={n}, d={d}")
        if lambdas.shape != (d,):
            raise ValueError(f"expected {d} lambdas, got {lambdas.shape}")
        if np.any(lambdas < 0) or np.any(np.diff(lambdas) > 0):
            raise ValueError("lambdas must be nonnegative and non-increasing")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}")
        if np.max(np.abs(U.T @ U - np.eye(d))) > 1e-10:
            raise ValueError("U must have orthonormal columns")
        U.setflags(write=False)
        lambdas.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class Observation:
    """One partially observed sample. ``idx`` lists the observed rows in order."""

    y: np.ndarray
    mask: np.ndarray
    k: int
    idx: np.ndarray | None = None

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        y = np.asarray(self.y, dtype=float)
        if y.shape != mask.shape or y.ndim != 1:
            raise ValueError("y and mask must be vectors of equal length")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "y", y)
        if self.idx is None:
            object.__setattr__(self, "idx", np.flatnonzero(mask))


def trial_rngs(master_seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (setup, data) generators for one trial.

    Keys are derived from ``(master_seed, trial)`` with ``SeedSequence``
    spawn keys, so any trial can be reproduced on its own and in any order.
    The setup stream draws ``U`` and ``X_0``; the data stream draws the
    observations, so two algorithms run with the same key see identical data.
    """
    setup = np.random.SeedSequence(master_seed, spawn_key=(trial, 0))
    data = np.random.SeedSequence(master_seed, spawn_key=(trial, 1))
    return np.random.default_rng(setup), np.random.default_rng(data)


def generate_subspace(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random point on the Grassmannian as an orthonormal n x d basis."""
    if d < 1 or d > n:
        raise ValueError(f"need 1 <= d <= n, got n={n}, d={d}")
    return orthonormalize(rng.standard_normal((n, d)))


def sample_observation(model: SubspaceModel, k: int, rng: np.random.Generator) -> Observation:
    """Draw y_k = Omega_k (U c_k + a_k) with its mask."""
    n, d = model.n, model.d
    mask = rng.random(n) < model.alpha
    idx = np.flatnonzero(mask)
    c = model.lambdas * rng.standard_normal(d)
    # Noise is only ever seen on observed entries, so only those are drawn.
    if model.noise == "gaussian":
        a = rng.standard_normal(idx.size)
    else:
        a = 2.0 * rng.integers(0, 2, size=idx.size) - 1.0
    y = _kernels.fill_observed(model.U, c, a, idx, model.sigma)
    return Observation(y=y, mask=mask, k=k, idx=idx)


def correlated_init(U: np.ndarray, q0: float, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal starting point whose principal cosines with U are close to q0.

    Mixes U with a unit-norm Gaussian direction orthogonal to span(U). Any
    construction giving a deterministic limit for U^T X_0 would do; this one
    concentrates around ``q0 * I`` at rate 1/sqrt(n).
    """
    if not 0.0 < q0 <= 1.0:
        raise ValueError("q0 must lie in (0, 1]")
    U = np.asarray(U, dtype=float)
    G = rng.standard_normal(U.shape)
    G -= U @ (U.T @ G)
    G /= np.linalg.norm(G, axis=0)
    return orthonormalize(q0 * U + np.sqrt(1.0 - q0 * q0) * G)


def incoherence_statistic(M: np.ndarray) -> float:
    """Sum of fourth powers of the entries; O(d^2/n) for generic bases."""
    M = np.asarray(M, dtype=float)
    return float(np.sum(M**4))


def save_subspace(path: str | Path, U: np.ndarray) -> None:
    """Write U as little-endian float64, row-major, after a 16-byte header."""
    U = np.ascontiguousarray(U, dtype="<f8")
    n, d = U.shape
    with open(path, "wb") as fh:
        fh.write(_SUBF_HEADER.pack(_SUBF_MAGIC, n, d))
        fh.write(U.tobytes(order="C"))


def load_subspace(path: str | Path) -> np.ndarray:
    """Read a matrix written by :func:`save_subspace`."""
    raw = Path(path).read_bytes()
    if len(raw) < _SUBF_HEADER.size:
        raise ValueError("file too short for a SUBF header")
    magic, n, d = _SUBF_HEADER.unpack_from(raw)
    if magic != _SUBF_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = raw[_SUBF_HEADER.size:]
    if len(body) != 8 * n * d:
        raise ValueError(f"expected {8 * n * d} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(n, d).astype(float)
