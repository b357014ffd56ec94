"""Fast engine for one-dimensional PETRELS, used by the phase-map sweep.

A phase map needs ~10^8 PETRELS steps, far beyond what a general per-step
driver manages on a desk machine. This engine fuses observation sampling and
the d = 1 update into one compiled loop:

* coordinates are observed when an m-bit lane of a raw 64-bit word is below
  ``alpha * 2**m``, so alpha must be dyadic (j / 2**m, m <= 8); the mask is then
  exactly Bernoulli(alpha),
* noise entries are +/- sigma from one raw bit each (zero mean, variance
  sigma**2, which is all the scaling limit depends on),
* c_k is Gaussian with standard deviation lambda.

The update arithmetic is the same as :func:`subspace_scaling.trackers.petrels_step`;
:func:`decode_observations` turns the same raw words into ordinary
Observations so the two can be compared step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .model import Observation, correlated_init, generate_subspace

_CHUNK = 128


@dataclass(frozen=True)
class DyadicMask:
    """alpha = threshold / 2**bits with bits in {1, 2, 4, 8}."""

    bits: int
    threshold: int

    @classmethod
    def from_alpha(cls, alpha: float) -> DyadicMask:
        frac = Fraction(alpha).limit_denominator(256)
        if float(frac) != alpha or not 0 < frac <= 1:
            raise ValueError(f"alpha={alpha} is not of the form j/2^m with m <= 8")
        den = frac.denominator
        if den & (den - 1):
            raise ValueError(f"alpha={alpha} is not of the form j/2^m with m <= 8")
        m = max(1, den.bit_length() - 1)
        bits = next(b for b in (1, 2, 4, 8) if b >= m)
        return cls(bits=bits, threshold=int(frac * (1 << bits)))

    def words_per_step(self, n: int) -> int:
        return (n * self.bits + 63) // 64 + (n + 63) // 64


def _make_decoder(bits: int):
    # `bits` is baked in as a compile-time constant so the inner loops have fixed trip counts.
    lanes = 64 // bits
    lane = np.uint64((1 << bits) - 1)
    ubits = np.uint64(bits)
    one = np.uint64(1)

    @njit(cache=True, fastmath=True)
    def decode(words, base, n, threshold, c, u, sigma, y, m):
        thr = np.uint64(threshold)
        sign_base = base + (n * bits + 63) // 64
        for blk in range((n + 63) // 64):
            sw = words[sign_base + blk]
            for q in range(bits):
                mw = words[base + blk * bits + q]
                for jj in range(lanes):
                    j = q * lanes + jj
                    i = blk * 64 + j
                    if i >= n:
                        break
                    obs = np.float64(((mw >> (ubits * np.uint64(jj))) & lane) < thr)
                    sgn = np.float64((sw >> np.uint64(j)) & one)
                    m[i] = obs
                    y[i] = obs * (u[i] * c + sigma * (2.0 * sgn - 1.0))

    return decode


_DECODERS = {b: _make_decoder(b) for b in (1, 2, 4, 8)}

# In the uninformative regime x and r grow like gamma^-k and overflow within a
# few units of rescaled time; both are then rescaled by an exact power of two.
_RESCALE_HI = 2.0**200
_RESCALE_LO = 2.0**-200


@njit(cache=True, fastmath=True)
def _run_chunk(decode, x, u, r, skips, scale_exp, words, coeffs, n, bits, threshold, sigma, alpha, gamma, eps,
               k0, rec_steps, rec_out, rec_pos, y, m):
    wps = (n * bits + 63) // 64 + (n + 63) // 64
    # The stored (x, r) equal the true state times (2^-e, 4^-e); the guard is
    # compared in true units, so rescaling never changes which steps are taken.
    eps_s = math.ldexp(eps, -2 * scale_exp)
    for s in range(coeffs.shape[0]):
        k = k0 + s
        while rec_pos < rec_steps.shape[0] and rec_steps[rec_pos] == k:
            ux = 0.0
            xx = 0.0
            for i in range(n):
                ux += u[i] * x[i]
                xx += x[i] * x[i]
            rec_out[rec_pos] = ux * ux / xx
            rec_pos += 1
        decode(words, s * wps, n, threshold, coeffs[s], u, sigma, y, m)
        Z = 0.0
        b = 0.0
        for i in range(n):
            Z += m[i] * x[i] * x[i]
            b += x[i] * y[i]
        if Z <= eps_s:
            skips += 1
            continue
        w = b / Z
        gain = w * r
        for i in range(n):
            x[i] += m[i] * (y[i] - x[i] * w) * gain
        v = r * w / gamma
        beta = 1.0 + alpha * w * v
        r = r / gamma - alpha * v * v / beta
        if r > _RESCALE_HI or r < _RESCALE_LO:
            e = math.frexp(r)[1] // 2
            for i in range(n):
                x[i] = math.ldexp(x[i], -e)
            r = math.ldexp(r, -2 * e)
            scale_exp += e
            eps_s = math.ldexp(eps, -2 * scale_exp)
    return r, skips, rec_pos, scale_exp


@dataclass(frozen=True)
class FastTrialResult:
    q2: np.ndarray
    skips: int
    x: np.ndarray
    r: float
    scale_exp: int = 0  # true state is (x * 2^e, r * 4^e)


def run_petrels_d1(
    n: int,
    lam: float,
    sigma: float,
    alpha: float,
    mu: float,
    delta: float,
    q0: float,
    steps: int,
    record_steps,
    setup_rng: np.random.Generator,
    data_seed: np.random.SeedSequence,
    eps: float | None = None,
) -> FastTrialResult:
    """One PETRELS trial with d = 1; returns Q^2 after each step count in ``record_steps``."""
    mask = DyadicMask.from_alpha(alpha)
    if mu >= n:
        raise ValueError("need mu < n")
    eps = alpha / 2 if eps is None else eps
    U = generate_subspace(n, 1, setup_rng)
    x = np.ascontiguousarray(correlated_init(U, q0, setup_rng)[:, 0])
    u = np.ascontiguousarray(U[:, 0])
    rec_steps = np.asarray(record_steps, dtype=np.int64)
    if rec_steps.size and (np.any(np.diff(rec_steps) < 0) or rec_steps[-1] > steps):
        raise ValueError("record_steps must be ascending and within the horizon")
    rec_out = np.full(rec_steps.size, np.nan)
    bitgen = np.random.SFC64(data_seed)
    gauss = np.random.Generator(bitgen)
    r, skips, rec_pos, scale_exp = delta / n, 0, 0, 0
    gamma = 1.0 - mu / n
    y, m = np.empty(n), np.empty(n)
    wps = mask.words_per_step(n)
    for k0 in range(0, steps, _CHUNK):
        size = min(_CHUNK, steps - k0)
        words = bitgen.random_raw(size * wps)
        coeffs = lam * gauss.standard_normal(size)
        r, skips, rec_pos, scale_exp = _run_chunk(
            _DECODERS[mask.bits], x, u, r, skips, scale_exp, words, coeffs, n, mask.bits, mask.threshold, float(sigma),
            float(alpha), gamma, eps, k0, rec_steps, rec_out, rec_pos, y, m,
        )
    while rec_pos < rec_steps.size and rec_steps[rec_pos] == steps:
        rec_out[rec_pos] = float((u @ x) ** 2 / (x @ x))
        rec_pos += 1
    return FastTrialResult(q2=rec_out, skips=int(skips), x=x, r=float(r), scale_exp=int(scale_exp))


def decode_observations(words, coeffs, n: int, alpha: float, sigma: float, U: np.ndarray, k0: int = 0):
    """Observations encoded by raw words and coefficients, one per step."""
    mask = DyadicMask.from_alpha(alpha)
    wps = mask.words_per_step(n)
    words = np.asarray(words, dtype=np.uint64)
    u = np.ascontiguousarray(U[:, 0], dtype=float)
    out = []
    for s, c in enumerate(np.asarray(coeffs, dtype=float)):
        y, m = np.empty(n), np.empty(n)
        _DECODERS[mask.bits](words, s * wps, n, mask.threshold, c, u, float(sigma), y, m)
        out.append(Observation(y=y, mask=m.astype(bool), k=k0 + s))
    return out


def run_chunk_raw(x, r, U, words, coeffs, alpha, sigma, mu, eps=None, scale_exp=0):
    """Apply the fused kernel to explicit raw inputs; returns (x, r, skips, scale_exp). For cross-checks."""
    n = U.shape[0]
    mask = DyadicMask.from_alpha(alpha)
    x = np.array(x, dtype=float).ravel()
    y, m = np.empty(n), np.empty(n)
    eps = alpha / 2 if eps is None else eps
    empty = np.zeros(0, dtype=np.int64)
    r, skips, _, scale_exp = _run_chunk(
        _DECODERS[mask.bits], x, np.ascontiguousarray(U[:, 0], dtype=float), float(r), 0, int(scale_exp), np.asarray(words, dtype=np.uint64),
        np.asarray(coeffs, dtype=float), n, mask.bits, mask.threshold, float(sigma), float(alpha),
        1.0 - mu / n, eps, 0, empty, np.zeros(0), 0, y, m,
    )
    return x, r, skips, scale_exp
