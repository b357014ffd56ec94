"""Monte Carlo orchestration: trials, aggregation, theory comparison and sweeps.

Every trial is keyed by (master seed, trial index) so results do not depend on
worker count or scheduling; parallel results are joined in trial order.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from . import theory
from .fast_petrels import run_petrels_d1
from .model import SubspaceModel, correlated_init, generate_subspace, trial_rngs
from .record import TrajectoryRecord
from .schedules import schedule_from_config
from .trackers import ALGORITHMS, TrackerParams, init_state, record_indices, run_stream

COSINE_BOUND = 1.0 + 1e-8


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment. ``tau`` is a number or a schedule mapping."""

    algo: str = "oja"
    n: int = 2000
    d: int = 4
    lambdas: tuple = (5.0, 4.0, 3.0, 2.0)
    sigma: float = 1.0
    alpha: float = 0.5
    noise: str = "gaussian"
    q0: float = 0.5
    T: float = 3.0
    record_times: tuple | None = None
    record_dt: float = 0.25
    n_trials: int = 100
    seed: int = 42
    tau: object = 0.5
    mu: float = 5.0
    delta: float = 10.0
    eps: float | None = None
    eps_prime: float = 0.1
    reorth_every: int = 1000
    store_Q: bool = False

    def __post_init__(self):
        lambdas = tuple(float(v) for v in np.atleast_1d(self.lambdas))
        object.__setattr__(self, "lambdas", lambdas)
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"algo must be one of {ALGORITHMS}")
        if self.n < 1 or not 1 <= self.d <= self.n:
            raise ConfigError("need n >= 1 and 1 <= d <= n")
        if len(lambdas) != self.d:
            raise ConfigError(f"expected {self.d} lambdas, got {len(lambdas)}")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.record_times is None:
            if not self.record_dt > 0:
                raise ConfigError("record_dt must be positive")
            count = int(math.floor(self.T / self.record_dt + 1e-9))
            times = tuple(round(self.record_dt * j, 12) for j in range(count + 1))
        else:
            times = tuple(float(t) for t in self.record_times)
        if not times or any(b < a for a, b in zip(times, times[1:])):
            raise ConfigError("record_times must be non-empty and ascending")
        if times[0] < 0 or times[-1] > self.T + 1e-12:
            raise ConfigError("record_times must lie in [0, T]")
        object.__setattr__(self, "record_times", times)
        if not 0 < self.q0 <= 1:
            raise ConfigError("q0 must lie in (0, 1]")
        try:
            object.__setattr__(self, "tau", _schedule_config(self.tau))
            self.tracker_params()
            self.ode_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambdas"] = list(self.lambdas)
        out["record_times"] = list(self.record_times)
        return out

    @property
    def experiment_id(self) -> str:
        return config_hash(self.to_dict())

    @property
    def steps(self) -> int:
        return int(record_indices([self.T], self.n)[0])

    def tracker_params(self) -> TrackerParams:
        return TrackerParams(
            step=schedule_from_config(self.tau),
            mu=self.mu,
            delta=self.delta,
            alpha=self.alpha,
            eps=self.eps,
            eps_prime=self.eps_prime,
            reorth_every=self.reorth_every,
        )

    def ode_params(self) -> theory.OdeParams:
        return theory.OdeParams(
            lambdas=np.array(self.lambdas), sigma=self.sigma, alpha=self.alpha,
            tau=schedule_from_config(self.tau), mu=self.mu,
        )

    def with_(self, **changes) -> ExperimentConfig:
        raw = self.to_dict()
        if "T" in changes or "record_dt" in changes:
            raw["record_times"] = None
        raw.update(changes)
        return ExperimentConfig.from_dict(raw)


def _schedule_config(tau):
    sched = schedule_from_config(tau)
    return sched.to_config()


def config_hash(obj) -> str:
    """Short sha256 of the canonical JSON form."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class TrialResult:
    cosines: np.ndarray
    skips: int
    Q: np.ndarray | None = None


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """One independent stream: fresh U, X_0 and data for this trial index."""
    setup_rng, data_rng = trial_rngs(cfg.seed, trial)
    U = generate_subspace(cfg.n, cfg.d, setup_rng)
    X0 = correlated_init(U, cfg.q0, setup_rng)
    model = SubspaceModel(U, np.array(cfg.lambdas), cfg.sigma, cfg.alpha, noise=cfg.noise)
    state = init_state(cfg.algo, X0, cfg.tracker_params())
    rec = run_stream(state, model, cfg.steps, cfg.record_times, data_rng, store_Q=cfg.store_Q)
    return TrialResult(rec.cosines[0], int(rec.skips[0]), None if rec.Q is None else rec.Q[0])


def _run_trial_args(args):
    return run_trial(*args)


def _map_ordered(fn, items, workers: int):
    """Apply fn to items, in parallel when workers > 1, returning results in item order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def run_experiment(cfg: ExperimentConfig, workers: int = 1, trials: Sequence[int] | None = None) -> TrajectoryRecord:
    """Run ``cfg.n_trials`` independent trials and aggregate their principal cosines."""
    idx = list(range(cfg.n_trials)) if trials is None else list(trials)
    results = _map_ordered(_run_trial_args, [(cfg, t) for t in idx], workers)
    record = TrajectoryRecord.from_trials(
        cfg.record_times,
        [r.cosines for r in results],
        Q=[r.Q for r in results] if cfg.store_Q else None,
        skips=[r.skips for r in results],
        meta={"experiment_id": cfg.experiment_id, "trials": idx, "steps": cfg.steps},
    )
    if np.any(record.cosines > COSINE_BOUND) or np.any(record.cosines < 0):
        raise FloatingPointError("principal cosines left [0, 1]")
    return record


def predict_for(cfg: ExperimentConfig, method: str | None = None, h: float = 5e-4) -> np.ndarray:
    """Theory curve matching ``cfg.record_times`` (len(times) x d)."""
    return theory.predict(cfg.algo, cfg.ode_params(), cfg.q0, cfg.record_times, delta=cfg.delta, method=method, h=h)


@dataclass
class ErrorReport:
    times: np.ndarray
    abs_err: np.ndarray
    sem: np.ndarray
    within_2sem: np.ndarray
    max_err: float
    rms_err: float

    def within(self, floor: float) -> np.ndarray:
        """Points with error <= max(floor, 2 SEM)."""
        return self.abs_err <= np.maximum(floor, 2.0 * self.sem)

    def summary(self) -> dict:
        return {
            "max_abs_err": self.max_err,
            "rms_abs_err": self.rms_err,
            "fraction_within_2sem": float(np.mean(self.within_2sem)),
        }


def _prediction_array(prediction, times):
    """Accept (times, values), a list of (t, cosines) pairs or a bare array."""
    if isinstance(prediction, tuple) and len(prediction) == 2 and np.ndim(prediction[0]) == 1:
        p_times, values = np.asarray(prediction[0], dtype=float), np.asarray(prediction[1], dtype=float)
    elif isinstance(prediction, list) and prediction and isinstance(prediction[0], tuple):
        p_times = np.array([p[0] for p in prediction], dtype=float)
        values = np.array([np.atleast_1d(p[1]) for p in prediction], dtype=float)
    else:
        return np.asarray(prediction, dtype=float)
    if p_times.shape != times.shape or np.max(np.abs(p_times - times), initial=0.0) > 1e-9:
        raise ValueError("prediction and record use different time grids")
    return values


def compare_to_theory(record: TrajectoryRecord, prediction) -> ErrorReport:
    """Per-(time, direction) absolute error of the mean against a prediction."""
    values = _prediction_array(prediction, record.times)
    if values.shape != record.mean.shape:
        raise ValueError(f"prediction shape {values.shape} does not match record {record.mean.shape}")
    err = np.abs(record.mean - values)
    sem = record.sem
    return ErrorReport(
        times=record.times,
        abs_err=err,
        sem=sem,
        within_2sem=err <= 2.0 * sem,
        max_err=float(err.max()),
        rms_err=float(np.sqrt(np.mean(err**2))),
    )


@dataclass
class RateFit:
    n_list: np.ndarray
    errors: np.ndarray
    error_sem: np.ndarray
    slope: float
    intercept: float
    degenerate: bool
    per_trial: list = field(default_factory=list)


def fit_rate(n_list, errors, error_sem=None) -> RateFit:
    """Least-squares slope of log(error) against log(n)."""
    n_arr = np.asarray(n_list, dtype=float)
    err = np.asarray(errors, dtype=float)
    if n_arr.size < 2:
        raise ValueError("a slope needs at least two values of n")
    if np.any(np.diff(n_arr) <= 0):
        raise ValueError("n_list must be strictly increasing")
    sem = np.zeros_like(err) if error_sem is None else np.asarray(error_sem, dtype=float)
    if np.any(err <= 0):
        return RateFit(n_arr, err, sem, math.nan, math.nan, True)
    slope, intercept = np.polyfit(np.log(n_arr), np.log(err), 1)
    return RateFit(n_arr, err, sem, float(slope), float(intercept), False)


def finite_sample_sweep(base: ExperimentConfig, n_list, t_star: float, workers: int = 1) -> RateFit:
    """Mean ||cos^(n)(t*) - cos(t*)|| over trials for each n, and the fitted log-log slope."""
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2:
        raise ValueError("a slope needs at least two values of n")
    if not 0 <= t_star <= base.T:
        raise ValueError("t_star must lie in [0, T]")
    errs, sems, raw = [], [], []
    for n in n_list:
        cfg = base.with_(n=n, record_times=[t_star], T=t_star)
        rec = run_experiment(cfg, workers=workers)
        target = predict_for(cfg)[0]
        per_trial = np.linalg.norm(rec.cosines[:, 0, :] - target, axis=1)
        raw.append(per_trial)
        errs.append(float(per_trial.mean()))
        sems.append(float(per_trial.std(ddof=1) / math.sqrt(per_trial.size)) if per_trial.size > 1 else 0.0)
    fit = fit_rate(n_list, errs, sems)
    fit.per_trial = raw
    return fit


@dataclass
class PhasePortrait:
    trajectories: list
    G_grid: np.ndarray
    f: np.ndarray
    h: np.ndarray
    fixed_point: object


def phase_portrait(p: theory.OdeParams, starts, t_end: float, h: float = 1e-3, sample_dt: float = 0.05,
                   G_grid=None) -> PhasePortrait:
    """(Q^2, G) trajectories from each start plus the two nullclines on a G grid."""
    if p.d != 1:
        raise theory.UnsupportedDimensionError("phase portraits are one-dimensional")
    system = theory.phase_system(p)
    trajectories = []
    for q2, G in starts:
        states = theory.integrate(system, theory.PhasePoint(float(q2), float(G)), t_end, h=h, sample_dt=sample_dt)
        trajectories.append(np.array([[s.t, s.q2, s.G] for s in states]))
    if G_grid is None:
        hi = max([float(G) for _, G in starts] + [1.0]) * 1.2
        G_grid = np.linspace(hi / 400, hi, 400)
    G_grid = np.asarray(G_grid, dtype=float)
    return PhasePortrait(
        trajectories=trajectories,
        G_grid=G_grid,
        f=np.asarray(theory.nullcline_f(G_grid, p)),
        h=np.asarray(theory.nullcline_h(G_grid, p)),
        fixed_point=theory.petrels_fixed_point(p),
    )


@dataclass
class HeatmapResult:
    mu_grid: np.ndarray
    snr_grid: np.ndarray
    q2: np.ndarray  # (snr, mu, trials)
    mean: np.ndarray  # (snr, mu)
    sem: np.ndarray
    critical_mu: np.ndarray  # per snr
    skips: np.ndarray
    settings: dict

    def boundary_curve(self, points: int = 200) -> tuple[np.ndarray, np.ndarray]:
        snr = np.geomspace(self.snr_grid.min(), self.snr_grid.max(), points)
        return snr, theory.critical_mu_from_snr(snr)


def _heatmap_cell(args):
    (i, j, t, snr, mu, n, t_end, alpha, sigma, delta, q0, seed, engine) = args
    lam = math.sqrt(snr * sigma**2 / alpha)
    steps = int(record_indices([t_end], n)[0])
    setup = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, j, t, 0)))
    data = np.random.SeedSequence(seed, spawn_key=(i, j, t, 1))
    if engine == "fast":
        res = run_petrels_d1(n, lam, sigma, alpha, mu, delta, q0, steps, [steps], setup, data)
        return float(res.q2[-1]), res.skips
    U = generate_subspace(n, 1, setup)
    X0 = correlated_init(U, q0, setup)
    model = SubspaceModel(U, [lam], sigma, alpha)
    state = init_state("petrels", X0, TrackerParams(mu=mu, delta=delta, alpha=alpha))
    rec = run_stream(state, model, steps, [t_end], np.random.default_rng(data))
    return float(rec.cosines[0, -1, 0] ** 2), int(rec.skips[0])


def phase_heatmap(mu_grid, snr_grid, n: int = 2000, t_end: float = 100.0, trials: int = 20, *,
                  alpha: float = 0.5, sigma: float = 1.0, delta: float = 10.0, q0: float = 0.5,
                  seed: int = 42, engine: str = "fast", workers: int = 1) -> HeatmapResult:
    """Mean steady-state Q^2 of one-dimensional PETRELS on a (snr, mu) grid.

    snr is alpha lambda^2 / sigma^2; lambda is set from it. ``engine="fast"``
    uses the fused d = 1 kernel (dyadic alpha, +/- sigma noise),
    ``"reference"`` the general tracker with Gaussian noise.
    """
    if engine not in ("fast", "reference"):
        raise ValueError("engine must be 'fast' or 'reference'")
    mu_grid = np.asarray(mu_grid, dtype=float)
    snr_grid = np.asarray(snr_grid, dtype=float)
    jobs = [
        (i, j, t, float(snr), float(mu), n, t_end, alpha, sigma, delta, q0, seed, engine)
        for i, snr in enumerate(snr_grid)
        for j, mu in enumerate(mu_grid)
        for t in range(trials)
    ]
    out = _map_ordered(_heatmap_cell, jobs, workers)
    q2 = np.array([o[0] for o in out]).reshape(snr_grid.size, mu_grid.size, trials)
    skips = np.array([o[1] for o in out]).reshape(q2.shape)
    sem = q2.std(axis=2, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(q2.shape[:2])
    settings = dict(n=n, t_end=t_end, trials=trials, alpha=alpha, sigma=sigma, delta=delta, q0=q0,
                    seed=seed, engine=engine)
    return HeatmapResult(mu_grid, snr_grid, q2, q2.mean(axis=2), sem,
                         np.asarray(theory.critical_mu_from_snr(snr_grid)), skips, settings)


@dataclass
class ToyRun:
    n: int
    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    limit: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.mean - self.limit)))


def toy_scaling_demo(tau: float, delta_exp: float, n_list, t_end: float = 1.0, *, q0: float = 1.0,
                     trials: int = 1000, record_dt: float = 0.1, seed: int = 42, noise: bool = True) -> list[ToyRun]:
    """q_{k+1} = q_k - (tau/n) q_k + n^{-1/2-delta} v_k for each n, against q0 exp(-tau t)."""
    if delta_exp <= 0:
        raise ValueError("delta_exp must be positive")
    times = theory.output_times(0.0, t_end, record_dt)
    runs = []
    for n in n_list:
        n = int(n)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))
        ks = record_indices(times, n)
        q = np.full(trials, float(q0))
        scale = n ** (-0.5 - delta_exp)
        decay = 1.0 - tau / n
        snaps, pos = [], 0
        for k in range(int(ks[-1]) + 1):
            while pos < ks.size and ks[pos] == k:
                snaps.append(q.copy())
                pos += 1
            if k == ks[-1]:
                break
            q = decay * q
            if noise:
                q += scale * rng.standard_normal(trials)
        snaps = np.array(snaps)
        runs.append(ToyRun(
            n=n, times=times, mean=snaps.mean(axis=1),
            std=snaps.std(axis=1, ddof=1) if trials > 1 else np.zeros(times.size),
            limit=q0 * np.exp(-tau * times),
        ))
    return runs
