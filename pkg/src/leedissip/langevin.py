"""Stochastic amplitude equation for the V field at fixed momentum.

Simulates the c-number process

    ((i - γ) ∂_t - m_eff) φ + ξ = 0,    m_eff = m_V + p²/(2 m_V),

with complex white noise ``⟨ξ*(t) ξ(s)⟩ = B δ(t - s)``, ``⟨ξ ξ⟩ = 0``. Written
as ``φ̇ = -a φ + c ξ`` with ``a = (γ + i) m_eff / (1 + γ²)`` and
``c = (γ + i) / (1 + γ²)``.

Each step rotates by the exact phase ``exp(-i Im(a) dt)`` and applies an
Euler-Maruyama update to the damping and the noise. A plain EM step on the
full complex drift amplifies whenever ``m dt > 2γ``, which at weak coupling
is far below any practical step size. Because the noise is circularly
symmetric, the rotation leaves its statistics unchanged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError
from .spectral import PoleResult

MAX_DRIFT_STEP = 0.1


@dataclass(frozen=True)
class NoiseSpec:
    B_loc: float
    dt: float
    seed: int = 42
    n_steps: int = 1000
    n_trajectories: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.B_loc < 0:
            raise ConfigurationError(f"B_loc must be non-negative, got {self.B_loc}")
        if self.n_steps < 1 or self.n_trajectories < 1:
            raise ConfigurationError("n_steps and n_trajectories must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 bits")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for trajectory ``index``, independent of how many others run."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_noise(spec: NoiseSpec, index: int = 0, n: int | None = None) -> np.ndarray:
    """Complex Gaussian samples with ``⟨ξ*ξ⟩ = B_loc/dt`` and ``⟨ξξ⟩ = 0``."""
    n = spec.n_steps if n is None else n
    g = trajectory_rng(spec.seed, index).standard_normal((n, 2))
    scale = math.sqrt(spec.B_loc / (2.0 * spec.dt))
    return scale * (g[:, 0] + 1j * g[:, 1])


def drift(pole: PoleResult, p: float = 0.0) -> complex:
    gamma = pole.gamma_friction
    m_eff = pole.m_V + p * p / (2.0 * pole.m_V)
    return (gamma + 1j) * m_eff / (1.0 + gamma * gamma)


def integrate_trajectory(phi0: complex, pole: PoleResult, spec: NoiseSpec, p: float = 0.0, *,
                         index: int = 0, noise: np.ndarray | None = None,
                         stride: int = 1) -> np.ndarray:
    """One path, sampled every ``stride`` steps (``n_steps // stride + 1`` values)."""
    a = drift(pole, p)
    if spec.dt * abs(a) >= MAX_DRIFT_STEP:
        raise ConfigurationError(
            f"dt*|a| = {spec.dt * abs(a):.3g} must stay below {MAX_DRIFT_STEP}"
        )
    gamma = pole.gamma_friction
    c = (gamma + 1j) / (1.0 + gamma * gamma)
    q = np.exp(-1j * a.imag * spec.dt) * (1.0 - a.real * spec.dt)
    if noise is None:
        noise = sample_noise(spec, index)
    elif len(noise) != spec.n_steps:
        raise ConfigurationError("noise path length must equal n_steps")
    u = q * c * spec.dt * noise
    y, _ = lfilter([1.0], [1.0, -q], u, zi=np.array([q * phi0]))
    path = np.concatenate([[complex(phi0)], y])
    return path[::stride]


def record_times(spec: NoiseSpec, stride: int = 1) -> np.ndarray:
    return (np.arange(spec.n_steps + 1) * spec.dt)[::stride]


def run_ensemble(phi0: complex, pole: PoleResult, spec: NoiseSpec, p: float = 0.0, *,
                 stride: int = 1, threads: int = 1) -> np.ndarray:
    """All trajectories as an ``(n_trajectories, n_records)`` array.

    Row ``i`` depends only on ``(seed, i)``, so the thread count cannot change
    the result.
    """
    n_rec = len(record_times(spec, stride))
    out = np.empty((spec.n_trajectories, n_rec), dtype=complex)

    def work(indices):
        for i in indices:
            out[i] = integrate_trajectory(phi0, pole, spec, p, index=i, stride=stride)

    chunks = np.array_split(np.arange(spec.n_trajectories), max(1, threads))
    if threads <= 1:
        work(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    return out


@dataclass(frozen=True)
class TrajectoryEnsemble:
    times: np.ndarray
    mean_field: np.ndarray
    mean_sq: np.ndarray
    stderr_field: np.ndarray
    stderr_sq: np.ndarray
    n_trajectories: int
    decay_rate: float | None
    decay_rate_stderr: float | None
    fit_degenerate: bool
    seed: int | None = None

    def rows(self):
        m = self.mean_field
        return np.column_stack([self.times, m.real, m.imag, self.mean_sq,
                                self.stderr_field, self.stderr_sq])


def _log_fit(times, mean_abs, stderr, t_max):
    mask = (mean_abs > 5.0 * stderr) & (times <= t_max) & (mean_abs > 0)
    if mask.sum() < 3:
        return None
    slope, _ = np.polyfit(times[mask], np.log(mean_abs[mask]), 1)
    return float(-slope)


def ensemble_stats(paths: np.ndarray, times, *, seed: int | None = None,
                   fit_until: float | None = None, n_groups: int = 20) -> TrajectoryEnsemble:
    """Pointwise moments and an exponential fit of ``|⟨φ⟩|(t)``.

    The fit is a log-linear least-squares fit over points where the mean
    clears five standard errors. Its uncertainty is a delete-one-group
    jackknife over ``n_groups`` blocks of trajectories, which accounts for
    the strong correlation between time points.
    """
    paths = np.asarray(paths)
    times = np.asarray(times, dtype=float)
    n = paths.shape[0]
    if n < 2:
        raise ConfigurationError("ensemble statistics need at least 2 trajectories")
    mean = paths.mean(axis=0)
    sq = np.abs(paths) ** 2
    mean_sq = sq.mean(axis=0)
    se_field = np.sqrt(np.mean(np.abs(paths - mean) ** 2, axis=0) / (n - 1))
    se_sq = sq.std(axis=0, ddof=1) / math.sqrt(n)
    t_max = times[-1] if fit_until is None else fit_until

    rate = _log_fit(times, np.abs(mean), se_field, t_max)
    rate_se = None
    if rate is not None and n >= 2 * n_groups:
        groups = np.array_split(np.arange(n), n_groups)
        total = paths.sum(axis=0)
        loo = []
        for g in groups:
            m = (total - paths[g].sum(axis=0)) / (n - len(g))
            loo.append(_log_fit(times, np.abs(m), se_field, t_max))
        if all(r is not None for r in loo):
            loo = np.array(loo)
            rate_se = float(math.sqrt((n_groups - 1) / n_groups * np.sum((loo - loo.mean()) ** 2)))
    degenerate = rate is None or rate <= 0
    return TrajectoryEnsemble(times, mean, mean_sq, se_field, se_sq, n,
                              rate, rate_se, degenerate, seed)


def stationary_mean_square(paths: np.ndarray, times, t_start: float) -> tuple[float, float]:
    """``⟨|φ|²⟩`` averaged over ``t >= t_start``; the error treats each
    trajectory's time average as one independent sample."""
    times = np.asarray(times)
    mask = times >= t_start
    if not mask.any():
        raise ConfigurationError("stationary window is empty")
    per_traj = np.mean(np.abs(paths[:, mask]) ** 2, axis=1)
    return float(per_traj.mean()), float(per_traj.std(ddof=1) / math.sqrt(len(per_traj)))


def mean_decay_rate(pole: PoleResult, p: float = 0.0) -> float:
    """Closed-form decay rate of ``|⟨φ⟩|``: ``γ m_eff / (1 + γ²)``."""
    return drift(pole, p).real
