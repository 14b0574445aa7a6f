"""Exact single-excitation sector on the discretized momentum grid.

The span of ``|V⟩`` and ``|N θ_k⟩`` is closed under the Hamiltonian. On the
grid it becomes an arrowhead matrix (one discrete level coupled to a
discretized continuum), which is diagonalized densely. This is the reference
the spectral and master-equation modules are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, RegimeError
from .model import ModelParams, MomentumGrid


@dataclass(frozen=True)
class SectorHamiltonian:
    """Arrowhead Hamiltonian.

    ``diag = [m_V0, m_N + ω_1, ..., m_N + ω_n]`` and the first row/column holds
    the couplings ``h_k = λ f(ω_k) sqrt(w_k / (2ω_k))``.
    """

    diag: np.ndarray
    couplings: np.ndarray
    m_N: float
    mu: float
    weights: np.ndarray
    omegas: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.diag)

    @property
    def threshold(self) -> float:
        return self.m_N + self.mu

    def matrix(self) -> np.ndarray:
        H = np.diag(self.diag).astype(float)
        H[0, 1:] = self.couplings
        H[1:, 0] = self.couplings
        return H

    @cached_property
    def eigh(self):
        return np.linalg.eigh(self.matrix())

    def golden_rule_width(self) -> float:
        """``2π h²/δ`` at the continuum level nearest the bare V energy."""
        levels = self.diag[1:]
        i = int(np.argmin(np.abs(levels - self.diag[0])))
        i = min(max(i, 1), len(levels) - 2)
        spacing = 0.5 * (levels[i + 1] - levels[i - 1])
        return 2.0 * math.pi * self.couplings[i] ** 2 / spacing


def build_sector(model: ModelParams, grid: MomentumGrid, *, v_energy: float | None = None,
                 coupling: float | None = None) -> SectorHamiltonian:
    """Arrowhead matrix for the grid.

    ``v_energy`` and ``coupling`` override ``m_V0`` and ``λ₀``; the master
    equation uses this to insert renormalized values.
    """
    lam = model.lambda0 if coupling is None else coupling
    e_v = model.m_V0 if v_energy is None else v_energy
    w = grid.omegas
    h = lam * np.asarray(model.form_factor(w)) * np.sqrt(grid.weights / (2.0 * w))
    diag = np.concatenate([[e_v], model.m_N + w])
    return SectorHamiltonian(diag, h, model.m_N, model.mu, np.asarray(grid.weights), w)


def diagonalize_stable(H: SectorHamiltonian):
    """Isolated bound state below the continuum.

    Returns
    -------
    m_V : float
        Lowest eigenvalue.
    g : ndarray
        Continuum amplitudes rescaled to the continuum normalization,
        ``g_k = u_k / (u_V sqrt(w_k))``.
    Z_V : float
        ``|⟨V|bound⟩|²``.
    """
    E, U = H.eigh
    if not E[0] < H.threshold:
        raise RegimeError(
            f"no eigenvalue below the threshold m_N+mu={H.threshold} (lowest {E[0]})"
        )
    u = U[:, 0]
    if u[0] < 0:
        u = -u
    g = u[1:] / (u[0] * np.sqrt(H.weights))
    return float(E[0]), g, float(u[0] ** 2)


def continuum_weight(m_V: float, model: ModelParams, omegas) -> np.ndarray:
    """Closed-form bound-state weight ``λ₀ f(ω) / ((m_V - m_N - ω) sqrt(2ω))``."""
    omegas = np.asarray(omegas, dtype=float)
    f = np.asarray(model.form_factor(omegas))
    return model.lambda0 * f / ((m_V - model.m_N - omegas) * np.sqrt(2.0 * omegas))


@dataclass(frozen=True)
class SurvivalRecord:
    times: np.ndarray
    amplitude: np.ndarray

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def rows(self):
        a = self.amplitude
        return np.column_stack([self.times, a.real, a.imag, np.abs(a) ** 2])


def evolve_survival(H: SectorHamiltonian, t_grid, chunk: int = 512) -> SurvivalRecord:
    """``c(t) = Σ_a |⟨V|a⟩|² exp(-i E_a t)`` from the full eigendecomposition."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0 or t[0] < 0 or np.any(np.diff(t) < 0):
        raise ConfigurationError("t_grid must be ascending and start at t >= 0")
    E, U = H.eigh
    p = U[0] ** 2
    p = p / p.sum()  # completeness holds to ~1e-15; renormalize so c(0)=1 exactly
    c = np.empty(len(t), dtype=complex)
    for s in range(0, len(t), chunk):
        ts = t[s:s + chunk]
        c[s:s + chunk] = np.exp(-1j * np.outer(ts, E)) @ p
    return SurvivalRecord(t, c)


def fit_decay_rate(record: SurvivalRecord, start: float, stop: float) -> float:
    """Slope of ``-log|c|²`` on ``[start, stop]`` by least squares."""
    t = record.times
    mask = (t >= start) & (t <= stop)
    if mask.sum() < 3:
        raise ConfigurationError(f"fit window [{start}, {stop}] holds fewer than 3 samples")
    slope, _ = np.polyfit(t[mask], np.log(record.probability[mask]), 1)
    return float(-slope)


def fitted_width(H: SectorHamiltonian, width_guess: float, window=(0.2, 2.0),
                 n_points: int = 2000) -> tuple[float, SurvivalRecord]:
    """Exponential-fit width over ``[window[0]/Γ, window[1]/Γ]``."""
    t = np.linspace(0.0, window[1] / width_guess, n_points)
    rec = evolve_survival(H, t)
    return fit_decay_rate(rec, window[0] / width_guess, window[1] / width_guess), rec


def recurrence_estimate(H: SectorHamiltonian, threshold: float | None = None, *,
                        width: float | None = None, Z_V: float = 1.0,
                        horizon: float | None = None):
    """First time after ``2/Γ`` at which ``|c(t)|²`` climbs back above ``threshold``.

    ``threshold`` defaults to ``0.5·Z_V²``; ``width`` defaults to the
    golden-rule estimate of the matrix itself.
    Returns ``None`` when nothing is found before ``horizon`` (default: three
    times the slowest revival period ``2π/δ`` of the continuum).
    """
    if not np.any(H.couplings != 0):
        raise RegimeError("uncoupled level: no decay, recurrence undefined")
    if H.diag[0] <= H.threshold:
        raise RegimeError("recurrence estimate requires the unstable regime")
    gamma = H.golden_rule_width() if width is None else width
    if not gamma > 0:
        raise RegimeError("V level lies outside the coupled continuum")
    if threshold is None:
        threshold = 0.5 * Z_V**2
    levels = H.diag[1:]
    min_spacing = float(np.min(np.diff(levels)))
    if horizon is None:
        horizon = 3.0 * 2.0 * math.pi / min_spacing
    dt = min(0.02 / gamma, 0.1)
    start = 2.0 / gamma
    block = 4096
    t0 = start
    while t0 < horizon:
        ts = t0 + dt * np.arange(block)
        ts = ts[ts <= horizon]
        if len(ts) == 0:
            break
        P = evolve_survival(H, ts).probability
        hit = np.nonzero(P > threshold)[0]
        if len(hit):
            return float(ts[hit[0]])
        t0 = ts[-1] + dt
    return None
