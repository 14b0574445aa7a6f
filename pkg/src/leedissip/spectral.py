"""Self-energy, in-in kernels, renormalization constants and the complex pole.

With ``x = E - m_N`` the one-loop self-energy is

    Σ(E) = ∫dω g(ω) / (ω - x - i0),   g(ω) = λ₀² f(ω)² k(ω) / (4π²),

so ``Im Σ = π g(x)`` and ``Re Σ`` is a principal-value integral. The
principal value is taken on the momentum grid by subtracting ``g(x)`` under
the integral and adding back ``g(x) ln|(ω_max - x)/(x - ω_min)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, RootFindingError
from .model import ModelParams, MomentumGrid

PV_SCHEME = "subtraction: sum[(g(w)-g(x))/(w-x)] + g(x)*ln|(w_max-x)/(x-w_min)|"

# below this distance a grid node is treated as sitting on the pole
_NODE_EPS = 1e-10


def spectral_weight(x, model: ModelParams):
    """``g(x) = λ₀² f(x)² sqrt(x² - μ²) / (4π²)`` above ``x = μ``, zero below."""
    x = np.asarray(x, dtype=float)
    k = np.sqrt(np.clip(x * x - model.mu**2, 0.0, None))
    f = np.asarray(model.form_factor(x))
    out = np.where(x > model.mu, model.lambda0**2 * f * f * k / (4.0 * math.pi**2), 0.0)
    return out if out.ndim else float(out)


def _spectral_weight_slope(x, model: ModelParams):
    x = np.asarray(x, dtype=float)
    k = np.sqrt(np.clip(x * x - model.mu**2, 0.0, None))
    f = np.asarray(model.form_factor(x))
    fp = np.asarray(model.form_factor.derivative(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = model.lambda0**2 * (2.0 * f * fp * k + f * f * x / k) / (4.0 * math.pi**2)
    return np.where(x > model.mu, val, 0.0)


def _re_sigma(E, model: ModelParams, grid: MomentumGrid) -> np.ndarray:
    """Vectorised principal-value part of Σ(E)."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    x = E - model.m_N
    w = grid.omegas
    dw = grid.d_omega
    gw = spectral_weight(w, model)
    gx = np.atleast_1d(spectral_weight(x, model))

    tol = 1e-12 * max(1.0, grid.omega_max)
    outside = (gx > 0) & (x > grid.omega_max - tol)
    if np.any(outside):
        bad = E[outside][0]
        raise ConfigurationError(
            f"principal-value point E={bad} (omega={bad - model.m_N}) is not inside the "
            f"grid range omega < {grid.omega_max}; the truncated integral diverges there"
        )

    out = np.empty_like(x)
    for j, (xj, gxj) in enumerate(zip(x, gx)):
        diff = w - xj
        near = np.abs(diff) < _NODE_EPS
        safe = np.where(near, 1.0, diff)
        terms = (gw - gxj) * dw / safe
        if np.any(near):
            terms = np.where(near, _spectral_weight_slope(xj, model) * dw, terms)
        s = terms.sum()
        if gxj > 0:
            s += gxj * math.log(abs((grid.omega_max - xj) / (xj - grid.omega_min)))
        out[j] = s
    return out


def self_energy(E, model: ModelParams, grid: MomentumGrid):
    """One-loop self-energy ``Σ(E)`` (complex; scalar in, scalar out)."""
    re = _re_sigma(E, model, grid)
    im = math.pi * np.atleast_1d(spectral_weight(np.asarray(E, dtype=float) - model.m_N, model))
    out = re + 1j * im
    return complex(out[0]) if np.ndim(E) == 0 else out


@dataclass(frozen=True)
class KernelTable:
    energies: np.ndarray
    D: np.ndarray
    B: np.ndarray
    A: np.ndarray
    epsilon_scheme: str = PV_SCHEME

    def rows(self):
        return np.column_stack([self.energies, self.D, self.B, self.A])


def kernel_table(model: ModelParams, grid: MomentumGrid, E_grid) -> KernelTable:
    """Tabulate the dispersive (D), noise (B) and dissipative (A) kernels."""
    E = np.asarray(E_grid, dtype=float)
    if E.ndim != 1 or np.any(np.diff(E) <= 0):
        raise ConfigurationError("E_grid must be a strictly ascending 1-D array")
    D = E - model.m_V0 + _re_sigma(E, model, grid)
    B = math.pi * np.asarray(spectral_weight(E - model.m_N, model), dtype=float)
    A = np.sign(E) * B + 0.0  # +0.0 turns -0.0 into 0.0
    return KernelTable(E, D, B, A)


def renorm_constants(model: ModelParams, grid: MomentumGrid, m_V_trial: float):
    """Return ``(C0, C1)`` at the trial mass.

    ``C1`` is the exact positive sum below the decay threshold; above it the
    squared-denominator integral only exists as a finite part, taken as the
    central difference of ``C0`` (step ``1e-5·m_V``).
    """
    m = float(m_V_trial)
    C0 = float(_re_sigma(m, model, grid)[0])
    x = m - model.m_N
    if x < grid.omega_min or x > grid.omega_max:
        eps = model.m_N + grid.omegas - m
        C1 = float(np.sum(grid.weights * model.lambda0**2
                          * np.asarray(model.form_factor(grid.omegas)) ** 2
                          / (2.0 * grid.omegas) / eps**2))
    else:
        h = 1e-5 * max(abs(m), 1.0)
        lo, hi = _re_sigma(np.array([m - h, m + h]), model, grid)
        C1 = float((hi - lo) / (2.0 * h))
    return C0, C1


def dispersive_kernel(E: float, model: ModelParams, grid: MomentumGrid) -> float:
    """``D(E) = E - m_V0 + Re Σ(E)``."""
    return float(E - model.m_V0 + _re_sigma(E, model, grid)[0])


def physical_mass(model: ModelParams, grid: MomentumGrid, max_iter: int = 200) -> float:
    """Solve ``D(m_V) = 0`` by damped Newton iteration started at ``m_V0``."""
    m = model.m_V0
    D = dispersive_kernel(m, model, grid)
    for _ in range(max_iter):
        if abs(D) < 1e-10 * max(1.0, abs(m)):
            return m
        _, C1 = renorm_constants(model, grid, m)
        step = -D / (1.0 + C1)
        trial = m + step
        D_trial = dispersive_kernel(trial, model, grid)
        # halve the step while it overshoots
        n_halve = 0
        while abs(D_trial) > abs(D) and n_halve < 40:
            step *= 0.5
            trial = m + step
            D_trial = dispersive_kernel(trial, model, grid)
            n_halve += 1
        m, D = trial, D_trial
    if abs(D) < 1e-10 * max(1.0, abs(m)):
        return m
    raise RootFindingError(
        f"physical mass did not converge in {max_iter} iterations (|D|={abs(D):.3e})",
        residual=abs(D),
    )


@dataclass(frozen=True)
class PoleResult:
    m_V: float
    Gamma: float
    gamma_friction: float
    Z_V: float
    lambda_ren: float
    C0: float
    C1: float

    @property
    def unstable(self) -> bool:
        return self.Gamma > 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["unstable"] = self.unstable
        return d


def friction_coefficient(model: ModelParams, m_V: float) -> float:
    """``γ = λ₀² f/(4π)``, with ``f`` read at the decay energy ``m_V - m_N``."""
    return model.lambda0**2 * float(model.form_factor(m_V - model.m_N)) / (4.0 * math.pi)


def find_pole(model: ModelParams, grid: MomentumGrid) -> PoleResult:
    m_V = physical_mass(model, grid)
    C0, C1 = renorm_constants(model, grid, m_V)
    Z_V = 1.0 / (1.0 + C1)
    im_sigma = math.pi * float(spectral_weight(m_V - model.m_N, model))
    Gamma = 2.0 * Z_V * im_sigma
    return PoleResult(
        m_V=m_V,
        Gamma=Gamma,
        gamma_friction=friction_coefficient(model, m_V),
        Z_V=Z_V,
        lambda_ren=math.sqrt(Z_V) * model.lambda0,
        C0=C0,
        C1=C1,
    )


class LocalKernels(NamedTuple):
    A_slope: float
    B_loc: float
    gamma_friction: float


def local_kernels(pole: PoleResult, model: ModelParams) -> LocalKernels:
    """Local approximation ``A(E) ≈ γE``, ``B ≈ γ m_V`` (with ``Z_V → 1``)."""
    gamma = friction_coefficient(model, pole.m_V)
    return LocalKernels(gamma, gamma * pole.m_V, gamma)
