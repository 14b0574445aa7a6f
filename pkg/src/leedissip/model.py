"""Lee-model parameters, boson dispersion, form factors and the momentum grid.

Natural units with the boson mass as the usual energy scale. The V particle
is kept at rest, so every momentum integral reduces to a radial one,
``∫d³k/(2π)³ → (1/2π²)∫k² dk``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


class FormFactorKind(enum.Enum):
    SHARP = "sharp"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class FormFactor:
    """Cutoff function ``f(ω)`` multiplying the V-Nθ vertex."""

    kind: FormFactorKind = FormFactorKind.SHARP
    cutoff: float = 5.0

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.kind is FormFactorKind.SHARP:
            out = np.where(omega <= self.cutoff, 1.0, 0.0)
        else:
            out = self.cutoff**2 / (omega**2 + self.cutoff**2)
        return out if out.ndim else float(out)

    def derivative(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.kind is FormFactorKind.SHARP:
            out = np.zeros_like(omega)
        else:
            out = -2.0 * omega * self.cutoff**2 / (omega**2 + self.cutoff**2) ** 2
        return out if out.ndim else float(out)

    @classmethod
    def sharp(cls, cutoff):
        return cls(FormFactorKind.SHARP, float(cutoff))

    @classmethod
    def lorentzian(cls, cutoff):
        return cls(FormFactorKind.LORENTZIAN, float(cutoff))


@dataclass(frozen=True)
class ModelParams:
    """Bare parameters of the Lee model.

    Attributes
    ----------
    m_V0 : float
        Bare V mass.
    m_N : float
        N mass.
    mu : float
        Boson mass.
    lambda0 : float
        Bare coupling (dimensionless in this convention).
    form_factor : FormFactor
        Vertex cutoff; sharp at ``Λ=5`` by default.
    """

    m_V0: float = 12.0
    m_N: float = 10.0
    mu: float = 1.0
    lambda0: float = 0.2
    form_factor: FormFactor = field(default_factory=FormFactor)

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if not self.m_N > 0:
            raise ConfigurationError(f"m_N must be positive, got {self.m_N}")
        if not self.lambda0 >= 0:
            raise ConfigurationError(f"lambda0 must be non-negative, got {self.lambda0}")
        if not self.form_factor.cutoff > self.mu:
            raise ConfigurationError(
                f"cutoff {self.form_factor.cutoff} must exceed mu={self.mu}"
            )

    @property
    def threshold(self) -> float:
        """Lowest energy of an N + θ pair, ``m_N + μ``."""
        return self.m_N + self.mu

    def with_(self, **changes) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)


def omega(k, params: ModelParams):
    """Boson energy ``sqrt(k² + μ²)``."""
    k = np.asarray(k, dtype=float)
    out = np.sqrt(k * k + params.mu**2)
    return out if out.ndim else float(out)


def form_factor(omega_value, params: ModelParams):
    return params.form_factor(omega_value)


def default_k_max(params: ModelParams) -> float:
    """Momentum at which ``ω = Λ``; the natural grid edge for a sharp cutoff."""
    lam = params.form_factor.cutoff
    return math.sqrt(lam * lam - params.mu**2)


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform midpoint grid on ``[0, k_max]``.

    ``weights[i] = Δk k_i² / (2π²)`` so that ``Σ weights·F(k_i)`` approximates
    ``∫d³k/(2π)³ F(|k|)``.
    """

    k_values: np.ndarray
    weights: np.ndarray
    dk: float
    k_max: float
    mu: float

    @property
    def n_modes(self) -> int:
        return len(self.k_values)

    @property
    def omegas(self) -> np.ndarray:
        return np.sqrt(self.k_values**2 + self.mu**2)

    @property
    def omega_min(self) -> float:
        return self.mu

    @property
    def omega_max(self) -> float:
        return math.sqrt(self.k_max**2 + self.mu**2)

    @property
    def d_omega(self) -> np.ndarray:
        """Grid measure expressed in ω: ``Δk·dω/dk = Δk·k/ω``."""
        return self.dk * self.k_values / self.omegas

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def make_grid(params: ModelParams, n_modes: int, k_max: float | None = None) -> MomentumGrid:
    """Build the midpoint grid; ``k_max`` defaults to the sharp-cutoff edge."""
    if k_max is None:
        k_max = default_k_max(params)
    if int(n_modes) != n_modes or n_modes < 2:
        raise ConfigurationError(f"n_modes must be an integer >= 2, got {n_modes}")
    if not k_max > 0:
        raise ConfigurationError(f"k_max must be positive, got {k_max}")
    if params.form_factor.kind is FormFactorKind.SHARP:
        need = default_k_max(params)
        if k_max < need * (1 - 1e-12):
            raise ConfigurationError(
                f"k_max={k_max} does not cover the sharp cutoff (needs >= {need})"
            )
    n_modes = int(n_modes)
    dk = k_max / n_modes
    k = (np.arange(n_modes) + 0.5) * dk
    weights = dk * k * k / (2.0 * math.pi**2)
    k.setflags(write=False)
    weights.setflags(write=False)
    return MomentumGrid(k, weights, float(dk), float(k_max), params.mu)
