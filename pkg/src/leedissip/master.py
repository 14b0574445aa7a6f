"""Dissipative master equation on ``{|0⟩, |V⟩, |N θ_k⟩}``.

The generator is the commutator with the renormalized Hamiltonian plus a
double-commutator decoherence term built from the V lowering operator
``Φ = |0⟩⟨V|`` with rate ``κ = γ m_V``::

    literal     ρ̇ = -i[H, ρ] - κ [Φ†, [Φ, ρ]]
    hermitized  ρ̇ = -i[H, ρ] - κ/2 ([Φ†, [Φ, ρ]] + [Φ, [Φ†, ρ]])

The literal form does not keep ρ Hermitian because ``[Φ, Φ†] ≠ 0``; the
hermitized form does, and is the default. Index 0 is the vacuum and index 1
the bare V state throughout.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigurationError, IntegrationError
from .model import ModelParams, MomentumGrid
from .sector import build_sector
from .spectral import PoleResult

logger = logging.getLogger(__name__)

VAC, V = 0, 1

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8


class Variant(enum.Enum):
    LITERAL = "literal"
    HERMITIZED = "hermitized"


@dataclass(frozen=True)
class DensityMatrix:
    elements: np.ndarray

    def __post_init__(self):
        a = np.array(self.elements, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigurationError(f"density matrix must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "elements", a)

    @property
    def basis_dim(self) -> int:
        return self.elements.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    @property
    def purity(self) -> float:
        return purity(self.elements)

    @property
    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.elements + self.elements.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def violations(self, check_hermitian: bool = True) -> list[str]:
        out = []
        if abs(self.trace - 1.0) > TRACE_TOL:
            out.append(f"trace defect {abs(self.trace - 1.0):.3e}")
        if check_hermitian:
            if self.hermiticity_defect > HERMITIAN_TOL:
                out.append(f"hermiticity defect {self.hermiticity_defect:.3e}")
            if self.min_eigenvalue < -POSITIVITY_TOL:
                out.append(f"negative eigenvalue {self.min_eigenvalue:.3e}")
        return out


def purity(rho: np.ndarray) -> float:
    return float(np.einsum("ij,ji->", rho, rho).real)


def linear_entropy(rho) -> float:
    """``S = -Tr ρ²``; ``-1`` for a pure state, ``-1/d`` when maximally mixed."""
    a = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return -purity(a)


def pure_state(vec) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def initial_state(kind: str, dim: int) -> DensityMatrix:
    """``"V"`` (|V⟩⟨V|), ``"superposition"`` ((|0⟩+|V⟩)/√2) or ``"mixed"`` (I/d)."""
    if kind == "V":
        v = np.zeros(dim)
        v[V] = 1.0
        return pure_state(v)
    if kind == "superposition":
        v = np.zeros(dim)
        v[VAC] = v[V] = 1.0
        return pure_state(v)
    if kind == "mixed":
        return DensityMatrix(np.eye(dim) / dim)
    raise ConfigurationError(f"unknown initial state {kind!r}")


@dataclass(frozen=True)
class GeneratorSpec:
    hamiltonian: np.ndarray
    decoherence_rate: float
    variant: Variant = Variant.HERMITIZED

    def __post_init__(self):
        H = np.asarray(self.hamiltonian)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 2:
            raise ConfigurationError("hamiltonian must be a square matrix of size >= 2")
        if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H))):
            raise ConfigurationError("hamiltonian is not Hermitian")
        if self.decoherence_rate < 0:
            raise ConfigurationError("decoherence rate must be non-negative")
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def basis_dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def lowering_op(self) -> np.ndarray:
        phi = np.zeros((self.basis_dim, self.basis_dim))
        phi[VAC, V] = 1.0
        return phi

    @property
    def hamiltonian_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.hamiltonian)), initial=0.0))

    def dissipator(self, rho: np.ndarray) -> np.ndarray:
        kappa = self.decoherence_rate
        out = np.zeros_like(rho)
        if kappa == 0.0:
            return out
        if self.variant is Variant.HERMITIZED:
            # -κ/2 ({P_0 + P_V, ρ} - 2ρ_00|V⟩⟨V| - 2ρ_VV|0⟩⟨0|)
            out[(VAC, V), :] -= 0.5 * kappa * rho[(VAC, V), :]
            out[:, (VAC, V)] -= 0.5 * kappa * rho[:, (VAC, V)]
            out[V, V] += kappa * rho[VAC, VAC]
            out[VAC, VAC] += kappa * rho[V, V]
        else:
            # -κ (P_V ρ + ρ P_0 - ρ_00|V⟩⟨V| - ρ_VV|0⟩⟨0|)
            out[V, :] -= kappa * rho[V, :]
            out[:, VAC] -= kappa * rho[:, VAC]
            out[V, V] += kappa * rho[VAC, VAC]
            out[VAC, VAC] += kappa * rho[V, V]
        return out

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        H = self.hamiltonian
        return -1j * (H @ rho - rho @ H) + self.dissipator(rho)


def build_generator(model: ModelParams, grid: MomentumGrid, pole: PoleResult,
                    variant=Variant.HERMITIZED, *, kappa: float | None = None) -> GeneratorSpec:
    """Renormalized sector Hamiltonian bordered by an uncoupled vacuum row.

    ``kappa`` overrides ``γ m_V`` (used for pure-Hamiltonian checks).
    """
    sector = build_sector(model, grid, v_energy=pole.m_V, coupling=pole.lambda_ren)
    d = sector.dim + 1
    H = np.zeros((d, d))
    H[1:, 1:] = sector.matrix()
    if kappa is None:
        kappa = pole.gamma_friction * pole.m_V
    return GeneratorSpec(H, float(kappa), Variant(variant))


def entropy_production(gen: GeneratorSpec, rho) -> float:
    """Instantaneous ``dS/dt``; the Hamiltonian part drops out."""
    a = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho)
    kappa = gen.decoherence_rate
    c = _comm_lower(a)
    if gen.variant is Variant.LITERAL:
        return 2.0 * kappa * float(np.sum(np.abs(c) ** 2))
    cd = _comm_raise(a)
    return kappa * float(np.sum(np.abs(c) ** 2) + np.sum(np.abs(cd) ** 2))


def _comm_lower(rho):
    """``[Φ, ρ]`` with ``Φ = |0⟩⟨V|``."""
    out = np.zeros_like(rho)
    out[VAC, :] += rho[V, :]
    out[:, V] -= rho[:, VAC]
    return out


def _comm_raise(rho):
    """``[Φ†, ρ]``."""
    out = np.zeros_like(rho)
    out[V, :] += rho[VAC, :]
    out[:, VAC] -= rho[:, V]
    return out


# Time stepping happens in the eigenbasis of H, where the commutator is
# elementwise and Φ = a b† is rank one; each RHS evaluation is then O(d²).
# RK4 is a polynomial in the generator, so the basis change does not alter
# the scheme, only the cost.


@numba.njit(fastmath=True, cache=True)
def _rhs_eig(r, E, a, b, coef, kappa, hermitian, out, ya, yb, xa, xb):
    n = r.shape[0]
    ca, cb, da, db = coef[0], coef[1], coef[2], coef[3]
    for i in range(n):
        sa = 0j
        sb = 0j
        for j in range(n):
            sa += r[i, j] * a[j]
            sb += r[i, j] * b[j]
        ya[i] = sa
        yb[i] = sb
    if hermitian:
        for j in range(n):
            xa[j] = ya[j].conjugate()
            xb[j] = yb[j].conjugate()
    else:
        for j in range(n):
            xa[j] = 0j
            xb[j] = 0j
        for i in range(n):
            ai = a[i].conjugate()
            bi = b[i].conjugate()
            for j in range(n):
                xa[j] += ai * r[i, j]
                xb[j] += bi * r[i, j]
    r00 = 0j
    rvv = 0j
    for i in range(n):
        r00 += a[i].conjugate() * ya[i]
        rvv += b[i].conjugate() * yb[i]
    for i in range(n):
        ai = ca * a[i]
        bi = cb * b[i]
        yai = da * ya[i]
        ybi = db * yb[i]
        p = kappa * r00 * b[i]
        q = kappa * rvv * a[i]
        ei = E[i]
        for j in range(n):
            ac = a[j].conjugate()
            bc = b[j].conjugate()
            out[i, j] = (-1j * (ei - E[j]) * r[i, j] - ai * xa[j] - bi * xb[j]
                         - yai * ac - ybi * bc + p * bc + q * ac)


@numba.njit(fastmath=True, cache=True)
def _rk4_eig(r, E, a, b, coef, kappa, hermitian, h, nsteps, trace, pur, herm):
    n = r.shape[0]
    k1 = np.empty_like(r)
    k2 = np.empty_like(r)
    k3 = np.empty_like(r)
    k4 = np.empty_like(r)
    tmp = np.empty_like(r)
    ya = np.empty(n, np.complex128)
    yb = np.empty(n, np.complex128)
    xa = np.empty(n, np.complex128)
    xb = np.empty(n, np.complex128)
    for s in range(nsteps):
        _rhs_eig(r, E, a, b, coef, kappa, hermitian, k1, ya, yb, xa, xb)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = r[i, j] + 0.5 * h * k1[i, j]
        _rhs_eig(tmp, E, a, b, coef, kappa, hermitian, k2, ya, yb, xa, xb)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = r[i, j] + 0.5 * h * k2[i, j]
        _rhs_eig(tmp, E, a, b, coef, kappa, hermitian, k3, ya, yb, xa, xb)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = r[i, j] + h * k3[i, j]
        _rhs_eig(tmp, E, a, b, coef, kappa, hermitian, k4, ya, yb, xa, xb)
        for i in range(n):
            for j in range(n):
                r[i, j] += (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        tr = 0j
        p = 0j
        d = 0.0
        for i in range(n):
            tr += r[i, i]
            for j in range(n):
                p += r[i, j] * r[j, i]
                z = r[i, j] - r[j, i].conjugate()
                d += z.real * z.real + z.imag * z.imag
        trace[s] = tr.real
        pur[s] = p.real
        herm[s] = np.sqrt(d)
        if abs(tr - 1.0) > 1e-10:
            return s
    return nsteps


@dataclass
class DensityEvolution:
    """Snapshots at the requested times plus per-step diagnostics."""

    times: np.ndarray
    states: list
    step_times: np.ndarray
    step_trace: np.ndarray
    step_entropy: np.ndarray
    step_hermiticity: np.ndarray
    dt: float
    variant: Variant
    notes: list = field(default_factory=list)

    def entropy(self) -> np.ndarray:
        return np.array([linear_entropy(s) for s in self.states])

    def population(self, index: int) -> np.ndarray:
        return np.array([s.elements[index, index].real for s in self.states])

    def coherence(self, i: int, j: int) -> np.ndarray:
        return np.array([s.elements[i, j] for s in self.states])

    @property
    def max_trace_defect(self) -> float:
        return float(np.max(np.abs(self.step_trace - 1.0)))

    @property
    def max_entropy_drop(self) -> float:
        """Largest per-step decrease of S (0 when monotone)."""
        d = np.diff(self.step_entropy)
        return float(max(0.0, -np.min(d, initial=0.0)))


def max_step(gen: GeneratorSpec) -> float:
    scale = max(gen.hamiltonian_norm, gen.decoherence_rate)
    return np.inf if scale == 0 else 0.05 / scale


def evolve_density(gen: GeneratorSpec, rho0: DensityMatrix, t_grid, dt: float) -> DensityEvolution:
    """Fixed-step RK4 integration of the master equation.

    Each interval of ``t_grid`` is split into equal steps no longer than
    ``dt``. With ``κ = 0`` the flow is a phase rotation in the eigenbasis of
    H and each interval is taken as one exact step. The trace is checked every step; Hermiticity and positivity are
    checked at each snapshot for the hermitized variant and only logged for
    the literal one.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(np.diff(t) <= 0):
        raise ConfigurationError("t_grid must be strictly ascending")
    if not dt > 0 or dt > max_step(gen) * (1 + 1e-12):
        raise ConfigurationError(
            f"dt={dt} violates the step bound {max_step(gen):.4g} = 0.05/max(|H|, kappa)"
        )
    if rho0.basis_dim != gen.basis_dim:
        raise ConfigurationError(
            f"rho0 has dimension {rho0.basis_dim}, generator {gen.basis_dim}"
        )
    bad = rho0.violations()
    if bad:
        raise ConfigurationError("initial density matrix invalid: " + "; ".join(bad))

    hermitized = gen.variant is Variant.HERMITIZED
    kappa = gen.decoherence_rate
    if hermitized:
        coef = np.full(4, 0.5 * kappa)
    else:
        coef = np.array([0.0, kappa, kappa, 0.0])
    E, U = np.linalg.eigh(gen.hamiltonian)
    U = U.astype(complex)
    a = np.ascontiguousarray(U[VAC].conj())
    b = np.ascontiguousarray(U[V].conj())
    r = np.ascontiguousarray(U.conj().T @ rho0.elements @ U)

    now = t[0]
    states = [rho0]
    s_times, s_trace, s_entropy, s_herm = [np.array([now])], [np.array([rho0.trace.real])], \
        [np.array([-rho0.purity])], [np.array([rho0.hermiticity_defect])]
    notes = []
    dE = E[:, None] - E[None, :]
    for target in t[1:]:
        if kappa == 0.0:
            # unitary flow is a pure phase in the eigenbasis: one exact step
            n, h = 1, target - now
            r *= np.exp(-1j * dE * h)
            tr = np.array([np.trace(r).real])
            pur = np.array([np.sum(r * r.T).real])
            herm = np.array([np.linalg.norm(r - r.conj().T)])
            done = 0 if abs(tr[0] - 1.0) > TRACE_TOL else 1
        else:
            n = int(np.ceil((target - now) / dt * (1 - 1e-12)))
            h = (target - now) / n
            tr, pur, herm = np.zeros(n), np.zeros(n), np.zeros(n)
            done = _rk4_eig(r, E, a, b, coef, kappa, hermitized, h, n, tr, pur, herm)
        step_t = now + h * np.arange(1, n + 1)
        if done < n:
            raise IntegrationError(
                f"trace drifted to {tr[done]} at t={step_t[done]}", time=float(step_t[done]))
        s_times.append(step_t)
        s_trace.append(tr)
        s_entropy.append(-pur)
        s_herm.append(herm)
        now = target
        snap = DensityMatrix(U @ r @ U.conj().T)
        bad = snap.violations(check_hermitian=hermitized)
        if bad:
            raise IntegrationError(f"invariant violated at t={now}: " + "; ".join(bad), time=now)
        if not hermitized and snap.hermiticity_defect > HERMITIAN_TOL:
            msg = f"t={now}: hermiticity defect {snap.hermiticity_defect:.3e}"
            logger.info("literal variant %s", msg)
            notes.append(msg)
        states.append(snap)
    return DensityEvolution(
        times=t,
        states=states,
        step_times=np.concatenate(s_times),
        step_trace=np.concatenate(s_trace),
        step_entropy=np.concatenate(s_entropy),
        step_hermiticity=np.concatenate(s_herm),
        dt=float(dt),
        variant=gen.variant,
        notes=notes,
    )


def coherence_decay_rate(times, coherence) -> float | None:
    """Least-squares slope of ``-log|ρ_0V|``; ``None`` if the coherence vanishes."""
    a = np.abs(np.asarray(coherence))
    mask = a > 1e-300
    if mask.sum() < 3 or a[0] == 0:
        return None
    slope, _ = np.polyfit(np.asarray(times)[mask], np.log(a[mask]), 1)
    return float(-slope)
