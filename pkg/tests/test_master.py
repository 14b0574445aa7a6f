import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from leedissip import master, spectral
from leedissip.errors import ConfigurationError
from leedissip.master import V, VAC, Variant
from leedissip.model import ModelParams, make_grid


def random_state(rng, d):
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = b @ b.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


@pytest.fixture(scope="module")
def small_generator():
    p = ModelParams()
    g = make_grid(p, 6)
    pole = spectral.find_pole(p, g)
    return p, g, pole


def dense_reference(gen, rho0, t):
    d = gen.basis_dim

    def f(_, y):
        return gen.rhs(y.reshape(d, d)).ravel()

    sol = solve_ivp(f, (t[0], t[-1]), rho0.astype(complex).ravel(), t_eval=t,
                    method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y.T.reshape(len(t), d, d)


@pytest.mark.parametrize("variant", ["hermitized", "literal"])
@pytest.mark.parametrize("initial", ["V", "superposition"])
def test_matches_dense_reference(small_generator, variant, initial):
    p, g, pole = small_generator
    gen = master.build_generator(p, g, pole, variant, kappa=0.3)
    rho0 = master.initial_state(initial, gen.basis_dim)
    t = np.linspace(0.0, 8.0, 9)
    # a fine step so RK4 truncation (~1e-6 at the bound for the fast vacuum
    # coherences) does not mask a kernel error
    evo = master.evolve_density(gen, rho0, t, master.max_step(gen) / 8)
    ref = dense_reference(gen, rho0.elements, t)
    got = np.array([s.elements for s in evo.states])
    assert_allclose(got, ref, atol=1e-9)


def test_basis_dim(bench, bench_pole):
    for n in (4, 17, 128):
        g = make_grid(bench, n)
        assert master.build_generator(bench, g, bench_pole).basis_dim == n + 2


def test_kappa_linear_in_gamma(bench, bench_pole):
    g = make_grid(bench, 8)
    k1 = master.build_generator(bench, g, bench_pole).decoherence_rate
    doubled = dataclasses.replace(bench_pole, gamma_friction=2 * bench_pole.gamma_friction)
    assert master.build_generator(bench, g, doubled).decoherence_rate == pytest.approx(2 * k1)


def test_zero_gamma_is_commutator_flow(rng):
    H = random_hermitian(rng, 5)
    gen = master.GeneratorSpec(H, 0.0)
    rho = random_state(rng, 5)
    assert_allclose(gen.rhs(rho), -1j * (H @ rho - rho @ H), atol=1e-15)


def test_unitary_flow_keeps_purity(bench, bench_pole):
    g = make_grid(bench, 32)
    gen = master.build_generator(bench, g, bench_pole, kappa=0.0)
    evo = master.evolve_density(gen, master.initial_state("superposition", gen.basis_dim),
                                np.linspace(0, 200, 41), master.max_step(gen))
    assert_allclose([s.purity for s in evo.states], 1.0, atol=1e-8)


def test_two_level_dephasing():
    kappa = 0.7
    gen = master.GeneratorSpec(np.zeros((2, 2)), kappa)
    t = np.linspace(0, 5 / kappa, 101)
    evo = master.evolve_density(gen, master.initial_state("superposition", 2), t,
                                0.02 / kappa)
    assert_allclose(evo.coherence(VAC, V), 0.5 * np.exp(-kappa * t), atol=1e-8)
    assert_allclose(evo.population(VAC), 0.5, atol=1e-12)
    assert_allclose(evo.population(V), 0.5, atol=1e-12)


def test_two_level_relaxation():
    kappa = 0.4
    gen = master.GeneratorSpec(np.zeros((2, 2)), kappa)
    t = np.linspace(0, 30 / kappa, 61)
    evo = master.evolve_density(gen, master.initial_state("V", 2), t, 0.02 / kappa)
    assert_allclose(evo.population(V) - evo.population(VAC), np.exp(-2 * kappa * t),
                    atol=1e-8)
    assert evo.entropy()[-1] == pytest.approx(-0.5, abs=1e-8)


def test_linear_entropy_examples():
    assert master.linear_entropy(master.initial_state("V", 7)) == -1.0
    assert master.linear_entropy(master.initial_state("mixed", 8)) == pytest.approx(-1 / 8)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_linear_entropy_range(d, seed):
    s = master.linear_entropy(random_state(np.random.default_rng(seed), d))
    assert -1.0 <= s <= -1.0 / d + 1e-12


def test_entropy_production_examples():
    kappa = 0.3
    vac = master.pure_state(np.array([1.0, 0.0, 0.0]))
    vstate = master.pure_state(np.array([0.0, 1.0, 0.0]))
    for variant in Variant:
        gen = master.GeneratorSpec(np.zeros((3, 3)), kappa, variant)
        assert master.entropy_production(gen, master.initial_state("mixed", 3)) == 0.0
    lit = master.GeneratorSpec(np.zeros((3, 3)), kappa, Variant.LITERAL)
    her = master.GeneratorSpec(np.zeros((3, 3)), kappa, Variant.HERMITIZED)
    assert master.entropy_production(lit, vstate) == pytest.approx(2 * kappa)
    assert master.entropy_production(her, vstate) == pytest.approx(2 * kappa)
    assert master.entropy_production(her, vac) > 0
    free = master.GeneratorSpec(np.zeros((3, 3)), 0.0)
    assert master.entropy_production(free, vstate) == 0.0


@given(st.integers(2, 6), st.floats(0.0, 3.0), st.sampled_from(list(Variant)),
       st.integers(0, 2**32 - 1))
def test_entropy_production_is_ds_dt(d, kappa, variant, seed):
    rng = np.random.default_rng(seed)
    gen = master.GeneratorSpec(random_hermitian(rng, d), kappa, variant)
    rho = random_state(rng, d)
    ds = -2 * np.trace(rho @ gen.rhs(rho)).real
    rate = master.entropy_production(gen, rho)
    assert rate >= 0
    assert rate == pytest.approx(ds, rel=1e-10, abs=1e-13)


@given(st.integers(2, 6), st.floats(0.0, 3.0), st.integers(0, 2**32 - 1))
def test_hermitized_preserves_trace_and_hermiticity(d, kappa, seed):
    rng = np.random.default_rng(seed)
    gen = master.GeneratorSpec(random_hermitian(rng, d), kappa)
    drho = gen.rhs(random_state(rng, d))
    assert abs(np.trace(drho)) < 1e-12
    assert np.max(np.abs(drho - drho.conj().T)) < 1e-12


def test_literal_variant_breaks_hermiticity_not_trace(small_generator):
    p, g, pole = small_generator
    gen = master.build_generator(p, g, pole, "literal", kappa=0.3)
    evo = master.evolve_density(gen, master.initial_state("superposition", gen.basis_dim),
                                np.linspace(0, 5, 6), master.max_step(gen))
    assert evo.notes
    assert max(s.hermiticity_defect for s in evo.states) > 1e-3
    assert evo.max_trace_defect < 1e-12


def test_entropy_monotone_under_hermitized(small_generator):
    p, g, pole = small_generator
    gen = master.build_generator(p, g, pole, kappa=0.5)
    evo = master.evolve_density(gen, master.initial_state("V", gen.basis_dim),
                                np.linspace(0, 20, 11), master.max_step(gen))
    assert evo.entropy()[0] == -1.0
    assert evo.max_entropy_drop <= 1e-12


def test_step_bound_enforced(small_generator):
    p, g, pole = small_generator
    gen = master.build_generator(p, g, pole)
    rho0 = master.initial_state("V", gen.basis_dim)
    with pytest.raises(ConfigurationError):
        master.evolve_density(gen, rho0, np.array([0.0, 1.0]), 2 * master.max_step(gen))
    with pytest.raises(ConfigurationError):
        master.evolve_density(gen, rho0, np.array([1.0, 0.0]), master.max_step(gen))


def test_invalid_initial_state_rejected(small_generator):
    p, g, pole = small_generator
    gen = master.build_generator(p, g, pole)
    bad = master.DensityMatrix(2 * np.eye(gen.basis_dim) / gen.basis_dim)
    with pytest.raises(ConfigurationError):
        master.evolve_density(gen, bad, np.array([0.0, 1.0]), master.max_step(gen))


def test_generator_rejects_non_hermitian():
    with pytest.raises(ConfigurationError):
        master.GeneratorSpec(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.1)
    with pytest.raises(ConfigurationError):
        master.GeneratorSpec(np.zeros((2, 2)), -0.1)


def test_literal_exactly_hermitian_for_diagonal_states():
    gen = master.GeneratorSpec(np.zeros((4, 4)), 0.5, Variant.LITERAL)
    rho = master.DensityMatrix(np.diag([0.1, 0.5, 0.3, 0.1]).astype(complex))
    evo = master.evolve_density(gen, rho, np.linspace(0, 10, 11), 0.1)
    assert max(s.hermiticity_defect for s in evo.states) == 0.0
    assert not evo.notes


def test_population_tracks_sector_oracle(bench, bench_pole):
    g = make_grid(bench, 128)
    pole = spectral.find_pole(bench, g)
    gen = master.build_generator(bench, g, pole, kappa=0.0)
    t = np.linspace(0, 1 / pole.Gamma, 101)
    evo = master.evolve_density(gen, master.initial_state("V", gen.basis_dim), t,
                                master.max_step(gen))
    from leedissip import sector
    P = sector.evolve_survival(sector.build_sector(bench, g), t).probability
    assert_allclose(evo.population(V), P, rtol=0.10)
