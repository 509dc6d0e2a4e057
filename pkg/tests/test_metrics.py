import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from metaspin import metrics
from metaspin.decoherence import werner_state
from metaspin.metrics import (MeasurementBasis, concurrence_mixed, concurrence_pure,
                              conditional_entropy_after_measurement, mutual_information,
                              ppt_min_eigenvalue, pure_density, quantum_discord, von_neumann_entropy)
from metaspin.qcore import BELL_STATE, PM, PP, SystemParams, evolve_analytic
from oracles import (discord_bruteforce, random_pure, random_unitary_2, werner,
                     werner_discord_closed_form, wootters_literal)

BELL_RHO = np.outer(BELL_STATE, BELL_STATE.conj())
PRODUCT_RHO = pure_density(PM)

# Frozen from oracles.discord_bruteforce(werner(z)) (512x512 grid + compass search to 1e-10);
# agrees with the Werner closed form to < 2e-15.
DISCORD_BRUTEFORCE = {0.2: 0.049022499567305866, 0.5: 0.26248318376373336, 0.8: 0.6214109137647059}


def test_werner_helper_matches_module():
    for z in (0.0, 0.3, 1.0):
        assert np.max(np.abs(werner(z) - werner_state(z))) < 1e-16


# --- validation ------------------------------------------------------------

def test_density_validation():
    with pytest.raises(ValueError, match="trace"):
        metrics.as_density(2 * np.eye(4) / 4)
    with pytest.raises(ValueError, match="Hermitian"):
        bad = np.eye(4) / 4 + 0j
        bad[0, 1] = 0.1
        metrics.as_density(bad)
    with pytest.raises(ValueError, match="semidefinite"):
        metrics.as_density(np.diag([0.6, 0.6, -0.1, -0.1]))
    with pytest.raises(ValueError):
        metrics.as_density(np.eye(3) / 3)


# --- concurrence -----------------------------------------------------------

def test_concurrence_pure_examples():
    assert abs(concurrence_pure(BELL_STATE) - 1) < 1e-15
    assert concurrence_pure(PM) == 0
    psi = evolve_analytic(PM, SystemParams.resonant(1.0), math.pi / 8)
    assert abs(concurrence_pure(psi) - math.sin(math.pi / 4)) < 1e-15


def test_concurrence_pure_rejects_unnormalized():
    with pytest.raises(ValueError):
        concurrence_pure(np.array([1, 1, 1, 1]))


def test_concurrence_mixed_examples():
    assert abs(concurrence_mixed(BELL_RHO) - 1) < 1e-12
    assert concurrence_mixed(np.eye(4) / 4) == 0
    z = 0.9519
    assert abs(concurrence_mixed(werner_state(z)) - 0.92785) < 1e-12


def test_werner_concurrence_oracle():
    # literal diagonalisation of rho * rho_tilde, independent of the SVD route
    for z in np.linspace(0, 1, 101):
        expected = max(0.0, (3 * z - 1) / 2)
        assert abs(wootters_literal(werner(z)) - expected) < 1e-9
        assert abs(concurrence_mixed(werner_state(z)) - expected) < 1e-9


def test_concurrence_mixed_on_pure_states():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        psi = random_pure(rng)
        assert abs(concurrence_mixed(np.outer(psi, psi.conj())) - concurrence_pure(psi)) < 1e-10


def test_concurrence_mixed_rejects_non_psd():
    with pytest.raises(ValueError):
        concurrence_mixed(np.diag([0.7, 0.5, -0.2, 0.0]))


def test_concurrence_trajectory():
    p = SystemParams.resonant(1.0)
    for gt in np.linspace(0, math.pi, 100):
        psi = evolve_analytic(PM, p, gt)
        assert abs(concurrence_pure(psi) - abs(math.sin(2 * gt))) < 1e-10


# --- entropies -------------------------------------------------------------

def test_entropy_examples():
    assert von_neumann_entropy(BELL_RHO) < 1e-12
    assert abs(von_neumann_entropy(np.eye(4) / 4) - 2) < 1e-14
    spectrum = [0.625, 0.125, 0.125, 0.125]
    expected = -sum(p * math.log2(p) for p in spectrum)
    assert abs(von_neumann_entropy(werner_state(0.5)) - expected) < 1e-13
    assert abs(expected - 1.5488) < 1e-4
    assert abs(von_neumann_entropy(np.eye(2) / 2) - 1) < 1e-15


def test_mutual_information_examples():
    assert abs(mutual_information(BELL_RHO) - 2) < 1e-12
    assert abs(mutual_information(PRODUCT_RHO)) < 1e-12
    spectrum = [0.5, 1 / 6, 1 / 6, 1 / 6]
    expected = 2 + sum(p * math.log2(p) for p in spectrum)
    assert abs(mutual_information(werner_state(1 / 3)) - expected) < 1e-12
    assert abs(expected - 0.2075) < 1e-4


def test_partial_trace_of_product():
    a = np.array([0.6, 0.8j])
    b = np.array([1, 1]) / math.sqrt(2)
    rho = pure_density(np.kron(a, b))
    assert_allclose(metrics.partial_trace(rho, 0), np.outer(a, a.conj()), atol=1e-15)
    assert_allclose(metrics.partial_trace(rho, 1), np.outer(b, b.conj()), atol=1e-15)


# --- measurement bases -----------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(theta=st.floats(0, math.pi), phi=st.floats(0, 2 * math.pi, exclude_max=True))
def test_projectors(theta, phi):
    p, m = MeasurementBasis(theta, phi).projectors()
    assert np.max(np.abs(p + m - np.eye(2))) < 1e-12
    assert np.max(np.abs(p @ p - p)) < 1e-12
    assert np.max(np.abs(m @ m - m)) < 1e-12


def test_basis_ranges():
    with pytest.raises(ValueError):
        MeasurementBasis(4.0, 0.0)
    with pytest.raises(ValueError):
        MeasurementBasis(1.0, 2 * math.pi)


def test_conditional_entropy_examples():
    rng = np.random.default_rng(5)
    a = np.array([math.cos(0.4), math.sin(0.4) * np.exp(0.3j)])
    b = np.array([math.cos(1.1), math.sin(1.1)])
    rho = 0.7 * pure_density(np.kron(a, b)) + 0.3 * np.kron(np.eye(2) / 2, np.outer(b, b))
    s_a = von_neumann_entropy(metrics.partial_trace(rho, 0))
    for _ in range(20):
        basis = MeasurementBasis(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        assert abs(conditional_entropy_after_measurement(rho, basis) - s_a) < 1e-12
        assert abs(conditional_entropy_after_measurement(BELL_RHO, basis)) < 1e-7
    assert conditional_entropy_after_measurement(werner_state(1.0), MeasurementBasis(0, 0)) < 1e-12


def test_conditional_entropy_matches_projector_route():
    rng = np.random.default_rng(9)
    for _ in range(30):
        w = rng.dirichlet(np.ones(4))
        U = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        rho = (U * w) @ U.conj().T
        basis = MeasurementBasis(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        expected = 0.0
        for proj in basis.projectors():
            M = np.kron(np.eye(2), proj)
            post = M @ rho @ M
            p = np.trace(post).real
            expected += p * von_neumann_entropy(metrics.partial_trace(post / p, 0))
        assert abs(conditional_entropy_after_measurement(rho, basis) - expected) < 1e-12


# --- discord ---------------------------------------------------------------

def test_discord_endpoints():
    assert abs(quantum_discord(werner_state(1.0)) - 1) < 1e-6
    assert abs(quantum_discord(werner_state(0.0))) < 1e-9


@pytest.mark.parametrize("z", sorted(DISCORD_BRUTEFORCE))
def test_discord_matches_bruteforce(z):
    assert abs(quantum_discord(werner_state(z)) - DISCORD_BRUTEFORCE[z]) < 1e-6
    assert abs(DISCORD_BRUTEFORCE[z] - werner_discord_closed_form(z)) < 1e-12


def test_discord_bruteforce_generic_state():
    # not basis-independent, so the optimiser must actually search
    rng = np.random.default_rng(12)
    w = rng.dirichlet(np.ones(4))
    U = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    rho = (U * w) @ U.conj().T
    assert abs(quantum_discord(rho) - discord_bruteforce(rho, grid=128)) < 1e-6


def test_discord_pure_states_equal_entanglement_entropy():
    rng = np.random.default_rng(4)
    for _ in range(10):
        rho = pure_density(random_pure(rng))
        assert abs(quantum_discord(rho) - von_neumann_entropy(metrics.partial_trace(rho, 0))) < 1e-6


def test_discord_zero_on_classical_states():
    rho = 0.5 * pure_density(PP) + 0.5 * pure_density(PM)
    assert abs(quantum_discord(rho)) < 1e-9


def test_discord_grid_minimum():
    with pytest.raises(ValueError):
        quantum_discord(BELL_RHO, grid=16)


def test_discord_monotone_on_werner_family():
    values = [quantum_discord(werner_state(z)) for z in np.linspace(0, 1, 50)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_discord_outlives_entanglement():
    # D ~ 1.44 z^2 near zero, so 1e-4 is only exceeded from z ~ 0.0084 upward
    for z in np.linspace(1e-2, 1 / 3, 20):
        rho = werner_state(z)
        assert quantum_discord(rho) > 1e-4
        assert concurrence_mixed(rho) == 0


def test_discord_small_z_follows_closed_form():
    for z in (1e-3, 5e-3, 8e-3):
        d = quantum_discord(werner_state(z))
        assert 0 < d < 1e-4
        assert abs(d - werner_discord_closed_form(z)) < 1e-9


def test_local_unitary_invariance():
    rng = np.random.default_rng(77)
    for z in (0.2, 0.6, 0.95):
        rho = werner_state(z)
        mix = 0.5 * rho + 0.5 * pure_density(np.kron([1, 0], [math.cos(0.3), math.sin(0.3)]))
        for state in (rho, mix):
            d0, c0 = quantum_discord(state), concurrence_mixed(state)
            for _ in range(3):
                U = np.kron(random_unitary_2(rng), random_unitary_2(rng))
                rot = U @ state @ U.conj().T
                rot = 0.5 * (rot + rot.conj().T)
                assert abs(quantum_discord(rot) - d0) < 1e-8
                assert abs(concurrence_mixed(rot) - c0) < 1e-8


def test_correlation_bounds():
    rng = np.random.default_rng(31)
    for _ in range(20):
        w = rng.dirichlet(np.ones(4) * 0.5)
        U = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        rho = (U * w) @ U.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        mi = mutual_information(rho)
        d = quantum_discord(rho)
        assert von_neumann_entropy(rho) >= 0
        assert mi >= 0 and d >= 0
        assert d <= mi + 1e-8


# --- PPT -------------------------------------------------------------------

def test_ppt_examples():
    assert abs(ppt_min_eigenvalue(werner_state(1 / 3))) < 1e-10
    assert abs(ppt_min_eigenvalue(werner_state(1.0)) + 0.5) < 1e-12
    assert abs(ppt_min_eigenvalue(np.eye(4) / 4) - 0.25) < 1e-15


def test_ppt_sign_change_at_one_third():
    assert ppt_min_eigenvalue(werner_state(1 / 3 + 1e-9)) < 0
    assert ppt_min_eigenvalue(werner_state(1 / 3 - 1e-9)) > 0
    # min eigenvalue is (1 - 3z)/4 for z >= 1/3 over the whole family
    for z in np.linspace(0, 1, 41):
        assert abs(ppt_min_eigenvalue(werner_state(z)) - min((1 - 3 * z) / 4, (1 - z) / 4)) < 1e-12


def test_werner_concurrence_shape():
    zs = np.linspace(0, 1, 200)
    cs = np.array([concurrence_mixed(werner_state(z)) for z in zs])
    assert np.all(cs[zs <= 1 / 3] == 0)
    above = cs[zs > 1 / 3]
    assert np.all(np.diff(above) > 0)
