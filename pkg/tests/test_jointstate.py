import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aosd.jointstate import (
    GELL_MANN,
    PAULI,
    BlochCoefficients,
    DegenerateOutcome,
    EtaBasis,
    InvalidJointState,
    bloch_decompose,
    bloch_reconstruct,
    build_rho,
    chi_states,
    dump_matrix,
    gram_consistency,
    load_matrix,
    measure_ancilla,
    phi_states,
    validate_joint_state,
)
from aosd.protocol import ProtocolParams, Regime, optimize

from conftest import REGION_A, REGION_B, REGION_C, equal, ensembles


def params_with(alpha, angles=(0.0, 0.0, 0.0, 0.0), perm=(0, 1, 2)):
    return ProtocolParams(
        alpha=tuple(alpha), theta1=angles[0], theta2=angles[1], theta3=angles[2], phi=angles[3],
        regime=Regime.I, perm=perm, p_success=0.0, omitted=(), flagged=(),
    )


def random_basis(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    return EtaBasis(q.T)


def random_state(rng, rank=6):
    a = rng.normal(size=(6, rank)) + 1j * rng.normal(size=(6, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


# --- Phi / chi ------------------------------------------------------------------


def test_phi_zero_angles_all_equal():
    phis = phi_states((0, 0, 0, 0), EtaBasis.computational())
    assert np.allclose(phis, [[1, 0, 0]] * 3)


def test_phi_theta3_pi_in_plane():
    phis = phi_states((0.4, 0.7, math.pi, 0.0), EtaBasis.computational())
    assert abs(phis[2, 2]) < 1e-15
    assert phis[2, 1].real < 0


def test_phi_overlaps_regime_two():
    r = optimize(equal(REGION_B, 0.3))
    phis = phi_states(r.angles, EtaBasis.computational())
    J = phis.conj() @ phis.T
    assert J[0, 1] == pytest.approx(math.cos(r.theta1), abs=1e-15)
    assert J[0, 2] == pytest.approx(math.cos(r.theta2), abs=1e-15)
    assert J[1, 2] == pytest.approx(math.cos(r.theta1 + r.theta2), abs=1e-15)


def test_eta_basis_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        EtaBasis(np.array([[1, 0, 0], [1, 1, 0], [0, 0, 1]]))


def test_chi_limits():
    e = equal(REGION_A, 0.4)
    chis = chi_states(params_with([0, 1, 0.5]), e, EtaBasis.computational())
    assert np.allclose(chis[0], np.kron([1, 0, 0], [1, 0]))
    assert np.allclose(chis[1], np.kron([1, 0, 0], [0, 1]))  # Phi_1 = eta_0 at zero angles
    assert np.allclose(np.linalg.norm(chis, axis=1), 1, atol=1e-15)


def test_gram_consistency_zero_angles():
    g = 0.4
    e = equal(REGION_A, g)
    chis = chi_states(params_with([math.sqrt(g)] * 3), e, EtaBasis.computational())
    assert gram_consistency(chis, e) <= 1e-12


def test_gram_consistency_detects_violation():
    e = equal(REGION_A, 0.4)
    chis = chi_states(params_with([0.3, 0.4, 0.5]), e, EtaBasis.computational())
    assert gram_consistency(chis, e) > 1e-3


def test_rho_all_alpha_zero_is_classical():
    e = equal(REGION_A, 0.4)
    rho = build_rho(params_with([0, 0, 0]), e, EtaBasis.computational())
    assert np.allclose(rho, np.kron(np.diag(REGION_A), np.diag([1, 0])), atol=1e-15)
    p, succ, fail = measure_ancilla(rho)
    assert p == pytest.approx(1.0, abs=1e-15)
    assert fail is None


def test_measure_regime_one():
    e = equal((1 / 3, 1 / 3, 1 / 3), 0.5)
    r = optimize(e)
    p, succ, _ = measure_ancilla(build_rho(r, e, EtaBasis.computational()))
    assert p == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(succ, np.eye(3) / 3, atol=1e-12)


def test_measure_regime_four_single_survivor():
    e = equal(REGION_C, 0.8)
    r = optimize(e)
    _, succ, _ = measure_ancilla(build_rho(r, e, EtaBasis.computational()))
    assert np.allclose(succ, np.diag([1, 0, 0]), atol=1e-12)


def test_measure_degenerate():
    e = equal(REGION_A, 0.4)
    rho = build_rho(params_with([1, 1, 1]), e, EtaBasis.computational())
    with pytest.raises(DegenerateOutcome):
        measure_ancilla(rho)


def test_validate_joint_state_rejects():
    with pytest.raises(InvalidJointState):
        validate_joint_state(np.eye(6))
    with pytest.raises(InvalidJointState):
        validate_joint_state(np.diag([1.5, -0.5, 0, 0, 0, 0]))
    with pytest.raises(InvalidJointState):
        validate_joint_state(np.eye(5) / 5)


# --- Bloch ------------------------------------------------------------------------


def test_generator_normalization():
    for group in (PAULI, GELL_MANN):
        gram = np.einsum("aij,bji->ab", group, group)
        assert np.allclose(gram, 2 * np.eye(len(group)), atol=1e-15)


def test_bloch_maximally_mixed():
    b = bloch_decompose(np.eye(6) / 6)
    assert np.allclose(b.X, 0) and np.allclose(b.Y, 0) and np.allclose(b.T, 0)


def test_bloch_maximally_entangled():
    v = (np.kron([1, 0, 0], [1, 0]) + np.kron([0, 1, 0], [0, 1])) / math.sqrt(2)
    b = bloch_decompose(np.outer(v, v))
    assert np.allclose(b.X, 0, atol=1e-15)
    expected = np.zeros((8, 3))
    expected[0, 0], expected[1, 1], expected[2, 2] = 1, -1, 1
    assert np.allclose(b.T, expected, atol=1e-15)


def test_bloch_product_tensor():
    rng = np.random.default_rng(4)
    rs = random_state(rng)[:3, :3]
    rs = rs / np.trace(rs)
    ra = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    b = bloch_decompose(np.kron(rs, ra))
    ys = np.array([np.trace(rs @ l).real for l in GELL_MANN])
    xa = np.array([np.trace(ra @ s).real for s in PAULI])
    assert np.allclose(b.T, np.outer(ys, xa), atol=1e-14)
    assert np.allclose(bloch_reconstruct(b), np.kron(rs, ra), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6))
def test_bloch_round_trip(seed, rank):
    rho = random_state(np.random.default_rng(seed), rank)
    assert np.max(np.abs(bloch_reconstruct(bloch_decompose(rho)) - rho)) <= 1e-12


# --- properties -------------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(ensembles(), st.integers(0, 10**6))
def test_success_probability_independent_of_basis(e, seed):
    r = optimize(e)
    rho = build_rho(r, e, random_basis(np.random.default_rng(seed)))
    validate_joint_state(rho)
    p, succ, _ = measure_ancilla(rho)
    assert p == pytest.approx(1 - e.p @ np.square(r.alpha), abs=1e-12)
    assert p == pytest.approx(r.p_success, abs=1e-12)
    assert np.max(np.abs(succ - np.diag(np.diag(succ)))) <= 1e-12
    w = e.p * (1 - np.square(r.alpha))
    assert np.allclose(np.diag(succ).real, w / w.sum(), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(ensembles())
def test_optimal_params_preserve_overlaps(e):
    r = optimize(e)
    chis = chi_states(r, e, EtaBasis.computational())
    assert gram_consistency(chis, e) <= 1e-10


def test_dump_load_round_trip():
    rho = random_state(np.random.default_rng(9))
    buf = io.StringIO()
    dump_matrix(rho, buf)
    assert buf.getvalue().startswith("# 6x6")
    buf.seek(0)
    assert np.array_equal(load_matrix(buf), rho)
