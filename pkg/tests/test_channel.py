"""Tests for the noise and adversary models."""

import numpy as np
import pytest

from qisac.channel import (
    Adversary,
    NoiseModel,
    bell_diagonal_after_one_pass,
    bell_error_after_two_passes,
    collective_pauli_weights,
    depolarize,
    double_cnot_joint_state,
    joint_outcome_probs,
    pauli_channel,
    sample_check_pair,
)
from qisac.linalg import partial_trace, projector
from qisac.states import BellState, bell, bell_basis


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_noise_model_qber_relation():
    assert NoiseModel(p=0.2).qber == pytest.approx(0.1)
    assert NoiseModel.from_qber(0.05).p == pytest.approx(0.1)
    with pytest.raises(ValueError):
        NoiseModel(p=1.5)


def test_depolarize_identity_at_zero():
    rho = projector(bell(BellState.PSI_MINUS))
    np.testing.assert_allclose(depolarize(rho, 0.0, 0), rho, atol=1e-15)


def test_depolarize_full_on_half_of_singlet():
    # fully depolarizing one half of a maximally entangled pair leaves I/4
    rho = depolarize(projector(bell(BellState.PSI_MINUS)), 1.0, qubit=1)
    np.testing.assert_allclose(rho, np.eye(4) / 4, atol=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.5, 1.0])
def test_depolarize_preserves_trace_and_positivity(p):
    rng = np.random.default_rng(int(p * 100) + 3)
    for _ in range(10):
        rho = random_density(rng, 4)
        out = depolarize(rho, p, qubit=rng.integers(2))
        assert abs(np.trace(out).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(out).min() > -1e-12


def test_depolarize_both_qubits_bit_flip_rate():
    # the induced decoding-parity flip probability is 2e(1-e)
    e = 0.07
    rho = projector(bell(BellState.PSI_MINUS))
    rho = depolarize(depolarize(rho, 2 * e, 0), 2 * e, 1)
    flip = sum(np.trace(projector(bell(lbl)) @ rho).real
               for lbl in (BellState.PHI_MINUS, BellState.PHI_PLUS))
    assert flip == pytest.approx(2 * e * (1 - e), abs=1e-12)


def test_bell_diagonal_after_one_pass():
    np.testing.assert_allclose(bell_diagonal_after_one_pass(0.0), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(bell_diagonal_after_one_pass(0.1),
                               [0.85, 0.05, 0.05, 0.05], atol=1e-15)
    lam = bell_diagonal_after_one_pass(0.08)
    assert lam[1] + lam[3] == pytest.approx(0.08, abs=1e-14)
    with pytest.raises(ValueError):
        bell_diagonal_after_one_pass(0.4)


def test_bell_error_after_two_passes_values():
    np.testing.assert_allclose(bell_error_after_two_passes(0.0), [1, 0, 0, 0], atol=1e-15)
    q = bell_error_after_two_passes(0.086)
    assert q[0] == pytest.approx(0.764188, abs=1e-6)
    assert q[1] == pytest.approx(0.078604, abs=1e-6)


@pytest.mark.parametrize("e", np.linspace(0.0, 1 / 3, 12))
def test_bell_error_after_two_passes_consistency(e):
    q = bell_error_after_two_passes(e)
    assert q.sum() == pytest.approx(1.0, abs=1e-12)
    # marginal single-basis QBER (z errors come from net X or Y)
    assert q[1] + q[2] == pytest.approx(2 * e * (1 - e), abs=1e-12)


def test_collective_channel_yields_bell_diagonal():
    lam = np.array([0.7, 0.1, 0.15, 0.05])
    rho = pauli_channel(projector(bell(BellState.PSI_MINUS)),
                        collective_pauli_weights(lam), qubit=1)
    expected = sum(l * projector(v) for l, v in zip(lam, bell_basis()))
    np.testing.assert_allclose(rho, expected, atol=1e-12)


def test_double_cnot_joint_state():
    v = double_cnot_joint_state()
    assert abs(np.linalg.norm(v) - 1.0) < 1e-14
    rho_ab = partial_trace(projector(v), [2, 2, 2], keep=[0, 1])
    expected = np.zeros((4, 4), dtype=complex)
    expected[1, 1] = expected[2, 2] = 0.5
    np.testing.assert_allclose(rho_ab, expected, atol=1e-12)
    probs_x = joint_outcome_probs(rho_ab, "x")
    np.testing.assert_allclose(probs_x, np.full((2, 2), 0.25), atol=1e-12)
    probs_z = joint_outcome_probs(rho_ab, "z")
    np.testing.assert_allclose(probs_z, [[0, 0.5], [0.5, 0]], atol=1e-12)


def test_sample_check_pair_no_attack_anticorrelates():
    rng = np.random.default_rng(0)
    adv = Adversary.none()
    for basis in ("x", "y", "z"):
        for _ in range(200):
            a, b = sample_check_pair(adv, basis, rng)
            assert a == -b


def test_sample_check_pair_double_cnot_x_errors():
    rng = np.random.default_rng(1)
    adv = Adversary.double_cnot()
    n = 20000
    equal = sum(a == b for a, b in (sample_check_pair(adv, "x", rng) for _ in range(n)))
    se = np.sqrt(0.25 / n)
    assert abs(equal / n - 0.5) < 4 * se


def test_sample_check_pair_double_cnot_z_clean():
    rng = np.random.default_rng(2)
    adv = Adversary.double_cnot()
    for _ in range(500):
        a, b = sample_check_pair(adv, "z", rng)
        assert a == -b


def test_sample_check_pair_intercept_error_rate():
    # random Eve basis vs random check basis: 1/3 chance of an error signal
    rng = np.random.default_rng(3)
    adv = Adversary.intercept_resend(1)
    n = 12000
    errors = 0
    for _ in range(n):
        basis = ("x", "y", "z")[rng.integers(3)]
        a, b = sample_check_pair(adv, basis, rng)
        errors += a == b
    rate = errors / n
    se = np.sqrt((1 / 3) * (2 / 3) / n)
    assert abs(rate - 1 / 3) < 4 * se


def test_adversary_validation():
    with pytest.raises(ValueError):
        Adversary(kind="quantum_cat")
    with pytest.raises(ValueError):
        Adversary(kind="collective")
    with pytest.raises(ValueError):
        Adversary.collective([0.5, 0.5, 0.2, -0.2])
    adv = Adversary.collective(bell_diagonal_after_one_pass(0.1))
    assert adv.kind == "collective"
