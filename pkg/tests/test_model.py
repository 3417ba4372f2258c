from __future__ import annotations
from math import exp

from numpy import allclose, array, complex128, diag, eye, zeros
from numpy.linalg import eigvalsh, norm
from numpy.random import Generator
from pytest import raises
from result import Err, Ok
from scipy.linalg import expm

from lindsim.metrics import cptp_report
from lindsim.model import (
    Lindbladian,
    ModelError,
    StateError,
    apply_superoperator,
    be_norm,
    build_lindbladian,
    drift_generator,
    drift_semigroup,
    effective_generator,
    exact_channel,
    jump_superoperator,
    kraus_superoperator,
    kraus_superoperators,
    liouvillian_matrix,
    random_lindbladian,
    validate_density_matrix,
    vec,
)
from lindsim.utils import ArgumentError, ComplexArray

SIGMA_MINUS = array([[0, 1], [0, 0]], dtype=complex128)
PAULI_Z = array([[1, 0], [0, -1]], dtype=complex128)


def random_state(rng: Generator, dim: int) -> ComplexArray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / rho.trace()


def test_model_liouvillian_matches_master_equation(qubit_model: Lindbladian, rng: Generator) -> None:
    h = qubit_model.hamiltonian
    for _ in range(5):
        rho = random_state(rng, 2)
        expected = -1j * (h @ rho - rho @ h)
        for jump in qubit_model.jumps:
            damping = jump.conj().T @ jump
            expected += jump @ rho @ jump.conj().T - 0.5 * (damping @ rho + rho @ damping)
        actual = apply_superoperator(liouvillian_matrix(qubit_model), rho)
        assert norm(actual - expected) <= 1e-12


def test_model_drift_plus_jumps(two_qubit_model: Lindbladian) -> None:
    split = drift_generator(two_qubit_model) + jump_superoperator(two_qubit_model)
    assert norm(split - liouvillian_matrix(two_qubit_model)) <= 1e-12


def test_model_trivial_generator() -> None:
    lindbladian = build_lindbladian(zeros((2, 2))).unwrap()
    assert not liouvillian_matrix(lindbladian).any()
    assert not jump_superoperator(lindbladian).any()
    assert be_norm(lindbladian) == 0


def test_model_exact_channel_is_cptp(qubit_model: Lindbladian) -> None:
    report = cptp_report(exact_channel(qubit_model, 1.3))
    assert report.min_choi_eigenvalue >= -1e-10
    assert report.trace_preservation_residual <= 1e-10


def test_model_amplitude_damping_decay() -> None:
    lindbladian = build_lindbladian(zeros((2, 2)), [SIGMA_MINUS]).unwrap()
    rho = array([[0.25, 0.1], [0.1, 0.75]], dtype=complex128)
    evolved = apply_superoperator(exact_channel(lindbladian, 3.0), rho)
    assert abs(evolved[1, 1] - exp(-3) * 0.75) <= 1e-12
    assert abs(evolved[0, 1] - exp(-1.5) * 0.1) <= 1e-12


def test_model_drift_semigroup_kraus_form(rng: Generator) -> None:
    for _ in range(50):
        lindbladian = random_lindbladian(rng, 2, 2)
        t = float(rng.uniform(0.1, 2.0))
        expected = expm(t * drift_generator(lindbladian))
        assert norm(drift_semigroup(lindbladian, t) - expected) <= 1e-11


def test_model_square_of_single_jump_generator(rng: Generator) -> None:
    jump = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    lindbladian = build_lindbladian(zeros((2, 2)), [jump]).unwrap()
    square = liouvillian_matrix(lindbladian) @ liouvillian_matrix(lindbladian)
    l, ld = jump, jump.conj().T
    for _ in range(20):
        rho = random_state(rng, 2)
        expected = (
            l @ l @ rho @ ld @ ld
            - 0.5 * l @ ld @ l @ rho @ ld
            - 0.5 * l @ rho @ ld @ l @ ld
            - 0.5 * ld @ l @ l @ rho @ ld
            + 0.25 * ld @ l @ ld @ l @ rho
            - 0.5 * l @ rho @ ld @ ld @ l
            + 0.5 * ld @ l @ rho @ ld @ l
            + 0.25 * rho @ ld @ l @ ld @ l
        )
        assert norm(apply_superoperator(square, rho) - expected) <= 1e-12


def test_model_be_norm(qubit_model: Lindbladian) -> None:
    expected = qubit_model.alpha0 + 0.5 * sum(a**2 for a in qubit_model.alphas)
    assert abs(be_norm(qubit_model) - expected) <= 1e-15
    assert abs(qubit_model.alpha0 - 1.0) <= 1e-12
    assert allclose(qubit_model.alphas, [0.5, 0.5])


def test_model_batched_kraus_superoperators(rng: Generator) -> None:
    stack = rng.standard_normal((3, 2, 2, 2)) + 1j * rng.standard_normal((3, 2, 2, 2))
    batched = kraus_superoperators(stack)
    assert batched.shape == (3, 2, 4, 4)
    assert norm(batched[2, 1] - kraus_superoperator(stack[2, 1])) <= 1e-14


def test_model_rejects_non_hermitian() -> None:
    result = build_lindbladian(array([[0, 1], [0, 0]], dtype=complex128))
    assert isinstance(result, Err)
    assert isinstance(result.err_value, ModelError)


def test_model_rejects_small_normalizers() -> None:
    assert isinstance(build_lindbladian(diag([1.0, -2.0]), alpha0=1.0), Err)
    assert isinstance(build_lindbladian(zeros((2, 2)), [2 * SIGMA_MINUS], alphas=[1.0]), Err)
    assert isinstance(build_lindbladian(diag([1.0, -2.0]), alpha0=2.0), Ok)


def test_model_rejects_bad_shapes() -> None:
    assert isinstance(build_lindbladian(zeros((2, 3))), Err)
    assert isinstance(build_lindbladian(zeros((2, 2)), [zeros((4, 4))]), Err)
    assert isinstance(build_lindbladian(zeros((2, 2)), [SIGMA_MINUS], alphas=[1.0, 1.0]), Err)


def test_model_negative_time() -> None:
    lindbladian = build_lindbladian(zeros((2, 2)), [SIGMA_MINUS]).unwrap()
    with raises(ArgumentError):
        _ = exact_channel(lindbladian, -1.0)


def test_model_density_matrix_validation() -> None:
    assert isinstance(validate_density_matrix(eye(2) / 2, 2), Ok)
    for rho in (eye(2), diag([1.5, -0.5]), eye(4) / 4):
        result = validate_density_matrix(rho, 2)
        assert isinstance(result, Err)
        assert isinstance(result.err_value, StateError)


def test_model_effective_generator_examples() -> None:
    damping = build_lindbladian(zeros((2, 2)), [SIGMA_MINUS]).unwrap()
    assert norm(effective_generator(damping) - diag([0, -0.5])) <= 1e-15
    rotation = build_lindbladian(PAULI_Z).unwrap()
    assert norm(effective_generator(rotation) + 1j * PAULI_Z) <= 1e-15


def test_model_effective_generator_is_dissipative(rng: Generator) -> None:
    for _ in range(20):
        lindbladian = random_lindbladian(rng, 4, 3)
        j = effective_generator(lindbladian)
        assert float(eigvalsh(j + j.conj().T).max()) <= 1e-12
        assert float(norm(j, 2)) <= be_norm(lindbladian) + 1e-12


def test_model_exact_channel_semigroup(qubit_model: Lindbladian) -> None:
    for s, t in ((0.3, 0.7), (1.1, 0.4)):
        composed = exact_channel(qubit_model, t) @ exact_channel(qubit_model, s)
        assert norm(composed - exact_channel(qubit_model, s + t)) <= 1e-13


def test_model_exact_channel_matches_runge_kutta(qubit_model: Lindbladian, rng: Generator) -> None:
    generator = liouvillian_matrix(qubit_model)
    rho = random_state(rng, 2)
    state = vec(rho)
    steps = 1000
    h = 1.0 / steps
    for _ in range(steps):
        k1 = generator @ state
        k2 = generator @ (state + 0.5 * h * k1)
        k3 = generator @ (state + 0.5 * h * k2)
        k4 = generator @ (state + h * k3)
        state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert norm(state - exact_channel(qubit_model, 1.0) @ vec(rho)) <= 1e-10
