from __future__ import annotations

from numpy import array, complex128, eye, outer, zeros
from numpy.linalg import matrix_rank, norm
from numpy.random import Generator
from pytest import raises
from scipy.linalg import eigvalsh

from lindsim.metrics import (
    choi,
    choi_to_superoperator,
    cptp_report,
    diamond_sandwich,
    trace_norm,
)
from lindsim.model import Lindbladian, apply_superoperator, exact_channel, kraus_superoperator
from lindsim.utils import ArgumentError, ComplexArray

PAULI_X = array([[0, 1], [1, 0]], dtype=complex128)
PAULI_Z = array([[1, 0], [0, -1]], dtype=complex128)


def test_metrics_identity_choi_is_entangled_projector() -> None:
    omega = eye(2, dtype=complex128).reshape(-1)
    c = choi(eye(4, dtype=complex128))
    assert norm(c - outer(omega, omega)) <= 1e-15
    assert abs(trace_norm(c) - 2) <= 1e-12


def test_metrics_conjugation_choi() -> None:
    c = choi(kraus_superoperator(PAULI_X))
    assert eigvalsh(c)[0] >= -1e-12
    assert abs(c.trace() - 2) <= 1e-12
    assert matrix_rank(c) == 1


def test_metrics_choi_inverse(two_qubit_model: Lindbladian) -> None:
    s = exact_channel(two_qubit_model, 0.4)
    assert norm(choi_to_superoperator(choi(s)) - s) <= 1e-14


def test_metrics_sandwich_of_equal_channels(qubit_model: Lindbladian) -> None:
    s = exact_channel(qubit_model, 0.8)
    bounds = diamond_sandwich(s, s)
    assert bounds.lower == bounds.upper == 0


def test_metrics_sandwich_known_distance() -> None:
    # identity and Z conjugation are perfectly distinguishable, diamond distance 2
    bounds = diamond_sandwich(eye(4, dtype=complex128), kraus_superoperator(PAULI_Z))
    assert abs(bounds.lower - 2) <= 1e-12
    assert abs(bounds.upper - 4) <= 1e-12


def test_metrics_sandwich_ordering(qubit_model: Lindbladian, rng: Generator) -> None:
    for _ in range(5):
        t = float(rng.uniform(0.1, 1.0))
        bounds = diamond_sandwich(exact_channel(qubit_model, t), eye(4, dtype=complex128))
        assert 0 <= bounds.lower <= bounds.upper
        assert abs(2 * bounds.lower - bounds.upper) <= 1e-14


def test_metrics_sandwich_shape_mismatch() -> None:
    with raises(ArgumentError):
        _ = diamond_sandwich(eye(4), eye(16))
    with raises(ArgumentError):
        _ = choi(eye(3))


def test_metrics_cptp_report() -> None:
    report = cptp_report(kraus_superoperator(PAULI_X))
    assert report.trace_preservation_residual <= 1e-15
    assert report.hermiticity_residual <= 1e-15
    scaled = cptp_report(2 * eye(4, dtype=complex128))
    assert abs(scaled.trace_preservation_residual - 1) <= 1e-14
    negative = cptp_report(-eye(4, dtype=complex128))
    assert negative.min_choi_eigenvalue <= -1


def transpose_map(dim: int) -> ComplexArray:
    s = zeros((dim * dim, dim * dim), dtype=complex128)
    for row in range(dim):
        for column in range(dim):
            s[column + row * dim, row + column * dim] = 1
    return s


def random_matrix(rng: Generator, dim: int) -> ComplexArray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def test_metrics_choi_is_linear(rng: Generator) -> None:
    for _ in range(5):
        a, b = random_matrix(rng, 4), random_matrix(rng, 4)
        x, y = complex(rng.standard_normal(), rng.standard_normal()), float(rng.standard_normal())
        assert norm(choi(x * a + y * b) - (x * choi(a) + y * choi(b))) <= 1e-12


def test_metrics_trace_norm_is_a_norm(rng: Generator) -> None:
    for _ in range(10):
        a, b = random_matrix(rng, 4), random_matrix(rng, 4)
        assert trace_norm(a + b) <= trace_norm(a) + trace_norm(b) + 1e-12
        x = complex(rng.standard_normal(), rng.standard_normal())
        assert abs(trace_norm(x * a) - abs(x) * trace_norm(a)) <= 1e-12 * trace_norm(a) * max(1.0, abs(x))


def test_metrics_trace_norm_of_hermitian(rng: Generator) -> None:
    for _ in range(10):
        a = random_matrix(rng, 4)
        h = a + a.conj().T
        assert abs(trace_norm(h) - float(abs(eigvalsh(h)).sum())) <= 1e-12


def test_metrics_transpose_is_not_completely_positive(rng: Generator) -> None:
    transpose = transpose_map(2)
    rho = random_matrix(rng, 2)
    assert norm(apply_superoperator(transpose, rho) - rho.T) <= 1e-15
    report = cptp_report(transpose)
    assert report.trace_preservation_residual <= 1e-15
    assert abs(report.min_choi_eigenvalue + 1) <= 1e-12
