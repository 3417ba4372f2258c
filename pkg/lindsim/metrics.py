from __future__ import annotations
from logging import getLogger

from attrs import frozen
from numpy import complex128, einsum, eye, reshape
from numpy.linalg import norm
from scipy.linalg import eigvalsh, svdvals

from lindsim.model import SuperoperatorMatrix
from lindsim.utils import ArgumentError, ComplexArray

LOGGER = getLogger(__name__)

ChoiMatrix = ComplexArray


def _system_dim(matrix: ComplexArray) -> int:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ArgumentError(f"Expected a square matrix, got shape {matrix.shape}")
    dim = round(matrix.shape[0] ** 0.5)
    if dim * dim != matrix.shape[0]:
        raise ArgumentError(f"Size {matrix.shape[0]} is not the square of a dimension")
    return dim


def choi(s: SuperoperatorMatrix) -> ChoiMatrix:
    """Reshuffle a column-stacking superoperator into its (unnormalized) Choi matrix"""
    dim = _system_dim(s)
    return reshape(s, [dim] * 4).swapaxes(0, 3).reshape(dim * dim, dim * dim)


def choi_to_superoperator(c: ChoiMatrix) -> SuperoperatorMatrix:
    return choi(c)


def trace_norm(matrix: ComplexArray) -> float:
    return float(svdvals(matrix).sum())


@frozen
class DiamondBounds:
    lower: float
    upper: float


def diamond_sandwich(s1: SuperoperatorMatrix, s2: SuperoperatorMatrix) -> DiamondBounds:
    if s1.shape != s2.shape:
        raise ArgumentError(f"Superoperators have different shapes {s1.shape} and {s2.shape}")
    dim = _system_dim(s1)
    upper = trace_norm(choi(s1 - s2))
    return DiamondBounds(upper / dim, upper)


@frozen
class CPTPReport:
    min_choi_eigenvalue: float
    trace_preservation_residual: float
    hermiticity_residual: float


def cptp_report(s: SuperoperatorMatrix) -> CPTPReport:
    dim = _system_dim(s)
    c = choi(s)
    hermiticity = float(norm(c - c.conj().T, 2))
    smallest = float(eigvalsh((c + c.conj().T) / 2)[0])
    # indices are (input, output, input, output)
    reduced = einsum("abcb->ac", c.reshape(dim, dim, dim, dim))
    trace = float(norm(reduced - eye(dim, dtype=complex128), 2))
    LOGGER.debug(f"CPTP diagnostics: min eigenvalue {smallest:.3e}, TP residual {trace:.3e}")
    return CPTPReport(smallest, trace, hermiticity)
