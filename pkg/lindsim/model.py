"""Lindblad generators, their drift/jump split and the exact evolution oracle.

Superoperators act on column-stacked density matrices, so that
vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ) and the Kraus map ρ ↦ AρA† is conj(A) ⊗ A.
"""

from __future__ import annotations
from collections.abc import Sequence
from logging import getLogger

from attrs import frozen
from numpy import asarray, complex128, conj, einsum, eye, isfinite, kron, zeros
from numpy.random import Generator
from numpy.linalg import eigvalsh, norm
from result import Err, Ok, Result
from scipy.linalg import expm

from lindsim.config import get_config
from lindsim.utils import ArgumentError, ComplexArray

LOGGER = getLogger(__name__)

OperatorMatrix = ComplexArray
SuperoperatorMatrix = ComplexArray


class ModelError(Exception):
    ...


class StateError(Exception):
    ...


@frozen
class Lindbladian:
    hamiltonian: OperatorMatrix
    jumps: tuple[OperatorMatrix, ...]
    alpha0: float
    alphas: tuple[float, ...]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def jump_count(self) -> int:
        return len(self.jumps)

    @property
    def jump_weight(self) -> float:
        """Σα_j², the jump part of the be-norm before halving"""
        return sum(alpha**2 for alpha in self.alphas)


def build_lindbladian(
    hamiltonian: OperatorMatrix,
    jumps: Sequence[OperatorMatrix] = (),
    alpha0: float | None = None,
    alphas: Sequence[float] | None = None,
) -> Result[Lindbladian, ModelError]:
    tolerances = get_config().tolerances
    h = asarray(hamiltonian, dtype=complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
        return Err(ModelError(f"Hamiltonian must be a square matrix of size >= 2, got {h.shape}"))
    dim = h.shape[0]
    skew = float(abs(h - h.conj().T).max())
    if skew > tolerances.hermiticity * max(1.0, float(abs(h).max())):
        return Err(ModelError(f"Hamiltonian is not Hermitian (deviation {skew:.3e})"))
    h = (h + h.conj().T) / 2
    ls = tuple(asarray(jump, dtype=complex128) for jump in jumps)
    for i, jump in enumerate(ls):
        if jump.shape != (dim, dim):
            return Err(ModelError(f"Jump operator {i} has shape {jump.shape}, expected {(dim, dim)}"))
    for i, matrix in enumerate((h, *ls)):
        if not bool(isfinite(matrix).all()):
            return Err(ModelError(f"Operator {i} has non finite entries"))
    h_norm = float(norm(h, 2))
    jump_norms = [float(norm(jump, 2)) for jump in ls]
    a0 = h_norm if alpha0 is None else float(alpha0)
    a = tuple(jump_norms) if alphas is None else tuple(float(x) for x in alphas)
    if len(a) != len(ls):
        return Err(ModelError(f"Got {len(a)} normalizing factors for {len(ls)} jumps"))
    slack = tolerances.norm_slack
    if a0 < 0 or h_norm > a0 * (1 + slack) + slack:
        return Err(ModelError(f"alpha0={a0} does not bound ‖H‖={h_norm}"))
    for i, (alpha, actual) in enumerate(zip(a, jump_norms)):
        if alpha < 0 or actual > alpha * (1 + slack) + slack:
            return Err(ModelError(f"alpha{i + 1}={alpha} does not bound ‖L{i + 1}‖={actual}"))
    LOGGER.debug(f"Built Lindbladian of dimension {dim} with {len(ls)} jumps")
    return Ok(Lindbladian(h, ls, a0, a))


def vec(rho: OperatorMatrix) -> ComplexArray:
    return asarray(rho, dtype=complex128).reshape(-1, order="F")


def unvec(vector: ComplexArray) -> OperatorMatrix:
    dim = round(vector.shape[0] ** 0.5)
    return vector.reshape(dim, dim, order="F")


def apply_superoperator(s: SuperoperatorMatrix, rho: OperatorMatrix) -> OperatorMatrix:
    return unvec(s @ vec(rho))


def kraus_superoperator(a: OperatorMatrix) -> SuperoperatorMatrix:
    return kron(conj(a), a)


def kraus_superoperators(stack: ComplexArray) -> ComplexArray:
    """Batched conj(A)⊗A over any leading axes of a stack of d×d operators"""
    *batch, d, _ = stack.shape
    return einsum("...ij,...kl->...ikjl", conj(stack), stack).reshape(*batch, d * d, d * d)


def effective_generator(lindbladian: Lindbladian) -> OperatorMatrix:
    j = -1j * lindbladian.hamiltonian
    for jump in lindbladian.jumps:
        j = j - 0.5 * jump.conj().T @ jump
    return j


def be_norm(lindbladian: Lindbladian) -> float:
    return lindbladian.alpha0 + 0.5 * lindbladian.jump_weight


def drift_generator(lindbladian: Lindbladian) -> SuperoperatorMatrix:
    j = effective_generator(lindbladian)
    identity = eye(lindbladian.dim, dtype=complex128)
    return kron(identity, j) + kron(conj(j), identity)


def jump_superoperator(lindbladian: Lindbladian) -> SuperoperatorMatrix:
    d = lindbladian.dim
    result = zeros((d * d, d * d), dtype=complex128)
    for jump in lindbladian.jumps:
        result += kraus_superoperator(jump)
    return result


def liouvillian_matrix(lindbladian: Lindbladian) -> SuperoperatorMatrix:
    h = lindbladian.hamiltonian
    identity = eye(lindbladian.dim, dtype=complex128)
    result = -1j * (kron(identity, h) - kron(h.T, identity))
    for jump in lindbladian.jumps:
        damping = jump.conj().T @ jump
        result = result + kraus_superoperator(jump)
        result = result - 0.5 * (kron(identity, damping) + kron(damping.T, identity))
    return result


def exact_channel(lindbladian: Lindbladian, t: float) -> SuperoperatorMatrix:
    if t < 0:
        raise ArgumentError(f"Evolution time must be nonnegative, got {t}")
    return expm(t * liouvillian_matrix(lindbladian))


def drift_semigroup(lindbladian: Lindbladian, t: float) -> SuperoperatorMatrix:
    if t < 0:
        raise ArgumentError(f"Evolution time must be nonnegative, got {t}")
    return kraus_superoperator(expm(t * effective_generator(lindbladian)))


def validate_density_matrix(rho: OperatorMatrix, dim: int) -> Result[OperatorMatrix, StateError]:
    tolerance = get_config().tolerances.state
    state = asarray(rho, dtype=complex128)
    if state.shape != (dim, dim):
        return Err(StateError(f"Density matrix has shape {state.shape}, expected {(dim, dim)}"))
    if float(abs(state - state.conj().T).max()) > tolerance:
        return Err(StateError("Density matrix is not Hermitian"))
    state = (state + state.conj().T) / 2
    smallest = float(eigvalsh(state)[0])
    if smallest < -tolerance:
        return Err(StateError(f"Density matrix is not positive semidefinite (eigenvalue {smallest:.3e})"))
    trace = complex(state.trace())
    if abs(trace - 1) > tolerance:
        return Err(StateError(f"Density matrix has trace {trace.real:.12f}, expected 1"))
    return Ok(state)


def random_lindbladian(
    rng: Generator,
    dim: int,
    jump_count: int,
    hamiltonian_norm: float = 1.0,
    jump_norm: float = 0.5,
) -> Lindbladian:
    """Seeded random model with ‖H‖ and every ‖L_j‖ fixed to the given values"""

    def gaussian() -> ComplexArray:
        return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))

    h = gaussian()
    h = h + h.conj().T
    h *= hamiltonian_norm / float(norm(h, 2))
    jumps = [gaussian() for _ in range(jump_count)]
    jumps = [jump * (jump_norm / float(norm(jump, 2))) for jump in jumps]
    return build_lindbladian(h, jumps).unwrap()
