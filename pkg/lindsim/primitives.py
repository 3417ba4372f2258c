"""Dense-matrix realizations of block-encodings, LCU for channels and oblivious amplitude amplification.

Registers are tensor factors with the most significant factor first. A
block-encoding keeps its ancilla in front of the system, so the encoded
operator is the top-left system-sized block of its unitary.
"""

from __future__ import annotations
from collections.abc import Sequence
from logging import getLogger
from math import ceil, exp, factorial, fsum, log2, sqrt

from attrs import frozen
from numpy import (
    arccos,
    array,
    asarray,
    block,
    clip,
    complex128,
    cos,
    einsum,
    eye,
    float64,
    kron,
    outer,
    sin,
    zeros,
)
from numpy.linalg import norm
from result import Err, Ok, Result
from scipy.linalg import eigh

from lindsim.config import get_config
from lindsim.duhamel import CPMapApprox, KrausIndex
from lindsim.model import Lindbladian, OperatorMatrix, be_norm, effective_generator
from lindsim.quadrature import canonical_rule
from lindsim.utils import ArgumentError, ComplexArray, RealArray

LOGGER = getLogger(__name__)

CLAMP_TOLERANCE = 1e-12
PROPORTIONALITY_TOLERANCE = 1e-10


class ContractError(Exception):
    def __init__(self, message: str, amplitude: float | None = None) -> None:
        super().__init__(message)
        self.amplitude = amplitude


@frozen
class BlockEncoding:
    unitary: ComplexArray
    alpha: float
    ancilla_qubits: int
    target: OperatorMatrix
    epsilon: float

    @property
    def system_dim(self) -> int:
        return self.target.shape[0]

    @property
    def top_left(self) -> OperatorMatrix:
        d = self.system_dim
        return self.unitary[:d, :d]

    @property
    def extraction_residual(self) -> float:
        return float(norm(self.target - self.alpha * self.top_left, 2))


def _psd_sqrt(matrix: ComplexArray) -> ComplexArray:
    values, vectors = eigh(matrix)
    if float(values[0]) < -CLAMP_TOLERANCE:
        LOGGER.warning(f"Clamping eigenvalue {values[0]:.3e} of a defect operator")
    roots = clip(values, 0, None) ** 0.5
    return (vectors * roots) @ vectors.conj().T


def dilate(a: OperatorMatrix, alpha: float) -> BlockEncoding:
    """One-ancilla unitary completion whose top-left block is a/alpha"""
    operator = asarray(a, dtype=complex128)
    slack = get_config().tolerances.norm_slack
    actual = float(norm(operator, 2))
    if alpha <= 0 or actual > alpha * (1 + slack) + slack:
        raise ArgumentError(f"Normalizer {alpha} does not bound the operator norm {actual}")
    b = operator / alpha
    identity = eye(operator.shape[0], dtype=complex128)
    unitary = block(
        [
            [b, _psd_sqrt(identity - b @ b.conj().T)],
            [_psd_sqrt(identity - b.conj().T @ b), -b.conj().T],
        ]
    )
    residual = float(norm(operator - alpha * unitary[: len(operator), : len(operator)], 2))
    return BlockEncoding(unitary, alpha, 1, operator, residual)


def index_qubits(count: int) -> int:
    return ceil(log2(count)) if count > 1 else 0


def _preparation(amplitudes: RealArray) -> RealArray:
    """Real orthogonal matrix whose first column is the given unit vector"""
    size = len(amplitudes)
    first = zeros(size, dtype=float64)
    first[0] = 1.0
    u = first - amplitudes
    if float(norm(u)) < 1e-15:
        return eye(size, dtype=float64)
    return eye(size, dtype=float64) - 2 * outer(u, u) / float(u @ u)


def _check_consistent(encodings: Sequence[BlockEncoding]) -> tuple[int, int]:
    if not encodings:
        raise ArgumentError("At least one block-encoding is required")
    ancilla = encodings[0].ancilla_qubits
    dim = encodings[0].system_dim
    for i, encoding in enumerate(encodings):
        if encoding.ancilla_qubits != ancilla:
            raise ArgumentError(f"Encoding {i} has {encoding.ancilla_qubits} ancilla qubits, expected {ancilla}")
        if encoding.system_dim != dim:
            raise ArgumentError(f"Encoding {i} acts on dimension {encoding.system_dim}, expected {dim}")
    return ancilla, dim


def _select(encodings: Sequence[BlockEncoding], slots: int) -> ComplexArray:
    """Σ_j |j⟩⟨j| ⊗ U_j with the index register in front, identity on unused slots"""
    size = encodings[0].unitary.shape[0]
    result = zeros((slots * size, slots * size), dtype=complex128)
    for j in range(slots):
        unitary = encodings[j].unitary if j < len(encodings) else eye(size, dtype=complex128)
        result[j * size : (j + 1) * size, j * size : (j + 1) * size] = unitary
    return result


def lcu_sum(encodings: Sequence[BlockEncoding], y: Sequence[float]) -> BlockEncoding:
    """Block-encoding of Σ_j y_j A_j with normalizer Σ_j y_j α_j

    Each epsilon bounds the error of the unnormalized target A_j, so the
    errors add up to Σ_j y_j ε_j. Measured against the normalized blocks
    A_j/α_j with errors ε_j/α_j this is the same quantity Σ_j y_j α_j (ε_j/α_j).
    """
    ancilla, dim = _check_consistent(encodings)
    if len(y) != len(encodings) or any(x < 0 for x in y) or not any(x > 0 for x in y):
        raise ArgumentError(f"Need one nonnegative weight per encoding, not all zero, got {list(y)}")
    index = index_qubits(len(encodings))
    slots = 2**index
    s = fsum(w * e.alpha for w, e in zip(y, encodings))
    amplitudes = zeros(slots, dtype=float64)
    amplitudes[: len(encodings)] = [sqrt(e.alpha * w / s) for e, w in zip(encodings, y)]
    prepare = kron(_preparation(amplitudes), eye(2**ancilla * dim))
    unitary = prepare.conj().T @ _select(encodings, slots) @ prepare
    target = sum((w * e.target for w, e in zip(y, encodings)), zeros((dim, dim), dtype=complex128))
    epsilon = fsum(w * e.epsilon for w, e in zip(y, encodings))
    LOGGER.debug(f"Summed {len(encodings)} encodings with normalizer {s}")
    return BlockEncoding(unitary, s, index + ancilla, target, epsilon)


def taylor_drift_encoding(lindbladian: Lindbladian, s: float, Kp: int) -> BlockEncoding:
    """Block-encoding of Σ_ℓ (Js)^ℓ/ℓ! as a sum of dilated powers of J"""
    beta = be_norm(lindbladian)
    if beta <= 0 or s < 0:
        raise ArgumentError(f"Need a positive be-norm and nonnegative time, got {beta} and {s}")
    j = effective_generator(lindbladian)
    power = eye(lindbladian.dim, dtype=complex128)
    encodings: list[BlockEncoding] = []
    for ell in range(Kp + 1):
        encodings.append(dilate(power, beta**ell))
        power = power @ j
    return lcu_sum(encodings, [s**ell / factorial(ell) for ell in range(Kp + 1)])


def kraus_encodings(approximation: CPMapApprox) -> list[BlockEncoding]:
    return [dilate(term.kraus_operator, term.normalizer) for term in approximation.terms()]


@frozen
class MuFactors:
    """Per-register amplitude factors: unary k register, jump registers, node registers"""

    unary: RealArray
    jump: RealArray
    node: RealArray

    def amplitude(self, index: KrausIndex) -> float:
        value = float(self.unary[index.k])
        for ell in index.ells:
            value *= float(self.jump[ell])
        for i, j in enumerate(index.js):
            value *= float(self.node[i, j])
        return value


@frozen
class MuState:
    amplitudes: RealArray
    indices: tuple[KrausIndex, ...]
    factors: MuFactors
    norm: float


def mu_coefficients(approximation: CPMapApprox) -> MuState:
    lindbladian = approximation.lindbladian
    t = approximation.time
    cfg = approximation.config
    scale = exp(be_norm(lindbladian) * t)
    indices: list[KrausIndex] = []
    raw: list[float] = []
    for batch in approximation.batches():
        for term in batch.terms():
            indices.append(term.index)
            raw.append(term.normalizer / scale)
    total = sqrt(fsum(x * x for x in raw))
    unary = array([t ** (-k * (k - 1) / 4) for k in range(cfg.K + 1)])
    node = zeros((cfg.K, cfg.q), dtype=float64)
    if cfg.K > 0 and t > 0:
        rule = canonical_rule(cfg.q, t)
        for i in range(cfg.K):
            node[i] = (rule.weights * rule.nodes**i) ** 0.5
    factors = MuFactors(unary, array(lindbladian.alphas, dtype=float64), node)
    return MuState(array(raw) / total, tuple(indices), factors, total)


def lcu_channel_unitary(encodings: Sequence[BlockEncoding]) -> ComplexArray:
    """select ∘ prepare|μ⟩ on ancilla ⊗ index ⊗ system, μ ∝ the encoding normalizers"""
    ancilla, dim = _check_consistent(encodings)
    slots = 2 ** index_qubits(len(encodings))
    width = 2**ancilla
    mu = zeros(slots, dtype=float64)
    alphas = array([e.alpha for e in encodings])
    mu[: len(encodings)] = alphas / norm(alphas)
    stacked = _select(encodings, slots)
    stacked = stacked.reshape(slots, width, dim, slots, width, dim)
    # move the index register behind the encoding ancilla
    select = einsum("jaskbt->ajsbkt", stacked).reshape(width * slots * dim, width * slots * dim)
    prepare = kron(eye(width), kron(_preparation(mu), eye(dim)))
    return select @ prepare


@frozen
class LCUChannelResult:
    projected: ComplexArray
    ideal: ComplexArray
    residual: float
    residual_bound: float
    success_amplitude: float
    unitary: ComplexArray

    def reduced_state(self, dim: int) -> OperatorMatrix:
        branches = self.projected.reshape(-1, dim)
        return branches.T @ branches.conj()


def lcu_channel(
    encodings: Sequence[BlockEncoding], psi: ComplexArray, mu: MuState | None = None
) -> Result[LCUChannelResult, ContractError]:
    ancilla, dim = _check_consistent(encodings)
    alphas = array([e.alpha for e in encodings])
    if mu is not None:
        if len(mu.amplitudes) != len(encodings):
            return Err(ContractError(f"|μ⟩ has {len(mu.amplitudes)} amplitudes for {len(encodings)} encodings"))
        deviation = float(norm(mu.amplitudes - alphas / norm(alphas)))
        if deviation > PROPORTIONALITY_TOLERANCE:
            return Err(ContractError(f"|μ⟩ is not proportional to the normalizers (deviation {deviation:.3e})"))
    slots = 2 ** index_qubits(len(encodings))
    width = 2**ancilla
    unitary = lcu_channel_unitary(encodings)
    start = zeros(width * slots * dim, dtype=complex128)
    start[:dim] = asarray(psi, dtype=complex128)
    output = (unitary @ start).reshape(width, slots * dim)
    projected = output[0]
    total = float(norm(alphas))
    ideal = zeros(slots * dim, dtype=complex128)
    for j, encoding in enumerate(encodings):
        ideal[j * dim : (j + 1) * dim] = encoding.target @ psi / total
    residual = float(norm(projected - ideal))
    bound = len(encodings) * max(e.epsilon for e in encodings) / total
    amplitude = float(norm(projected))
    LOGGER.debug(f"LCU channel success amplitude {amplitude:.6f}, residual {residual:.3e}")
    return Ok(LCUChannelResult(projected, ideal, residual, bound, amplitude, unitary))


def channel_projectors(
    ancilla_qubits: int, index_qubits: int, system_dim: int, extra_qubits: int = 0
) -> tuple[ComplexArray, ComplexArray]:
    """(P0, P1) for an LCU channel unitary: P0 keeps the zero ancillas, P1 the whole input configuration"""
    ancilla = zeros((2 ** (extra_qubits + ancilla_qubits),) * 2, dtype=complex128)
    ancilla[0, 0] = 1
    index = zeros((2**index_qubits,) * 2, dtype=complex128)
    index[0, 0] = 1
    system = eye(system_dim, dtype=complex128)
    good = kron(ancilla, kron(eye(2**index_qubits), system))
    start = kron(ancilla, kron(index, system))
    return good, start


def oaa_step(
    w: ComplexArray, p0: ComplexArray, p1: ComplexArray, psi_hat: ComplexArray
) -> Result[ComplexArray, ContractError]:
    tolerance = get_config().tolerances.oaa_premise
    forward = w @ psi_hat
    amplitude = float(norm(p0 @ forward))
    if abs(amplitude - 0.5) > tolerance:
        return Err(ContractError(f"Success amplitude {amplitude:.9f} is not 1/2", amplitude))
    identity = eye(w.shape[0], dtype=complex128)
    reflected = (identity - 2 * p0) @ forward
    return Ok(-(w @ ((identity - 2 * p1) @ (w.conj().T @ reflected))))


@frozen
class Dilution:
    angle: float
    rotation: ComplexArray
    unitary: ComplexArray | None


def dilute(success_amp: float, unitary: ComplexArray | None = None) -> Dilution:
    """Extra ancilla rotation bringing the success amplitude down to exactly 1/2"""
    if not 0.5 - CLAMP_TOLERANCE <= success_amp <= 1 + CLAMP_TOLERANCE:
        raise ArgumentError(f"Success amplitude {success_amp} cannot be diluted to 1/2")
    angle = float(arccos(min(1.0, 1 / (2 * success_amp))))
    rotation = array([[cos(angle), -sin(angle)], [sin(angle), cos(angle)]], dtype=complex128)
    extended = None if unitary is None else kron(rotation, unitary)
    return Dilution(angle, rotation, extended)
