"""Duhamel-series approximants of Lindblad channels and their completely positive Kraus form.

Nested time integrals are discretized on the scaled Gauss–Legendre grid of
`lindsim.quadrature`: a node x at one level spawns children x·ŝ_j/t with
weights x·w_j/t. All sums over the grid run level by level on batches of
parents, so the grid is never held in memory at once.
"""

from __future__ import annotations
from collections.abc import Callable, Iterator, Sequence
from logging import getLogger
from math import ceil, exp, factorial, fsum

from attrs import evolve, frozen
from numpy import (
    arange,
    array,
    broadcast_to,
    complex128,
    concatenate,
    conj,
    einsum,
    eye,
    float64,
    int64,
    matmul,
    newaxis,
    sqrt,
    stack,
    tensordot,
    zeros,
)
from numpy.linalg import matrix_power
from numpy.typing import NDArray
from pydantic import BaseModel
from result import Err, Ok, Result
from scipy.linalg import expm
from scipy.optimize import bisect

from lindsim.config import WeightConvention, get_config
from lindsim.metrics import diamond_sandwich
from lindsim.model import (
    Lindbladian,
    OperatorMatrix,
    StateError,
    SuperoperatorMatrix,
    apply_superoperator,
    be_norm,
    drift_generator,
    drift_semigroup,
    effective_generator,
    exact_channel,
    jump_superoperator,
    kraus_superoperators,
    validate_density_matrix,
)
from lindsim.quadrature import QuadratureRule, canonical_rule, check_term_count, nested_grid
from lindsim.utils import (
    ArgumentError,
    ComplexArray,
    RealArray,
    no_extra,
    ordered_map,
    tree_sum,
)

LOGGER = getLogger(__name__)

SEGMENT_TOLERANCE = 1e-13

# (parent nodes (N,), child nodes (N, q)) -> (N, q, D, D)
Step = Callable[[RealArray, RealArray], ComplexArray]
# nodes of any shape -> the drift superoperator from 0 to each node
Closing = Callable[[RealArray], ComplexArray]


class InfeasiblePrecision(Exception):
    ...


SimulationError = InfeasiblePrecision | StateError


@frozen
class TruncationConfig:
    K: int
    Kp: int
    q: int
    segment_time: float
    num_segments: int = 1

    @property
    def total_time(self) -> float:
        return self.segment_time * self.num_segments


@frozen
class KrausIndex:
    k: int
    ells: tuple[int, ...]
    js: tuple[int, ...]


@frozen
class KrausTerm:
    coefficient: float
    index: KrausIndex
    matrix: OperatorMatrix
    normalizer: float

    @property
    def kraus_operator(self) -> OperatorMatrix:
        return self.coefficient * self.matrix


@frozen
class KrausBatch:
    """Kraus terms of one depth; index columns run from the outermost level inwards"""

    depth: int
    ells: NDArray[int64]
    js: NDArray[int64]
    coefficients: RealArray
    matrices: ComplexArray
    normalizers: RealArray

    def __len__(self) -> int:
        return len(self.coefficients)

    def terms(self) -> Iterator[KrausTerm]:
        for i in range(len(self)):
            index = KrausIndex(
                self.depth,
                tuple(int(x) for x in self.ells[i][::-1]),
                tuple(int(x) for x in self.js[i][::-1]),
            )
            yield KrausTerm(
                float(self.coefficients[i]),
                index,
                self.matrices[i],
                float(self.normalizers[i]),
            )

    def superoperator(self) -> SuperoperatorMatrix:
        operators = self.coefficients[:, newaxis, newaxis] * self.matrices
        d = operators.shape[1]
        return einsum("nij,nkl->ikjl", conj(operators), operators).reshape(d * d, d * d)


def taylor_drift(lindbladian: Lindbladian, s: float, Kp: int) -> OperatorMatrix:
    if s < 0:
        raise ArgumentError(f"Drift time must be nonnegative, got {s}")
    return _taylor_batch(_taylor_powers(effective_generator(lindbladian), Kp), array(s))


def _taylor_powers(j: OperatorMatrix, Kp: int) -> ComplexArray:
    """Stack of J^ℓ/ℓ! for ℓ = 0..K'"""
    powers = [eye(j.shape[0], dtype=complex128)]
    for ell in range(1, Kp + 1):
        powers.append(powers[-1] @ j / ell)
    return stack(powers)


def _taylor_batch(powers: ComplexArray, s: RealArray) -> ComplexArray:
    monomials = s[..., newaxis] ** arange(powers.shape[0])
    return einsum("...l,lij->...ij", monomials.astype(complex128), powers)


def _drift_operators(j: OperatorMatrix, Kp: int | None) -> Callable[[RealArray], ComplexArray]:
    if Kp is None:
        return lambda s: expm(s[..., newaxis, newaxis] * j)
    powers = _taylor_powers(j, Kp)
    return lambda s: _taylor_batch(powers, s)


def f_k(lindbladian: Lindbladian, t: float, s: Sequence[float]) -> SuperoperatorMatrix:
    """One integrand of the Duhamel series at ascending jump times s_1 ≤ … ≤ s_k"""
    times = [0.0, *s, t]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ArgumentError(f"Jump times must be ascending within [0, {t}], got {list(s)}")
    jumps = jump_superoperator(lindbladian)
    result = drift_semigroup(lindbladian, t - times[-2])
    for i in range(len(s), 0, -1):
        result = result @ jumps @ drift_semigroup(lindbladian, times[i] - times[i - 1])
    return result


def nested_series_sum(
    rule: QuadratureRule, depth: int, step: Step, closing: Closing
) -> SuperoperatorMatrix:
    """Σ over every grid node up to depth of ŵ-product · prefix · closing(x̂), plus closing(t)"""
    t = rule.interval_length
    partials = [closing(array([t]))[0]]
    if depth > 0:
        dim = partials[0].shape[0]
        prefix = eye(dim, dtype=complex128)[newaxis]
        _accumulate_level(rule, depth, 1, prefix, array([t]), array([1.0]), step, closing, partials)
    LOGGER.debug(f"Nested series of depth {depth} reduced from {len(partials)} batches")
    return tree_sum(partials)


def _accumulate_level(
    rule: QuadratureRule,
    depth: int,
    level: int,
    prefix: ComplexArray,
    x: RealArray,
    w: RealArray,
    step: Step,
    closing: Closing,
    partials: list[ComplexArray],
) -> None:
    t = rule.interval_length
    dim = prefix.shape[-1]
    per_batch = max(1, get_config().limits.chunk_entries // (rule.order * dim * dim))
    for start in range(0, len(x), per_batch):
        px = x[start : start + per_batch]
        children = px[:, newaxis] * rule.nodes[newaxis, :] / t
        weights = w[start : start + per_batch, newaxis] * px[:, newaxis] * rule.weights[newaxis, :] / t
        child_prefix = matmul(prefix[start : start + per_batch, newaxis], step(px, children))
        terms = matmul(child_prefix, closing(children))
        partials.append(tensordot(weights, terms, axes=([0, 1], [0, 1])))
        if level < depth:
            _accumulate_level(
                rule,
                depth,
                level + 1,
                child_prefix.reshape(-1, dim, dim),
                children.ravel(),
                weights.ravel(),
                step,
                closing,
                partials,
            )


def g_K_quadrature(
    lindbladian: Lindbladian, t: float, K: int, q: int, Kp: int | None = None
) -> SuperoperatorMatrix:
    """Quadrature-discretized G_K; exact drift exponentials unless a Taylor order Kp is given"""
    if K < 0:
        raise ArgumentError(f"Duhamel order must be nonnegative, got {K}")
    drift = _drift_operators(effective_generator(lindbladian), Kp)
    closing: Closing = lambda s: kraus_superoperators(drift(s))
    if K == 0 or lindbladian.jump_count == 0:
        return closing(array([t]))[0]
    check_term_count(sum(q**k for k in range(1, K + 1)))
    jumps = jump_superoperator(lindbladian)
    step: Step = lambda parents, children: matmul(
        kraus_superoperators(drift(parents[:, newaxis] - children)), jumps
    )
    return nested_series_sum(canonical_rule(q, t), K, step, closing)


def g_K_exact(lindbladian: Lindbladian, t: float, K: int) -> SuperoperatorMatrix:
    """G_K with exact nested integrals, read off the exponential of a block bidiagonal generator"""
    if t < 0:
        raise ArgumentError(f"Evolution time must be nonnegative, got {t}")
    drift = drift_generator(lindbladian)
    jumps = jump_superoperator(lindbladian)
    size = drift.shape[0]
    blocks = zeros(((K + 1) * size, (K + 1) * size), dtype=complex128)
    for i in range(K + 1):
        blocks[i * size : (i + 1) * size, i * size : (i + 1) * size] = drift
        if i < K:
            blocks[i * size : (i + 1) * size, (i + 1) * size : (i + 2) * size] = jumps
    return expm(t * blocks)[:size].reshape(size, K + 1, size).sum(axis=1)


@frozen
class CPMapApprox:
    lindbladian: Lindbladian
    time: float
    config: TruncationConfig

    @property
    def dim(self) -> int:
        return self.lindbladian.dim

    @property
    def term_count(self) -> int:
        mq = self.lindbladian.jump_count * self.config.q
        return 1 + sum(mq**k for k in range(1, self.config.K + 1))

    def batches(self) -> Iterator[KrausBatch]:
        return _kraus_batches(self.lindbladian, self.time, self.config)

    def terms(self) -> Iterator[KrausTerm]:
        for batch in self.batches():
            yield from batch.terms()

    def as_superoperator(self, workers: int = 1) -> SuperoperatorMatrix:
        partials = list(ordered_map(KrausBatch.superoperator, self.batches(), workers))
        return tree_sum(partials)


def enumerate_kraus(lindbladian: Lindbladian, t: float, cfg: TruncationConfig) -> CPMapApprox:
    if t < 0:
        raise ArgumentError(f"Evolution time must be nonnegative, got {t}")
    approximation = CPMapApprox(lindbladian, t, cfg)
    check_term_count(approximation.term_count)
    LOGGER.debug(f"Kraus approximant with {approximation.term_count} terms (K={cfg.K}, K'={cfg.Kp}, q={cfg.q})")
    return approximation


def _kraus_batches(lindbladian: Lindbladian, t: float, cfg: TruncationConfig) -> Iterator[KrausBatch]:
    drift = _drift_operators(effective_generator(lindbladian), cfg.Kp)
    scale = exp(be_norm(lindbladian) * t)
    empty = zeros((1, 0), dtype=int64)
    yield KrausBatch(0, empty, empty, array([1.0]), drift(array([t])), array([scale]))
    if cfg.K == 0 or lindbladian.jump_count == 0:
        return
    walk = _KrausWalk(
        canonical_rule(cfg.q, t),
        cfg.K,
        stack(lindbladian.jumps),
        array(lindbladian.alphas, dtype=float64),
        drift,
        scale,
    )
    dim = lindbladian.dim
    yield from walk.level(
        1,
        eye(dim, dtype=complex128)[newaxis],
        array([t]),
        array([1.0]),
        array([1.0]),
        empty,
        empty,
    )


@frozen
class _KrausWalk:
    rule: QuadratureRule
    depth: int
    jumps: ComplexArray
    alphas: RealArray
    drift: Callable[[RealArray], ComplexArray]
    scale: float

    def level(
        self,
        level: int,
        prefix: ComplexArray,
        x: RealArray,
        w: RealArray,
        alpha: RealArray,
        ells: NDArray[int64],
        js: NDArray[int64],
    ) -> Iterator[KrausBatch]:
        t = self.rule.interval_length
        m, dim = self.jumps.shape[0], self.jumps.shape[1]
        q = self.rule.order
        per_batch = max(1, get_config().limits.chunk_entries // (m * q * dim * dim))
        for start in range(0, len(x), per_batch):
            part = slice(start, start + per_batch)
            px = x[part]
            n = len(px)
            shape = (n, m, q)
            children = px[:, newaxis] * self.rule.nodes[newaxis, :] / t
            weights = w[part, newaxis] * px[:, newaxis] * self.rule.weights[newaxis, :] / t
            steps = self.drift(px[:, newaxis] - children)
            # ordered (parent, ℓ, j)
            child_prefix = matmul(
                matmul(prefix[part, newaxis, newaxis], steps[:, newaxis]), self.jumps[newaxis, :, newaxis]
            )
            matrices = matmul(child_prefix, self.drift(children)[:, newaxis])
            child_x = broadcast_to(children[:, newaxis, :], shape).ravel()
            child_w = broadcast_to(weights[:, newaxis, :], shape).ravel()
            child_alpha = broadcast_to(alpha[part, newaxis, newaxis] * self.alphas[newaxis, :, newaxis], shape).ravel()
            child_ells = self._extend(ells[part], broadcast_to(arange(m)[newaxis, :, newaxis], shape))
            child_js = self._extend(js[part], broadcast_to(arange(q)[newaxis, newaxis, :], shape))
            coefficients = sqrt(child_w)
            yield KrausBatch(
                level,
                child_ells,
                child_js,
                coefficients,
                matrices.reshape(-1, dim, dim),
                coefficients * self.scale * child_alpha,
            )
            if level < self.depth:
                yield from self.level(
                    level + 1,
                    child_prefix.reshape(-1, dim, dim),
                    child_x,
                    child_w,
                    child_alpha,
                    child_ells,
                    child_js,
                )

    @staticmethod
    def _extend(columns: NDArray[int64], new: NDArray[int64]) -> NDArray[int64]:
        n, m, q = new.shape
        old = broadcast_to(columns[:, newaxis, newaxis, :], (n, m, q, columns.shape[1]))
        return concatenate([old, new[..., newaxis]], axis=-1).reshape(n * m * q, -1)


def normalizer_sum_squares(approximation: CPMapApprox) -> float:
    return fsum(float(x) for batch in approximation.batches() for x in batch.normalizers**2)


def normalizer_sum_closed_form(lindbladian: Lindbladian, t: float, K: int, q: int) -> float:
    """e^{2βt}·Σ_k (Σα_j²)^k times the enumerated nested weight total of depth k"""
    total = [1.0]
    if lindbladian.jump_count > 0:
        for k in range(1, K + 1):
            total.append(lindbladian.jump_weight**k * nested_grid(k, q, t).weight_total())
    return exp(2 * be_norm(lindbladian) * t) * fsum(total)


def segment_budget(
    t: float, beta: float, jump_weight: float, convention: WeightConvention = "conservative"
) -> float:
    """Upper bound on Σs_j² for a segment of length t"""
    x = t * jump_weight
    match convention:
        case "conservative":
            tail = x * exp(x)
        case "simplex":
            tail = exp(x) - 1
        case "shifted":
            tail = (exp(x) - 1 - x) / x if x > 0 else 0.0
    return exp(2 * beta * t) * (1 + tail)


def segment_time(lindbladian: Lindbladian, total_time: float | None = None) -> float:
    """Longest segment whose normalizer budget is 2, i.e. success probability at least 1/4"""
    beta = be_norm(lindbladian)
    cap = float("inf") if total_time is None else total_time
    if beta == 0:
        return cap
    return min(budgeted_length(beta, lindbladian.jump_weight), cap)


def budgeted_length(beta: float, jump_weight: float) -> float:
    convention = get_config().budget.weight_convention

    def excess(t: float) -> float:
        return segment_budget(t, beta, jump_weight, convention) - 2

    upper = 1 / beta
    while excess(upper) < 0:
        upper *= 2
    root = float(bisect(excess, 0.0, upper, xtol=SEGMENT_TOLERANCE, maxiter=200))
    while excess(root) > 0:
        root -= SEGMENT_TOLERANCE
    LOGGER.debug(f"Segment length {root} for be-norm {beta} ({convention} budget)")
    return root


def bound_duhamel(K: int, t: float, be: float) -> float:
    return (2 * be * t) ** (K + 1) / factorial(K + 1)


def bound_taylor(Kp: int, t: float, be: float) -> float:
    return 8 * exp(be * t) * (be * t) ** (Kp + 1) / factorial(Kp + 1)


def bound_composite(k: int, Kp: int, t: float, be: float) -> float:
    return 8 * exp(be * t) * be ** (Kp + 1) / factorial(Kp + 1) * (2 * be) ** k * 2**k * t ** (Kp + 1)


def bound_taylor_total(Kp: int, t: float, be: float) -> float:
    return 32 * exp(5 * be * t) * (be * t) ** (Kp + 2) / factorial(Kp + 1)


def bound_quadrature(k: int, q: int, t: float, be: float) -> float:
    if k < 1:
        raise ArgumentError(f"Quadrature bound needs at least one jump, got k={k}")
    constant = get_config().budget.quadrature_constant
    return (
        constant
        * (2 * t) ** (k - 1)
        * 2 ** (k + 1)
        * be**k
        * be ** (2 * q)
        * t ** (2 * q + 1)
        * q
        / (factorial(k - 1) * factorial(2 * q))
    )


def bound_derivative(k: int, kprime: int, be: float, j_norm: float) -> float:
    """Sup of the kprime-th derivative of F_k in any single jump time"""
    return 2 ** (2 * kprime + k) * be**k * j_norm**kprime


def taylor_admissible(Kp: int, t: float, j_norm: float) -> bool:
    """Whether the truncated drift keeps spectral norm at most 2"""
    return factorial(Kp + 1) >= 2 * (j_norm * t) ** (Kp + 1)


def quadrature_total(K: int, q: int, t: float, be: float) -> float:
    return sum(bound_quadrature(k, q, t, be) for k in range(1, K + 1))


def taylor_total(K: int, Kp: int, t: float, be: float) -> float:
    total = bound_taylor(Kp, t, be)
    if K > 0:
        total += bound_taylor_total(Kp, t, be)
    return total


def select_orders(
    beta: float, has_jumps: bool, segment_t: float, eps: float
) -> Result[TruncationConfig, InfeasiblePrecision]:
    if eps <= 0:
        raise ArgumentError(f"Precision must be positive, got {eps}")
    limits = get_config().limits
    budget = eps / 3
    orders = range(limits.max_order + 1)
    K = 0
    if has_jumps:
        K = next((k for k in orders if bound_duhamel(k, segment_t, beta) <= budget), -1)
        if K < 0:
            return Err(InfeasiblePrecision(f"No Duhamel order up to {limits.max_order} reaches {eps}"))
    q = 1
    if K > 0:
        q_cap = min(limits.max_order, limits.max_quadrature_order)
        q = next((x for x in range(1, q_cap + 1) if quadrature_total(K, x, segment_t, beta) <= budget), -1)
        if q < 0:
            return Err(InfeasiblePrecision(f"No quadrature order up to {q_cap} reaches {eps}"))
    Kp = next(
        (
            x
            for x in orders
            if taylor_total(K, x, segment_t, beta) <= budget and taylor_admissible(x, segment_t, beta)
        ),
        -1,
    )
    if Kp < 0:
        return Err(InfeasiblePrecision(f"No Taylor order up to {limits.max_order} reaches {eps}"))
    LOGGER.debug(f"Orders K={K}, K'={Kp}, q={q} for segment {segment_t} at precision {eps}")
    return Ok(TruncationConfig(K, Kp, q, segment_t))


def choose_orders(
    lindbladian: Lindbladian, segment_t: float, eps: float
) -> Result[TruncationConfig, InfeasiblePrecision]:
    return select_orders(be_norm(lindbladian), lindbladian.jump_count > 0, segment_t, eps)


def segment_count(total: float, segment: float) -> int:
    return max(1, ceil(total / segment - 1e-12))


@no_extra
class SimulationReport(BaseModel):
    segments: int
    segment_time: float
    K: int
    Kp: int
    q: int
    kraus_terms: int
    bound_duhamel: float
    bound_quadrature: float
    bound_taylor: float
    normalizer_sum_squares: float
    success_probability: float
    measured_choi_error: float | None = None


@frozen
class Simulation:
    state: OperatorMatrix
    report: SimulationReport


def simulate(
    lindbladian: Lindbladian,
    rho0: OperatorMatrix,
    t: float,
    eps: float,
    verify: bool = False,
) -> Result[Simulation, SimulationError]:
    if t < 0:
        raise ArgumentError(f"Evolution time must be nonnegative, got {t}")
    if eps <= 0:
        raise ArgumentError(f"Precision must be positive, got {eps}")
    validated = validate_density_matrix(rho0, lindbladian.dim)
    if isinstance(validated, Err):
        return validated
    state = validated.ok_value
    if t == 0:
        report = SimulationReport(
            segments=0,
            segment_time=0.0,
            K=0,
            Kp=0,
            q=1,
            kraus_terms=0,
            bound_duhamel=0.0,
            bound_quadrature=0.0,
            bound_taylor=0.0,
            normalizer_sum_squares=0.0,
            success_probability=1.0,
            measured_choi_error=0.0 if verify else None,
        )
        return Ok(Simulation(state, report))
    segments = segment_count(t, segment_time(lindbladian, total_time=t))
    length = t / segments
    orders = choose_orders(lindbladian, length, eps / segments)
    if isinstance(orders, Err):
        return orders
    cfg = evolve(orders.ok_value, num_segments=segments)
    approximation = enumerate_kraus(lindbladian, length, cfg)
    channel = matrix_power(approximation.as_superoperator(get_config().execution.workers), segments)
    beta = be_norm(lindbladian)
    normalizers = normalizer_sum_squares(approximation)
    measured = None
    if verify:
        measured = diamond_sandwich(channel, exact_channel(lindbladian, t)).lower
    report = SimulationReport(
        segments=segments,
        segment_time=length,
        K=cfg.K,
        Kp=cfg.Kp,
        q=cfg.q,
        kraus_terms=approximation.term_count,
        bound_duhamel=bound_duhamel(cfg.K, length, beta),
        bound_quadrature=quadrature_total(cfg.K, cfg.q, length, beta),
        bound_taylor=taylor_total(cfg.K, cfg.Kp, length, beta),
        normalizer_sum_squares=normalizers,
        success_probability=1 / normalizers,
        measured_choi_error=measured,
    )
    LOGGER.info(
        f"Simulated t={t} in {segments} segments with {approximation.term_count} Kraus terms each"
    )
    return Ok(Simulation(apply_superoperator(channel, state), report))
