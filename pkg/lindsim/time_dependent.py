from __future__ import annotations
from collections.abc import Callable, Sequence
from logging import getLogger
from math import ceil, exp, factorial

from attrs import field, frozen
from attrs.validators import ge
from numpy import (
    arange,
    array,
    asarray,
    complex128,
    eye,
    float64,
    kron,
    newaxis,
    repeat,
    searchsorted,
    stack,
    zeros,
    zeros_like,
)
from numpy.linalg import norm
from pydantic import BaseModel
from result import Err, Ok, Result

from lindsim.config import get_config
from lindsim.duhamel import (
    InfeasiblePrecision,
    budgeted_length,
    bound_duhamel,
    nested_series_sum,
    quadrature_total,
    segment_count,
    select_orders,
)
from lindsim.model import (
    Lindbladian,
    ModelError,
    OperatorMatrix,
    StateError,
    SuperoperatorMatrix,
    apply_superoperator,
    kraus_superoperator,
    kraus_superoperators,
    validate_density_matrix,
)
from lindsim.metrics import trace_norm
from lindsim.quadrature import canonical_rule
from lindsim.utils import ArgumentError, ComplexArray, RealArray, no_extra

LOGGER = getLogger(__name__)

Sampler = Callable[[float], tuple[OperatorMatrix, Sequence[OperatorMatrix]]]

TimeDependentError = InfeasiblePrecision | StateError | ModelError


@frozen
class TimeDependentLindbladian:
    sampler: Sampler
    dim: int
    jump_count: int
    alpha0: float
    alphas: tuple[float, ...]
    jdot_bound: float

    @property
    def be_bound(self) -> float:
        return self.alpha0 + 0.5 * self.jump_weight

    @property
    def jump_weight(self) -> float:
        return sum(alpha**2 for alpha in self.alphas)

    def sample(self, time: float) -> tuple[OperatorMatrix, tuple[OperatorMatrix, ...]]:
        """Operators at one time, checked against the declared bounds; raises ModelError"""
        tolerances = get_config().tolerances
        h, jumps = self.sampler(time)
        h = asarray(h, dtype=complex128)
        ls = tuple(asarray(jump, dtype=complex128) for jump in jumps)
        if h.shape != (self.dim, self.dim) or len(ls) != self.jump_count:
            raise ModelError(f"Sampler returned inconsistent operators at t={time}")
        if float(abs(h - h.conj().T).max()) > tolerances.hermiticity * max(1.0, float(abs(h).max())):
            raise ModelError(f"Hamiltonian is not Hermitian at t={time}")
        slack = tolerances.norm_slack
        if float(norm(h, 2)) > self.alpha0 * (1 + slack) + slack:
            raise ModelError(f"‖H({time})‖ exceeds the declared bound {self.alpha0}")
        for i, (jump, alpha) in enumerate(zip(ls, self.alphas)):
            if float(norm(jump, 2)) > alpha * (1 + slack) + slack:
                raise ModelError(f"‖L{i + 1}({time})‖ exceeds the declared bound {alpha}")
        return (h + h.conj().T) / 2, ls

    def generator(self, time: float) -> OperatorMatrix:
        h, jumps = self.sample(time)
        j = -1j * h
        for jump in jumps:
            j = j - 0.5 * jump.conj().T @ jump
        return j

    def jump_superoperator(self, time: float) -> SuperoperatorMatrix:
        _, jumps = self.sample(time)
        result = zeros((self.dim**2, self.dim**2), dtype=complex128)
        for jump in jumps:
            result += kraus_superoperator(jump)
        return result

    def liouvillian(self, time: float) -> SuperoperatorMatrix:
        h, jumps = self.sample(time)
        identity = eye(self.dim, dtype=complex128)
        result = -1j * (kron(identity, h) - kron(h.T, identity))
        for jump in jumps:
            damping = jump.conj().T @ jump
            result = result + kraus_superoperator(jump) - 0.5 * (kron(identity, damping) + kron(damping.T, identity))
        return result


def constant(lindbladian: Lindbladian) -> TimeDependentLindbladian:
    return TimeDependentLindbladian(
        lambda _: (lindbladian.hamiltonian, lindbladian.jumps),
        lindbladian.dim,
        lindbladian.jump_count,
        lindbladian.alpha0,
        lindbladian.alphas,
        0.0,
    )


def piecewise_linear(
    times: Sequence[float],
    hamiltonians: Sequence[OperatorMatrix],
    jumps: Sequence[Sequence[OperatorMatrix]],
    jdot_bound: float,
    alpha0: float | None = None,
    alphas: Sequence[float] | None = None,
) -> Result[TimeDependentLindbladian, ModelError]:
    """Linear interpolation between operators tabulated at ascending times, held constant outside"""
    grid = array(times, dtype=float64)
    if len(grid) < 1 or len(hamiltonians) != len(grid) or len(jumps) != len(grid):
        return Err(ModelError("Tabulated model needs one Hamiltonian and one jump list per time"))
    if any(b <= a for a, b in zip(times, times[1:])):
        return Err(ModelError("Tabulation times must be strictly increasing"))
    if jdot_bound < 0:
        return Err(ModelError(f"Derivative bound must be nonnegative, got {jdot_bound}"))
    hs = stack([asarray(h, dtype=complex128) for h in hamiltonians])
    counts = {len(row) for row in jumps}
    if len(counts) != 1:
        return Err(ModelError("Every tabulation time must list the same number of jumps"))
    m = counts.pop()
    dim = hs.shape[1]
    ls = zeros((len(grid), m, dim, dim), dtype=complex128)
    for i, row in enumerate(jumps):
        for j, jump in enumerate(row):
            matrix = asarray(jump, dtype=complex128)
            if matrix.shape != (dim, dim):
                return Err(ModelError(f"Jump {j} at time {times[i]} has shape {matrix.shape}"))
            ls[i, j] = matrix
    # norms are convex along each linear piece, so the nodes carry the maxima
    a0 = max(float(norm(h, 2)) for h in hs) if alpha0 is None else alpha0
    a = (
        tuple(max(float(norm(ls[i, j], 2)) for i in range(len(grid))) for j in range(m))
        if alphas is None
        else tuple(alphas)
    )
    if len(a) != m:
        return Err(ModelError(f"Got {len(a)} normalizing factors for {m} jumps"))

    def sampler(time: float) -> tuple[OperatorMatrix, Sequence[OperatorMatrix]]:
        i = int(searchsorted(grid, time, side="right")) - 1
        if i < 0:
            return hs[0], tuple(ls[0])
        if i >= len(grid) - 1:
            return hs[-1], tuple(ls[-1])
        theta = (time - grid[i]) / (grid[i + 1] - grid[i])
        return (1 - theta) * hs[i] + theta * hs[i + 1], tuple((1 - theta) * ls[i] + theta * ls[i + 1])

    return Ok(TimeDependentLindbladian(sampler, dim, m, a0, a, jdot_bound))


@frozen
class DysonConfig:
    order: int = field(validator=ge(0))
    grid: int = field(validator=ge(1))


def ordered_propagators(
    model: TimeDependentLindbladian, starts: RealArray, ends: RealArray, cfg: DysonConfig
) -> ComplexArray:
    """Batched truncated Dyson sums V(s, t) on midpoint grids of cfg.grid points per interval"""
    if bool((ends < starts).any()):
        raise ArgumentError("Propagator intervals must have start <= end")
    count = len(starts)
    steps = (ends - starts) / cfg.grid
    midpoints = starts[:, newaxis] + (arange(cfg.grid) + 0.5)[newaxis, :] * steps[:, newaxis]
    generators = stack([model.generator(float(time)) for time in midpoints.ravel()]).reshape(
        count, cfg.grid, model.dim, model.dim
    )
    identity = eye(model.dim, dtype=complex128)
    # graded[r] collects the time-ordered products of total degree r
    graded = [array([identity] * count)] + [zeros((count, model.dim, model.dim), dtype=complex128)] * cfg.order
    for i in range(cfg.grid):
        x = steps[:, newaxis, newaxis] * generators[:, i]
        powers = [array([identity] * count)]
        for p in range(1, cfg.order + 1):
            powers.append(powers[-1] @ x / p)
        graded = [sum((powers[p] @ graded[r - p] for p in range(r + 1)), zeros_like(x)) for r in range(cfg.order + 1)]
    return sum(graded[1:], graded[0])


def ordered_propagator(
    model: TimeDependentLindbladian, s: float, t: float, cfg: DysonConfig
) -> OperatorMatrix:
    if s > t:
        raise ArgumentError(f"Propagator needs s <= t, got s={s}, t={t}")
    return ordered_propagators(model, array([s]), array([t]), cfg)[0]


def propagator_error_bound(beta: float, jdot_bound: float, delta: float, cfg: DysonConfig) -> float:
    return (beta * delta) ** (cfg.order + 1) / factorial(cfg.order + 1) * exp(beta * delta) + delta**2 * jdot_bound / cfg.grid


def _segment_channel(
    model: TimeDependentLindbladian, offset: float, length: float, K: int, q: int, cfg: DysonConfig
) -> SuperoperatorMatrix:
    def closing(nodes: RealArray) -> ComplexArray:
        flat = nodes.ravel()
        propagators = ordered_propagators(model, offset + zeros_like(flat), offset + flat, cfg)
        return kraus_superoperators(propagators).reshape(*nodes.shape, model.dim**2, model.dim**2)

    def step(parents: RealArray, children: RealArray) -> ComplexArray:
        n, width = children.shape
        flat = children.ravel()
        propagators = ordered_propagators(model, offset + flat, offset + repeat(parents, width), cfg)
        jumps = stack([model.jump_superoperator(offset + float(time)) for time in flat])
        return (kraus_superoperators(propagators) @ jumps).reshape(n, width, model.dim**2, model.dim**2)

    if K == 0 or model.jump_count == 0:
        return closing(array([length]))[0]
    return nested_series_sum(canonical_rule(q, length), K, step, closing)


@no_extra
class TimeDependentReport(BaseModel):
    segments: int
    segment_time: float
    K: int
    q: int
    dyson_order: int
    grid: int
    bound_duhamel: float
    bound_quadrature: float
    propagator_bound: float
    reference_error: float | None = None


@frozen
class TimeDependentSimulation:
    state: OperatorMatrix
    report: TimeDependentReport


def td_simulate(
    model: TimeDependentLindbladian,
    rho0: OperatorMatrix,
    t: float,
    eps: float,
    cfg: DysonConfig,
) -> Result[TimeDependentSimulation, TimeDependentError]:
    if t < 0:
        raise ArgumentError(f"Evolution time must be nonnegative, got {t}")
    if eps <= 0:
        raise ArgumentError(f"Precision must be positive, got {eps}")
    validated = validate_density_matrix(rho0, model.dim)
    if isinstance(validated, Err):
        return validated
    state = validated.ok_value
    beta = model.be_bound
    if t == 0:
        report = TimeDependentReport(
            segments=0,
            segment_time=0.0,
            K=0,
            q=1,
            dyson_order=cfg.order,
            grid=cfg.grid,
            bound_duhamel=0.0,
            bound_quadrature=0.0,
            propagator_bound=0.0,
        )
        return Ok(TimeDependentSimulation(state, report))
    longest = t if beta == 0 else min(t, budgeted_length(beta, model.jump_weight))
    segments = segment_count(t, longest)
    length = t / segments
    orders = select_orders(beta, model.jump_count > 0, length, eps / segments)
    if isinstance(orders, Err):
        return orders
    K, q = orders.ok_value.K, orders.ok_value.q
    channel = eye(model.dim**2, dtype=complex128)
    try:
        for i in range(segments):
            LOGGER.debug(f"Segment {i + 1}/{segments} starting at {i * length}")
            channel = _segment_channel(model, i * length, length, K, q, cfg) @ channel
    except ModelError as e:
        return Err(e)
    report = TimeDependentReport(
        segments=segments,
        segment_time=length,
        K=K,
        q=q,
        dyson_order=cfg.order,
        grid=cfg.grid,
        bound_duhamel=bound_duhamel(K, length, beta),
        bound_quadrature=quadrature_total(K, q, length, beta),
        propagator_bound=propagator_error_bound(beta, model.jdot_bound, length, cfg),
    )
    LOGGER.info(f"Simulated time-dependent model to t={t} in {segments} segments (K={K}, q={q})")
    return Ok(TimeDependentSimulation(apply_superoperator(channel, state), report))


def rk4(
    f: Callable[[float, ComplexArray], ComplexArray],
    y0: ComplexArray,
    t0: float,
    t1: float,
    step: float,
) -> ComplexArray:
    """Classical fourth-order Runge–Kutta with the largest uniform step not above `step`"""
    count = max(1, ceil((t1 - t0) / step - 1e-12))
    h = (t1 - t0) / count
    y = y0
    for i in range(count):
        t = t0 + i * h
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def rk4_propagator(model: TimeDependentLindbladian, s: float, t: float, step: float = 1e-5) -> OperatorMatrix:
    identity = eye(model.dim, dtype=complex128)
    return rk4(lambda time, v: model.generator(time) @ v, identity, s, t, step)


def rk4_reference(
    model: TimeDependentLindbladian, rho0: OperatorMatrix, t: float, step: float = 1e-5
) -> OperatorMatrix:
    vector = asarray(rho0, dtype=complex128).reshape(-1, order="F")
    result = rk4(lambda time, v: model.liouvillian(time) @ v, vector, 0.0, t, step)
    return result.reshape(model.dim, model.dim, order="F")


def trace_distance(a: OperatorMatrix, b: OperatorMatrix) -> float:
    return 0.5 * trace_norm(a - b)

