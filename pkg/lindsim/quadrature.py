from __future__ import annotations
from collections.abc import Iterator
from itertools import product
from logging import getLogger
from math import ceil, factorial, fsum

from attrs import frozen
from numpy import abs as absolute, arange, argsort, cos, ones_like, pi, array, float64

from lindsim.config import WeightConvention, get_config
from lindsim.utils import ArgumentError, RealArray, ResourceLimitError

LOGGER = getLogger(__name__)

NEWTON_TOLERANCE = 1e-15
MAX_NEWTON_ITERATIONS = 100


def _legendre_with_derivative(q: int, x: RealArray) -> tuple[RealArray, RealArray]:
    previous = ones_like(x)
    current = x.copy()
    for n in range(1, q):
        previous, current = current, ((2 * n + 1) * x * current - n * previous) / (n + 1)
    derivative = q * (x * current - previous) / (x**2 - 1)
    return current, derivative


def legendre_rule(q: int) -> tuple[RealArray, RealArray]:
    """Gauss–Legendre nodes and weights on [-1, 1], nodes ascending"""
    if not 1 <= q <= get_config().limits.max_quadrature_order:
        raise ArgumentError(f"Quadrature order must be in [1, {get_config().limits.max_quadrature_order}], got {q}")
    x = cos(pi * (arange(1, q + 1) - 0.25) / (q + 0.5))
    for iteration in range(MAX_NEWTON_ITERATIONS):
        value, derivative = _legendre_with_derivative(q, x)
        step = value / derivative
        x = x - step
        if float(absolute(step).max()) <= NEWTON_TOLERANCE:
            LOGGER.debug(f"Legendre roots of order {q} converged in {iteration + 1} iterations")
            break
    else:
        LOGGER.warning(f"Legendre roots of order {q} did not reach {NEWTON_TOLERANCE}")
    _, derivative = _legendre_with_derivative(q, x)
    weights = 2 / ((1 - x**2) * derivative**2)
    order = argsort(x)
    return x[order], weights[order]


@frozen
class QuadratureRule:
    order: int
    interval_length: float
    nodes: RealArray
    weights: RealArray

    def moment(self, ell: int) -> float:
        return fsum((self.weights * self.nodes**ell).tolist())


def canonical_rule(q: int, t: float) -> QuadratureRule:
    if t <= 0:
        raise ArgumentError(f"Interval length must be positive, got {t}")
    x, v = legendre_rule(q)
    return QuadratureRule(q, t, t * (x + 1) / 2, t * v / 2)


@frozen
class MomentRow:
    q: int
    t: float
    ell: int
    moment_lhs: float
    moment_rhs: float
    residual: float


def moment_residuals(rule: QuadratureRule) -> list[MomentRow]:
    """Rows of Σw ŝ^ℓ against t^{ℓ+1}/(ℓ+1) for every exactly integrated degree"""
    t = rule.interval_length
    rows: list[MomentRow] = []
    for ell in range(2 * rule.order):
        lhs = rule.moment(ell)
        rhs = t ** (ell + 1) / (ell + 1)
        rows.append(MomentRow(rule.order, t, ell, lhs, rhs, abs(lhs - rhs)))
    return rows


@frozen
class NestedNode:
    """One tuple (j_k, …, j_1) with its nodes x̂ and weights ŵ, outermost level first"""

    indices: tuple[int, ...]
    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def weight_product(self) -> float:
        result = 1.0
        for weight in self.weights:
            result *= weight
        return result


@frozen
class NestedGrid:
    rule: QuadratureRule
    depth: int

    def __len__(self) -> int:
        return self.rule.order**self.depth

    def __iter__(self) -> Iterator[NestedNode]:
        t = self.rule.interval_length
        s = self.rule.nodes.tolist()
        w = self.rule.weights.tolist()
        for indices in product(range(self.rule.order), repeat=self.depth):
            x = t
            nodes: list[float] = []
            weights: list[float] = []
            for j in indices:
                weights.append(x * w[j] / t)
                x = x * s[j] / t
                nodes.append(x)
            yield NestedNode(indices, tuple(nodes), tuple(weights))

    def weight_total(self) -> float:
        """Σ over tuples of the ŵ-products, enumerated level by level"""
        t = self.rule.interval_length
        x = array([t], dtype=float64)
        w = array([1.0], dtype=float64)
        for _ in range(self.depth):
            w = (w[:, None] * x[:, None] * self.rule.weights[None, :] / t).ravel()
            x = (x[:, None] * self.rule.nodes[None, :] / t).ravel()
        return fsum(w.tolist())


def check_term_count(count: int) -> None:
    limit = get_config().limits.max_terms
    if count > limit:
        raise ResourceLimitError(f"{count} terms exceed the limit of {limit}")


def nested_grid(k: int, q: int, t: float) -> NestedGrid:
    if k < 1:
        raise ArgumentError(f"Grid depth must be positive, got {k}")
    check_term_count(q**k)
    return NestedGrid(canonical_rule(q, t), k)


def nested_weight_sum(k: int, q: int, t: float) -> float:
    if q < ceil(k / 2):
        raise ArgumentError(f"Order {q} does not integrate depth {k} exactly, need q >= {ceil(k / 2)}")
    return nested_grid(k, q, t).weight_total()


def nested_weight_total(k: int, t: float, convention: WeightConvention = "simplex") -> float:
    """Closed forms for the nested weight sum

    "simplex" is the simplex volume t^k/k!, "shifted" the tighter t^k/(k+1)!
    and "conservative" the looser t^k/(k-1)!.
    """
    if k == 0:
        return 1.0
    match convention:
        case "simplex":
            return t**k / factorial(k)
        case "shifted":
            return t**k / factorial(k + 1)
        case "conservative":
            return t**k / factorial(k - 1)


def quadrature_error_bound(q: int, t: float, f2q_bound: float) -> float:
    if q < 1:
        raise ArgumentError(f"Quadrature order must be positive, got {q}")
    return f2q_bound * t ** (2 * q + 1) * q / (factorial(2 * q) * 2 ** (4 * q - 1))
