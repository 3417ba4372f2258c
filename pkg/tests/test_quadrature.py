from __future__ import annotations
from math import ceil, exp, factorial, isclose, sqrt

from pytest import raises

from lindsim.quadrature import (
    canonical_rule,
    legendre_rule,
    moment_residuals,
    nested_grid,
    nested_weight_sum,
    nested_weight_total,
    quadrature_error_bound,
)
from lindsim.utils import ArgumentError, ResourceLimitError


def test_quadrature_low_orders() -> None:
    nodes, weights = legendre_rule(1)
    assert abs(nodes[0]) <= 1e-15 and abs(weights[0] - 2) <= 1e-15
    nodes, weights = legendre_rule(2)
    assert abs(nodes[0] + 1 / sqrt(3)) <= 1e-15 and abs(nodes[1] - 1 / sqrt(3)) <= 1e-15
    assert abs(weights[0] - 1) <= 1e-14 and abs(weights[1] - 1) <= 1e-14


def test_quadrature_canonical_rule_on_interval() -> None:
    rule = canonical_rule(5, 2.0)
    assert all(0 < x < 2.0 for x in rule.nodes)
    assert list(rule.nodes) == sorted(rule.nodes)
    assert isclose(sum(rule.weights), 2.0, rel_tol=1e-14)


def test_quadrature_moment_identity() -> None:
    for q in range(1, 17):
        for t in (0.1, 1.0, 7.0):
            for row in moment_residuals(canonical_rule(q, t)):
                assert row.ell <= 2 * q - 1
                assert isclose(row.moment_lhs, row.moment_rhs, rel_tol=1e-12)


def test_quadrature_order_limits() -> None:
    for q in (0, 65):
        with raises(ArgumentError):
            _ = legendre_rule(q)
    with raises(ArgumentError):
        _ = canonical_rule(3, 0.0)


def test_quadrature_nested_weight_total() -> None:
    for k in range(1, 7):
        for t in (0.3, 1.0, 2.5):
            q = max(1, ceil(k / 2))
            assert isclose(nested_weight_sum(k, q, t), t**k / factorial(k), rel_tol=1e-10)
            assert isclose(nested_weight_sum(k, q + 2, t), t**k / factorial(k), rel_tol=1e-10)


def test_quadrature_nested_weight_sum_needs_exact_rule() -> None:
    with raises(ArgumentError):
        _ = nested_weight_sum(5, 2, 1.0)


def test_quadrature_grid_enumeration() -> None:
    grid = nested_grid(3, 2, 0.7)
    nodes = list(grid)
    assert len(nodes) == len(grid) == 8
    assert [node.indices for node in nodes[:3]] == [(0, 0, 0), (0, 0, 1), (0, 1, 0)]
    assert isclose(sum(node.weight_product for node in nodes), grid.weight_total(), rel_tol=1e-13)
    s = canonical_rule(2, 0.7).nodes
    first = nodes[1]
    assert isclose(first.nodes[0], s[0], rel_tol=1e-14)
    assert isclose(first.nodes[2], s[0] * s[0] * s[1] / 0.7**2, rel_tol=1e-14)
    assert all(a > b for a, b in zip(first.nodes, first.nodes[1:]))


def test_quadrature_term_guardrail() -> None:
    with raises(ResourceLimitError):
        _ = nested_grid(7, 8, 1.0)


def test_quadrature_weight_conventions() -> None:
    t = 0.8
    for k in range(2, 6):
        simplex = nested_weight_total(k, t)
        assert nested_weight_total(k, t, "shifted") < simplex < nested_weight_total(k, t, "conservative")
    assert nested_weight_total(1, t, "conservative") == nested_weight_total(1, t) == t
    assert nested_weight_total(0, t, "conservative") == 1.0


def test_quadrature_error_bound_holds() -> None:
    # ∫_0^t e^s ds with every derivative bounded by e^t
    for q in range(1, 5):
        for t in (0.5, 1.0, 2.0):
            rule = canonical_rule(q, t)
            approximation = sum(w * exp(x) for x, w in zip(rule.nodes, rule.weights))
            error = abs(approximation - (exp(t) - 1))
            assert error <= quadrature_error_bound(q, t, exp(t))
