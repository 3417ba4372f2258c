from __future__ import annotations

from numpy import array, complex128, diag, zeros
from numpy.linalg import norm
from numpy.random import Generator
from result import Err

from lindsim.pauli import PAULIS, PauliParseError, PauliSumExpr, materialize, parse_pauli_sum


def parse_error(text: str, n: int) -> PauliParseError:
    result = parse_pauli_sum(text, n)
    assert isinstance(result, Err)
    return result.err_value


def entry(word: str, row: int, column: int) -> complex:
    value = 1 + 0j
    for i, letter in enumerate(word):
        shift = len(word) - 1 - i
        value *= PAULIS[letter][(row >> shift) & 1, (column >> shift) & 1]
    return value


def test_pauli_parse_terms() -> None:
    expr = parse_pauli_sum("0.5*XX + 1.0*ZI", 2).unwrap()
    assert expr == PauliSumExpr(2, ((0.5, "XX"), (1.0, "ZI")))


def test_pauli_parse_signs_and_implicit_coefficients() -> None:
    expr = parse_pauli_sum(" -Z + 2e-1 * X - .5*Y ", 1).unwrap()
    assert expr.terms == ((0.2, "X"), (-0.5, "Y"), (-1.0, "Z"))


def test_pauli_like_terms_cancel() -> None:
    expr = parse_pauli_sum("XX - XX", 2).unwrap()
    assert expr.terms == ()
    assert norm(materialize(expr)) == 0
    merged = parse_pauli_sum("XY + 2*XY", 2).unwrap()
    assert merged.terms == ((3.0, "XY"),)


def test_pauli_word_length() -> None:
    error = parse_error("1.5*XYZ", 2)
    assert error.position == 4
    assert "position 4" in str(error)


def test_pauli_syntax_errors() -> None:
    assert parse_error("   ", 2).position == 3
    assert parse_error("0.5*XA", 2).position == 5
    assert parse_error("XX + ", 2).position == 5
    assert parse_error("2 XX", 2).position == 2
    assert parse_error("XX * YY", 2).position == 3


def test_pauli_materialize_diagonal() -> None:
    z = materialize(parse_pauli_sum("ZI", 2).unwrap())
    assert norm(z - diag([1, 1, -1, -1])) == 0


def test_pauli_materialize_first_qubit_is_leftmost() -> None:
    operator = materialize(parse_pauli_sum("XI + IX", 2).unwrap())
    ket = array([1, 0, 0, 0], dtype=complex128)
    assert norm(operator @ ket - array([0, 1, 1, 0])) == 0


def test_pauli_materialize_matches_entries(rng: Generator) -> None:
    n = 3
    words = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(6)]
    coefficients = [round(float(x), 3) for x in rng.uniform(-2, 2, len(words))]
    text = " + ".join(f"{c}*{w}" for c, w in zip(coefficients, words)).replace("+ -", "- ")
    operator = materialize(parse_pauli_sum(text, n).unwrap())
    expected = zeros((2**n, 2**n), dtype=complex128)
    for row in range(2**n):
        for column in range(2**n):
            expected[row, column] = sum(c * entry(w, row, column) for c, w in zip(coefficients, words))
    assert norm(operator - expected) <= 1e-12


def test_pauli_text_reparses() -> None:
    expr = parse_pauli_sum("-0.25*ZX + 3*IY - 0.125*XX", 2).unwrap()
    assert parse_pauli_sum(expr.to_text(), 2).unwrap() == expr
    empty = PauliSumExpr(2, ())
    assert empty.to_text() == "0*II"
    assert parse_pauli_sum(empty.to_text(), 2).unwrap() == empty


def test_pauli_unexpected_character() -> None:
    error = parse_error("#", 1)
    assert error.position == 0
    assert "'#'" in str(error)
    assert parse_error("0.5*#X", 1).position == 4
    assert "Empty term" in str(parse_error("X -", 1))


def test_pauli_coefficient_must_be_finite() -> None:
    error = parse_error("1e999*X", 1)
    assert error.position == 0
    assert "not finite" in str(error)
    assert parse_error("Z + 1e400*X", 1).position == 4
