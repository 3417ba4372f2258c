from __future__ import annotations
from functools import reduce
from math import isfinite
from logging import getLogger
from re import compile as compile_regex

from attrs import frozen
from numpy import array, complex128, kron, zeros
from result import Err, Ok, Result

from lindsim.model import OperatorMatrix

LOGGER = getLogger(__name__)

PAULIS = {
    "I": array([[1, 0], [0, 1]], dtype=complex128),
    "X": array([[0, 1], [1, 0]], dtype=complex128),
    "Y": array([[0, -1j], [1j, 0]], dtype=complex128),
    "Z": array([[1, 0], [0, -1]], dtype=complex128),
}
NUMBER = compile_regex(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
LETTERS = compile_regex(r"[A-Za-z]+")


class PauliParseError(Exception):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


@frozen
class PauliSumExpr:
    n_qubits: int
    terms: tuple[tuple[float, str], ...]

    def to_text(self) -> str:
        if not self.terms:
            return f"0*{'I' * self.n_qubits}"
        parts: list[str] = []
        for coefficient, word in self.terms:
            sign = "-" if coefficient < 0 else "+"
            parts.append(f"{sign} {abs(coefficient)!r}*{word}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text


def _skip(text: str, position: int) -> int:
    while position < len(text) and text[position].isspace():
        position += 1
    return position


def parse_pauli_sum(text: str, n: int) -> Result[PauliSumExpr, PauliParseError]:
    """Parse `[sign] [coeff '*'] word (('+'|'-') [coeff '*'] word)*`, merging like terms"""
    position = _skip(text, 0)
    if position == len(text):
        return Err(PauliParseError("Empty expression", position))
    merged: dict[str, float] = {}
    sign = 1.0
    if text[position] in "+-":
        sign = -1.0 if text[position] == "-" else 1.0
        position = _skip(text, position + 1)
    while True:
        coefficient = 1.0
        number = NUMBER.match(text, position)
        if number is not None:
            coefficient = float(number.group(0))
            if not isfinite(coefficient):
                return Err(PauliParseError(f"Coefficient {number.group(0)!r} is not finite", position))
            position = _skip(text, number.end())
            if position == len(text) or text[position] != "*":
                return Err(PauliParseError("Expected '*' after coefficient", position))
            position = _skip(text, position + 1)
        letters = LETTERS.match(text, position)
        if letters is None:
            if position < len(text):
                return Err(PauliParseError(f"Bad character {text[position]!r}", position))
            return Err(PauliParseError("Empty term", position))
        word = letters.group(0)
        for offset, letter in enumerate(word):
            if letter not in PAULIS:
                return Err(PauliParseError(f"Bad character {letter!r}", position + offset))
        if len(word) != n:
            return Err(PauliParseError(f"Word {word!r} has length {len(word)}, expected {n}", position))
        merged[word] = merged.get(word, 0.0) + sign * coefficient
        position = _skip(text, letters.end())
        if position == len(text):
            break
        if text[position] not in "+-":
            return Err(PauliParseError(f"Bad character {text[position]!r}", position))
        sign = -1.0 if text[position] == "-" else 1.0
        position = _skip(text, position + 1)
    terms = tuple((merged[word], word) for word in sorted(merged) if merged[word] != 0)
    LOGGER.debug(f"Parsed {len(terms)} Pauli terms on {n} qubits")
    return Ok(PauliSumExpr(n, terms))


def materialize(expr: PauliSumExpr) -> OperatorMatrix:
    dim = 2**expr.n_qubits
    result = zeros((dim, dim), dtype=complex128)
    for coefficient, word in expr.terms:
        result += coefficient * reduce(kron, (PAULIS[letter] for letter in word))
    return result
