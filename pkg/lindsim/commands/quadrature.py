from __future__ import annotations
from typing import Annotated, Optional

from typer import Option

from lindsim.commands.common import emit, fail, to_csv
from lindsim.quadrature import canonical_rule, moment_residuals

HEADER = ["q", "t", "ell", "moment_lhs", "moment_rhs", "residual"]


def quadrature(
    q: Annotated[Optional[list[int]], Option(help="Quadrature orders (repeatable)")] = None,
    t: Annotated[Optional[list[float]], Option(help="Interval lengths (repeatable)")] = None,
    out: Annotated[Optional[str], Option(help="Write the CSV here")] = None,
):
    """Tabulate the moment identities of the scaled Gauss-Legendre rules"""
    rows: list[list[float | int]] = []
    try:
        for order in q or [1, 2, 4, 8, 16]:
            for length in t or [0.1, 1.0, 7.0]:
                for row in moment_residuals(canonical_rule(order, length)):
                    rows.append(
                        [row.q, row.t, row.ell, row.moment_lhs, row.moment_rhs, row.residual]
                    )
    except ValueError as e:
        fail(e, "in the arguments")
    emit(to_csv(HEADER, rows), out)
