from __future__ import annotations
from csv import writer
from io import StringIO
from logging import getLogger
from sys import stderr
from typing import Any, NoReturn

from pydantic import ValidationError
from termcolor import cprint

from lindsim.duhamel import InfeasiblePrecision

LOGGER = getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def fail(error: Exception, context: str) -> NoReturn:
    """Print the error on standard error and exit with its code"""
    cprint(f"Error {context}", "light_red", file=stderr)
    if isinstance(error, ValidationError):
        for detail in error.errors(include_url=False):
            cprint(
                f"{detail['msg']}: {'.'.join(str(c) for c in detail['loc'])}",
                "light_red",
                file=stderr,
            )
    else:
        cprint(str(error), "light_red", file=stderr)
    exit(EXIT_INFEASIBLE if isinstance(error, InfeasiblePrecision) else EXIT_VALIDATION)


def emit(text: str, out: str | None) -> None:
    if out is None:
        print(text, end="")
        return
    with open(out, "w", newline="") as f:
        _ = f.write(text)
    cprint(f"Wrote {out}", "light_green", file=stderr)


def to_csv(header: list[str], rows: list[list[Any]]) -> str:
    buffer = StringIO()
    csv = writer(buffer, lineterminator="\n")
    csv.writerow(header)
    csv.writerows(rows)
    return buffer.getvalue()
