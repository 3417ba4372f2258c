from __future__ import annotations
from typing import Annotated, Any, Optional

from result import Err
from typer import Option

from lindsim.commands.common import emit, fail, to_csv
from lindsim.duhamel import TruncationConfig, enumerate_kraus
from lindsim.modelfile import build_model, load_model_file

HEADER = ["index", "k", "ells", "js", "coefficient", "normalizer"]


def kraus_dump(
    model: Annotated[str, Option(help="Model file path")],
    time: Annotated[float, Option(help="Segment time")],
    k: Annotated[int, Option("--K", help="Duhamel order")] = 2,
    kp: Annotated[int, Option("--Kp", help="Taylor drift order")] = 6,
    q: Annotated[int, Option("--q", help="Quadrature order")] = 2,
    out: Annotated[Optional[str], Option(help="Write the CSV here")] = None,
):
    """List the Kraus terms of one segment with their coefficients and normalizers"""
    model_file = load_model_file(model)
    if isinstance(model_file, Err):
        fail(model_file.err_value, f"reading {model}")
    lindbladian = build_model(model_file.ok_value)
    if isinstance(lindbladian, Err):
        fail(lindbladian.err_value, f"building the model in {model}")
    rows: list[list[Any]] = []
    try:
        approximation = enumerate_kraus(lindbladian.ok_value, time, TruncationConfig(k, kp, q, time))
        for i, term in enumerate(approximation.terms()):
            rows.append(
                [
                    i,
                    term.index.k,
                    ";".join(str(x) for x in term.index.ells),
                    ";".join(str(x) for x in term.index.js),
                    term.coefficient,
                    term.normalizer,
                ]
            )
    except ValueError as e:
        fail(e, "in the arguments")
    emit(to_csv(HEADER, rows), out)
