from __future__ import annotations
from itertools import product
from logging import getLogger
from pathlib import Path
from time import perf_counter
from typing import Annotated, Any, Optional

from result import Err
from typer import Option

from lindsim.commands.common import emit, fail, to_csv
from lindsim.config import get_config
from lindsim.duhamel import (
    TruncationConfig,
    bound_duhamel,
    enumerate_kraus,
    quadrature_total,
    taylor_total,
)
from lindsim.metrics import diamond_sandwich
from lindsim.model import Lindbladian, be_norm, exact_channel
from lindsim.modelfile import build_model, load_model_file
from lindsim.utils import ordered_map

LOGGER = getLogger(__name__)

HEADER = [
    "model",
    "t",
    "K",
    "Kp",
    "q",
    "bound_duhamel",
    "bound_quadrature",
    "bound_taylor",
    "choi_lower",
    "choi_upper",
    "runtime_ms",
]


def sweep_row(
    name: str, lindbladian: Lindbladian, t: float, orders: tuple[int, int, int], timing: bool
) -> list[Any]:
    K, Kp, q = orders
    start = perf_counter()
    approximation = enumerate_kraus(lindbladian, t, TruncationConfig(K, Kp, q, t))
    bounds = diamond_sandwich(approximation.as_superoperator(), exact_channel(lindbladian, t))
    elapsed = (perf_counter() - start) * 1000 if timing else 0.0
    beta = be_norm(lindbladian)
    LOGGER.debug(f"K={K} Kp={Kp} q={q}: Choi lower bound {bounds.lower:.3e}")
    return [
        name,
        t,
        K,
        Kp,
        q,
        bound_duhamel(K, t, beta),
        quadrature_total(K, q, t, beta),
        taylor_total(K, Kp, t, beta),
        bounds.lower,
        bounds.upper,
        round(elapsed, 3),
    ]


def analyze_error(
    model: Annotated[str, Option(help="Model file path")],
    time: Annotated[float, Option(help="Segment time to analyze")],
    k: Annotated[
        Optional[list[int]], Option("--K", help="Duhamel orders to sweep (repeatable)")
    ] = None,
    kp: Annotated[
        Optional[list[int]], Option("--Kp", help="Taylor drift orders to sweep (repeatable)")
    ] = None,
    q: Annotated[
        Optional[list[int]], Option("--q", help="Quadrature orders to sweep (repeatable)")
    ] = None,
    workers: Annotated[
        Optional[int], Option(help="Sweep points computed in parallel")
    ] = None,
    timing: Annotated[bool, Option(help="Fill the runtime_ms column")] = False,
    out: Annotated[Optional[str], Option(help="Write the CSV here")] = None,
):
    """Sweep truncation orders and compare each bound with the measured channel error"""
    model_file = load_model_file(model)
    if isinstance(model_file, Err):
        fail(model_file.err_value, f"reading {model}")
    lindbladian = build_model(model_file.ok_value)
    if isinstance(lindbladian, Err):
        fail(lindbladian.err_value, f"building the model in {model}")
    if time <= 0:
        fail(ValueError(f"Segment time must be positive, got {time}"), "in the arguments")
    limit = get_config().limits.verify_max_qubits
    if model_file.ok_value.n_qubits > limit:
        fail(ValueError(f"Error analysis is limited to {limit} qubits"), "in the arguments")
    name = Path(model).stem
    points = sorted(product(k or [1, 2, 3], kp or [4, 8], q or [2, 4]))
    pool = workers if workers is not None else get_config().execution.workers
    try:
        rows = list(
            ordered_map(
                lambda orders: sweep_row(name, lindbladian.ok_value, time, orders, timing),
                points,
                pool,
            )
        )
    except ValueError as e:
        fail(e, "in the sweep")
    emit(to_csv(HEADER, rows), out)
