from __future__ import annotations
from typing import Annotated, Optional

from pydantic import BaseModel
from result import Err
from typer import Option

from lindsim.commands.common import emit, fail
from lindsim.commands.simulate import verification_allowed
from lindsim.modelfile import (
    MatrixRows,
    build_time_dependent,
    load_model_file,
    load_state,
    matrix_to_rows,
)
from lindsim.time_dependent import (
    DysonConfig,
    TimeDependentReport,
    rk4_reference,
    td_simulate as run_simulation,
    trace_distance,
)
from lindsim.utils import no_extra


@no_extra
class TimeDependentOutput(BaseModel):
    report: TimeDependentReport
    rho: MatrixRows


def td_simulate(
    model: Annotated[str, Option(help="Model file path")],
    time: Annotated[float, Option(help="Evolution time")],
    eps: Annotated[float, Option(help="Target precision of the Duhamel part")],
    rho0: Annotated[
        Optional[str], Option(help="Initial state file, |0…0⟩ when omitted")
    ] = None,
    order: Annotated[int, Option(help="Dyson series truncation order")] = 4,
    grid: Annotated[int, Option(help="Dyson midpoint grid points per interval")] = 8,
    out: Annotated[Optional[str], Option(help="Write the JSON result here")] = None,
    verify: Annotated[
        bool, Option(help="Compare against a Runge-Kutta reference (small models only)")
    ] = False,
    reference_step: Annotated[float, Option(help="Runge-Kutta step of the reference")] = 1e-5,
):
    """Simulate a time-dependent Lindbladian with Dyson-series drift propagators"""
    model_file = load_model_file(model)
    if isinstance(model_file, Err):
        fail(model_file.err_value, f"reading {model}")
    lindbladian = build_time_dependent(model_file.ok_value)
    if isinstance(lindbladian, Err):
        fail(lindbladian.err_value, f"building the model in {model}")
    n_qubits = model_file.ok_value.n_qubits
    state = load_state(rho0, n_qubits)
    if isinstance(state, Err):
        fail(state.err_value, f"reading the initial state {rho0}")
    try:
        result = run_simulation(
            lindbladian.ok_value, state.ok_value, time, eps, DysonConfig(order, grid)
        )
    except ValueError as e:
        fail(e, "in the arguments")
    if isinstance(result, Err):
        fail(result.err_value, f"simulating {model}")
    simulation = result.ok_value
    report = simulation.report
    if verification_allowed(n_qubits, verify):
        reference = rk4_reference(
            lindbladian.ok_value, state.ok_value, time, reference_step
        )
        report = report.model_copy(
            update={"reference_error": trace_distance(simulation.state, reference)}
        )
    output = TimeDependentOutput(report=report, rho=matrix_to_rows(simulation.state))
    emit(output.model_dump_json(indent=2) + "\n", out)
