from __future__ import annotations
from logging import getLogger
from typing import Annotated, Optional

from pydantic import BaseModel
from result import Err
from typer import Option

from lindsim.commands.common import emit, fail
from lindsim.config import get_config
from lindsim.duhamel import SimulationReport
from lindsim.duhamel import simulate as run_simulation
from lindsim.modelfile import MatrixRows, build_model, load_model_file, load_state, matrix_to_rows
from lindsim.utils import ArgumentError, no_extra

LOGGER = getLogger(__name__)


@no_extra
class SimulationOutput(BaseModel):
    report: SimulationReport
    rho: MatrixRows


def verification_allowed(n_qubits: int, verify: bool) -> bool:
    limit = get_config().limits.verify_max_qubits
    if verify and n_qubits > limit:
        LOGGER.warning(f"Skipping verification, {n_qubits} qubits exceed the limit of {limit}")
        return False
    return verify


def simulate(
    model: Annotated[str, Option(help="Model file path")],
    time: Annotated[float, Option(help="Evolution time")],
    eps: Annotated[float, Option(help="Target diamond-norm precision")],
    rho0: Annotated[
        Optional[str], Option(help="Initial state file, |0…0⟩ when omitted")
    ] = None,
    out: Annotated[Optional[str], Option(help="Write the JSON result here")] = None,
    verify: Annotated[
        bool, Option(help="Compare against the exact channel (small models only)")
    ] = False,
):
    """Simulate a Lindbladian with the Duhamel-series channel"""
    model_file = load_model_file(model)
    if isinstance(model_file, Err):
        fail(model_file.err_value, f"reading {model}")
    lindbladian = build_model(model_file.ok_value)
    if isinstance(lindbladian, Err):
        fail(lindbladian.err_value, f"building the model in {model}")
    n_qubits = model_file.ok_value.n_qubits
    state = load_state(rho0, n_qubits)
    if isinstance(state, Err):
        fail(state.err_value, f"reading the initial state {rho0}")
    try:
        result = run_simulation(
            lindbladian.ok_value,
            state.ok_value,
            time,
            eps,
            verify=verification_allowed(n_qubits, verify),
        )
    except ArgumentError as e:
        fail(e, "in the arguments")
    if isinstance(result, Err):
        fail(result.err_value, f"simulating {model}")
    simulation = result.ok_value
    output = SimulationOutput(report=simulation.report, rho=matrix_to_rows(simulation.state))
    emit(output.model_dump_json(indent=2) + "\n", out)
