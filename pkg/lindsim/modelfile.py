from __future__ import annotations
from logging import getLogger

from numpy import array, complex128, zeros
from pydantic import BaseModel, Field, ValidationError, model_validator
from result import Err, Ok, Result
from toml import TomlDecodeError, dumps, loads

from lindsim.model import Lindbladian, ModelError, OperatorMatrix, build_lindbladian
from lindsim.pauli import PauliParseError, materialize, parse_pauli_sum
from lindsim.time_dependent import TimeDependentLindbladian, constant, piecewise_linear
from lindsim.utils import no_extra

LOGGER = getLogger(__name__)

MAX_QUBITS = 6

Complex = tuple[float, float]
MatrixRows = list[list[Complex]]

FileError = OSError | TomlDecodeError | ValidationError
BuildError = ModelError | PauliParseError


@no_extra
class OperatorSpec(BaseModel):
    """A dense matrix of [re, im] pairs or a Pauli sum, exactly one of them"""

    matrix: MatrixRows | None = None
    pauli: str | None = None

    @model_validator(mode="after")
    def exactly_one(self) -> OperatorSpec:
        if (self.matrix is None) == (self.pauli is None):
            raise ValueError("Operator needs exactly one of 'matrix' or 'pauli'")
        return self


@no_extra
class Sample(BaseModel):
    time: float
    hamiltonian: OperatorSpec
    jumps: list[OperatorSpec] = []


@no_extra
class TimeDependence(BaseModel):
    jdot_bound: float = Field(ge=0)
    samples: list[Sample] = Field(min_length=1)


@no_extra
class ModelFile(BaseModel):
    n_qubits: int = Field(ge=1, le=MAX_QUBITS)
    hamiltonian: OperatorSpec
    jumps: list[OperatorSpec] = []
    alpha0: float | None = Field(default=None, ge=0)
    alphas: list[float] | None = None
    time_dependence: TimeDependence | None = None


@no_extra
class StateFile(BaseModel):
    rho: MatrixRows


def parse_model_file(text: str) -> Result[ModelFile, TomlDecodeError | ValidationError]:
    try:
        raw = loads(text)
    except TomlDecodeError as e:
        return Err(e)
    try:
        return Ok(ModelFile.model_validate(raw))
    except ValidationError as e:
        return Err(e)


def load_model_file(path: str) -> Result[ModelFile, FileError]:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        return Err(e)
    LOGGER.debug(f"Loading model file {path}")
    return parse_model_file(text)


def dump_model_file(model_file: ModelFile) -> str:
    return dumps(model_file.model_dump(mode="json", exclude_none=True))


def matrix_from_rows(rows: MatrixRows) -> OperatorMatrix:
    return array([[complex(re, im) for re, im in row] for row in rows], dtype=complex128)


def matrix_to_rows(matrix: OperatorMatrix) -> MatrixRows:
    return [[(float(entry.real), float(entry.imag)) for entry in row] for row in matrix]


def operator_matrix(spec: OperatorSpec, n_qubits: int) -> Result[OperatorMatrix, BuildError]:
    dim = 2**n_qubits
    if spec.pauli is not None:
        parsed = parse_pauli_sum(spec.pauli, n_qubits)
        if isinstance(parsed, Err):
            return parsed
        return Ok(materialize(parsed.ok_value))
    assert spec.matrix is not None
    if len(spec.matrix) != dim or any(len(row) != dim for row in spec.matrix):
        return Err(ModelError(f"Matrix is not {dim}x{dim} as required by {n_qubits} qubits"))
    return Ok(matrix_from_rows(spec.matrix))


def _operators(
    specs: list[OperatorSpec], n_qubits: int
) -> Result[list[OperatorMatrix], BuildError]:
    matrices: list[OperatorMatrix] = []
    for spec in specs:
        matrix = operator_matrix(spec, n_qubits)
        if isinstance(matrix, Err):
            return matrix
        matrices.append(matrix.ok_value)
    return Ok(matrices)


def build_model(model_file: ModelFile) -> Result[Lindbladian, BuildError]:
    hamiltonian = operator_matrix(model_file.hamiltonian, model_file.n_qubits)
    if isinstance(hamiltonian, Err):
        return hamiltonian
    jumps = _operators(model_file.jumps, model_file.n_qubits)
    if isinstance(jumps, Err):
        return jumps
    return build_lindbladian(hamiltonian.ok_value, jumps.ok_value, model_file.alpha0, model_file.alphas)


def build_time_dependent(model_file: ModelFile) -> Result[TimeDependentLindbladian, BuildError]:
    """The tabulated model when the file declares time dependence, the constant model otherwise"""
    static = build_model(model_file)
    if isinstance(static, Err):
        return static
    if model_file.time_dependence is None:
        return Ok(constant(static.ok_value))
    times: list[float] = []
    hamiltonians: list[OperatorMatrix] = []
    jumps: list[list[OperatorMatrix]] = []
    for sample in model_file.time_dependence.samples:
        hamiltonian = operator_matrix(sample.hamiltonian, model_file.n_qubits)
        if isinstance(hamiltonian, Err):
            return hamiltonian
        sample_jumps = _operators(sample.jumps, model_file.n_qubits)
        if isinstance(sample_jumps, Err):
            return sample_jumps
        times.append(sample.time)
        hamiltonians.append(hamiltonian.ok_value)
        jumps.append(sample_jumps.ok_value)
    return piecewise_linear(
        times,
        hamiltonians,
        jumps,
        model_file.time_dependence.jdot_bound,
        model_file.alpha0,
        model_file.alphas,
    )


def ground_state(n_qubits: int) -> OperatorMatrix:
    dim = 2**n_qubits
    rho = zeros((dim, dim), dtype=complex128)
    rho[0, 0] = 1
    return rho


def load_state(path: str | None, n_qubits: int) -> Result[OperatorMatrix, FileError | ModelError]:
    """Read `rho` from a TOML state file, |0…0⟩⟨0…0| when no file is given"""
    if path is None:
        return Ok(ground_state(n_qubits))
    try:
        with open(path) as f:
            raw = loads(f.read())
    except (OSError, TomlDecodeError) as e:
        return Err(e)
    try:
        state = StateFile.model_validate(raw)
    except ValidationError as e:
        return Err(e)
    dim = 2**n_qubits
    if len(state.rho) != dim or any(len(row) != dim for row in state.rho):
        return Err(ModelError(f"State is not {dim}x{dim} as required by {n_qubits} qubits"))
    return Ok(matrix_from_rows(state.rho))
