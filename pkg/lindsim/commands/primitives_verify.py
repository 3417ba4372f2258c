from __future__ import annotations
from logging import getLogger
from sys import stderr
from typing import Annotated, Optional

from numpy import array, complex128, eye, sqrt, zeros
from numpy.linalg import norm
from numpy.random import default_rng
from pydantic import BaseModel, TypeAdapter
from termcolor import cprint
from typer import Option

from lindsim.commands.common import emit
from lindsim.config import get_config
from lindsim.duhamel import TruncationConfig, enumerate_kraus, segment_time, taylor_drift
from lindsim.model import random_lindbladian
from lindsim.primitives import (
    channel_projectors,
    dilate,
    dilute,
    index_qubits,
    kraus_encodings,
    lcu_channel,
    lcu_channel_unitary,
    lcu_sum,
    mu_coefficients,
    oaa_step,
    taylor_drift_encoding,
)
from lindsim.utils import no_extra

LOGGER = getLogger(__name__)

DAMPING_RATE = 0.5


@no_extra
class Check(BaseModel):
    passed: bool
    value: float
    threshold: float


def check(value: float, threshold: float) -> Check:
    return Check(passed=value <= threshold, value=value, threshold=threshold)


def at_least(value: float, threshold: float) -> Check:
    return Check(passed=value >= threshold, value=value, threshold=threshold)


def primitive_checks(seed: int) -> dict[str, Check]:
    """Measure every primitive identity on seeded random operators"""
    rng = default_rng(seed)
    dim = 4
    operators = [
        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        for _ in range(3)
    ]
    encodings = [dilate(a, 1.5 * float(norm(a, 2))) for a in operators]
    checks: dict[str, Check] = {}

    unitary = encodings[0].unitary
    checks["dilation_unitarity"] = check(
        float(norm(unitary.conj().T @ unitary - eye(len(unitary)), 2)), 1e-10
    )
    checks["dilation_extraction"] = check(
        max(e.extraction_residual for e in encodings), 1e-10
    )
    summed = lcu_sum(encodings, [0.3, 0.5, 0.2])
    checks["lcu_sum_extraction"] = check(summed.extraction_residual, 1e-10)

    lindbladian = random_lindbladian(rng, 2, 1)
    drift = taylor_drift_encoding(lindbladian, 0.2, 6)
    checks["taylor_drift_encoding"] = check(
        float(norm(drift.alpha * drift.top_left - taylor_drift(lindbladian, 0.2, 6), 2)),
        1e-10,
    )

    approximation = enumerate_kraus(lindbladian, 0.2, TruncationConfig(2, 6, 2, 0.2))
    mu = mu_coefficients(approximation)
    checks["mu_normalization"] = check(abs(float(norm(mu.amplitudes)) - 1), 1e-12)
    checks["mu_factorization"] = check(
        max(
            abs(mu.factors.amplitude(index) - amplitude * mu.norm)
            for index, amplitude in zip(mu.indices, mu.amplitudes)
        )
        / mu.norm,
        1e-10,
    )
    psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    psi /= norm(psi)
    channel = lcu_channel(kraus_encodings(approximation), psi).unwrap()
    checks["lcu_channel_residual"] = check(channel.residual, channel.residual_bound + 1e-10)

    length = segment_time(lindbladian)
    segment = enumerate_kraus(lindbladian, length, TruncationConfig(2, 6, 2, length))
    amplitude = lcu_channel(kraus_encodings(segment), psi).unwrap().success_amplitude
    checks["segment_success_probability"] = at_least(amplitude**2, 0.25)

    # exact amplitude damping is trace preserving, so the diluted amplitude is exactly 1/2
    kraus = [
        array([[1, 0], [0, sqrt(1 - DAMPING_RATE)]], dtype=complex128),
        array([[0, sqrt(DAMPING_RATE)], [0, 0]], dtype=complex128),
    ]
    damping = [dilate(a, float(norm(a, 2))) for a in kraus]
    w = lcu_channel_unitary(damping)
    amplitude = lcu_channel(damping, psi).unwrap().success_amplitude
    diluted = dilute(amplitude, w).unitary
    assert diluted is not None
    p0, p1 = channel_projectors(1, index_qubits(len(damping)), 2, extra_qubits=1)
    psi_hat = zeros(len(diluted), dtype=complex128)
    psi_hat[: len(psi)] = psi
    good = p0 @ diluted @ psi_hat
    checks["dilution_amplitude"] = check(abs(float(norm(good)) - 0.5), 1e-12)
    amplified = oaa_step(diluted, p0, p1, psi_hat).unwrap()
    checks["oaa_identity"] = check(float(norm(amplified - 2 * good)), 1e-10)
    return checks



def primitives_verify(
    seed: Annotated[
        Optional[int], Option(help="Seed of the random operators, config value when omitted")
    ] = None,
    out: Annotated[Optional[str], Option(help="Write the JSON result here")] = None,
):
    """Check the block-encoding, LCU and amplification identities numerically"""
    checks = primitive_checks(get_config().execution.seed if seed is None else seed)
    emit(TypeAdapter(dict[str, Check]).dump_json(checks, indent=2).decode() + "\n", out)
    failed = [name for name, result in checks.items() if not result.passed]
    if failed:
        cprint(f"Failed checks: {', '.join(failed)}", "light_red", file=stderr)
        exit(1)
    cprint(f"All {len(checks)} checks passed", "light_green", file=stderr)
