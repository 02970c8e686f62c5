"""Quantization of a thermal source into k qubits.

Converting a thermal mode keeps the photon number modulo ``2**k``; loading
the qubits back gives the thermal distribution truncated to ``2**k`` levels.
The root fidelity between source and reconstruction is
``sqrt(1 - v**(2**k))`` and the distortion is ``1 - F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import check_alignment
from .errors import TruncationError
from .fock import DensityMatrix, RegisterLayout, cv_mode, make_thermal
from .metrics import uhlmann_fidelity
from .pipeline import single_mode_ad, single_mode_da

MAX_LEAKAGE = 1e-10


@dataclass(frozen=True)
class ThermalRDPoint:
    v: float
    k: int
    fidelity: float
    distortion: float

    def __post_init__(self):
        if abs(self.distortion - (1.0 - self.fidelity)) > 1e-12:
            raise ValueError("distortion must equal 1 - fidelity")


def _check_v(v: float, open_below: bool = False) -> None:
    lo_ok = v > 0 if open_below else v >= 0
    if not (lo_ok and v < 1):
        raise ValueError(f"thermal parameter v must lie in {'(0' if open_below else '[0'}, 1), got {v}")


def thermal_distortion(v: float, k: int) -> ThermalRDPoint:
    """Closed form ``D = 1 - sqrt(1 - v**(2**k))``."""
    _check_v(v)
    if k < 1 or int(k) != k:
        raise ValueError(f"qubit count must be a positive integer, got {k}")
    x = v ** (2**k)
    half_log = 0.5 * math.log1p(-x)
    # expm1 keeps D accurate when v**(2**k) is tiny
    return ThermalRDPoint(v, int(k), math.exp(half_log), -math.expm1(half_log))


class RequiredQubits(NamedTuple):
    k_real: float
    k: int


def required_qubits(v: float, distortion: float) -> RequiredQubits:
    """Qubits needed to reach ``distortion``: ``log2(ln(1 - (1 - D)**2) / ln v)``.

    ``1 - (1 - D)**2`` is evaluated as ``D (2 - D)``.  The integer answer is
    the smallest ``k >= 1`` whose closed-form distortion does not exceed the
    target.
    """
    _check_v(v, open_below=True)
    if not 0.0 < distortion < 1.0:
        raise ValueError(f"distortion must lie in (0, 1), got {distortion}")
    k_real = math.log2(math.log(distortion * (2.0 - distortion)) / math.log(v))
    k = max(1, math.ceil(k_real - 1e-9))
    while thermal_distortion(v, k).distortion > distortion * (1 + 1e-12):
        k += 1
    return RequiredQubits(k_real, k)


def thermal_truncation(v: float, k: int, max_leakage: float = MAX_LEAKAGE) -> int:
    """Smallest multiple of ``2**k`` whose thermal tail ``v**n`` is below ``max_leakage``."""
    _check_v(v)
    block = 2**k
    if v == 0:
        return block
    n = math.floor(math.log(max_leakage) / math.log(v)) + 1
    return max(block, -(-n // block) * block)


def truncated_thermal(v: float, k: int, n_trunc: int, label: str = "A") -> DensityMatrix:
    """Reconstruction predicted for the round trip, embedded in ``n_trunc`` levels."""
    _check_v(v)
    check_alignment(k, n_trunc)
    p = np.zeros(n_trunc)
    levels = np.arange(2**k)
    p[levels] = (1 - v) * v**levels / (1 - v ** (2**k))
    return DensityMatrix(RegisterLayout.of(cv_mode(label, n_trunc)), np.diag(p))


class ThermalRoundTrip(NamedTuple):
    source: DensityMatrix
    qubits: DensityMatrix
    recovered: DensityMatrix
    ground_overlap: float


def thermal_round_trip(
    v: float, k: int, n_trunc: int | None = None, max_leakage: float = MAX_LEAKAGE
) -> ThermalRoundTrip:
    """A/D then D/A of a thermal mode (truncated and renormalized at ``n_trunc``)."""
    _check_v(v)
    n = n_trunc or thermal_truncation(v, k, max_leakage)
    check_alignment(k, n)
    source = make_thermal(v, n)
    if source.leakage >= max_leakage:
        raise TruncationError(
            f"thermal v={v} leaks {source.leakage:.3g} beyond n_trunc={n} (limit {max_leakage:g})"
        )
    qubits = single_mode_ad(source, k)
    back = single_mode_da(qubits, n)
    return ThermalRoundTrip(source, qubits, back.state, back.ground_overlap)


def simulate_rd_point(
    v: float, k: int, n_trunc: int | None = None, max_leakage: float = MAX_LEAKAGE
) -> ThermalRDPoint:
    trip = thermal_round_trip(v, k, n_trunc, max_leakage)
    f = uhlmann_fidelity(trip.source, trip.recovered)
    return ThermalRDPoint(v, k, f, 1.0 - f)


def memoryless_defect(qubits: DensityMatrix) -> float:
    """Total-variation distance between the joint qubit populations and the
    product of their single-qubit marginals."""
    n = len(qubits.layout)
    joint = np.clip(np.diag(qubits.matrix).real, 0.0, None).reshape((2,) * n)
    product = np.ones((2,) * n)
    for axis in range(n):
        marginal = joint.sum(axis=tuple(i for i in range(n) if i != axis))
        shape = [1] * n
        shape[axis] = 2
        product = product * marginal.reshape(shape)
    return float(0.5 * np.abs(joint - product).sum())
