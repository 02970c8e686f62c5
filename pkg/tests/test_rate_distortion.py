import math

import numpy as np
import pytest

from entadc.errors import AlignmentError, TruncationError
from entadc.fock import make_thermal
from entadc.metrics import uhlmann_fidelity
from entadc.rate_distortion import (
    ThermalRDPoint,
    memoryless_defect,
    required_qubits,
    simulate_rd_point,
    thermal_distortion,
    thermal_round_trip,
    thermal_truncation,
    truncated_thermal,
)

# 40-digit mpmath evaluations of 1 - sqrt(1 - v**(2**k)) and of its root in k
D_ORACLE = {
    (0.5, 3): 0.001955036083043000058,
    (0.9, 1): 0.5641101056459326448,
    (0.5, 2): 0.03175416344814577871,
    (0.3, 5): 9.265100944259205043e-18,
}
K_REAL_09_001 = 5.216356004154535563


@pytest.mark.parametrize("v,k", sorted(D_ORACLE))
def test_distortion_closed_form(v, k):
    point = thermal_distortion(v, k)
    assert point.distortion == pytest.approx(D_ORACLE[(v, k)], rel=1e-12)
    assert point.fidelity + point.distortion == pytest.approx(1.0, abs=1e-15)


def test_vacuum_source_is_lossless():
    point = thermal_distortion(0.0, 1)
    assert point.fidelity == 1.0 and point.distortion == 0.0


@pytest.mark.parametrize("v", [0.1, 0.5, 0.9, 0.99])
def test_distortion_decreases_with_qubits(v):
    ds = [thermal_distortion(v, k).distortion for k in range(1, 8)]
    assert all(b <= a for a, b in zip(ds, ds[1:]))


@pytest.mark.parametrize("k", [1, 2, 4])
def test_distortion_increases_with_temperature(k):
    ds = [thermal_distortion(v, k).distortion for v in np.linspace(0.05, 0.95, 19)]
    assert all(b > a for a, b in zip(ds, ds[1:]))


@pytest.mark.parametrize("v,k", [(-0.1, 1), (1.0, 1), (0.5, 0), (0.5, 1.5)])
def test_distortion_domain(v, k):
    with pytest.raises(ValueError):
        thermal_distortion(v, k)


def test_point_validates_consistency():
    with pytest.raises(ValueError):
        ThermalRDPoint(0.5, 1, 0.9, 0.2)


def test_required_qubits_example():
    req = required_qubits(0.9, 0.01)
    assert req.k_real == pytest.approx(K_REAL_09_001, abs=1e-12)
    assert req.k == 6
    assert thermal_distortion(0.9, 6).distortion <= 0.01 < thermal_distortion(0.9, 5).distortion


@pytest.mark.parametrize("v", [0.2, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_required_qubits_inverts_distortion(v, k):
    req = required_qubits(v, thermal_distortion(v, k).distortion)
    assert req.k_real == pytest.approx(k, abs=1e-12)
    assert req.k == k


def test_required_qubits_at_least_one():
    assert required_qubits(0.1, 0.9).k == 1


@pytest.mark.parametrize("v,d", [(0.0, 0.1), (1.0, 0.1), (0.5, 0.0), (0.5, 1.0)])
def test_required_qubits_domain(v, d):
    with pytest.raises(ValueError):
        required_qubits(v, d)


def test_truncation_choice():
    n = thermal_truncation(0.8, 3)
    assert n % 8 == 0
    assert 0.8**n < 1e-10
    assert 0.8 ** (n - 8) >= 1e-10
    assert thermal_truncation(0.0, 2) == 4


def test_truncated_thermal_normalized():
    rho = truncated_thermal(0.5, 3, 16)
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diag(rho.matrix)[8:] == 0)


def test_round_trip_recovers_truncated_thermal():
    trip = thermal_round_trip(0.6, 2)
    n = trip.source.layout.dims[0]
    assert trip.ground_overlap == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(trip.recovered.matrix, truncated_thermal(0.6, 2, n).matrix, atol=1e-12)


def test_round_trip_leakage_guard():
    with pytest.raises(TruncationError, match="leaks"):
        thermal_round_trip(0.9, 2, n_trunc=16)


def test_round_trip_alignment():
    with pytest.raises(AlignmentError):
        thermal_round_trip(0.1, 3, n_trunc=60)


def test_simulated_point_half():
    point = simulate_rd_point(0.5, 2)
    assert point.fidelity == pytest.approx(0.9682458365518542213, abs=1e-8)


@pytest.mark.parametrize("v", [round(0.1 * i, 1) for i in range(1, 10)])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_simulation_matches_closed_form(v, k):
    assert simulate_rd_point(v, k).distortion == pytest.approx(thermal_distortion(v, k).distortion, abs=1e-9)


def test_simulation_vacuum():
    assert simulate_rd_point(0.0, 1).fidelity == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("v", [0.3, 0.7])
def test_qubits_are_memoryless(v):
    trip = thermal_round_trip(v, 3)
    assert memoryless_defect(trip.qubits) < 1e-10


def test_memoryless_defect_detects_correlation():
    from entadc.fock import DensityMatrix, RegisterLayout, qubit

    layout = RegisterLayout.of(qubit("q1"), qubit("q2"))
    correlated = DensityMatrix(layout, np.diag([0.5, 0.0, 0.0, 0.5]))
    assert memoryless_defect(correlated) == pytest.approx(0.5)


def test_fidelity_convention_matches_manual_sum():
    v, k = 0.7, 2
    trip = thermal_round_trip(v, k)
    p = np.diag(trip.source.matrix).real
    q = np.diag(trip.recovered.matrix).real
    manual = np.sqrt(p * q).sum()
    assert uhlmann_fidelity(trip.source, trip.recovered) == pytest.approx(manual, abs=1e-9)
    assert manual == pytest.approx(math.sqrt(1 - v**4), abs=1e-9)
    assert make_thermal(v, 8).leakage == pytest.approx(v**8)
