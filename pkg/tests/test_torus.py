"""Flat-torus bundles: curvature classification, Morse data, theta traces."""

import math
import warnings

import numpy as np
import pytest

from kernel_lab import (
    BoundaryCrossingWarning,
    GramConditioningError,
    TorusBundle,
    audit_morse,
    curvature_field,
    dolbeault_dims,
    morse_integrals,
    theta_trace_check,
)


def test_bundle_validation():
    with pytest.raises(ValueError):
        TorusBundle(tau=1.0 - 0.5j, degree=1)
    with pytest.raises(ValueError):
        TorusBundle(tau=1j, degree=0)
    with pytest.raises(ValueError):
        TorusBundle(tau=1j, degree=1, psi_modes=((0, 0, 0.2),))
    with pytest.raises(ValueError):
        TorusBundle(tau=1j, degree=1, psi_modes=((1, 0, 0.1), (1, 0, 0.2)))


def test_area_and_mean_zero_psi(wavy_torus):
    assert wavy_torus.area == pytest.approx(2.0)
    xs, ys = np.meshgrid(np.arange(64) / 64, np.arange(64) / 64, indexing="ij")
    psi = wavy_torus.psi_values(xs, ys)
    assert abs(psi.mean()) <= 1e-14
    assert psi.max() == pytest.approx(0.3, abs=1e-12)


def test_flat_curvature_classification(flat_torus):
    field = curvature_field(flat_torus)
    assert not field.sign_changing
    assert field.measure(0) == pytest.approx(flat_torus.area)
    assert field.measure(1) == 0.0
    # constant curvature pi*d / Im(tau)
    assert np.allclose(field.values, math.pi)


def test_negative_degree_classification():
    field = curvature_field(TorusBundle(tau=1j, degree=-1))
    assert field.measure(1) == pytest.approx(2.0)
    assert field.measure(0) == 0.0


def test_wavy_curvature_classification(wavy_torus):
    field = curvature_field(wavy_torus)
    assert field.sign_changing
    assert field.measure(0) > 0.0
    assert field.measure(1) > 0.0
    assert field.values.min() < 0.0 < field.values.max()


def test_curvature_integral_normalization(wavy_torus):
    # (1/2pi) * integral of R dV = d, independent of psi
    field = curvature_field(wavy_torus)
    cell = wavy_torus.area / field.values.size
    total = float(field.values.sum()) * cell
    assert total == pytest.approx(2.0 * math.pi * wavy_torus.degree, abs=1e-12)


def test_curvature_grid_must_resolve_psi():
    bundle = TorusBundle(tau=1j, degree=1, psi_modes=((3, 0, 0.05),))
    with pytest.raises(ValueError):
        curvature_field(bundle, grid_n=16)
    curvature_field(bundle, grid_n=24)


def test_morse_integrals_flat(flat_torus):
    assert morse_integrals(flat_torus, 5, 0) == pytest.approx(5.0, abs=1e-10)
    assert morse_integrals(flat_torus, 5, 1) == 0.0


def test_morse_integrals_window(flat_torus):
    full = morse_integrals(flat_torus, 4, 0)
    half = morse_integrals(flat_torus, 4, 0, window=(0.0, 0.5, 0.0, 1.0))
    assert half == pytest.approx(full / 2.0, abs=1e-12)


def test_morse_integrals_sign_changing_exceeds_mean(wavy_torus):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryCrossingWarning)
        i0 = morse_integrals(wavy_torus, 5, 0)
    assert i0 > 5.0


def test_boundary_crossing_warns(wavy_torus):
    with pytest.warns(BoundaryCrossingWarning):
        morse_integrals(wavy_torus, 3, 0)


def test_morse_integrals_refinement_positive_curvature():
    # amplitude below 1/(2 pi^2) * pi keeps R > 0, so M(0) is the whole
    # torus and the periodic lattice sum is exact at every resolution
    bundle = TorusBundle(tau=1j, degree=1, psi_modes=((1, 0, 0.1),))
    assert not curvature_field(bundle).sign_changing
    values = [morse_integrals(bundle, 3, 0, grid_n=n) for n in (16, 32, 64)]
    for v in values:
        assert v == pytest.approx(3.0, abs=1e-12)


def test_dolbeault_dims():
    assert dolbeault_dims(TorusBundle(tau=1j, degree=1), 5) == (5, 0)
    assert dolbeault_dims(TorusBundle(tau=1j, degree=-2), 3) == (0, 6)
    assert dolbeault_dims(TorusBundle(tau=1j, degree=1), 1) == (1, 0)
    with pytest.raises(ValueError):
        dolbeault_dims(TorusBundle(tau=1j, degree=1), 0)


def test_theta_trace_flat_small(flat_torus):
    result = theta_trace_check(flat_torus, 1)
    assert result.dimension == 1
    assert result.gram_rank == 1
    assert result.deviation <= 1e-8
    assert result.truncation_estimate <= 1e-10


def test_theta_trace_flat_k6(flat_torus):
    result = theta_trace_check(flat_torus, 6)
    assert result.dimension == 6
    assert result.deviation <= 1e-6


def test_theta_trace_wavy(wavy_torus):
    result = theta_trace_check(wavy_torus, 4)
    assert result.dimension == 4
    assert result.gram_rank == 4
    assert result.deviation <= 1e-6


def test_theta_trace_skew_lattice():
    bundle = TorusBundle(tau=0.3 + 0.8j, degree=2)
    result = theta_trace_check(bundle, 3)
    assert result.dimension == 6
    assert result.deviation <= 1e-6


def test_theta_trace_guards(flat_torus):
    with pytest.raises(ValueError):
        theta_trace_check(TorusBundle(tau=1j, degree=-1), 2)
    with pytest.raises(ValueError):
        theta_trace_check(flat_torus, 2, gram_grid=64, trace_grid=64)


def test_audit_morse_flat(flat_torus):
    report = audit_morse(flat_torus, ks=tuple(range(1, 8)))
    assert report.h0 == tuple(range(1, 8))
    assert report.h1 == (0,) * 7
    assert max(abs(m) for m in report.morse3) <= 1e-9
    assert max(abs(m) for m in report.morse1) <= 1e-9  # equality case
    assert min(report.morse2) >= -1e-9


def test_audit_morse_wavy(wavy_torus):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryCrossingWarning)
        report = audit_morse(wavy_torus, ks=tuple(range(1, 8)))
    assert max(abs(m) for m in report.morse3) <= 1e-9
    margins = [m / k for k, m in zip(report.ks, report.morse1)]
    assert min(margins) >= 0.1  # strict weak inequality per unit k
    assert report.h0 == tuple(range(1, 8))
