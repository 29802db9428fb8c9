"""Power-law fits, radial sweeps, and beam geometry."""

import math

import numpy as np
import pytest

from fieldlab.analytic import dipole_period_max_B
from fieldlab.errors import MeshTooCoarse, NonPositiveSample
from fieldlab.fields import PROVENANCE_POTENTIAL, PROVENANCE_SOURCE_TERM
from fieldlab import scaling
from fieldlab.scaling import (
    RadialSweep,
    beam_solid_angle,
    envelope_at,
    find_beam_peak,
    fit_power_law,
    geometric_radii,
    gradient_sweep,
    sweep_field,
)

P0_VEC = np.array([0.0, 0.0, 1.0])


def test_fit_exact_power_law():
    r = np.array(geometric_radii(2.0, 1.5, 8))
    fit = fit_power_law(r, 3.0 * r ** -1.0)
    assert abs(fit.exponent + 1.0) < 1e-12
    assert abs(fit.amplitude - 3.0) < 1e-12
    assert fit.r_squared > 1.0 - 1e-12
    assert fit.n_points == 8


def test_fit_constant_gives_zero_exponent():
    r = np.array(geometric_radii(1.0, 2.0, 6))
    fit = fit_power_law(r, np.full(6, 2.5))
    assert abs(fit.exponent) < 1e-12
    assert fit.exponent_stderr < 1e-12


def test_fit_under_noise(rng):
    r = np.array(geometric_radii(1.0, 1.5, 16))
    y = r ** -0.5 * (1.0 + 0.005 * rng.standard_normal(16))
    fit = fit_power_law(r, y)
    assert abs(fit.exponent + 0.5) < 0.02
    assert 0.0 < fit.exponent_stderr < 0.02


def test_fit_recovers_planted_exponents(rng):
    r = np.array(geometric_radii(1.0, 1.5, 12))
    for p in (-2.0, -1.0, -0.5, 0.0, 3.5):
        y = 2.0 * r ** p * (1.0 + 0.01 * rng.standard_normal(12))
        fit = fit_power_law(r, y)
        assert abs(fit.exponent - p) < 0.05, p


def test_fit_rejects_unusable_samples():
    r = np.array([1.0, 2.0, 4.0, 8.0])
    with pytest.raises(NonPositiveSample):
        fit_power_law(r, [1.0, 0.0, 0.1, 0.01])
    with pytest.raises(NonPositiveSample):
        fit_power_law(r, [1.0, -0.5, 0.1, 0.01])
    with pytest.raises(NonPositiveSample):
        fit_power_law(r, [1.0, np.nan, 0.1, 0.01])
    with pytest.raises(NonPositiveSample):
        fit_power_law([1.0, -2.0, 4.0, 8.0], [1.0, 0.5, 0.2, 0.1])


def test_radial_sweep_validation(dipole):
    with pytest.raises(ValueError):
        RadialSweep(theta=1.0, phi=0.0, radii=(1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        RadialSweep(theta=1.0, phi=0.0, radii=(1.0, 3.0, 2.0, 4.0))
    with pytest.raises(ValueError):
        RadialSweep(theta=1.0, phi=0.0, radii=(-1.0, 2.0, 3.0, 4.0))
    sweep = RadialSweep.from_direction([0.0, 0.0, 2.0], geometric_radii(1.0, 1.5, 4))
    np.testing.assert_allclose(sweep.direction, [0.0, 0.0, 1.0], atol=1e-15)
    # dipole support radius is 0.375, so 3 < 10 * 0.375
    near = RadialSweep(theta=0.5 * math.pi, phi=0.0, radii=(3.0, 4.0, 5.0, 6.0))
    with pytest.raises(ValueError):
        near.check_far(dipole)
    far = RadialSweep(theta=0.5 * math.pi, phi=0.0, radii=(4.0, 5.0, 6.0, 7.0))
    far.check_far(dipole)


def test_geometric_radii_bounds():
    assert geometric_radii(2.0, 2.0, 3) == (2.0, 4.0, 8.0)
    with pytest.raises(ValueError):
        geometric_radii(1.0, 2.5, 4)
    with pytest.raises(ValueError):
        geometric_radii(1.0, 1.0, 4)


def test_dipole_far_field_exponent(dipole):
    """Radiated envelope transverse to the dipole axis falls off as 1/R."""
    sweep = sweep_field(dipole, geometric_radii(20.0, 1.5, 5), direction=[1.0, 0.0, 0.0])
    assert sweep.flags == ()
    fit = sweep.fit()
    assert abs(fit.exponent + 1.0) < 0.02
    report = sweep.report()
    assert report.quantity == "field"
    assert report.r_min == 20.0 and report.n_points == 5


def test_static_blob_field_exponent(blob):
    """A static charge is swept on |E|, which decays as 1/R^2 outside."""
    sweep = sweep_field(blob, geometric_radii(10.0, 1.5, 5), direction=[1.0, 1.0, 0.0])
    fit = sweep.fit()
    assert abs(fit.exponent + 2.0) < 0.02


def test_gradient_sweep_exponents(dipole, blob):
    gdip = gradient_sweep(dipole, geometric_radii(20.0, 1.5, 5),
                          direction=[1.0, 0.0, 0.0]).fit()
    assert abs(gdip.exponent + 2.0) < 0.05
    gblob = gradient_sweep(blob, geometric_radii(10.0, 1.5, 5),
                           direction=[0.0, 1.0, 0.0]).fit()
    assert abs(gblob.exponent + 3.0) < 0.05


def test_ratio_invariance(dipole):
    """The fitted exponent must not depend on the progression ratio."""
    fine = sweep_field(dipole, geometric_radii(20.0, 1.3, 6),
                       direction=[0.0, 1.0, 0.0]).fit()
    coarse = sweep_field(dipole, geometric_radii(20.0, 2.0, 4),
                         direction=[0.0, 1.0, 0.0]).fit()
    assert abs(fine.exponent - coarse.exponent) < 0.02


def test_pipeline_consistency(dipole):
    radii = geometric_radii(20.0, 1.5, 5)
    pot = sweep_field(dipole, radii, direction=[1.0, 0.0, 0.0],
                      pipeline=PROVENANCE_POTENTIAL)
    cur = sweep_field(dipole, radii, direction=[1.0, 0.0, 0.0],
                      pipeline=PROVENANCE_SOURCE_TERM)
    assert pot.pipeline != cur.pipeline
    np.testing.assert_allclose(pot.values, cur.values, rtol=1e-2)
    assert abs(pot.fit().exponent - cur.fit().exponent) < 0.05


def test_sweep_input_validation(dipole):
    with pytest.raises(ValueError):
        sweep_field(dipole, geometric_radii(20.0, 1.5, 4))  # no direction
    with pytest.raises(ValueError):
        sweep_field(dipole, [-1.0, 2.0, 3.0, 4.0], direction=[1.0, 0, 0])
    with pytest.raises(ValueError):
        sweep_field(dipole, geometric_radii(20.0, 1.5, 4), direction=[0.0, 0, 0])


def constant_envelope(src, pts, **kwargs):
    return np.ones(len(np.asarray(pts).reshape(-1, 3))), _FakeSampler()


class _FakeSampler:
    flags = ()


def test_solid_angle_geometry(monkeypatch, dipole):
    """With a synthetic isotropic envelope the beam covers the full sphere."""
    monkeypatch.setattr(scaling, "envelope_at", constant_envelope)
    beam = beam_solid_angle(dipole, 10.0, level=3)
    assert abs(beam.solid_angle - 4.0 * math.pi) < 1e-9
    assert beam.n_cells_above == beam.mesh.n_faces


def test_solid_angle_hemisphere(monkeypatch, dipole):
    def hemisphere(src, pts, **kwargs):
        pts = np.asarray(pts).reshape(-1, 3)
        return np.where(pts[:, 2] > 0, 1.0, 1e-6), _FakeSampler()

    monkeypatch.setattr(scaling, "envelope_at", hemisphere)
    beam = beam_solid_angle(dipole, 10.0, level=4)
    assert abs(beam.solid_angle - 2.0 * math.pi) < 0.02 * 4.0 * math.pi
    assert beam.peak_direction[2] > 0


def test_solid_angle_refinement(monkeypatch, dipole):
    """A narrow synthetic beam is rejected at a coarse level and resolved
    once auto refinement raises the mesh level."""
    width = 0.08

    def spike(src, pts, **kwargs):
        pts = np.asarray(pts).reshape(-1, 3)
        r = np.linalg.norm(pts, axis=1)
        ang = np.arccos(np.clip(pts[:, 2] / r, -1.0, 1.0))
        return np.exp(-((ang / width) ** 2)), _FakeSampler()

    monkeypatch.setattr(scaling, "envelope_at", spike)
    with pytest.raises(MeshTooCoarse) as err:
        beam_solid_angle(dipole, 10.0, level=4)
    assert err.value.result.n_cells_above < 16
    beam = beam_solid_angle(dipole, 10.0, level=4, auto_refine=True)
    assert beam.n_cells_above >= 16
    assert beam.mesh.level > 4
    with pytest.raises(ValueError):
        beam_solid_angle(dipole, 10.0, threshold=1.5)


def test_dipole_solid_angle_radius_independent(dipole):
    """The half-max solid angle is a property of the source, not the sphere."""
    beams = [beam_solid_angle(dipole, R, level=3) for R in (20.0, 200.0)]
    # |B| goes as sin(theta), so the half-max band is sin(theta) >= 1/2,
    # i.e. solid angle 4*pi*cos(30 deg)
    want = 2.0 * math.sqrt(3.0) * math.pi
    assert abs(beams[0].solid_angle - want) < 0.05 * want
    rel = abs(beams[0].solid_angle - beams[1].solid_angle) / beams[0].solid_angle
    assert rel < 0.02


def test_find_beam_peak_dipole(dipole):
    u, vbest = find_beam_peak(dipole, 25.0, level=2)
    assert abs(u[2]) < 0.02  # radiation peaks transverse to the axis
    want = dipole_period_max_B(P0_VEC, dipole.omega, dipole.sigma, 25.0 * u)
    assert abs(vbest - want) < 1e-2 * want
