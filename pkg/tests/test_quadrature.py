"""Retarded potential quadrature against closed-form oracles."""

import numpy as np
import pytest

from fieldlab.analytic import dipole_B, dipole_form_factor, dipole_potentials
from fieldlab.quadrature import (
    QuadratureSpec,
    RetardedCurlSampler,
    RetardedPotentialSampler,
    differentiation_step,
    potential_jacobian,
    retarded_potential,
    retarded_time,
)
from fieldlab.sources import (
    HertzianDipoleSource,
    SpacetimePoint,
    SuperposedSource,
    support_bounds,
)

from conftest import OMEGA_DIP, steady_probe_time

P0_VEC = np.array([0.0, 0.0, 1.0])


def potential_envelope(sampler, x, t0, period):
    """Steady-state amplitude of the vector potential from two quadrature phases."""
    ev = np.array([[*x, t0], [*x, t0 + 0.25 * period]])
    _, A, _, flags = sampler.potential(ev)
    return np.sqrt(np.sum(A[0] ** 2 + A[1] ** 2)), flags


def test_retarded_time_examples():
    assert retarded_time(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0]), 5.0) == 5.0
    assert retarded_time(np.array([3.0, 4.0, 0.0]), np.zeros(3), 7.0) == 2.0
    # translation of both points leaves the retardation unchanged
    shift = np.array([10.0, -4.0, 2.0])
    assert retarded_time(np.array([3.0, 4.0, 0.0]) + shift, shift, 7.0) == 2.0


def test_static_blob_coulomb_value(blob):
    p = SpacetimePoint(x=np.array([10.0, 0.0, 0.0]), t=3.0)
    s = retarded_potential(blob, p)
    np.testing.assert_allclose(s.A0, 0.1, rtol=1e-6)
    assert np.all(s.A == 0.0)


def test_static_blob_time_independent(blob):
    evs = np.array([[6.0, 0.0, 0.0, 1.0], [6.0, 0.0, 0.0, 9.0]])
    samp = RetardedPotentialSampler(blob)
    mesh, _ = samp.choose_mesh(evs[:1])
    A0, A, _, _ = samp.potential(evs, mesh=mesh)
    assert A0[0] == A0[1]


def test_dipole_far_zone_amplitude(dipole):
    """|A| at 50 wavelengths against the closed-form exterior solution."""
    r = 50.0
    t0 = steady_probe_time(dipole, r)
    samp = RetardedPotentialSampler(dipole)
    got, flags = potential_envelope(samp, [r, 0.0, 0.0], t0, 1.0)
    want = OMEGA_DIP * dipole_form_factor(OMEGA_DIP, 0.05) / r
    assert flags == ()
    np.testing.assert_allclose(got, want, rtol=1e-3)


def test_dipole_potentials_pointwise(dipole):
    """Both components of the four-potential at a generic direction and time."""
    xyz = np.array([7.0, 2.0, 11.0])
    t = steady_probe_time(dipole, float(np.linalg.norm(xyz)))
    s = retarded_potential(dipole, SpacetimePoint(x=xyz, t=t))
    a0, avec = dipole_potentials(P0_VEC, OMEGA_DIP, 0.05, xyz, t)
    scale = np.max(np.abs(avec))
    np.testing.assert_allclose(s.A0, a0, rtol=0, atol=1e-3 * scale)
    np.testing.assert_allclose(s.A, avec, rtol=0, atol=1e-3 * scale)


def test_jacobian_static_gradient(blob):
    p = SpacetimePoint(x=np.array([10.0, 0.0, 0.0]), t=5.0)
    jac = potential_jacobian(blob, p)
    # d(q/r)/dr = -1/100 along x, zero elsewhere
    np.testing.assert_allclose(jac.grad_A0, [-0.01, 0.0, 0.0], rtol=1e-4, atol=1e-7)
    assert abs(jac.dt_A0) < 1e-12 * 0.1
    np.testing.assert_allclose(jac.dt_A, 0.0, atol=1e-12)


def test_curl_route_matches_analytic_field(dipole):
    r = 20.0
    t0 = steady_probe_time(dipole, r)
    samp = RetardedCurlSampler(dipole)
    ev = np.array([[0.0, r, 0.0, t0]])
    B, _, _ = samp.curl_integral(ev)
    got = B[0]
    want = dipole_B(P0_VEC, OMEGA_DIP, 0.05, np.array([0.0, r, 0.0]), t0)
    env = np.sqrt(np.sum(want ** 2 +
                         dipole_B(P0_VEC, OMEGA_DIP, 0.05, np.array([0.0, r, 0.0]),
                                  t0 + 0.25) ** 2))
    assert np.linalg.norm(got - want) < 5e-3 * env


def test_refinement_quarters_the_error():
    """Doubling all three counts cuts the quadrature error at least 4x.

    The stock blob pins a resolution floor, which would silently override the
    requested counts; drop the floor so the sweep actually controls the mesh.
    """
    from fieldlab.sources import GaussianChargeSource

    class UnflooredBlob(GaussianChargeSource):
        def quadrature_resolution(self):
            return 2, 2, 2

    src = UnflooredBlob(q=1.0, sigma=1.0)
    p = SpacetimePoint(x=np.array([10.0, 0.0, 0.0]), t=5.0)
    exact = 0.1

    def eval_at(n):
        spec = QuadratureSpec(n_r=n, n_phi=n, n_z=n, max_refinements=0)
        return float(retarded_potential(src, p, spec=spec).A0)

    errs = [abs(eval_at(n) - exact) for n in (4, 8, 16)]
    assert errs[1] < errs[0] / 4.0
    assert errs[2] < errs[1] / 4.0


def test_causality_delay_shift(dipole):
    """Shifting the switch-on beyond the light cone leaves exact silence."""
    x = np.array([5.0, 0.0, 0.0])
    t = 6.0
    rb = support_bounds(dipole)
    src_on = HertzianDipoleSource(omega=OMEGA_DIP)
    # first light reaches r=5 at delay + (5 - rb); pick delays past t
    late = HertzianDipoleSource(omega=OMEGA_DIP, delay=t - 5.0 + rb + 0.1)
    later = HertzianDipoleSource(omega=OMEGA_DIP, delay=t - 5.0 + rb + 3.0)
    p = SpacetimePoint(x=x, t=t)
    s_late = retarded_potential(late, p)
    s_later = retarded_potential(later, p)
    assert np.all(s_late.A == 0.0) and s_late.A0 == 0.0
    assert np.all(s_later.A == 0.0)
    s_on = retarded_potential(src_on, p)
    assert np.linalg.norm(s_on.A) > 0.0


def test_silent_events_short_circuit_without_flags(dipole):
    p = SpacetimePoint(x=np.array([30.0, 0.0, 0.0]), t=1.0)
    s = retarded_potential(dipole, p)
    assert s.A0 == 0.0 and np.all(s.A == 0.0)
    assert s.flags == ()


def test_linearity_of_superposition(dipole):
    # commensurate support scales, so one mesh resolves both components
    second = HertzianDipoleSource(omega=OMEGA_DIP, p0=0.6, delay=0.3)
    both = SuperposedSource((dipole, second))
    x = np.array([9.0, 3.0, 1.0])
    t = steady_probe_time(second, float(np.linalg.norm(x))) + 0.3
    p = SpacetimePoint(x=x, t=t)
    s_sum = retarded_potential(both, p)
    s_d = retarded_potential(dipole, p)
    s_2 = retarded_potential(second, p)
    assert s_sum.flags == ()
    scale = float(np.max(np.abs(s_d.A))) + float(np.max(np.abs(s_2.A)))
    np.testing.assert_allclose(s_sum.A0, s_d.A0 + s_2.A0, rtol=0, atol=5e-6 * scale)
    np.testing.assert_allclose(s_sum.A, s_d.A + s_2.A, rtol=0, atol=5e-6 * scale)


def test_mesh_floor_honors_source_resolution(dipole, rotating):
    """Narrow envelopes must not start the refinement ladder too coarse."""
    ev = np.array([[10.0, 0.0, 0.0, 12.0]])
    mesh_d, _ = RetardedPotentialSampler(dipole).choose_mesh(ev)
    nr, nphi, nz = dipole.quadrature_resolution()
    assert mesh_d.counts[0] >= nr and mesh_d.counts[2] >= nz
    mesh_r, _ = RetardedPotentialSampler(rotating).choose_mesh(np.array([[10.0, 0, 0, 30.0]]))
    # 12.5 retardation cycles around one turn at four nodes per cycle
    assert mesh_r.counts[1] >= 50


def test_differentiation_step_scales(dipole, blob):
    h_osc = differentiation_step(dipole)
    assert 0.0 < h_osc < 0.05  # well under a wavelength
    h_static = differentiation_step(blob)
    assert 0.0 < h_static < support_bounds(blob)
