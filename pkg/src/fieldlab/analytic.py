"""Closed-form reference solutions used as independent oracles.

Everything here is textbook electrodynamics written straight from the
formulas (Gaussian units, c = 1) with no reliance on the numerical
pipeline it is used to check.  The Gaussian-smeared dipole is exact: a
spherically symmetric envelope multiplies the point-dipole exterior
solution by the form factor exp(-k^2 sigma^2 / 2), near-zone terms
included, for any radius outside the envelope's (truncated) support.

Time-dependent formulas give the steady oscillation; they describe the
switched-on sources only once every retarded time involved is past the
ramp, which is the regime all oracle comparisons use.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

__all__ = [
    "coulomb_blob_potential",
    "coulomb_blob_field",
    "dipole_form_factor",
    "dipole_potentials",
    "dipole_B",
    "dipole_E",
    "dipole_period_max_B",
    "dipole_far_zone_peak",
    "period_max_amplitude",
    "DipoleFieldSampler",
    "ScalarSphericalWave",
]


def _radii(xyz):
    xyz = np.asarray(xyz, dtype=float)
    r = np.sqrt(np.einsum("...i,...i->...", xyz, xyz))
    return xyz, r


def coulomb_blob_potential(q, sigma, xyz):
    """Scalar potential of a static Gaussian charge blob: q erf(r/(sqrt2 s))/r."""
    _, r = _radii(xyz)
    r_safe = np.where(r > 0, r, 1.0)
    inner = q * math.sqrt(2.0 / math.pi) / sigma
    return np.where(r > 0, q * erf(r_safe / (math.sqrt(2.0) * sigma)) / r_safe, inner)


def coulomb_blob_field(q, sigma, xyz):
    """Electric field of the static Gaussian blob, radial."""
    xyz, r = _radii(xyz)
    r_safe = np.where(r > 0, r, 1.0)
    u = r_safe / (math.sqrt(2.0) * sigma)
    mag = q * (erf(u) / r_safe**2
               - math.sqrt(2.0 / math.pi) * np.exp(-(r_safe**2) / (2.0 * sigma**2)) / (sigma * r_safe))
    mag = np.where(r > 0, mag, 0.0)
    return (mag / r_safe)[..., None] * xyz


def dipole_form_factor(omega, sigma):
    """Exact reduction of the exterior field from a Gaussian envelope."""
    return math.exp(-0.5 * (omega * sigma) ** 2)


def _dipole_phasors(p0, omega, sigma, xyz):
    """Complex phasors (A0, A, B, E) such that field(t) = Re[X exp(-i w t)]."""
    p0 = np.asarray(p0, dtype=float).reshape(3)
    xyz, r = _radii(xyz)
    if np.any(r <= 0):
        raise ValueError("dipole oracle is an exterior solution; r must be > 0")
    k = omega
    n = xyz / r[..., None]
    F = dipole_form_factor(omega, sigma)
    eikr = np.exp(1j * k * r)
    ndotp = np.einsum("...i,i->...", n, p0)
    ncrossp = np.cross(np.broadcast_to(n, np.broadcast_shapes(n.shape, (3,))), p0)

    A = (-1j * k * F) * (eikr / r)[..., None] * p0
    A0 = F * ndotp * (1.0 / r**2 - 1j * k / r) * eikr
    B = (k**2 * F) * ((1.0 - 1.0 / (1j * k * r)) * eikr / r)[..., None] * ncrossp
    rad = np.cross(ncrossp, n)
    near = 3.0 * ndotp[..., None] * n - p0
    E = F * ((k**2 * eikr / r)[..., None] * rad
             + ((1.0 / r**3 - 1j * k / r**2) * eikr)[..., None] * near)
    return A0, A, B, E


def dipole_potentials(p0, omega, sigma, xyz, t):
    """Retarded four-potential (A0, A) of the steady Gaussian dipole."""
    A0c, Ac, _, _ = _dipole_phasors(p0, omega, sigma, xyz)
    ph = np.exp(-1j * omega * np.asarray(t, dtype=float))
    return (A0c * ph).real, (Ac * ph[..., None]).real


def dipole_B(p0, omega, sigma, xyz, t):
    _, _, Bc, _ = _dipole_phasors(p0, omega, sigma, xyz)
    ph = np.exp(-1j * omega * np.asarray(t, dtype=float))
    return (Bc * ph[..., None]).real


def dipole_E(p0, omega, sigma, xyz, t):
    _, _, _, Ec = _dipole_phasors(p0, omega, sigma, xyz)
    ph = np.exp(-1j * omega * np.asarray(t, dtype=float))
    return (Ec * ph[..., None]).real


def period_max_amplitude(cos_part, sin_part):
    """max_t |c cos(wt) + s sin(wt)| for vector-valued c, s of shape (..., 3)."""
    c2 = np.einsum("...i,...i->...", cos_part, cos_part)
    s2 = np.einsum("...i,...i->...", sin_part, sin_part)
    cs = np.einsum("...i,...i->...", cos_part, sin_part)
    return np.sqrt(0.5 * (c2 + s2 + np.sqrt((c2 - s2) ** 2 + 4.0 * cs**2)))


def dipole_period_max_B(p0, omega, sigma, xyz):
    """Peak |B| over one oscillation period at each point."""
    _, _, Bc, _ = _dipole_phasors(p0, omega, sigma, xyz)
    return period_max_amplitude(Bc.real, Bc.imag)


def dipole_far_zone_peak(p0, omega, sigma, xyz):
    """Far-zone radiation formula: peak |B| = F k^2 |n x p| / r."""
    p0 = np.asarray(p0, dtype=float).reshape(3)
    xyz, r = _radii(xyz)
    n = xyz / r[..., None]
    ncrossp = np.cross(np.broadcast_to(n, np.broadcast_shapes(n.shape, (3,))), p0)
    return dipole_form_factor(omega, sigma) * omega**2 * np.linalg.norm(ncrossp, axis=-1) / r


class DipoleFieldSampler:
    """Steady analytic B of a Gaussian dipole as a field sampler.

    Callable on points of shape (N, 4) laid out as (x, y, z, t); valid for
    sampling boundary data in identity tests where the true field is wanted
    without quadrature error.
    """

    def __init__(self, src):
        self.p0 = np.asarray(src.p0, dtype=float).reshape(3)
        self.omega = float(src.omega)
        self.sigma = float(src.sigma)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return dipole_B(self.p0, self.omega, self.sigma, points[..., :3], points[..., 3])


class ScalarSphericalWave:
    """Outgoing monochromatic scalar wave cos(w(t - R))/R from a point center.

    Solves the homogeneous wave equation away from its center; used to pin
    the signs of every term in the collapsed boundary integral.  Exposed as
    a field sampler by embedding the scalar in the x component.
    """

    def __init__(self, omega=1.0, center=(0.0, 0.0, 0.0)):
        self.omega = float(omega)
        self.center = np.asarray(center, dtype=float).reshape(3)

    def _geometry(self, xyz):
        d = np.asarray(xyz, dtype=float) - self.center
        R = np.sqrt(np.einsum("...i,...i->...", d, d))
        return d, R

    def value(self, xyz, t):
        _, R = self._geometry(xyz)
        return np.cos(self.omega * (np.asarray(t, dtype=float) - R)) / R

    def gradient(self, xyz, t):
        d, R = self._geometry(xyz)
        u = self.omega * (np.asarray(t, dtype=float) - R)
        dpsi_dR = self.omega * np.sin(u) / R - np.cos(u) / R**2
        return (dpsi_dR / R)[..., None] * d

    def dt(self, xyz, t):
        _, R = self._geometry(xyz)
        u = self.omega * (np.asarray(t, dtype=float) - R)
        return -self.omega * np.sin(u) / R

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        psi = self.value(points[..., :3], points[..., 3])
        out = np.zeros(psi.shape + (3,))
        out[..., 0] = psi
        return out
