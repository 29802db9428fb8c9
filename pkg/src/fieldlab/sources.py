"""Source current models on a shared spacetime convention.

All quantities use Gaussian units with c = 1 internally: times are lengths,
and the four-current is (charge_density, current_density).  Every model is
vectorized: spatial arguments have shape (..., 3) and times broadcast against
the leading dimensions, so a quadrature can evaluate one set of source nodes
at a per-observer grid of retarded times in a single call.

Switch-on discipline: time-dependent sources carry a C^2 polynomial ramp of
duration ``switch_on`` so that the current and all its first derivatives are
identically zero for t <= 0 (null initial data).  The static charge blob is
the one deliberate exception; it exists as a steady-state oracle fixture.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import CurlUnavailable

__all__ = [
    "UnitSystem",
    "SpacetimePoint",
    "SourceModel",
    "KernelBasis",
    "RotatingPolarizationSource",
    "HertzianDipoleSource",
    "GaussianChargeSource",
    "SuperposedSource",
    "BallSupport",
    "CylinderShellSupport",
    "eval_current",
    "eval_curl_current",
    "support_bounds",
    "smoothstep_ramp",
    "smoothstep_ramp_dt",
]


@dataclass(frozen=True)
class UnitSystem:
    """Internal Gaussian units with c fixed to 1.

    The scale factors convert internal values to output units at I/O
    boundaries only; no internal computation ever sees them.
    """

    length_scale: float = 1.0
    time_scale: float = 1.0
    field_scale: float = 1.0

    def __post_init__(self):
        for name in ("length_scale", "time_scale", "field_scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"UnitSystem.{name} must be finite and positive, got {v}")

    @property
    def c(self) -> float:
        return 1.0


@dataclass
class SpacetimePoint:
    """An observation event: spatial position (3,) and coordinate time."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(3)
        self.t = float(self.t)
        if not (np.all(np.isfinite(self.x)) and math.isfinite(self.t)):
            raise ValueError(f"SpacetimePoint has non-finite coordinates: x={self.x}, t={self.t}")

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.x))


def smoothstep_ramp(t, tau):
    """C^2 switch-on profile: 0 for t <= 0, 1 for t >= tau, smooth between."""
    t = np.asarray(t, dtype=float)
    if tau <= 0.0:
        return (t > 0.0).astype(float)
    u = np.clip(t / tau, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def smoothstep_ramp_dt(t, tau):
    """Time derivative of :func:`smoothstep_ramp`."""
    t = np.asarray(t, dtype=float)
    if tau <= 0.0:
        return np.zeros_like(t)
    u = np.clip(t / tau, 0.0, 1.0)
    # 30 u^2 (1-u)^2 / tau; exactly zero at both ends.
    return 30.0 * u * u * (1.0 - u) * (1.0 - u) / tau


def _poly_window(u):
    """Quartic window (1-u^2)^4 on [-1, 1], exactly zero outside."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    w = np.where(inside, 1.0 - u * u, 0.0)
    return w * w * w * w


def _poly_window_du(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    s = np.where(inside, 1.0 - u * u, 0.0)
    return -8.0 * u * s * s * s


@dataclass(frozen=True)
class BallSupport:
    """Origin-centered ball bounding a source's spatial support."""

    radius: float

    @property
    def bounding_radius(self) -> float:
        return self.radius

    # Cylindrical quadrature bounds (r_min, r_max, z_half).
    @property
    def cylinder(self):
        return 0.0, self.radius, self.radius

    def contains(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        return np.einsum("...i,...i->...", xyz, xyz) <= self.radius**2


@dataclass(frozen=True)
class CylinderShellSupport:
    """Annular cylinder r in [r_min, r_max], |z| <= z_half, about the z axis."""

    r_min: float
    r_max: float
    z_half: float

    @property
    def bounding_radius(self) -> float:
        return math.hypot(self.r_max, self.z_half)

    @property
    def cylinder(self):
        return self.r_min, self.r_max, self.z_half

    def contains(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        rho = np.hypot(xyz[..., 0], xyz[..., 1])
        return (rho >= self.r_min) & (rho <= self.r_max) & (np.abs(xyz[..., 2]) <= self.z_half)


class KernelBasis:
    """Source evaluation at a fixed node set with the spatial factors hoisted.

    A retarded integral evaluates the source at (node, retarded time) pairs
    where the nodes are fixed by the quadrature mesh while the times vary per
    observer.  Everything time-independent (envelopes, geometry factors) is
    computed once here; the per-pair work that remains is the trig that
    genuinely depends on t.  Times broadcast against the node axis: an input
    of shape (..., n) yields (..., n) scalars and (..., n, 3) vectors.
    """

    def __init__(self, n: int):
        self.n = int(n)

    def current(self, t):
        raise NotImplementedError

    def charge(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(np.broadcast_shapes(t.shape, (self.n,)))

    def curl(self, t):
        raise NotImplementedError


class _DirectBasis(KernelBasis):
    """Fallback basis: defers every call to the source's pointwise methods."""

    def __init__(self, src, xyz, fd_step=None):
        xyz = np.asarray(xyz, dtype=float)
        super().__init__(xyz.shape[0])
        self.src = src
        self.xyz = xyz
        self.fd_step = fd_step

    def current(self, t):
        return self.src.current(self.xyz, t)

    def charge(self, t):
        return self.src.charge(self.xyz, t)

    def curl(self, t):
        return curl_current_batch(self.src, self.xyz, t, self.fd_step)


class SourceModel(ABC):
    """A localized four-current j^mu = (charge, current) with null initial data."""

    #: duration of the C^2 switch-on ramp (0 for steady fixtures)
    switch_on: float = 0.0
    #: time offset of the switch-on (ramp starts at t = delay)
    delay: float = 0.0

    @abstractmethod
    def current(self, xyz, t):
        """Current density at positions (..., 3) and broadcastable times (...)."""

    def charge(self, xyz, t):
        """Charge density j^0/c; zero for pure polarization currents."""
        xyz = np.asarray(xyz, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.zeros(np.broadcast_shapes(xyz.shape[:-1], t.shape))

    @property
    def has_analytic_curl(self) -> bool:
        return False

    def curl_current(self, xyz, t):
        raise CurlUnavailable(f"{type(self).__name__} provides no analytic curl")

    @abstractmethod
    def support(self):
        """Bounding region outside which the current vanishes."""

    def characteristic_frequency(self) -> float:
        """Angular frequency of the emitted field (0 for static sources)."""
        return 0.0

    def azimuthal_cycles(self) -> float:
        """Oscillation cycles of the retarded integrand over one phi turn.

        Used to size the azimuthal quadrature; the bandwidth is set by the
        source radius (the retarded time varies by at most r_max/c across
        one turn), not by the observer distance.
        """
        return 0.0

    def quadrature_resolution(self):
        """Minimum (n_r, n_phi, n_z) node counts resolving the envelope.

        The adaptive doubling still verifies convergence either way; this
        floor only spares it from starting several octaves too coarse on
        envelopes much narrower than the support box.
        """
        return 2, 2, 2

    def kernel_basis(self, xyz, fd_step=None) -> KernelBasis:
        """Basis with spatial factors precomputed at fixed nodes.

        Subclasses with separable time dependence override this; the default
        just forwards to the pointwise methods and hoists nothing.
        """
        return _DirectBasis(self, xyz, fd_step)

    def field_period(self):
        """Temporal period of the steady field at a fixed point, or None."""
        w = self.characteristic_frequency()
        return 2.0 * math.pi / w if w > 0 else None

    def steady_time(self, observer_radius: float) -> float:
        """Earliest t_P at which the field at this radius is in steady state."""
        return self.delay + self.switch_on + observer_radius + self.support().bounding_radius

    def _ramp(self, t):
        return smoothstep_ramp(np.asarray(t, dtype=float) - self.delay, self.switch_on)

    def _ramp_dt(self, t):
        return smoothstep_ramp_dt(np.asarray(t, dtype=float) - self.delay, self.switch_on)


def _cyl(xyz):
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    rho = np.hypot(x, y)
    phi = np.arctan2(y, x)
    return rho, phi, z


class RotatingPolarizationSource(SourceModel):
    """Polarization current of an m-lobed pattern rotating rigidly at omega.

    P = P0(r, z) * cos(m (phi - omega t)) * ramp(t) * e_pol,  j = dP/dt.
    The pattern speed at radius r is omega*r, so the outer parts exceed c
    whenever omega * r_max > 1.  The amplitude envelope P0 is a separable
    quartic window over the annulus, smooth and compactly supported, with
    analytic derivatives feeding the exact curl.

    The charge density is identically zero: this is a pure polarization
    current, so div j need not vanish pointwise and the Lorenz residual of
    the resulting potential is a recorded diagnostic, not an invariant.
    """

    def __init__(self, m, omega, r_min, r_max, z_half, amplitude=1.0,
                 polarization="azimuthal", switch_on=None, delay=0.0):
        if int(m) != m or m < 1:
            raise ValueError(f"m must be a positive integer, got {m}")
        if not (omega > 0):
            raise ValueError(f"omega must be positive, got {omega}")
        if not (0.0 <= r_min < r_max):
            raise ValueError(f"need 0 <= r_min < r_max, got {r_min}, {r_max}")
        if not (z_half > 0):
            raise ValueError(f"z_half must be positive, got {z_half}")
        if polarization not in ("azimuthal", "axial", "radial"):
            raise ValueError(f"unknown polarization {polarization!r}")
        self.m = int(m)
        self.omega = float(omega)
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.z_half = float(z_half)
        self.amplitude = float(amplitude)
        self.polarization = polarization
        self.switch_on = 2.0 * math.pi / self.omega if switch_on is None else float(switch_on)
        self.delay = float(delay)

    @property
    def is_superluminal(self) -> bool:
        return self.omega * self.r_max > 1.0

    def support(self):
        return CylinderShellSupport(self.r_min, self.r_max, self.z_half)

    def characteristic_frequency(self) -> float:
        return self.m * self.omega

    def azimuthal_cycles(self) -> float:
        return self.m * (1.0 + self.omega * self.r_max)

    # -- envelope -----------------------------------------------------------
    def _envelope(self, rho, z):
        mid = 0.5 * (self.r_min + self.r_max)
        half = 0.5 * (self.r_max - self.r_min)
        return self.amplitude * _poly_window((rho - mid) / half) * _poly_window(z / self.z_half)

    def _envelope_grad(self, rho, z):
        mid = 0.5 * (self.r_min + self.r_max)
        half = 0.5 * (self.r_max - self.r_min)
        wr = _poly_window((rho - mid) / half)
        wz = _poly_window(z / self.z_half)
        dwr = _poly_window_du((rho - mid) / half) / half
        dwz = _poly_window_du(z / self.z_half) / self.z_half
        p0 = self.amplitude * wr * wz
        return p0, self.amplitude * dwr * wz, self.amplitude * wr * dwz

    def _time_factor(self, phi, t):
        """d/dt [cos(m(phi - omega t)) ramp(t)] and its phi derivative."""
        t = np.asarray(t, dtype=float)
        xi = self.m * (phi - self.omega * t)
        ramp, dramp = self._ramp(t), self._ramp_dt(t)
        c, s = np.cos(xi), np.sin(xi)
        tf = self.m * self.omega * s * ramp + c * dramp
        tf_phi = self.m * self.m * self.omega * c * ramp - self.m * s * dramp
        return tf, tf_phi

    def current(self, xyz, t):
        rho, phi, z = _cyl(xyz)
        p0 = self._envelope(rho, z)
        tf, _ = self._time_factor(phi, t)
        mag = p0 * tf
        cphi, sphi = np.cos(phi), np.sin(phi)
        if self.polarization == "azimuthal":
            ex, ey, ez = -sphi, cphi, np.zeros_like(cphi)
        elif self.polarization == "radial":
            ex, ey, ez = cphi, sphi, np.zeros_like(cphi)
        else:
            ex, ey, ez = np.zeros_like(cphi), np.zeros_like(cphi), np.ones_like(cphi)
        return np.stack([mag * ex, mag * ey, mag * ez], axis=-1)

    @property
    def has_analytic_curl(self) -> bool:
        return True

    def curl_current(self, xyz, t):
        rho, phi, z = _cyl(xyz)
        p0, dp0_dr, dp0_dz = self._envelope_grad(rho, z)
        tf, tf_phi = self._time_factor(phi, t)
        rho_safe = np.where(rho > 0.0, rho, 1.0)
        active = p0 != 0.0
        if self.polarization == "azimuthal":
            comp_r = -dp0_dz * tf
            comp_p = np.zeros(np.broadcast_shapes(comp_r.shape, tf.shape))
            comp_z = np.where(active, p0 / rho_safe, 0.0) * tf + dp0_dr * tf
        elif self.polarization == "axial":
            comp_r = np.where(active, p0 / rho_safe, 0.0) * tf_phi
            comp_p = -dp0_dr * tf
            comp_z = np.zeros(np.broadcast_shapes(comp_r.shape, tf.shape))
        else:  # radial
            comp_p = dp0_dz * tf
            comp_z = -np.where(active, p0 / rho_safe, 0.0) * tf_phi
            comp_r = np.zeros(np.broadcast_shapes(comp_p.shape, tf.shape))
        cphi, sphi = np.cos(phi), np.sin(phi)
        cx = comp_r * cphi - comp_p * sphi
        cy = comp_r * sphi + comp_p * cphi
        return np.stack([cx, cy, comp_z * np.ones_like(cx)], axis=-1)

    def kernel_basis(self, xyz, fd_step=None):
        return _RotatingBasis(self, xyz)


class _RotatingBasis(KernelBasis):
    """Rigid rotation separates exactly: every spatial factor is hoisted and
    the per-pair work is one cos/sin of m(phi - omega t) plus the ramp."""

    def __init__(self, src: RotatingPolarizationSource, xyz):
        xyz = np.asarray(xyz, dtype=float)
        super().__init__(xyz.shape[0])
        self.src = src
        rho, phi, z = _cyl(xyz)
        self.mphi = src.m * phi
        p0, dp0_dr, dp0_dz = src._envelope_grad(rho, z)
        cphi, sphi = np.cos(phi), np.sin(phi)
        zeros = np.zeros_like(rho)
        if src.polarization == "azimuthal":
            pol = np.stack([-sphi, cphi, zeros], axis=-1)
        elif src.polarization == "radial":
            pol = np.stack([cphi, sphi, zeros], axis=-1)
        else:
            pol = np.stack([zeros, zeros, np.ones_like(rho)], axis=-1)
        self.jvec = p0[..., None] * pol
        rho_safe = np.where(rho > 0.0, rho, 1.0)
        over_rho = np.where(p0 != 0.0, p0 / rho_safe, 0.0)
        # curl j = S1 * tf + S2 * tf_phi; cylindrical coefficient triples
        # (r, phi, z) per polarization, matching curl_current above.
        if src.polarization == "azimuthal":
            s1, s2 = (-dp0_dz, zeros, over_rho + dp0_dr), (zeros, zeros, zeros)
        elif src.polarization == "axial":
            s1, s2 = (zeros, -dp0_dr, zeros), (over_rho, zeros, zeros)
        else:
            s1, s2 = (zeros, dp0_dz, zeros), (zeros, zeros, -over_rho)
        self.S1 = self._cartesian(s1, cphi, sphi)
        self.S2 = self._cartesian(s2, cphi, sphi)

    @staticmethod
    def _cartesian(comps, cphi, sphi):
        cr, cp, cz = comps
        return np.stack([cr * cphi - cp * sphi, cr * sphi + cp * cphi, cz], axis=-1)

    def _factors(self, t):
        t = np.asarray(t, dtype=float)
        src = self.src
        xi = self.mphi - src.m * src.omega * t
        ramp, dramp = src._ramp(t), src._ramp_dt(t)
        c, s = np.cos(xi), np.sin(xi)
        tf = src.m * src.omega * s * ramp + c * dramp
        tf_phi = src.m * src.m * src.omega * c * ramp - src.m * s * dramp
        return tf, tf_phi

    def current(self, t):
        tf, _ = self._factors(t)
        return tf[..., None] * self.jvec

    def curl(self, t):
        tf, tf_phi = self._factors(t)
        return tf[..., None] * self.S1 + tf_phi[..., None] * self.S2


class HertzianDipoleSource(SourceModel):
    """Oscillating point-like dipole smeared over a Gaussian ball.

    j = p'(t) g_sigma(x) with p(t) = p0 cos(omega t) ramp(t); the charge
    density -div(p g) accompanies it, so the four-current satisfies the
    continuity equation exactly.  Outside a ball of ``tail_factor`` sigma
    the envelope (relative tail < 1e-12) is truncated to exactly zero.
    """

    tail_factor = 7.5

    def __init__(self, p0=1.0, omega=1.0, sigma=0.05, switch_on=None, delay=0.0):
        p0 = np.asarray(p0, dtype=float)
        self.p0 = np.array([0.0, 0.0, float(p0)]) if p0.ndim == 0 else p0.reshape(3)
        if not (omega > 0 and sigma > 0):
            raise ValueError(f"omega and sigma must be positive, got {omega}, {sigma}")
        self.omega = float(omega)
        self.sigma = float(sigma)
        self.switch_on = 2.0 * math.pi / self.omega if switch_on is None else float(switch_on)
        self.delay = float(delay)

    def support(self):
        return BallSupport(self.tail_factor * self.sigma)

    def characteristic_frequency(self) -> float:
        return self.omega

    def wavelength(self) -> float:
        return 2.0 * math.pi / self.omega

    def _gaussian(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        r2 = np.einsum("...i,...i->...", xyz, xyz)
        norm = (2.0 * math.pi) ** 1.5 * self.sigma**3
        g = np.exp(-0.5 * r2 / self.sigma**2) / norm
        return np.where(r2 <= (self.tail_factor * self.sigma) ** 2, g, 0.0)

    def _moment(self, t):
        t = np.asarray(t, dtype=float)
        return np.cos(self.omega * t) * self._ramp(t)

    def _moment_dt(self, t):
        t = np.asarray(t, dtype=float)
        return np.cos(self.omega * t) * self._ramp_dt(t) - self.omega * np.sin(self.omega * t) * self._ramp(t)

    def current(self, xyz, t):
        g = self._gaussian(xyz)
        amp = self._moment_dt(t) * g
        return amp[..., None] * self.p0

    def charge(self, xyz, t):
        xyz = np.asarray(xyz, dtype=float)
        g = self._gaussian(xyz)
        proj = np.einsum("...i,i->...", xyz, self.p0)
        return self._moment(t) * proj * g / self.sigma**2

    @property
    def has_analytic_curl(self) -> bool:
        return True

    def curl_current(self, xyz, t):
        xyz = np.asarray(xyz, dtype=float)
        g = self._gaussian(xyz)
        cross = np.cross(np.broadcast_to(xyz, np.broadcast_shapes(xyz.shape, (3,))), self.p0)
        amp = -self._moment_dt(t) * g / self.sigma**2
        return amp[..., None] * cross

    def quadrature_resolution(self):
        # Gauss-Legendre must resolve the sigma-wide bell over the 7.5 sigma
        # cylinder; the span/sigma ratio is fixed, so the counts are too.
        return _GAUSSIAN_BALL_COUNTS

    def kernel_basis(self, xyz, fd_step=None):
        return _DipoleBasis(self, xyz)


# minimum GL counts for a tail_factor=7.5 Gaussian ball, any sigma
_GAUSSIAN_BALL_COUNTS = (24, 16, 32)


class _DipoleBasis(KernelBasis):
    """Dipole spatial profile hoisted; per pair only the moment trig remains."""

    def __init__(self, src: HertzianDipoleSource, xyz):
        xyz = np.asarray(xyz, dtype=float)
        super().__init__(xyz.shape[0])
        self.src = src
        self.g = src._gaussian(xyz)
        self.qfac = np.einsum("...i,i->...", xyz, src.p0) * self.g / src.sigma**2
        self.cfac = np.cross(xyz, src.p0) * (-self.g / src.sigma**2)[..., None]

    def current(self, t):
        return (self.src._moment_dt(t) * self.g)[..., None] * self.src.p0

    def charge(self, t):
        return self.src._moment(t) * self.qfac

    def curl(self, t):
        return self.src._moment_dt(t)[..., None] * self.cfac


class GaussianChargeSource(SourceModel):
    """Static unit-normalized Gaussian charge blob: a Coulomb oracle fixture.

    Steady by construction (no switch-on); its spatial current is identically
    zero, so the null-initial-data contract on the current holds trivially.
    """

    tail_factor = 7.5

    def __init__(self, q=1.0, sigma=1.0):
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.q = float(q)
        self.sigma = float(sigma)
        self.switch_on = 0.0

    def support(self):
        return BallSupport(self.tail_factor * self.sigma)

    def steady_time(self, observer_radius: float) -> float:
        return 0.0

    def current(self, xyz, t):
        xyz = np.asarray(xyz, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(xyz.shape[:-1], t.shape)
        return np.zeros(shape + (3,))

    def charge(self, xyz, t):
        xyz = np.asarray(xyz, dtype=float)
        t = np.asarray(t, dtype=float)
        r2 = np.einsum("...i,...i->...", xyz, xyz)
        norm = (2.0 * math.pi) ** 1.5 * self.sigma**3
        g = self.q * np.exp(-0.5 * r2 / self.sigma**2) / norm
        g = np.where(r2 <= (self.tail_factor * self.sigma) ** 2, g, 0.0)
        return g * np.ones(np.broadcast_shapes(r2.shape, t.shape))

    @property
    def has_analytic_curl(self) -> bool:
        return True

    def curl_current(self, xyz, t):
        return self.current(xyz, t)

    def quadrature_resolution(self):
        return _GAUSSIAN_BALL_COUNTS

    def kernel_basis(self, xyz, fd_step=None):
        return _BlobBasis(self, xyz)


class _BlobBasis(KernelBasis):
    def __init__(self, src: GaussianChargeSource, xyz):
        xyz = np.asarray(xyz, dtype=float)
        super().__init__(xyz.shape[0])
        self.g = src.charge(xyz, 0.0)

    def _zeros(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(np.broadcast_shapes(t.shape, (self.n,)) + (3,))

    def current(self, t):
        return self._zeros(t)

    def charge(self, t):
        return self.g * np.ones_like(np.asarray(t, dtype=float))

    def curl(self, t):
        return self._zeros(t)


class SuperposedSource(SourceModel):
    """Sum of component sources; exists to exercise linearity contracts."""

    def __init__(self, sources):
        self.sources = list(sources)
        if not self.sources:
            raise ValueError("need at least one component source")
        self.switch_on = max(s.switch_on for s in self.sources)
        self.delay = min(s.delay for s in self.sources)

    def support(self):
        return BallSupport(max(s.support().bounding_radius for s in self.sources))

    def characteristic_frequency(self) -> float:
        return max(s.characteristic_frequency() for s in self.sources)

    def azimuthal_cycles(self) -> float:
        return max(s.azimuthal_cycles() for s in self.sources)

    def steady_time(self, observer_radius: float) -> float:
        return max(s.steady_time(observer_radius) for s in self.sources)

    def current(self, xyz, t):
        return sum(s.current(xyz, t) for s in self.sources)

    def charge(self, xyz, t):
        return sum(s.charge(xyz, t) for s in self.sources)

    @property
    def has_analytic_curl(self) -> bool:
        return all(s.has_analytic_curl for s in self.sources)

    def curl_current(self, xyz, t):
        return sum(s.curl_current(xyz, t) for s in self.sources)

    def quadrature_resolution(self):
        per = [s.quadrature_resolution() for s in self.sources]
        return tuple(max(c[k] for c in per) for k in range(3))

    def kernel_basis(self, xyz, fd_step=None):
        return _SumBasis([s.kernel_basis(xyz, fd_step) for s in self.sources])


class _SumBasis(KernelBasis):
    def __init__(self, parts):
        super().__init__(parts[0].n)
        self.parts = parts

    def current(self, t):
        return sum(p.current(t) for p in self.parts)

    def charge(self, t):
        return sum(p.charge(t) for p in self.parts)

    def curl(self, t):
        return sum(p.curl(t) for p in self.parts)


# -- module-level operations ------------------------------------------------

def eval_current(src: SourceModel, p: SpacetimePoint) -> np.ndarray:
    """Current density vector at a single spacetime point."""
    return src.current(p.x, p.t)


def eval_curl_current(src: SourceModel, p: SpacetimePoint, fd_step=None) -> np.ndarray:
    """curl j at a spacetime point: analytic if available, else central FD."""
    return curl_current_batch(src, p.x[None, :], np.array([p.t]), fd_step)[0]


def curl_current_batch(src: SourceModel, xyz, t, fd_step=None) -> np.ndarray:
    """Vectorized curl of the current; falls back to finite differences."""
    if src.has_analytic_curl:
        return src.curl_current(xyz, t)
    if fd_step is None:
        raise CurlUnavailable(
            f"{type(src).__name__} provides no analytic curl and no fd_step was given")
    xyz = np.asarray(xyz, dtype=float)
    h = float(fd_step)
    parts = []
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        jp = src.current(xyz + e, t)
        jm = src.current(xyz - e, t)
        parts.append((jp - jm) / (2.0 * h))
    dj = parts  # dj[a][..., b] = d j_b / d x_a
    return np.stack([
        dj[1][..., 2] - dj[2][..., 1],
        dj[2][..., 0] - dj[0][..., 2],
        dj[0][..., 1] - dj[1][..., 0],
    ], axis=-1)


def support_bounds(src: SourceModel) -> float:
    """Radius of an origin-centered ball that bounds the source's support."""
    return src.support().bounding_radius
