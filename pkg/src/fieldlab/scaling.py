"""Distance sweeps, power-law fits, and beam geometry measurements.

The swept observable is the steady-state field envelope.  Once every
retarded time seen by the observer lies past the switch-on ramp, the field
at a fixed point is a pure sinusoid at the source's field frequency, so
two quadrature evaluations a quarter period apart determine the
max-over-period exactly; no phase grid is involved.  Static sources have
no magnetic field and are swept on |E| instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import period_max_amplitude
from .errors import MeshTooCoarse, NonPositiveSample
from .fields import (
    PROVENANCE_POTENTIAL,
    PROVENANCE_SOURCE_TERM,
    PipelineFieldSampler,
    SourceTermFieldSampler,
)
from .quadrature import (
    QuadratureSpec,
    potential_jacobian,
)
from .sources import SourceModel, SpacetimePoint, support_bounds
from .spheremesh import MAX_LEVEL, build_sphere_mesh

__all__ = [
    "PowerLawFit",
    "RadialSweep",
    "ScalingReport",
    "SweepResult",
    "BeamMap",
    "fit_power_law",
    "envelope_at",
    "sweep_field",
    "gradient_sweep",
    "beam_solid_angle",
    "find_beam_peak",
    "geometric_radii",
]


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through (log r, log y)."""

    exponent: float
    amplitude: float
    exponent_stderr: float
    r_squared: float
    n_points: int


@dataclass(frozen=True)
class RadialSweep:
    """A ray of observation radii: direction plus a geometric progression."""

    theta: float
    phi: float
    radii: tuple

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if len(radii) < 4:
            raise ValueError("a sweep needs at least four radii")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly ascending")
        if radii[0] <= 0:
            raise ValueError("radii must be positive")

    @property
    def direction(self):
        st, ct = math.sin(self.theta), math.cos(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), ct])

    @classmethod
    def from_direction(cls, direction, radii):
        d = np.asarray(direction, dtype=float).reshape(3)
        d = d / np.linalg.norm(d)
        theta = math.acos(max(-1.0, min(1.0, d[2])))
        phi = math.atan2(d[1], d[0])
        return cls(theta=theta, phi=phi, radii=tuple(radii))

    def check_far(self, src: SourceModel, factor: float = 10.0):
        rb = support_bounds(src)
        if rb > 0 and self.radii[0] < factor * rb:
            raise ValueError(
                f"smallest sweep radius {self.radii[0]:g} is closer than "
                f"{factor:g} support radii ({factor * rb:g})")


def geometric_radii(r0: float, ratio: float, n: int):
    """Radii r0 * ratio**k for k in [0, n)."""
    if not 1.0 < ratio <= 2.0 + 1e-12:
        raise ValueError("progression ratio must lie in (1, 2]")
    return tuple(r0 * ratio ** k for k in range(n))


@dataclass
class SweepResult:
    radii: np.ndarray
    values: np.ndarray
    direction: np.ndarray
    times: np.ndarray
    quantity: str
    pipeline: str = PROVENANCE_POTENTIAL
    flags: tuple = ()

    def fit(self) -> PowerLawFit:
        return fit_power_law(self.radii, self.values)

    def report(self) -> "ScalingReport":
        return ScalingReport.from_fit(self.fit(), self.quantity,
                                      float(self.radii[0]), float(self.radii[-1]))


@dataclass(frozen=True)
class ScalingReport:
    """A fitted exponent with its provenance, ready for run output."""

    quantity: str
    exponent: float
    stderr: float
    r_squared: float
    r_min: float
    r_max: float
    n_points: int

    @classmethod
    def from_fit(cls, fit: PowerLawFit, quantity: str, r_min: float, r_max: float):
        return cls(quantity=quantity, exponent=fit.exponent, stderr=fit.exponent_stderr,
                   r_squared=fit.r_squared, r_min=r_min, r_max=r_max,
                   n_points=fit.n_points)


@dataclass
class BeamMap:
    """Envelope sampled over a sphere of directions at fixed radius."""

    mesh: object
    values: np.ndarray
    radius: float
    max_value: float
    peak_direction: np.ndarray
    solid_angle: float
    n_cells_above: int
    threshold: float
    flags: tuple = ()


def fit_power_law(r, y) -> PowerLawFit:
    """Fit y = A r^p by ordinary least squares in log-log space.

    Raises NonPositiveSample when a sample cannot be log-transformed, so a
    silent zero never turns into a fake exponent.
    """
    r = np.asarray(r, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if r.shape != y.shape or r.size < 2:
        raise ValueError("need at least two matching (r, y) samples")
    if np.any(~np.isfinite(r)) or np.any(~np.isfinite(y)):
        raise NonPositiveSample("non-finite sample in power-law fit")
    if np.any(r <= 0) or np.any(y <= 0):
        raise NonPositiveSample("power-law fit requires strictly positive samples")
    x = np.log(r)
    z = np.log(y)
    n = x.size
    xbar, zbar = x.mean(), z.mean()
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("all radii are identical")
    slope = float(((x - xbar) * (z - zbar)).sum()) / sxx
    intercept = zbar - slope * xbar
    resid = z - (slope * x + intercept)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((z - zbar) ** 2).sum())
    if n > 2:
        stderr = math.sqrt(ss_res / (n - 2) / sxx)
    else:
        stderr = float("nan")
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(exponent=slope, amplitude=math.exp(intercept),
                       exponent_stderr=stderr, r_squared=r2, n_points=n)


def _field_sampler(src, spec, workers, pipeline):
    if pipeline == PROVENANCE_POTENTIAL:
        return PipelineFieldSampler(src, spec, workers=workers)
    if pipeline == PROVENANCE_SOURCE_TERM:
        return SourceTermFieldSampler(src, spec, workers=workers)
    raise ValueError(f"unknown pipeline {pipeline!r}")


def _steady_times(src: SourceModel, pts):
    return np.array([src.steady_time(float(np.linalg.norm(p))) for p in pts])


def envelope_at(src: SourceModel, pts, spec: QuadratureSpec = None, workers=None,
                sampler=None, times=None, pipeline: str = PROVENANCE_POTENTIAL):
    """Steady-state max-over-period |B| at each of the given positions."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    if sampler is None:
        sampler = _field_sampler(src, spec, workers, pipeline)
    period = src.field_period()
    t0 = np.asarray(times, dtype=float) if times is not None else _steady_times(src, pts)
    ev = np.concatenate([pts, t0[:, None]], axis=1)
    if not period or not math.isfinite(period):  # static source: nothing oscillates
        B = sampler(ev)
        return np.linalg.norm(B, axis=1), sampler
    ev2 = ev.copy()
    ev2[:, 3] += 0.25 * period
    B = sampler(np.concatenate([ev, ev2], axis=0))
    n = pts.shape[0]
    Ba, Bb = B[:n], B[n:]
    # rotate the quarter-period pair back to cos/sin parts of the cycle
    w = 2.0 * math.pi / period
    ph = w * t0
    c, s = np.cos(ph)[:, None], np.sin(ph)[:, None]
    C = Ba * c - Bb * s
    S = Ba * s + Bb * c
    env = np.array([period_max_amplitude(C[i], S[i]) for i in range(n)])
    return env, sampler


def _static_E_magnitude(src: SourceModel, pts, spec):
    out = np.empty(pts.shape[0])
    for i, x in enumerate(pts):
        p = SpacetimePoint(x=x, t=0.0)
        jac = potential_jacobian(src, p, spec=spec)
        E = -(jac.grad_A0 + jac.dt_A)
        out[i] = float(np.linalg.norm(E))
    return out


def sweep_field(src: SourceModel, radii, direction=None, spec: QuadratureSpec = None,
                workers=None, pipeline: str = PROVENANCE_POTENTIAL) -> SweepResult:
    """Envelope along a ray, one value per radius.

    ``pipeline`` selects how B is produced: differentiated potential or the
    direct curl-of-current integral.  Radiating sources are swept on the
    period-max |B|; static ones on |E|, which is what decays at all.
    """
    if isinstance(radii, RadialSweep):
        sweep = radii
        radii = np.asarray(sweep.radii)
        d = sweep.direction
    else:
        radii = np.asarray(radii, dtype=float).ravel()
        if direction is None:
            raise ValueError("direction is required when radii is a plain sequence")
        d = np.asarray(direction, dtype=float).reshape(3)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    nd = np.linalg.norm(d)
    if not nd > 0:
        raise ValueError("direction must be nonzero")
    d = d / nd
    pts = radii[:, None] * d[None, :]
    times = _steady_times(src, pts)

    if src.characteristic_frequency() == 0.0:
        values = _static_E_magnitude(src, pts, spec)
        return SweepResult(radii=radii, values=values, direction=d, times=times,
                           quantity="field", pipeline=PROVENANCE_POTENTIAL, flags=())

    values, sampler = envelope_at(src, pts, spec=spec, workers=workers,
                                  times=times, pipeline=pipeline)
    return SweepResult(radii=radii, values=values, direction=d, times=times,
                       quantity="field", pipeline=pipeline,
                       flags=tuple(sampler.flags))


def gradient_sweep(src: SourceModel, radii, direction=None, spec: QuadratureSpec = None,
                   workers=None, rel_step: float = 1e-2,
                   pipeline: str = PROVENANCE_POTENTIAL) -> SweepResult:
    """Magnitude of the spatial gradient of the field envelope along a ray.

    The differenced quantity is the steady envelope (max-over-period |B|,
    or |E| for static sources), not an instantaneous field: the envelope
    is what carries the distance scaling, free of phase ambiguity.
    Central differences with a step proportional to the local radius.
    """
    if isinstance(radii, RadialSweep):
        sweep = radii
        radii = np.asarray(sweep.radii)
        d = sweep.direction
    else:
        radii = np.asarray(radii, dtype=float).ravel()
        if direction is None:
            raise ValueError("direction is required when radii is a plain sequence")
        d = np.asarray(direction, dtype=float).reshape(3)
    d = d / np.linalg.norm(d)
    base = radii[:, None] * d[None, :]
    hs = rel_step * radii

    stencil = np.empty((len(radii), 3, 2, 3))
    for i in range(len(radii)):
        for axis in range(3):
            for k, sgn in enumerate((1.0, -1.0)):
                q = base[i].copy()
                q[axis] += sgn * hs[i]
                stencil[i, axis, k] = q
    flat = stencil.reshape(-1, 3)

    radiating = src.characteristic_frequency() > 0
    if radiating:
        # one frozen-mesh sampler for the whole stencil keeps quadrature
        # error correlated, so it cancels in the differences; the time must
        # be steady at the outermost stencil point, not just the base point
        t_base = np.array([src.steady_time(float(r + h)) for r, h in zip(radii, hs)])
        times = np.repeat(t_base, 6)
        values, sampler = envelope_at(src, flat, spec=spec, workers=workers,
                                      times=times, pipeline=pipeline)
        flags = tuple(sampler.flags)
    else:
        values = _static_E_magnitude(src, flat, spec)
        flags = ()

    values = values.reshape(len(radii), 3, 2)
    grads = (values[:, :, 0] - values[:, :, 1]) / (2.0 * hs[:, None])
    gmag = np.linalg.norm(grads, axis=1)
    t_out = _steady_times(src, base) if radiating else np.zeros(len(radii))
    return SweepResult(radii=radii, values=gmag, direction=d, times=t_out,
                       quantity="gradient",
                       pipeline=pipeline if radiating else PROVENANCE_POTENTIAL,
                       flags=flags)


def beam_solid_angle(src: SourceModel, radius: float, level: int = 4,
                     threshold: float = 0.5, min_cells: int = 16,
                     spec: QuadratureSpec = None, workers=None,
                     auto_refine: bool = False) -> BeamMap:
    """Solid angle of the region where the envelope exceeds threshold * max.

    One envelope sample per mesh face (at the face center).  If fewer than
    ``min_cells`` faces clear the threshold the beam is under-resolved:
    with ``auto_refine`` the mesh level is raised until it is resolved,
    otherwise MeshTooCoarse is raised carrying the coarse map.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    lvl = level
    while True:
        mesh = build_sphere_mesh(np.zeros(3), radius, lvl, rule="centroid")
        values, sampler = envelope_at(src, mesh.nodes, spec=spec, workers=workers)
        vmax = float(values.max())
        above = values >= threshold * vmax
        n_above = int(above.sum())
        omega = float(mesh.weights[above].sum()) / radius ** 2
        peak = mesh.normals[int(np.argmax(values))]
        result = BeamMap(mesh=mesh, values=values, radius=float(radius),
                         max_value=vmax, peak_direction=peak, solid_angle=omega,
                         n_cells_above=n_above, threshold=threshold,
                         flags=tuple(sampler.flags))
        if n_above >= min_cells:
            return result
        if auto_refine and lvl < MAX_LEVEL:
            lvl += 1
            continue
        raise MeshTooCoarse(
            f"only {n_above} mesh cells above {threshold:g} of peak "
            f"(need {min_cells}); raise the mesh level", result=result)


def find_beam_peak(src: SourceModel, radius: float, level: int = 4,
                   n_zoom: int = 6, spec: QuadratureSpec = None, workers=None):
    """Direction and value of the envelope maximum on a sphere.

    Coarse icosahedral scan followed by successive grid zooms around the
    running best direction.  Deterministic; angular accuracy is the coarse
    face size divided by 2**n_zoom.
    """
    mesh = build_sphere_mesh(np.zeros(3), radius, level, rule="centroid")
    values, sampler = envelope_at(src, mesh.nodes, spec=spec, workers=workers)
    best = int(np.argmax(values))
    u = mesh.normals[best]
    vbest = float(values[best])

    width = 2.0 * math.sqrt(4.0 * math.pi / mesh.n_faces)
    for _ in range(n_zoom):
        a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(u, a)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u, e1)
        ang = np.linspace(-width, width, 5)
        dirs = []
        for da in ang:
            for db in ang:
                v = u + da * e1 + db * e2
                dirs.append(v / np.linalg.norm(v))
        dirs = np.asarray(dirs)
        vals, _ = envelope_at(src, radius * dirs, spec=spec, workers=workers,
                              sampler=sampler)
        k = int(np.argmax(vals))
        if vals[k] > vbest:
            vbest = float(vals[k])
            u = dirs[k]
        width *= 0.5
    return u, vbest
