"""Retarded free-space propagation: A^mu(x_P, t_P) = int d3x j^mu(x, t_P - R)/R.

The volume integral runs over the source support in cylindrical coordinates
aligned with the rotation axis, Gauss-Legendre per dimension, with node
counts doubled until successive estimates agree to a relative tolerance.
The azimuthal base count scales with the source's advertised oscillation
bandwidth m(1 + omega r_max / c).

Two evaluation modes matter for accuracy downstream:

* adaptive - refine until converged, report the last-refinement delta as
  the error estimate and flag non-convergence;
* frozen mesh - evaluate a whole finite-difference stencil on one fixed
  node set, keeping the quadrature error smoothly correlated across the
  stencil so that differencing cancels most of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, partial

import numpy as np

from .errors import FLAG_QUAD_NOT_CONVERGED
from .parallel import NODE_CHUNK, map_blocks, resolve_workers
from .sources import SourceModel, SpacetimePoint, UnitSystem

__all__ = [
    "retarded_time",
    "RetardedKernel",
    "QuadratureSpec",
    "CylindricalMesh",
    "FourPotentialSample",
    "PotentialJacobian",
    "RetardedPotentialSampler",
    "RetardedCurlSampler",
    "GaugeTransformedPotential",
    "retarded_potential",
    "potential_jacobian",
    "jacobian_from_sampler",
    "differentiation_step",
]

_HARD_NODE_CAP = 6_000_000


def retarded_time(x_P, x_src, t_P):
    """Emission time t_P - |x_P - x|/c seen at x_P from source point x."""
    x_P = np.asarray(x_P, dtype=float)
    x_src = np.asarray(x_src, dtype=float)
    d = x_P - x_src
    return np.asarray(t_P, dtype=float) - np.sqrt(np.einsum("...i,...i->...", d, d))


@dataclass(frozen=True)
class RetardedKernel:
    """Free-space retarded Green's kernel: support on the backward light cone,
    amplitude 1/R."""

    units: UnitSystem = field(default_factory=UnitSystem)

    def amplitude(self, R):
        return 1.0 / np.asarray(R, dtype=float)

    def emission_time(self, x_P, x_src, t_P):
        return retarded_time(x_P, x_src, t_P)


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre product rule over the support, with doubling refinement."""

    n_r: int = 8
    n_phi: int = 16
    n_z: int = 8
    eps: float = 1.0e-6
    max_refinements: int = 4
    nodes_per_cycle: float = 4.0

    def __post_init__(self):
        if min(self.n_r, self.n_phi, self.n_z) < 2:
            raise ValueError("quadrature needs at least 2 nodes per dimension")
        if not (self.eps > 0):
            raise ValueError("eps must be positive")

    def base_counts(self, src: SourceModel):
        n_phi = max(self.n_phi, int(math.ceil(self.nodes_per_cycle * src.azimuthal_cycles())) + 4)
        r_floor, phi_floor, z_floor = src.quadrature_resolution()
        return max(self.n_r, r_floor), max(n_phi, phi_floor), max(self.n_z, z_floor)


@lru_cache(maxsize=256)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class CylindricalMesh:
    """Concrete product-rule node set over a cylindrical support region."""

    nodes: np.ndarray      # (N, 3) cartesian
    weights: np.ndarray    # (N,) includes the r of the volume element
    counts: tuple          # (n_r, n_phi, n_z)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @classmethod
    def build(cls, support, counts):
        r_min, r_max, z_half = support.cylinder
        n_r, n_phi, n_z = counts
        xr, wr = _leggauss(n_r)
        r = 0.5 * (r_max - r_min) * xr + 0.5 * (r_max + r_min)
        wr = 0.5 * (r_max - r_min) * wr
        xp, wp = _leggauss(n_phi)
        phi = math.pi * (xp + 1.0)
        wp = math.pi * wp
        xz, wz = _leggauss(n_z)
        z = z_half * xz
        wz = z_half * wz
        R, P, Z = np.meshgrid(r, phi, z, indexing="ij")
        WR, WP, WZ = np.meshgrid(wr, wp, wz, indexing="ij")
        nodes = np.stack([(R * np.cos(P)).ravel(), (R * np.sin(P)).ravel(), Z.ravel()], axis=-1)
        weights = (WR * WP * WZ * R).ravel()
        return cls(nodes=nodes, weights=weights, counts=(n_r, n_phi, n_z))

    def refined(self, support):
        n_r, n_phi, n_z = self.counts
        return CylindricalMesh.build(support, (2 * n_r, 2 * n_phi, 2 * n_z))


@dataclass
class FourPotentialSample:
    """Four-potential at one event, with quadrature error estimate."""

    A0: float
    A: np.ndarray
    point: SpacetimePoint
    error: float = 0.0
    flags: tuple = ()


@dataclass
class PotentialJacobian:
    """Value and first derivatives of the four-potential at one event.

    grad_A[i, j] = dA_i/dx_j; time derivatives are with respect to t_P.
    """

    A0: float
    A: np.ndarray
    grad_A0: np.ndarray     # (3,)
    grad_A: np.ndarray      # (3, 3)
    dt_A0: float
    dt_A: np.ndarray        # (3,)
    error: float = 0.0
    flags: tuple = ()


def _silent_mask(src: SourceModel, points):
    """True where the observation event provably precedes any source signal."""
    quiet = getattr(src, "quiescent_before", None)
    quiet_t = quiet() if callable(quiet) else src.delay
    if quiet_t is None or not np.isfinite(quiet_t):
        static_like = src.characteristic_frequency() == 0.0 and src.switch_on == 0.0
        if static_like:
            return np.zeros(points.shape[0], dtype=bool)
        quiet_t = src.delay
    if src.characteristic_frequency() == 0.0 and src.switch_on == 0.0:
        return np.zeros(points.shape[0], dtype=bool)
    rb = src.support().bounding_radius
    r = np.linalg.norm(points[:, :3], axis=1)
    d_min = np.maximum(0.0, r - rb)
    return points[:, 3] - d_min <= quiet_t


def _kernel_block(points, src=None, quantity=None, nodes=None, weights=None, fd_step=None):
    """Reduce the retarded integrand over all source nodes for a point block.

    Chunking over nodes is fixed (NODE_CHUNK) so the floating-point reduction
    order never depends on block shapes or worker counts.
    """
    n_pts = points.shape[0]
    if quantity == "four_potential":
        out0 = np.zeros(n_pts)
        out = np.zeros((n_pts, 3))
    else:
        out0 = None
        out = np.zeros((n_pts, 3))
    if n_pts == 0:
        return (out0, out) if out0 is not None else (out,)
    has_charge = getattr(src, "has_charge", None)
    if has_charge is None:
        has_charge = type(src).charge is not SourceModel.charge
    xs = points[:, :3]
    ts = points[:, 3]
    for lo in range(0, nodes.shape[0], NODE_CHUNK):
        nd = nodes[lo:lo + NODE_CHUNK]
        w = weights[lo:lo + NODE_CHUNK]
        # Spatial factors hoisted once per chunk; only retarded-time trig
        # remains in the pair loop.  Cost is 1/OBS_BLOCK of the pair work.
        basis = src.kernel_basis(nd, fd_step)
        d = xs[:, None, :] - nd[None, :, :]
        R = np.sqrt(np.einsum("pnk,pnk->pn", d, d))
        t_ret = ts[:, None] - R
        w_over_R = w[None, :] / R
        if quantity == "four_potential":
            out += np.einsum("pn,pnk->pk", w_over_R, basis.current(t_ret))
            if has_charge:
                out0 += np.einsum("pn,pn->p", w_over_R, basis.charge(t_ret))
        else:
            out += np.einsum("pn,pnk->pk", w_over_R, basis.curl(t_ret))
    return (out0, out) if out0 is not None else (out,)


class _RetardedIntegralBase:
    """Shared adaptive/frozen-mesh evaluation for retarded volume integrals."""

    quantity = None

    def __init__(self, src: SourceModel, spec: QuadratureSpec = None, workers=None,
                 fd_step=None):
        self.src = src
        self.spec = spec if spec is not None else QuadratureSpec()
        self.workers = resolve_workers(workers)
        self.fd_step = fd_step

    def base_mesh(self) -> CylindricalMesh:
        return CylindricalMesh.build(self.src.support(), self.spec.base_counts(self.src))

    def _eval_fixed(self, points, mesh: CylindricalMesh):
        points = np.asarray(points, dtype=float).reshape(-1, 4)
        silent = _silent_mask(self.src, points)
        fn = partial(_kernel_block, src=self.src, quantity=self.quantity,
                     nodes=mesh.nodes, weights=mesh.weights, fd_step=self.fd_step)
        if silent.all():
            zero0 = np.zeros(points.shape[0])
            zero = np.zeros((points.shape[0], 3))
            return (zero0, zero) if self.quantity == "four_potential" else (zero,)
        if not silent.any():
            return map_blocks(fn, points, self.workers)
        active = np.flatnonzero(~silent)
        parts_active = map_blocks(fn, points[active], self.workers)
        parts = []
        for pa in parts_active:
            full = np.zeros((points.shape[0],) + pa.shape[1:])
            full[active] = pa
            parts.append(full)
        return tuple(parts)

    @staticmethod
    def _stack(parts):
        cols = [p[:, None] if p.ndim == 1 else p for p in parts]
        return np.concatenate(cols, axis=1)

    def _adaptive(self, points):
        """Refine by doubling until the batch-relative change is below eps."""
        points = np.asarray(points, dtype=float).reshape(-1, 4)
        support = self.src.support()
        mesh = self.base_mesh()
        prev = self._eval_fixed(points, mesh)
        flags = ()
        err = np.zeros(points.shape[0])
        converged = False
        for _ in range(self.spec.max_refinements):
            fine = mesh.refined(support)
            if fine.size > _HARD_NODE_CAP:
                break
            cur = self._eval_fixed(points, fine)
            delta = np.linalg.norm(self._stack(cur) - self._stack(prev), axis=1)
            scale = np.max(np.linalg.norm(self._stack(cur), axis=1), initial=0.0)
            err = delta
            if scale == 0.0 or np.max(delta) <= self.spec.eps * scale:
                converged = True
                # delta certifies the coarse mesh to eps, so that is the one
                # worth freezing; the refined values are still the better
                # answer for this batch, so report those.
                prev = cur
                break
            mesh, prev = fine, cur
        if not converged:
            flags = (FLAG_QUAD_NOT_CONVERGED,)
        return prev, err, flags, mesh

    def choose_mesh(self, points):
        """Adapt on a representative batch; return the converged mesh."""
        _, _, flags, mesh = self._adaptive(points)
        return mesh, flags


class RetardedPotentialSampler(_RetardedIntegralBase):
    """Evaluates the retarded four-potential of a source at event batches."""

    quantity = "four_potential"

    def potential(self, points, mesh: CylindricalMesh = None):
        """(A0, A, err, flags) at points (N, 4); adaptive unless a mesh is frozen."""
        if mesh is not None:
            A0, A = self._eval_fixed(points, mesh)
            return A0, A, np.zeros(A0.shape), ()
        (A0, A), err, flags, _ = self._adaptive(points)
        return A0, A, err, flags


class RetardedCurlSampler(_RetardedIntegralBase):
    """Evaluates int d3x [curl j](x, t_ret)/R, the source-term field route."""

    quantity = "curl_current"

    def curl_integral(self, points, mesh: CylindricalMesh = None):
        if mesh is not None:
            (B,) = self._eval_fixed(points, mesh)
            return B, np.zeros(B.shape[0]), ()
        (B,), err, flags, _ = self._adaptive(points)
        return B, err, flags


class GaugeTransformedPotential:
    """Potential sampler shifted by an exact gauge function.

    A -> A + grad Lambda, A0 -> A0 - dLambda/dt, with Lambda supplied in
    closed form, so the transformation adds no quadrature error.
    """

    def __init__(self, base, gauge):
        self.base = base
        self.gauge = gauge

    def choose_mesh(self, points):
        if hasattr(self.base, "choose_mesh"):
            return self.base.choose_mesh(points)
        return None, ()

    def potential(self, points, mesh=None):
        points = np.asarray(points, dtype=float).reshape(-1, 4)
        if hasattr(self.base, "potential"):
            A0, A, err, flags = self.base.potential(points, mesh=mesh)
        else:
            A0, A = self.base(points)
            err, flags = np.zeros(A0.shape), ()
        xyz, t = points[:, :3], points[:, 3]
        A = A + self.gauge.gradient(xyz, t)
        A0 = A0 - self.gauge.dt(xyz, t)
        return A0, A, err, flags


def retarded_potential(src: SourceModel, p: SpacetimePoint, spec: QuadratureSpec = None,
                       workers=None) -> FourPotentialSample:
    """Retarded four-potential at a single event, adaptively refined."""
    sampler = RetardedPotentialSampler(src, spec, workers=workers)
    A0, A, err, flags = sampler.potential(np.array([[p.x[0], p.x[1], p.x[2], p.t]]))
    return FourPotentialSample(A0=float(A0[0]), A=A[0], point=p,
                               error=float(err[0]), flags=flags)


def differentiation_step(src: SourceModel, p: SpacetimePoint = None, scale=1.0e-3) -> float:
    """Default finite-difference step: scale times the local wavelength c/omega.

    Static sources have no wavelength; fall back to the support diameter.
    """
    w = src.characteristic_frequency()
    if w > 0:
        return scale / w
    return scale * 2.0 * src.support().bounding_radius


def _stencil_points(p: SpacetimePoint, h: float):
    """Center plus +-h and +-h/2 along x, y, z, t: 17 events."""
    base = np.array([p.x[0], p.x[1], p.x[2], p.t])
    pts = [base]
    for axis in range(4):
        for step in (h, 0.5 * h):
            for sgn in (1.0, -1.0):
                q = base.copy()
                q[axis] += sgn * step
                pts.append(q)
    return np.asarray(pts)


def jacobian_from_sampler(sampler, p: SpacetimePoint, h: float,
                          richardson: bool = True) -> PotentialJacobian:
    """First derivatives of a potential sampler by Richardson-extrapolated
    central differences, evaluated as one batch (frozen mesh if available)."""
    mesh, mesh_flags = (None, ())
    if hasattr(sampler, "choose_mesh"):
        center = np.array([[p.x[0], p.x[1], p.x[2], p.t]])
        mesh, mesh_flags = sampler.choose_mesh(center)
    pts = _stencil_points(p, h)
    A0, A, err, flags = sampler.potential(pts, mesh=mesh)
    vals = np.concatenate([A0[:, None], A], axis=1)  # (17, 4) columns: A0, Ax, Ay, Az

    derivs = np.empty((4, 4))  # [coord axis, component]
    fd_err = 0.0
    for axis in range(4):
        o = 1 + 4 * axis
        d_h = (vals[o] - vals[o + 1]) / (2.0 * h)
        d_h2 = (vals[o + 2] - vals[o + 3]) / h
        if richardson:
            derivs[axis] = (4.0 * d_h2 - d_h) / 3.0
            fd_err = max(fd_err, float(np.max(np.abs(d_h2 - d_h)) / 3.0))
        else:
            derivs[axis] = d_h2
            fd_err = max(fd_err, float(np.max(np.abs(d_h2 - d_h))))
    quad_err = float(np.max(err)) if np.size(err) else 0.0
    return PotentialJacobian(
        A0=float(vals[0, 0]),
        A=vals[0, 1:].copy(),
        grad_A0=derivs[:3, 0].copy(),
        grad_A=derivs[:3, 1:].T.copy(),
        dt_A0=float(derivs[3, 0]),
        dt_A=derivs[3, 1:].copy(),
        error=fd_err + quad_err,
        flags=tuple(mesh_flags) + tuple(flags),
    )


def potential_jacobian(src: SourceModel, p: SpacetimePoint, spec: QuadratureSpec = None,
                       h: float = None, richardson: bool = True,
                       workers=None) -> PotentialJacobian:
    """Jacobian of the retarded four-potential at an event.

    The quadrature mesh is adapted once at the center and frozen across the
    stencil, so quadrature error stays correlated and mostly cancels in the
    differences.
    """
    sampler = RetardedPotentialSampler(src, spec, workers=workers)
    if h is None:
        h = differentiation_step(src, p)
    return jacobian_from_sampler(sampler, p, h, richardson=richardson)
