"""Consistency checks: wave-operator residuals and causal onset.

These are measurements, not assertions.  Each check returns a report with
the raw numbers and a normalized figure of merit; deciding what passes is
the caller's business (the test suite and the CLI runner both do).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import PipelineFieldSampler
from .quadrature import QuadratureSpec, RetardedPotentialSampler, differentiation_step
from .sources import SourceModel, SpacetimePoint, curl_current_batch, support_bounds

__all__ = [
    "ResidualGrid",
    "WaveResidualReport",
    "OnsetReport",
    "dalembertian_residual_A",
    "dalembertian_residual_B",
    "initial_condition_check",
]


@dataclass(frozen=True)
class ResidualGrid:
    """Axis-aligned second-difference stencil around a probe event.

    Two spacings: h_x for the three spatial axes, h_t for time, with
    c h_t <= h_x / 2 so the temporal truncation error never dominates.
    Offsets run over {-2, -1, 0, +1, +2} steps per axis; only the
    axis-aligned cross enters the central differences.
    """

    h_x: float
    h_t: float = None

    def __post_init__(self):
        if self.h_t is None:
            object.__setattr__(self, "h_t", 0.5 * self.h_x)
        if not (self.h_x > 0 and self.h_t > 0):
            raise ValueError("stencil spacings must be positive")
        if self.h_t > 0.5 * self.h_x + 1e-15 * self.h_x:
            raise ValueError("require c*h_t <= h_x/2")

    def events(self, point: SpacetimePoint):
        """17 events: center, then +/-1, +/-2 steps along x, y, z, t."""
        base = np.array([point.x[0], point.x[1], point.x[2], point.t])
        out = [base]
        for axis in range(4):
            step = self.h_x if axis < 3 else self.h_t
            for mult in (1.0, -1.0, 2.0, -2.0):
                q = base.copy()
                q[axis] += mult * step
                out.append(q)
        return np.asarray(out)

    def box(self, vals):
        """Wave operator (laplacian minus d^2/dt^2) at spacing (h, h_t) and doubled."""
        vals = np.asarray(vals, dtype=float)
        c = vals[0]

        def second(axis, step, wide):
            o = 1 + 4 * axis
            if wide:
                return (vals[o + 2] + vals[o + 3] - 2.0 * c) / (2.0 * step) ** 2
            return (vals[o] + vals[o + 1] - 2.0 * c) / step ** 2

        fine = sum(second(a, self.h_x, False) for a in range(3)) - second(3, self.h_t, False)
        coarse = sum(second(a, self.h_x, True) for a in range(3)) - second(3, self.h_t, True)
        return fine, coarse


@dataclass
class WaveResidualReport:
    """How well a computed quantity satisfies its wave equation at one event."""

    point: SpacetimePoint
    quantity: str
    grid: ResidualGrid
    residual: np.ndarray        # box(field) - expected, at the fine spacing
    residual_coarse: np.ndarray
    expected: np.ndarray        # -4 pi (source density)
    normalized: float
    normalized_coarse: float
    observed_order: float
    inside_support: bool
    flags: tuple = ()


@dataclass
class OnsetReport:
    point: SpacetimePoint
    t_arrival: float
    probe_times: np.ndarray
    probe_norms: np.ndarray
    max_before: float
    measured_onset: float
    steady_norm: float
    flags: tuple = ()


def default_grid(src: SourceModel, point: SpacetimePoint = None) -> ResidualGrid:
    h = differentiation_step(src, point, scale=2e-3)
    return ResidualGrid(h_x=h)


def _finish(point, quantity, grid, fine, coarse, expected, inside, flags, vals, h,
            period=None):
    res_h = fine - expected
    res_2h = coarse - expected
    period = period if period else float("inf")
    if inside:
        # Local source magnitude; the measured box guards the zero-source case.
        scale = max(float(np.max(np.abs(fine))), float(np.max(np.abs(expected))))
    else:
        # Field curvature scale |field| / ell^2, ell the smaller of wavelength
        # and probe radius (the static limit has no wavelength).
        ell = min(period, float(np.linalg.norm(point.x)))
        scale = float(np.max(np.abs(vals))) / ell ** 2 if ell > 0 else 0.0
    if scale == 0.0:
        curv = float(np.max(np.abs(vals - vals[0]))) / h ** 2
        scale = max(curv, 1e-300)
    e_h = float(np.linalg.norm(res_h))
    e_2h = float(np.linalg.norm(res_2h))
    order = math.log2(e_2h / e_h) if e_h > 0 and e_2h > 0 else float("nan")
    return WaveResidualReport(
        point=point, quantity=quantity, grid=grid,
        residual=res_h, residual_coarse=res_2h, expected=expected,
        normalized=float(np.max(np.abs(res_h))) / scale,
        normalized_coarse=float(np.max(np.abs(res_2h))) / scale,
        observed_order=order, inside_support=inside, flags=flags,
    )


def dalembertian_residual_A(src: SourceModel, point: SpacetimePoint,
                            grid: ResidualGrid = None, spec: QuadratureSpec = None,
                            workers=None) -> WaveResidualReport:
    """Residual of the potential wave equation, all four components at once.

    The 17-event stencil is evaluated on a single frozen quadrature mesh so
    quadrature error, a smooth function of the observation event, cancels
    in the second differences instead of being amplified by 1/h^2.
    """
    if grid is None:
        grid = default_grid(src, point)
    sampler = RetardedPotentialSampler(src, spec, workers=workers)
    events = grid.events(point)
    mesh, mesh_flags = sampler.choose_mesh(events[:1])
    A0, A, _, flags = sampler.potential(events, mesh=mesh)
    vals = np.concatenate([A0[:, None], A], axis=1)

    fine, coarse = grid.box(vals)
    rho = float(src.charge(point.x[None, :], point.t)[0])
    j = src.current(point.x[None, :], point.t)[0]
    expected = -4.0 * math.pi * np.concatenate([[rho], j])

    inside = float(np.linalg.norm(point.x)) <= support_bounds(src)
    all_flags = tuple(dict.fromkeys(tuple(mesh_flags) + tuple(flags)))
    return _finish(point, "A", grid, fine, coarse, expected, inside, all_flags,
                   vals, grid.h_x, period=src.field_period())


def dalembertian_residual_B(src: SourceModel, point: SpacetimePoint,
                            grid: ResidualGrid = None, spec: QuadratureSpec = None,
                            workers=None, fd_step=None) -> WaveResidualReport:
    """Residual of the field-level wave equation: box(B) + 4 pi curl j.

    B comes from the potential pipeline (curl of A), so this certifies that
    the delivered field, not some internal intermediate, solves its
    governing equation.
    """
    if grid is None:
        grid = default_grid(src, point)
    field = PipelineFieldSampler(src, spec, workers=workers,
                                 h=0.25 * grid.h_t, richardson=True)
    events = grid.events(point)
    vals = np.asarray(field(events))

    fine, coarse = grid.box(vals)
    cj = curl_current_batch(src, point.x[None, :], point.t, fd_step=fd_step)[0]
    expected = -4.0 * math.pi * cj

    inside = float(np.linalg.norm(point.x)) <= support_bounds(src)
    return _finish(point, "B", grid, fine, coarse, expected, inside,
                   tuple(field.flags), vals, grid.h_x, period=src.field_period())


def initial_condition_check(src: SourceModel, x, spec: QuadratureSpec = None,
                            workers=None, n_probe: int = 17,
                            active_fraction: float = 1e-6,
                            n_bisect: int = 30) -> OnsetReport:
    """Verify the potential is quiescent before first light and wakes on time.

    Probes the four-potential norm on a time grid straddling the predicted
    arrival time delay + max(0, |x| - source radius).  Before arrival the
    integrand vanishes node-by-node, so the measured values must be exact
    zeros, not merely small.  The onset is then located by bisection.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    r = float(np.linalg.norm(x))
    rb = support_bounds(src)
    t_arr = src.delay + max(0.0, r - rb)
    tau = src.switch_on if src.switch_on > 0 else 1.0
    times = t_arr + tau * np.linspace(-0.5, 1.5, n_probe)

    sampler = RetardedPotentialSampler(src, spec, workers=workers)

    def norm_at(ts):
        ev = np.concatenate([np.tile(x, (len(ts), 1)), np.asarray(ts)[:, None]], axis=1)
        A0, A, _, f = sampler.potential(ev)
        return np.sqrt(A0 ** 2 + np.einsum("ij,ij->i", A, A)), f

    norms, flags = norm_at(times)

    period = src.field_period()
    steady_t = src.steady_time(r) + (0.25 * period if period else 0.0)
    steady, f2 = norm_at([steady_t])
    steady = float(steady[0])

    before = times < t_arr
    max_before = float(norms[before].max()) if before.any() else 0.0

    thresh = active_fraction * max(steady, 1e-300)
    active = norms > thresh
    if active.any():
        hi = float(times[active][0])
        lo = float(times[~active][times[~active] < hi].max()) if (~active).any() else times[0]
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            v, _ = norm_at([mid])
            if v[0] > thresh:
                hi = mid
            else:
                lo = mid
        onset = hi
    else:
        onset = float("inf")

    return OnsetReport(
        point=SpacetimePoint(x=x, t=t_arr), t_arrival=t_arr,
        probe_times=times, probe_norms=norms, max_before=max_before,
        measured_onset=onset, steady_norm=steady,
        flags=tuple(dict.fromkeys(tuple(flags) + tuple(f2))),
    )
