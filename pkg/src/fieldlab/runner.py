"""Scenario execution: orchestration, output files, exit discipline.

Exit codes: 0 success, 1 configuration problems (raised before this module
runs), 2 numerical convergence failure beyond tolerance, 3 identity-check
failure.  A convergence failure masks identity judgments, so 2 wins when
both would apply.

Output is deterministic for a fixed config: fixed quadrature reduction
order regardless of worker count, fixed float formatting, sorted JSON keys.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import (
    FLAG_MESH_NOT_CONVERGED,
    FLAG_QUAD_NOT_CONVERGED,
    MeshTooCoarse,
    NonPositiveSample,
)
from .fields import field_from_potential
from .kirchhoff import decompose_field, exterior_cancellation, reconstruct_in_shell
from .quadrature import retarded_potential
from .scaling import (
    ScalingReport,
    beam_solid_angle,
    find_beam_peak,
    fit_power_law,
    geometric_radii,
    gradient_sweep,
    sweep_field,
)
from .scenario import Scenario, build_source
from .sources import SourceModel, SpacetimePoint, support_bounds
from .spheremesh import build_sphere_mesh
from .validate import (
    dalembertian_residual_A,
    dalembertian_residual_B,
    initial_condition_check,
)

__all__ = ["RunResult", "run_scenario"]

CSV_HEADER = "run_kind,quantity,R,theta,phi,t_P,value_x,value_y,value_z,err_est,flags"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONVERGENCE = 2
EXIT_IDENTITY = 3

_BAD_FLAGS = {FLAG_QUAD_NOT_CONVERGED, FLAG_MESH_NOT_CONVERGED}


@dataclass
class RunResult:
    exit_code: int
    csv_path: str
    json_path: str
    summary: dict


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{float(v):.17g}"


class _Rows:
    def __init__(self, run_kind):
        self.run_kind = run_kind
        self.lines = [CSV_HEADER]
        self.flags = set()

    def add(self, quantity, point_xyz, t_P, value, err=0.0, flags=()):
        x = np.asarray(point_xyz, dtype=float).reshape(3)
        R = float(np.linalg.norm(x))
        theta = math.acos(max(-1.0, min(1.0, x[2] / R))) if R > 0 else 0.0
        phi = math.atan2(x[1], x[0])
        v = np.zeros(3)
        val = np.asarray(value, dtype=float).ravel()
        v[:val.size] = val[:3]
        self.flags.update(flags)
        self.lines.append(",".join([
            self.run_kind, quantity, _fmt(R), _fmt(theta), _fmt(phi), _fmt(t_P),
            _fmt(v[0]), _fmt(v[1]), _fmt(v[2]), _fmt(err), ";".join(sorted(flags)),
        ]))

    def text(self):
        return "\n".join(self.lines) + "\n"


def _plain(obj):
    """Make numpy-laden structures JSON-safe."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _field_scale(src: SourceModel) -> float:
    """Characteristic length: the larger of source size and field wavelength."""
    rb = support_bounds(src)
    period = src.field_period() or 0.0
    lam = period if math.isfinite(period) else 0.0
    return max(rb, lam, 1e-12)


def _report_dict(rep: ScalingReport, ci_z: float = 1.96):
    half = ci_z * rep.stderr if math.isfinite(rep.stderr) else float("nan")
    return {
        "quantity": rep.quantity, "exponent": rep.exponent, "stderr": rep.stderr,
        "ci95": [rep.exponent - half, rep.exponent + half],
        "r_squared": rep.r_squared, "r_min": rep.r_min, "r_max": rep.r_max,
        "n_points": rep.n_points,
    }


def _default_radii(scn: Scenario, src: SourceModel):
    if scn.sweep.radii:
        return np.asarray(scn.sweep.radii)
    r0 = scn.sweep.r0 if scn.sweep.r0 else 20.0 * _field_scale(src)
    return np.asarray(geometric_radii(r0, scn.sweep.ratio, scn.sweep.count))


def _observer(scn: Scenario, default_xyz):
    if scn.geometry.observer is not None:
        return np.asarray(scn.geometry.observer, dtype=float)
    return np.asarray(default_xyz, dtype=float)


def _probe_points(scn: Scenario, src: SourceModel, n: int = 4):
    """Seeded probe placement on a far sphere (plus the explicit observer)."""
    rng = np.random.default_rng(scn.seed)
    r = 20.0 * _field_scale(src)
    pts = []
    if scn.geometry.observer is not None:
        pts.append(np.asarray(scn.geometry.observer, dtype=float))
    while len(pts) < n:
        v = rng.normal(size=3)
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            pts.append(r * v / nv)
    return np.asarray(pts[:n])


def _illuminated_t(src: SourceModel, b: float, x_P) -> float:
    """A time late enough that every boundary sample sees a steady field."""
    period = src.field_period() or 0.0
    margin = 0.125 * period if math.isfinite(period) else 0.0
    return src.steady_time(b) + b + float(np.linalg.norm(x_P)) + margin


def _run_potential(scn, src, rows, summary):
    pts = _probe_points(scn, src)
    records = []
    for x in pts:
        t = scn.geometry.t_P if scn.geometry.t_P is not None \
            else src.steady_time(float(np.linalg.norm(x)))
        p = SpacetimePoint(x=x, t=t)
        s = retarded_potential(src, p, scn.numerics.quadrature, workers=scn.workers)
        rows.add("A0", x, t, [s.A0, 0.0, 0.0], err=s.error, flags=s.flags)
        rows.add("A", x, t, s.A, err=s.error, flags=s.flags)
        records.append({"x": list(x), "t_P": t, "A0": s.A0, "A": list(s.A),
                        "err_est": s.error, "flags": sorted(s.flags)})
    summary["potentials"] = records


def _run_field(scn, src, rows, summary):
    pts = _probe_points(scn, src)
    records = []
    for x in pts:
        t = scn.geometry.t_P if scn.geometry.t_P is not None \
            else src.steady_time(float(np.linalg.norm(x)))
        p = SpacetimePoint(x=x, t=t)
        s = field_from_potential(src, p, scn.numerics.quadrature,
                                 compute_E=True, workers=scn.workers)
        rows.add("B", x, t, s.B, err=s.error, flags=s.flags)
        rows.add("E", x, t, s.E, err=s.error, flags=s.flags)
        records.append({"x": list(x), "t_P": t, "B": list(s.B), "E": list(s.E),
                        "err_est": s.error, "flags": sorted(s.flags)})
    summary["fields"] = records


def _run_decompose(scn, src, rows, summary):
    rb = support_bounds(src)
    radii = scn.geometry.boundary_radii or tuple(rb * f for f in (20.0, 40.0, 80.0, 160.0))
    x_P = _observer(scn, [5.0 * rb, 0.0, 0.0])
    level = scn.geometry.mesh_level
    closures, ratios, records = [], [], []
    identity_fail = False
    for b in radii:
        t_P = scn.geometry.t_P if scn.geometry.t_P is not None \
            else _illuminated_t(src, b, x_P)
        mesh = build_sphere_mesh(np.zeros(3), b, level, rule="gauss7")
        rep = decompose_field(src, mesh, x_P, t_P, spec=scn.numerics.quadrature,
                              workers=scn.workers, surface_tol=scn.numerics.surface_tol)
        rows.add("source_term", x_P, t_P, rep.source_term, err=rep.error, flags=rep.flags)
        rows.add("boundary_term", x_P, t_P, rep.boundary_term, err=rep.error, flags=rep.flags)
        rows.add("total", x_P, t_P, rep.total, err=rep.error, flags=rep.flags)
        rows.add("direct", x_P, t_P, rep.direct, err=rep.error, flags=rep.flags)
        closures.append(rep.closure_ratio)
        ratios.append(rep.boundary_ratio)
        records.append({
            "boundary_radius": b, "t_P": t_P, "closure_ratio": rep.closure_ratio,
            "boundary_ratio": rep.boundary_ratio,
            "source_term": list(rep.source_term),
            "boundary_term": list(rep.boundary_term),
            "direct": list(rep.direct), "flags": sorted(rep.flags),
        })
        if rep.closure_ratio > scn.numerics.closure_tol:
            identity_fail = True
    summary["decomposition"] = {
        "observer": list(x_P), "boundary_radii": list(radii),
        "closure_ratios": closures, "boundary_ratios": ratios,
        "closure_tol": scn.numerics.closure_tol,
    }
    if len(radii) >= 4 and all(r > 0 for r in ratios):
        fit = fit_power_law(np.asarray(radii), np.asarray(ratios))
        rep = ScalingReport.from_fit(fit, "boundary_term", min(radii), max(radii))
        summary["decomposition"]["boundary_ratio_scaling"] = _report_dict(rep)
    return identity_fail


def _run_reconstruct(scn, src, rows, summary):
    scale = _field_scale(src)
    rb = support_bounds(src)
    # a tight inner sphere keeps the boundary data's retarded-phase swing,
    # and with it the required mesh level, small
    r_in = scn.geometry.inner_radius or max(2.5 * rb, 0.5 * scale)
    r_out = scn.geometry.outer_radius or 40.0 * scale
    x_P = _observer(scn, [0.5 * (r_in + r_out), 0.0, 0.0])
    t_P = scn.geometry.t_P if scn.geometry.t_P is not None else \
        _illuminated_t(src, r_in, x_P)
    level = scn.geometry.mesh_level
    inner = build_sphere_mesh(np.zeros(3), r_in, level, rule="gauss7")
    outer = build_sphere_mesh(np.zeros(3), r_out, level, rule="gauss7")
    rec = reconstruct_in_shell(src, inner, outer, x_P, t_P,
                               spec=scn.numerics.quadrature, workers=scn.workers,
                               surface_tol=scn.numerics.surface_tol)
    p = SpacetimePoint(x=x_P, t=t_P)
    direct = field_from_potential(src, p, scn.numerics.quadrature, workers=scn.workers)
    rows.add("B_reconstructed", x_P, t_P, rec.B, err=rec.error, flags=rec.flags)
    rows.add("B_direct", x_P, t_P, direct.B, err=direct.error, flags=direct.flags)
    scale_B = max(float(np.linalg.norm(direct.B)), 1e-300)
    mismatch = float(np.linalg.norm(rec.B - direct.B)) / scale_B
    summary["reconstruction"] = {
        "observer": list(x_P), "t_P": t_P, "inner_radius": r_in,
        "outer_radius": r_out, "mesh_level": level,
        "B_reconstructed": list(rec.B), "B_direct": list(direct.B),
        "mismatch_ratio": mismatch, "tolerance": scn.numerics.closure_tol,
    }
    return mismatch > scn.numerics.closure_tol


def _run_cancellation(scn, src, rows, summary):
    rb = support_bounds(src)
    # tight spheres keep the retarded-phase swing, and with it the mesh
    # level, small; both must still clear the support
    r_in = scn.geometry.inner_radius or 2.5 * rb
    r_out = scn.geometry.outer_radius or 2.0 * r_in
    x_P = _observer(scn, [2.0 * r_out, 0.0, 0.0])
    t_P = scn.geometry.t_P if scn.geometry.t_P is not None \
        else _illuminated_t(src, r_out, x_P)
    level = scn.geometry.mesh_level
    inner = build_sphere_mesh(np.zeros(3), r_in, level, rule="gauss7")
    outer = build_sphere_mesh(np.zeros(3), r_out, level, rule="gauss7")
    rep = exterior_cancellation(src, inner, outer, x_P, t_P,
                                spec=scn.numerics.quadrature, workers=scn.workers,
                                surface_tol=scn.numerics.surface_tol)
    p = SpacetimePoint(x=x_P, t=t_P)
    direct = field_from_potential(src, p, scn.numerics.quadrature, workers=scn.workers)
    rows.add("inner_term", x_P, t_P, rep.inner_term, err=rep.error, flags=rep.flags)
    rows.add("outer_term", x_P, t_P, rep.outer_term, err=rep.error, flags=rep.flags)
    rows.add("residual", x_P, t_P, rep.residual, err=rep.error, flags=rep.flags)
    rows.add("B_direct", x_P, t_P, direct.B, err=direct.error, flags=direct.flags)
    field_norm = max(float(np.linalg.norm(direct.B)), 1e-300)
    summary["cancellation"] = {
        "observer": list(x_P), "t_P": t_P,
        "inner_radius": r_in, "outer_radius": r_out, "mesh_level": level,
        "residual_ratio": rep.residual_ratio,
        "inner_term": list(rep.inner_term),
        "outer_term": list(rep.outer_term),
        "term_over_field_scale": [
            float(np.linalg.norm(rep.inner_term)) / field_norm,
            float(np.linalg.norm(rep.outer_term)) / field_norm,
        ],
        "tolerance": scn.numerics.cancellation_tol,
    }
    return rep.residual_ratio > scn.numerics.cancellation_tol


def _run_scaling(scn, src, rows, summary):
    radii = _default_radii(scn, src)
    spec = scn.numerics.quadrature
    if scn.sweep.direction == "auto" and src.characteristic_frequency() > 0:
        direction, _ = find_beam_peak(src, float(radii[0]),
                                      level=min(scn.geometry.mesh_level, 4),
                                      spec=spec, workers=scn.workers)
    elif isinstance(scn.sweep.direction, tuple):
        direction = np.asarray(scn.sweep.direction)
    else:
        direction = np.array([1.0, 0.0, 0.0])

    reports = {}
    field = sweep_field(src, radii, direction, spec=spec, workers=scn.workers)
    for r, v, t in zip(field.radii, field.values, field.times):
        rows.add("field", r * field.direction, t, [v, 0, 0], flags=field.flags)
    reports["field"] = _report_dict(field.report())

    grad = gradient_sweep(src, radii, direction, spec=spec, workers=scn.workers)
    for r, v, t in zip(grad.radii, grad.values, grad.times):
        rows.add("gradient", r * grad.direction, t, [v, 0, 0], flags=grad.flags)
    reports["gradient"] = _report_dict(grad.report())

    if src.characteristic_frequency() > 0:
        omegas, flags_sa = [], set()
        for r in radii:
            bm = beam_solid_angle(src, float(r), level=scn.geometry.mesh_level,
                                  threshold=scn.sweep.threshold, spec=spec,
                                  workers=scn.workers, auto_refine=True)
            omegas.append(bm.solid_angle)
            flags_sa.update(bm.flags)
            rows.add("solid_angle", r * bm.peak_direction, 0.0,
                     [bm.solid_angle, 0, 0], flags=bm.flags)
        fit = fit_power_law(radii, np.asarray(omegas))
        reports["solid_angle"] = _report_dict(
            ScalingReport.from_fit(fit, "solid_angle", float(radii[0]), float(radii[-1])))

    summary["scaling"] = {
        "direction": list(np.asarray(direction, dtype=float)),
        "radii": list(map(float, radii)),
        "reports": reports,
    }
    return False


def _run_validate(scn, src, rows, summary):
    rng = np.random.default_rng(scn.seed)
    rb = support_bounds(src)
    scale = _field_scale(src)

    def on_sphere(r):
        v = rng.normal(size=3)
        return r * v / np.linalg.norm(v)

    # Exterior probes only: between quadrature nodes the sampled potential is a
    # finite sum of exact kernel solutions, so the stencil residual certifies
    # the homogeneous equation there.  Inside the support the same granularity
    # floods the second differences and no stencil spacing can certify the
    # source term; see the wave-residual notes in the test suite.
    probes = [on_sphere(1.5 * rb), on_sphere(3.0 * rb),
              on_sphere(10.0 * scale), on_sphere(20.0 * scale)]
    # Offset the probe time off any exact zero crossing of the steady cycle;
    # a true zero cannot be certified to relative tolerance and would flag.
    period = src.field_period() or 0.0
    residuals = []
    identity_fail = False
    for x in probes:
        t = src.steady_time(float(np.linalg.norm(x))) + 0.2 * period
        p = SpacetimePoint(x=np.asarray(x), t=t)
        for name, fn in (("box_A", dalembertian_residual_A),
                         ("box_B", dalembertian_residual_B)):
            rep = fn(src, p, spec=scn.numerics.quadrature, workers=scn.workers)
            rows.add(f"{name}_residual", x, t,
                     [rep.normalized, rep.normalized_coarse, rep.observed_order],
                     flags=rep.flags)
            residuals.append({
                "quantity": name, "x": list(map(float, x)), "t_P": t,
                "normalized": rep.normalized, "inside_support": rep.inside_support,
                "observed_order": rep.observed_order, "flags": sorted(rep.flags),
            })
            if rep.normalized > scn.numerics.residual_tol:
                identity_fail = True

    onset = initial_condition_check(src, probes[-1], spec=scn.numerics.quadrature,
                                    workers=scn.workers)
    # A source with no declared switch-on epoch has existed forever, so a
    # nonzero potential before the nominal arrival time is correct there.
    gate_onset = (src.delay + src.switch_on) > 0
    if gate_onset and onset.max_before != 0.0:
        identity_fail = True
    summary["validation"] = {
        "residuals": residuals,
        "residual_tol": scn.numerics.residual_tol,
        "onset": {
            "x": list(map(float, probes[-1])), "t_arrival": onset.t_arrival,
            "max_before_arrival": onset.max_before,
            "measured_onset": onset.measured_onset,
            "steady_norm": onset.steady_norm,
            "gated": gate_onset,
        },
    }
    return identity_fail


_RUNNERS = {
    "potential": _run_potential,
    "field": _run_field,
    "decompose": _run_decompose,
    "reconstruct": _run_reconstruct,
    "cancellation": _run_cancellation,
    "scaling": _run_scaling,
    "validate": _run_validate,
}


def run_scenario(scn: Scenario, out_dir: str = ".") -> RunResult:
    """Execute a parsed scenario and write its CSV and JSON outputs."""
    src = build_source(scn.source)
    rows = _Rows(scn.run_kind)
    summary = {
        "tool": {"name": "fieldlab", "version": __version__},
        "scenario": scn.echo,
    }
    identity_fail = False
    convergence_fail = False
    try:
        identity_fail = bool(_RUNNERS[scn.run_kind](scn, src, rows, summary))
    except MeshTooCoarse as e:
        convergence_fail = True
        summary["convergence_error"] = str(e)
    if rows.flags & _BAD_FLAGS:
        convergence_fail = True

    if convergence_fail:
        code = EXIT_CONVERGENCE
    elif identity_fail:
        code = EXIT_IDENTITY
    else:
        code = EXIT_OK
    summary["exit_code"] = code
    summary["flags"] = sorted(rows.flags)

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, scn.output.csv)
    json_path = os.path.join(out_dir, scn.output.json)
    with open(csv_path, "w") as f:
        f.write(rows.text())
    with open(json_path, "w") as f:
        json.dump(_plain(summary), f, indent=2, sort_keys=True)
        f.write("\n")
    return RunResult(exit_code=code, csv_path=csv_path, json_path=json_path,
                     summary=summary)
