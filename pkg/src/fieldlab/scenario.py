"""Scenario files: YAML parsing, validation with line references, defaults.

A scenario is one experiment: a source, a run kind, geometry, numerics,
and output locations.  Parsing is strict: unknown keys, bad types, and
inconsistent geometry are reported as a list of field-level errors, each
carrying the line it came from, so a long config can be fixed in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ParseError, ValidationError
from .quadrature import QuadratureSpec
from .sources import (
    GaussianChargeSource,
    HertzianDipoleSource,
    RotatingPolarizationSource,
    SourceModel,
)

__all__ = [
    "Scenario",
    "SourceSpec",
    "GeometrySpec",
    "SweepSpec",
    "NumericsSpec",
    "OutputSpec",
    "RUN_KINDS",
    "SOURCE_KINDS",
    "parse_scenario",
    "build_source",
]

RUN_KINDS = ("potential", "field", "decompose", "reconstruct",
             "cancellation", "scaling", "validate")
SOURCE_KINDS = ("dipole", "rotating", "blob")

# Per-source parameter defaults; also the documented defaults table.
SOURCE_DEFAULTS = {
    "dipole": {"p0": 1.0, "omega": 2.0 * math.pi, "sigma": 0.05,
               "switch_on": None, "delay": 0.0},
    "rotating": {"m": 5, "omega": 1.5, "r_min": 0.6, "r_max": 1.0,
                 "z_half": 0.25, "amplitude": 1.0,
                 "polarization": "azimuthal", "switch_on": None, "delay": 0.0},
    "blob": {"q": 1.0, "sigma": 0.05},
}


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    params: dict


@dataclass(frozen=True)
class GeometrySpec:
    inner_radius: float = None
    outer_radius: float = None
    boundary_radii: tuple = ()
    observer: tuple = None      # (x, y, z), or None for automatic placement
    t_P: float = None           # None means "pick a steady/illuminated time"
    mesh_level: int = 4


@dataclass(frozen=True)
class SweepSpec:
    radii: tuple = ()           # explicit radii win over the progression
    r0: float = None            # None: 20 support radii
    ratio: float = 2.0
    count: int = 5
    direction: object = "auto"  # "auto" (beam peak), [x,y,z], or {theta, phi}
    threshold: float = 0.5


@dataclass(frozen=True)
class NumericsSpec:
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    surface_tol: float = 1e-3
    residual_tol: float = 1e-2
    closure_tol: float = 0.02
    cancellation_tol: float = 1e-3
    fd_scale: float = 1e-3


@dataclass(frozen=True)
class OutputSpec:
    csv: str = "results.csv"
    json: str = "summary.json"


@dataclass(frozen=True)
class Scenario:
    run_kind: str
    source: SourceSpec
    geometry: GeometrySpec
    sweep: SweepSpec
    numerics: NumericsSpec
    output: OutputSpec
    workers: int = None
    seed: int = 0
    echo: dict = None           # fully defaulted plain config, for re-running


class _Doc:
    """Plain values plus the source line of every key, from the YAML node tree."""

    def __init__(self, text):
        try:
            root = yaml.compose(text)
        except yaml.YAMLError as e:
            raise ParseError(f"not valid YAML: {e}") from None
        if root is None:
            raise ParseError("empty scenario document")
        self.lines = {}
        self.data = self._walk(root, ())
        if not isinstance(self.data, dict):
            raise ParseError("scenario must be a mapping at top level")

    def _walk(self, node, path):
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k_node, v_node in node.value:
                key = str(k_node.value)
                sub = path + (key,)
                if key in out:
                    raise ParseError(
                        f"duplicate key {'.'.join(sub)!r} at line {k_node.start_mark.line + 1}")
                self.lines[sub] = k_node.start_mark.line + 1
                out[key] = self._walk(v_node, sub)
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._walk(v, path + (str(i),)) for i, v in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    def line(self, *path):
        return self.lines.get(tuple(str(p) for p in path))


class _Check:
    """Collects field-level problems as 'path (line N): message' strings."""

    def __init__(self, doc: _Doc):
        self.doc = doc
        self.errors = []

    def add(self, path, msg):
        loc = self.doc.line(*path)
        where = ".".join(str(p) for p in path)
        suffix = f" (line {loc})" if loc else ""
        self.errors.append(f"{where}{suffix}: {msg}")

    def number(self, cfg, path, default=None, positive=False, allow_none=False):
        key = path[-1]
        if key not in cfg or cfg[key] is None:
            return default
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(path, f"expected a number, got {type(v).__name__}")
            return default
        v = float(v)
        if positive and not v > 0:
            self.add(path, "must be > 0")
            return default
        return v

    def integer(self, cfg, path, default=None, minimum=None, maximum=None):
        key = path[-1]
        if key not in cfg or cfg[key] is None:
            return default
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(path, f"expected an integer, got {type(v).__name__}")
            return default
        if minimum is not None and v < minimum:
            self.add(path, f"must be >= {minimum}")
            return default
        if maximum is not None and v > maximum:
            self.add(path, f"must be <= {maximum}")
            return default
        return v

    def unknown_keys(self, cfg, path, allowed):
        for key in cfg:
            if key not in allowed:
                self.add(path + (key,), f"unknown key; allowed: {', '.join(sorted(allowed))}")


def _parse_source(cfg, check: _Check) -> SourceSpec:
    if not isinstance(cfg, dict):
        check.add(("source",), "must be a mapping with a 'kind'")
        return SourceSpec(kind="dipole", params=dict(SOURCE_DEFAULTS["dipole"]))
    kind = cfg.get("kind")
    if kind not in SOURCE_KINDS:
        check.add(("source", "kind"),
                  f"unknown source kind {kind!r}; valid: {', '.join(SOURCE_KINDS)}")
        kind = "dipole"
    defaults = SOURCE_DEFAULTS[kind]
    check.unknown_keys(cfg, ("source",), set(defaults) | {"kind"})
    params = {}
    for key, dval in defaults.items():
        path = ("source", key)
        if key == "polarization":
            v = cfg.get(key, dval)
            if v not in ("azimuthal", "axial", "radial"):
                check.add(path, "must be one of azimuthal, axial, radial")
                v = dval
            params[key] = v
        elif key == "m":
            params[key] = check.integer(cfg, path, default=dval, minimum=0)
        elif key in ("switch_on",):
            params[key] = check.number(cfg, path, default=dval)
        elif key == "delay":
            params[key] = check.number(cfg, path, default=dval)
        else:
            params[key] = check.number(cfg, path, default=dval, positive=key != "p0")
    if kind == "rotating":
        r_min, r_max = params.get("r_min"), params.get("r_max")
        if r_min is not None and r_max is not None and not r_min < r_max:
            check.add(("source", "r_min"), "must be < source.r_max")
    return SourceSpec(kind=kind, params=params)


def _parse_geometry(cfg, check: _Check) -> GeometrySpec:
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        check.add(("geometry",), "must be a mapping")
        cfg = {}
    allowed = {"inner_radius", "outer_radius", "boundary_radii", "observer",
               "t_P", "mesh_level"}
    check.unknown_keys(cfg, ("geometry",), allowed)
    inner = check.number(cfg, ("geometry", "inner_radius"), positive=True)
    outer = check.number(cfg, ("geometry", "outer_radius"), positive=True)
    if inner is not None and outer is not None and inner >= outer:
        check.add(("geometry", "inner_radius"),
                  "must be smaller than geometry.outer_radius")
        check.add(("geometry", "outer_radius"),
                  "must be larger than geometry.inner_radius")
    radii = cfg.get("boundary_radii")
    if radii is None or radii == []:  # the echo writes unset as []
        bnd = ()
    elif isinstance(radii, (int, float)) and not isinstance(radii, bool):
        bnd = (float(radii),)
    elif isinstance(radii, list) and radii and all(
            isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0 for r in radii):
        bnd = tuple(float(r) for r in radii)
    else:
        check.add(("geometry", "boundary_radii"),
                  "must be a positive number or a list of positive numbers")
        bnd = ()
    obs = cfg.get("observer")
    if obs is not None:
        if (isinstance(obs, list) and len(obs) == 3
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obs)):
            obs = tuple(float(v) for v in obs)
        else:
            check.add(("geometry", "observer"), "must be a list of three numbers")
            obs = None
    t_P = check.number(cfg, ("geometry", "t_P"))
    level = check.integer(cfg, ("geometry", "mesh_level"), default=4, minimum=0, maximum=8)
    return GeometrySpec(inner_radius=inner, outer_radius=outer, boundary_radii=bnd,
                        observer=obs, t_P=t_P, mesh_level=level)


def _parse_sweep(cfg, check: _Check) -> SweepSpec:
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        check.add(("sweep",), "must be a mapping")
        cfg = {}
    allowed = {"radii", "r0", "ratio", "count", "direction", "threshold"}
    check.unknown_keys(cfg, ("sweep",), allowed)
    radii = cfg.get("radii")
    if radii is None or radii == []:  # the echo writes unset as []
        rtuple = ()
    elif (isinstance(radii, list) and len(radii) >= 4
          and all(isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0 for r in radii)
          and all(b > a for a, b in zip(radii, radii[1:]))):
        rtuple = tuple(float(r) for r in radii)
    else:
        check.add(("sweep", "radii"),
                  "must be a strictly ascending list of at least four positive numbers")
        rtuple = ()
    r0 = check.number(cfg, ("sweep", "r0"), positive=True)
    ratio = check.number(cfg, ("sweep", "ratio"), default=2.0, positive=True)
    if ratio is not None and not 1.0 < ratio <= 2.0:
        check.add(("sweep", "ratio"), "must lie in (1, 2]")
        ratio = 2.0
    count = check.integer(cfg, ("sweep", "count"), default=5, minimum=4)
    threshold = check.number(cfg, ("sweep", "threshold"), default=0.5, positive=True)
    if threshold is not None and not threshold < 1.0:
        check.add(("sweep", "threshold"), "must lie in (0, 1)")
        threshold = 0.5
    direction = cfg.get("direction", "auto")
    if direction != "auto":
        if (isinstance(direction, list) and len(direction) == 3
                and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                        for v in direction)
                and any(v != 0 for v in direction)):
            direction = tuple(float(v) for v in direction)
        elif (isinstance(direction, dict) and set(direction) <= {"theta", "phi"}
              and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                      for v in direction.values())):
            theta = float(direction.get("theta", 0.5 * math.pi))
            phi = float(direction.get("phi", 0.0))
            direction = (math.sin(theta) * math.cos(phi),
                         math.sin(theta) * math.sin(phi),
                         math.cos(theta))
        else:
            check.add(("sweep", "direction"),
                      "must be 'auto', a nonzero [x, y, z], or {theta, phi}")
            direction = "auto"
    return SweepSpec(radii=rtuple, r0=r0, ratio=ratio if ratio else 2.0,
                     count=count if count else 5, direction=direction,
                     threshold=threshold if threshold else 0.5)


def _parse_numerics(cfg, check: _Check) -> NumericsSpec:
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        check.add(("numerics",), "must be a mapping")
        cfg = {}
    allowed = {"quadrature", "surface_tol", "residual_tol", "closure_tol",
               "cancellation_tol", "fd_scale"}
    check.unknown_keys(cfg, ("numerics",), allowed)
    qcfg = cfg.get("quadrature") or {}
    if not isinstance(qcfg, dict):
        check.add(("numerics", "quadrature"), "must be a mapping")
        qcfg = {}
    check.unknown_keys(qcfg, ("numerics", "quadrature"),
                       {"n_r", "n_phi", "n_z", "eps", "max_refinements", "nodes_per_cycle"})
    qd = QuadratureSpec()
    quad = QuadratureSpec(
        n_r=check.integer(qcfg, ("numerics", "quadrature", "n_r"), default=qd.n_r, minimum=2) or qd.n_r,
        n_phi=check.integer(qcfg, ("numerics", "quadrature", "n_phi"), default=qd.n_phi, minimum=4) or qd.n_phi,
        n_z=check.integer(qcfg, ("numerics", "quadrature", "n_z"), default=qd.n_z, minimum=2) or qd.n_z,
        eps=check.number(qcfg, ("numerics", "quadrature", "eps"), default=qd.eps, positive=True) or qd.eps,
        max_refinements=check.integer(qcfg, ("numerics", "quadrature", "max_refinements"),
                                      default=qd.max_refinements, minimum=0) or 0,
        nodes_per_cycle=check.number(qcfg, ("numerics", "quadrature", "nodes_per_cycle"),
                                     default=qd.nodes_per_cycle, positive=True) or qd.nodes_per_cycle,
    )
    ns = NumericsSpec()
    return NumericsSpec(
        quadrature=quad,
        surface_tol=check.number(cfg, ("numerics", "surface_tol"), default=ns.surface_tol, positive=True) or ns.surface_tol,
        residual_tol=check.number(cfg, ("numerics", "residual_tol"), default=ns.residual_tol, positive=True) or ns.residual_tol,
        closure_tol=check.number(cfg, ("numerics", "closure_tol"), default=ns.closure_tol, positive=True) or ns.closure_tol,
        cancellation_tol=check.number(cfg, ("numerics", "cancellation_tol"), default=ns.cancellation_tol, positive=True) or ns.cancellation_tol,
        fd_scale=check.number(cfg, ("numerics", "fd_scale"), default=ns.fd_scale, positive=True) or ns.fd_scale,
    )


def _parse_output(cfg, check: _Check) -> OutputSpec:
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        check.add(("output",), "must be a mapping")
        cfg = {}
    check.unknown_keys(cfg, ("output",), {"csv", "json"})
    out = OutputSpec()
    csv = cfg.get("csv", out.csv)
    js = cfg.get("json", out.json)
    if not isinstance(csv, str) or not csv:
        check.add(("output", "csv"), "must be a nonempty file name")
        csv = out.csv
    if not isinstance(js, str) or not js:
        check.add(("output", "json"), "must be a nonempty file name")
        js = out.json
    return OutputSpec(csv=csv, json=js)


def parse_scenario(text: str, default_run: str = None) -> Scenario:
    """Parse and validate a YAML scenario document.

    Raises ParseError for structural problems (bad YAML, unknown run kind)
    and ValidationError carrying every field-level problem found, each with
    its line number.  ``default_run`` fills in a missing ``run`` key (the
    CLI passes its subcommand); an explicit conflicting key is an error.
    """
    doc = _Doc(text)
    cfg = doc.data

    run_kind = cfg.get("run", default_run)
    if "run" in cfg and default_run is not None and cfg["run"] != default_run:
        raise ParseError(
            f"scenario says run: {cfg['run']!r} but the command asked for "
            f"{default_run!r}; drop one of them")
    if run_kind not in RUN_KINDS:
        raise ParseError(
            f"unknown run kind {run_kind!r}; valid kinds: {', '.join(RUN_KINDS)}")

    check = _Check(doc)
    check.unknown_keys(cfg, (), {"run", "source", "geometry", "sweep", "numerics",
                                 "output", "workers", "seed"})
    source = _parse_source(cfg.get("source", {"kind": "dipole"}), check)
    geometry = _parse_geometry(cfg.get("geometry"), check)
    sweep = _parse_sweep(cfg.get("sweep"), check)
    numerics = _parse_numerics(cfg.get("numerics"), check)
    output = _parse_output(cfg.get("output"), check)
    workers = check.integer(cfg, ("workers",), default=None, minimum=1)
    seed = check.integer(cfg, ("seed",), default=0, minimum=0)

    if check.errors:
        raise ValidationError(check.errors)

    echo = {
        "run": run_kind,
        "source": {"kind": source.kind, **source.params},
        "geometry": {
            "inner_radius": geometry.inner_radius,
            "outer_radius": geometry.outer_radius,
            "boundary_radii": list(geometry.boundary_radii),
            "observer": list(geometry.observer) if geometry.observer else None,
            "t_P": geometry.t_P,
            "mesh_level": geometry.mesh_level,
        },
        "sweep": {
            "radii": list(sweep.radii),
            "r0": sweep.r0,
            "ratio": sweep.ratio,
            "count": sweep.count,
            "direction": (list(sweep.direction)
                          if isinstance(sweep.direction, tuple) else sweep.direction),
            "threshold": sweep.threshold,
        },
        "numerics": {
            "quadrature": {
                "n_r": numerics.quadrature.n_r,
                "n_phi": numerics.quadrature.n_phi,
                "n_z": numerics.quadrature.n_z,
                "eps": numerics.quadrature.eps,
                "max_refinements": numerics.quadrature.max_refinements,
                "nodes_per_cycle": numerics.quadrature.nodes_per_cycle,
            },
            "surface_tol": numerics.surface_tol,
            "residual_tol": numerics.residual_tol,
            "closure_tol": numerics.closure_tol,
            "cancellation_tol": numerics.cancellation_tol,
            "fd_scale": numerics.fd_scale,
        },
        "output": {"csv": output.csv, "json": output.json},
        "workers": workers,
        "seed": seed,
    }
    return Scenario(run_kind=run_kind, source=source, geometry=geometry,
                    sweep=sweep, numerics=numerics, output=output,
                    workers=workers, seed=seed, echo=echo)


def build_source(spec: SourceSpec) -> SourceModel:
    """Instantiate the source a scenario describes."""
    p = spec.params
    if spec.kind == "dipole":
        return HertzianDipoleSource(p0=p["p0"], omega=p["omega"], sigma=p["sigma"],
                                    switch_on=p["switch_on"], delay=p["delay"])
    if spec.kind == "rotating":
        return RotatingPolarizationSource(
            m=p["m"], omega=p["omega"], r_min=p["r_min"], r_max=p["r_max"],
            z_half=p["z_half"], amplitude=p["amplitude"],
            polarization=p["polarization"], switch_on=p["switch_on"], delay=p["delay"])
    if spec.kind == "blob":
        return GaussianChargeSource(q=p["q"], sigma=p["sigma"])
    raise ValueError(f"unknown source kind {spec.kind!r}")
