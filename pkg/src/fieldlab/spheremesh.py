"""Triangulated sphere meshes with per-face surface quadrature.

A mesh is a bag of spherical triangles (no shared-vertex bookkeeping is
needed for quadrature), built by recursive subdivision of an icosahedron.
Two rules are offered per face:

* ``centroid``: one node at the projected face centroid, weighted by the
  exact spherical-triangle area;
* ``gauss7``: a seven-node rule of polynomial degree 5 on the planar chord
  triangle, pushed to the sphere by radial projection with the exact
  Jacobian.  Roughly three orders of magnitude more accurate than
  ``centroid`` at equal node count for smooth integrands.

Weights are renormalized so they always sum to exactly 4 pi R^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SphereMesh", "build_sphere_mesh", "refine_faces"]

MAX_LEVEL = 8

# Degree-5 rule on the reference triangle, barycentric coordinates.
_G7_A = (6.0 - math.sqrt(15.0)) / 21.0
_G7_B = (6.0 + math.sqrt(15.0)) / 21.0
_G7_WA = (155.0 - math.sqrt(15.0)) / 1200.0
_G7_WB = (155.0 + math.sqrt(15.0)) / 1200.0


def _gauss7_bary():
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [9.0 / 40.0]
    for a, w in ((_G7_A, _G7_WA), (_G7_B, _G7_WB)):
        c = 1.0 - 2.0 * a
        pts += [(a, a, c), (a, c, a), (c, a, a)]
        wts += [w, w, w]
    return np.array(pts), np.array(wts)


_G7_PTS, _G7_WTS = _gauss7_bary()


def _icosahedron_faces():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    idx = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return v[np.array(idx)]


def _subdivide_once(faces):
    v0, v1, v2 = faces[:, 0], faces[:, 1], faces[:, 2]

    def mid(a, b):
        m = a + b
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    m01, m12, m20 = mid(v0, v1), mid(v1, v2), mid(v2, v0)
    out = np.concatenate([
        np.stack([v0, m01, m20], axis=1),
        np.stack([m01, v1, m12], axis=1),
        np.stack([m20, m12, v2], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ], axis=0)
    return out


def _spherical_areas(faces):
    """Unit-sphere triangle areas by l'Huilier's theorem."""
    v0, v1, v2 = faces[:, 0], faces[:, 1], faces[:, 2]

    def arc(a, b):
        # atan2 form is accurate for both tiny and wide separations
        cross = np.linalg.norm(np.cross(a, b), axis=1)
        dot = np.einsum("ij,ij->i", a, b)
        return np.arctan2(cross, dot)

    a, b, c = arc(v1, v2), arc(v2, v0), arc(v0, v1)
    s = 0.5 * (a + b + c)
    t = (np.tan(0.5 * s) * np.tan(0.5 * (s - a))
         * np.tan(0.5 * (s - b)) * np.tan(0.5 * (s - c)))
    return 4.0 * np.arctan(np.sqrt(np.maximum(t, 0.0)))


@dataclass(frozen=True)
class SphereMesh:
    """Quadrature mesh on a sphere: nodes, weights, and outward normals."""

    center: np.ndarray
    radius: float
    level: int
    rule: str
    faces: np.ndarray       # (F, 3, 3) unit vectors, kept for refinement
    nodes: np.ndarray       # (N, 3) points on the sphere
    weights: np.ndarray     # (N,), sum == 4 pi R^2
    normals: np.ndarray     # (N, 3) outward unit normals

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def face_of_node(self):
        per = 1 if self.rule == "centroid" else _G7_PTS.shape[0]
        return np.repeat(np.arange(self.n_faces), per)


def _assemble(center, radius, level, rule, faces):
    center = np.asarray(center, dtype=float).reshape(3)
    if rule == "centroid":
        units = faces.mean(axis=1)
        units /= np.linalg.norm(units, axis=1, keepdims=True)
        weights = _spherical_areas(faces) * radius ** 2
    elif rule == "gauss7":
        # planar chord-triangle rule, radially projected; the Jacobian is
        # R^2 p / |u|^3 with p the distance from the center to the face plane
        u = np.einsum("qb,fbi->fqi", _G7_PTS, faces)          # (F, 7, 3)
        norm_u = np.linalg.norm(u, axis=2)
        units = (u / norm_u[..., None]).reshape(-1, 3)
        e1 = faces[:, 1] - faces[:, 0]
        e2 = faces[:, 2] - faces[:, 0]
        nvec = np.cross(e1, e2)
        area2 = np.linalg.norm(nvec, axis=1)                  # 2 x planar area
        p = np.abs(np.einsum("fi,fi->f", faces[:, 0], nvec)) / area2
        jac = p[:, None] / norm_u ** 3
        weights = (radius ** 2 * (0.5 * area2)[:, None] * _G7_WTS[None, :] * jac).reshape(-1)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    weights = weights * (4.0 * math.pi * radius ** 2 / weights.sum())
    nodes = center[None, :] + radius * units
    return SphereMesh(center=center, radius=float(radius), level=level, rule=rule,
                      faces=faces, nodes=nodes, weights=weights, normals=units)


def build_sphere_mesh(center, radius, level: int, rule: str = "gauss7") -> SphereMesh:
    """Icosahedral sphere mesh with 20 * 4**level faces."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in [0, {MAX_LEVEL}]")
    if not radius > 0:
        raise ValueError("radius must be positive")
    faces = _icosahedron_faces()
    for _ in range(level):
        faces = _subdivide_once(faces)
    return _assemble(center, radius, level, rule, faces)


def refine_faces(mesh: SphereMesh, face_mask, extra_levels: int = 2) -> SphereMesh:
    """Subdivide the flagged faces further; the rest of the mesh is kept.

    Used to concentrate nodes where boundary data peaks sharply (narrow
    beams) without paying for a uniform high-resolution mesh.
    """
    face_mask = np.asarray(face_mask, dtype=bool)
    if face_mask.shape != (mesh.n_faces,):
        raise ValueError("face_mask must have one entry per face")
    if not face_mask.any():
        return mesh
    fine = mesh.faces[face_mask]
    for _ in range(extra_levels):
        fine = _subdivide_once(fine)
    faces = np.concatenate([mesh.faces[~face_mask], fine], axis=0)
    return _assemble(mesh.center, mesh.radius, mesh.level, mesh.rule, faces)
