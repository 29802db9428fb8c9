"""Deterministic parallel evaluation over observation points.

Work parallelizes as a pure map over blocks of observation points; each
point's value is computed by an identical serial reduction regardless of
how points are grouped, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import multiprocessing
import os

import numpy as np

#: fixed number of source nodes per reduction chunk; part of the numerical
#: contract (changing it regroups floating-point sums)
NODE_CHUNK = 8192

#: observation points per dispatched block
OBS_BLOCK = 256

_ENV_WORKERS = "FIELDLAB_WORKERS"


def resolve_workers(workers=None) -> int:
    """Worker count: explicit argument, else FIELDLAB_WORKERS, else 1."""
    if workers is not None and int(workers) > 0:
        return int(workers)
    env = os.environ.get(_ENV_WORKERS, "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"{_ENV_WORKERS} must be an integer, got {env!r}") from exc
        if n > 0:
            return n
    return 1


def map_blocks(fn, points: np.ndarray, workers: int = 1, block: int = OBS_BLOCK):
    """Apply fn to contiguous row-blocks of points and concatenate in order."""
    n = points.shape[0]
    if n == 0:
        return fn(points)
    blocks = [points[i:i + block] for i in range(0, n, block)]
    if workers <= 1 or len(blocks) == 1:
        parts = [fn(b) for b in blocks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(min(workers, len(blocks))) as pool:
            parts = pool.map(fn, blocks)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[k] for p in parts], axis=0)
                     for k in range(len(parts[0])))
    return np.concatenate(parts, axis=0)
