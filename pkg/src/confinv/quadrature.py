"""Tensor-product quadrature on chart domains and integration of frame integrands."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError
from .geometry import AmbientMetric, Immersion, Interval, PointFrame, frame_at

MIN_PERIODIC = 3
MIN_GAUSS = 2
CHUNK = 4096


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray  # (N, m)
    weights: np.ndarray  # (N,)
    resolution: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.weights)


def rule_1d(interval: Interval, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid (uniform) nodes for periodic intervals, Gauss-Legendre otherwise."""
    count = int(count)
    if interval.periodic:
        if count < MIN_PERIODIC:
            raise QuadratureError(f"periodic dimension needs >= {MIN_PERIODIC} nodes, got {count}")
        h = interval.length / count
        return interval.min + h * np.arange(count), np.full(count, h)
    if count < MIN_GAUSS:
        raise QuadratureError(f"Gauss-Legendre dimension needs >= {MIN_GAUSS} nodes, got {count}")
    x, w = np.polynomial.legendre.leggauss(count)
    half = 0.5 * interval.length
    return interval.min + half * (x + 1.0), half * w


def build_grid(domain: Sequence[Interval], resolution) -> QuadratureGrid:
    """Tensor-product grid; ``resolution`` is an int or one count per dimension."""
    if np.ndim(resolution) == 0:
        resolution = (int(resolution),) * len(domain)
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != len(domain):
        raise QuadratureError(f"resolution has {len(resolution)} entries for a {len(domain)}-d domain")
    rules = [rule_1d(iv, n) for iv, n in zip(domain, resolution)]
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([a.ravel() for a in mesh], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wmesh]), axis=0)
    return QuadratureGrid(nodes, weights, resolution)


def default_resolution(m: int) -> int:
    return 48 if m <= 2 else 16


def coarsened(resolution: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(max(r // 2, 3) for r in resolution)


def frames(f: Immersion, amb: AmbientMetric | None, grid: QuadratureGrid, chunk: int = CHUNK):
    """Yield ``(slice, PointFrame)`` over the grid in fixed order."""
    for start in range(0, grid.size, chunk):
        sl = slice(start, min(start + chunk, grid.size))
        yield sl, frame_at(f, amb, grid.nodes[sl])


def integrate(
    f: Immersion,
    amb: AmbientMetric | None,
    grid: QuadratureGrid,
    integrand: Callable[[PointFrame], np.ndarray],
    chunk: int = CHUNK,
    return_values: bool = False,
):
    """``sum_k w_k * integrand(frame_k) * vol_k``.

    With ``return_values`` also returns the integrand at every node.
    """
    total = 0.0
    values = np.empty(grid.size) if return_values else None
    for sl, fr in frames(f, amb, grid, chunk):
        vals = np.broadcast_to(np.asarray(integrand(fr), dtype=float), (sl.stop - sl.start,))
        total += float(np.dot(grid.weights[sl], vals * fr.vol))
        if return_values:
            values[sl] = vals
    return (total, values) if return_values else total


def integrate_fn(grid: QuadratureGrid, func: Callable[[np.ndarray], np.ndarray]) -> float:
    """Plain chart integral ``sum_k w_k func(node_k)``."""
    return float(np.dot(grid.weights, func(grid.nodes)))
