"""Seeded fixture corpora shared by the verification suite, the CLI and the tests.

Every generator is a pure function of its arguments; the random streams
come from ``numpy.random.default_rng`` seeded with the given integer.
"""

from __future__ import annotations

import numpy as np

from .complex import WeightedComplex, cycle_complex, disc_complex, grid_complex, path_complex
from .space import (Space, binary_tree_space, clique_space, grid_space, line_space, path_space,
                    random_cloud_space)
from .tent import TentField, TimeGrid

__all__ = [
    "DEFAULT_SEED",
    "exponential_line",
    "space_corpus",
    "small_space_corpus",
    "tent_field",
    "field_corpus",
    "vector_corpus",
    "complex_corpus",
    "path_family",
]

DEFAULT_SEED = 20240601


def exponential_line(n: int = 12, rate: float = 1.0) -> Space:
    """Unit-spaced line with masses ``e^{rate i}``: exponential volume growth."""
    return line_space(np.arange(n, dtype=float), np.exp(rate * np.arange(n)), name=f"expline{n}")


def space_corpus(seed: int = DEFAULT_SEED, count: int = 25) -> list[Space]:
    """Mixed fixtures with ``n <= 500``: lattices, cliques, trees and seeded clouds."""
    fixed = [
        path_space(5),
        path_space(40),
        path_space(60, spacing=0.3),
        grid_space(11, 11),
        grid_space(20, 25),
        clique_space(6),
        binary_tree_space(5),
        exponential_line(12),
    ]
    rng = np.random.default_rng(seed)
    out = list(fixed)
    k = 0
    while len(out) < count:
        n = int(rng.integers(20, 500)) if k % 4 else 500
        out.append(random_cloud_space(n, int(rng.integers(2**31)), box=float(rng.uniform(2, 8)),
                                      dim=int(rng.integers(1, 4)), random_mass=bool(k % 2)))
        k += 1
    return out[:count]


def small_space_corpus(seed: int = DEFAULT_SEED, count: int = 10) -> list[Space]:
    """Spaces with ``n <= 60`` for the cubic-cost tent-space routines."""
    fixed = [path_space(30), path_space(30, spacing=0.3), grid_space(6, 6), exponential_line(10)]
    rng = np.random.default_rng(seed + 1)
    out = list(fixed)
    while len(out) < count:
        n = int(rng.integers(20, 60))
        out.append(random_cloud_space(n, int(rng.integers(2**31)), box=float(rng.uniform(2, 5)),
                                      random_mass=True))
    return out[:count]


def tent_field(s: Space, grid: TimeGrid, rng: np.random.Generator, radius: float = 2.0,
               complex_values: bool = False) -> TentField:
    """Random field supported near a random point and at times below ``radius``."""
    x = int(rng.integers(s.n))
    near = s.dist[x] < radius
    V = rng.standard_normal((s.n, grid.M))
    if complex_values:
        V = V + 1j * rng.standard_normal((s.n, grid.M))
    V = np.where(near[:, None] & (grid.nodes[None, :] < radius), V, 0.0)
    return TentField(grid, V.astype(complex))


def field_corpus(spaces, grid: TimeGrid, seed: int = DEFAULT_SEED, count: int = 25):
    """``count`` pairs ``(space, field)`` cycling through ``spaces``."""
    rng = np.random.default_rng(seed + 2)
    return [(spaces[i % len(spaces)],
             tent_field(spaces[i % len(spaces)], grid, rng, float(rng.uniform(0.5, 3.0)), bool(i % 3 == 0)))
            for i in range(count)]


def vector_corpus(n: int, count: int, seed: int = DEFAULT_SEED, complex_values: bool = True):
    """``(n, count)`` block of seeded Gaussian vectors."""
    rng = np.random.default_rng(seed + 3)
    U = rng.standard_normal((n, count))
    if complex_values:
        U = U + 1j * rng.standard_normal((n, count))
    return U


def complex_corpus() -> list[WeightedComplex]:
    """Path, cycle, triangulated grid and fan disc, each with at most 300 simplices."""
    return [path_complex(40), cycle_complex(50), grid_complex(6, 6, triangulate=True),
            disc_complex(30)]


def path_family(sizes=(20, 30, 40, 60)) -> list[WeightedComplex]:
    return [path_complex(n) for n in sizes]
