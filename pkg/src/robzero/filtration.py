"""Sublevel structure of ``|f|``: filtration levels, the vertex approximation and the simplicial threshold.

A simplex belongs to ``A_r`` when ``|f| >= r`` at all its vertices
(simplexwise mode), or when that holds at every vertex of its smallest
enclosing grid cell (cubical mode).  Vertex magnitudes are ranked exactly:
for the l_1 and l_2 norms the ranking uses rational arithmetic on the stored
floats (squared magnitudes for l_2), so ties and orderings never depend on
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cells import CubicalCells, gather
from .domain import GridDomain, Simplex, SimplicialComplex
from .fields import SampledField

SIMPLEXWISE = "simplexwise"
CUBICAL = "cubical"

UNDEFINED = -1


class TooCoarse(Exception):
    """No filtration level is usable (the input grid is too coarse)."""


@dataclass
class VertexApprox:
    """Sphere vertex code per grid vertex (``2j`` for ``+e_{j+1}``, ``2j+1`` for ``-e_{j+1}``).

    ``codes`` is flat in vertex-id order, with ``UNDEFINED`` outside the
    vertices the approximation was requested on.
    """

    codes: np.ndarray
    n: int

    @property
    def defined(self) -> np.ndarray:
        return self.codes >= 0

    def __getitem__(self, vid: int) -> int:
        return int(self.codes[vid])


def dominant_codes(values: np.ndarray) -> np.ndarray:
    """Code of the signed axis of the largest-magnitude component (smallest index on ties, + for 0)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    j = np.argmax(np.abs(values), axis=1)
    picked = values[np.arange(len(values)), j]
    return (2 * j + (picked < 0)).astype(np.int64)


def _exact_keys(values: np.ndarray, p: float) -> list:
    if p == 1:
        return [sum(map(Fraction, map(abs, row))) for row in values.tolist()]
    return [sum(Fraction(x) ** 2 for x in row) for row in values.tolist()]


@dataclass
class Filtration:
    """Distinct vertex magnitudes and the rank of every vertex among them.

    ``values[k]`` is the k-th smallest distinct magnitude and
    ``vertex_rank`` (grid-shaped) indexes into it.  Levels below
    ``values[floor]`` are not used for guarantees.
    """

    domain: GridDomain
    values: np.ndarray
    vertex_rank: np.ndarray
    mode: str
    floor: int
    alpha: float
    p: float
    n: int
    _cell_values: dict = field(default_factory=dict, repr=False)

    @property
    def levels(self) -> np.ndarray:
        return self.values[self.floor:]

    @property
    def guarantee_floor(self) -> float:
        return self.alpha * (1.0 if self.p == math.inf else self.n ** (1.0 / self.p))

    def rank_of(self, r: float) -> int:
        """Index of the smallest level ``>= r``."""
        return int(np.searchsorted(self.values, r, side="left"))

    def cube_values(self) -> dict[int, np.ndarray]:
        """Per axis mask, the rank of every grid cell (minimum over its corners)."""
        if not self._cell_values:
            self._cell_values.update(CubicalCells(self.domain).value_lookup(self.vertex_rank))
        return self._cell_values

    def simplex_rank(self, simplex: Simplex) -> int:
        d = self.domain
        flat = self.vertex_rank.ravel()
        if self.mode == SIMPLEXWISE:
            return int(min(flat[v] for v in simplex))
        base, mask = SimplicialComplex(d).carrier(simplex)
        cells = self.cube_values()[mask]
        return int(cells[base])

    def simplex_value(self, simplex: Simplex) -> float:
        return float(self.values[self.simplex_rank(simplex)])

    def in_level(self, simplex: Simplex, rank: int) -> bool:
        return self.simplex_rank(simplex) >= rank


def build_filtration(f: SampledField, mode: str = SIMPLEXWISE, apply_floor: bool = True) -> Filtration:
    """Rank the vertex magnitudes of ``f``.

    With ``apply_floor`` levels below ``alpha * n^(1/p)`` are excluded from
    use; a :class:`TooCoarse` error is raised if none remains.
    """
    if mode not in (SIMPLEXWISE, CUBICAL):
        raise ValueError(f"unknown filtration mode {mode!r}")
    vals = f.values
    n = f.n
    p = f.p
    if p == math.inf:
        mags = np.abs(vals).max(axis=1)
        levels, ranks = np.unique(mags, return_inverse=True)
        floor_key = f.alpha
        floor = int(np.searchsorted(levels, floor_key, side="left"))
    else:
        keys = _exact_keys(vals, p)
        distinct = sorted(set(keys))
        index = {k: i for i, k in enumerate(distinct)}
        ranks = np.fromiter((index[k] for k in keys), dtype=np.int64, count=len(keys))
        if p == 1:
            levels = np.array([float(k) for k in distinct])
            floor_key = Fraction(f.alpha) * n
        else:
            levels = np.array([math.sqrt(k) for k in distinct])
            floor_key = Fraction(f.alpha) ** 2 * n
        floor = next((i for i, k in enumerate(distinct) if k >= floor_key), len(distinct))
    # magnitude zero is never a usable level
    if len(levels) and levels[0] == 0:
        floor = max(floor, 1)
    if not apply_floor:
        floor = 1 if len(levels) and levels[0] == 0 else 0
    if floor >= len(levels):
        raise TooCoarse("no vertex magnitude reaches alpha * n^(1/p)")
    return Filtration(
        domain=f.domain,
        values=np.asarray(levels, dtype=float),
        vertex_rank=np.asarray(ranks, dtype=np.int64).reshape(f.domain.shape),
        mode=mode,
        floor=floor,
        alpha=f.alpha,
        p=p,
        n=n,
    )


def vertex_approximation(f: SampledField, filt: Filtration | None = None, rank: int = 0) -> VertexApprox:
    """Dominant signed axis at every vertex of level rank ``>= rank``."""
    codes = dominant_codes(f.values)
    if filt is not None:
        codes = np.where(filt.vertex_rank.ravel() >= rank, codes, UNDEFINED)
    return VertexApprox(codes, f.n)


def edge_values(filt: Filtration, mask: int) -> np.ndarray:
    """Rank of every triangulation edge from ``b`` to ``b + 1_mask``, indexed by base ``b``."""
    d = filt.domain
    if filt.mode == CUBICAL:
        return filt.cube_values()[mask]
    a = gather(d, filt.vertex_rank, mask, 0)
    b = gather(d, filt.vertex_rank, mask, mask)
    return np.minimum(a, b)


@dataclass(frozen=True)
class Threshold:
    """Where the vertex approximation becomes simplicial.

    ``rank`` is the first level rank the pipeline works on; ``value`` is the
    reported threshold.  When an antipodal edge exists, ``value`` is the level
    of the highest one: every ``r`` above it is simplicial although the
    working rank only starts at the next listed level.
    """

    rank: int
    value: float


def simplicial_threshold(filt: Filtration, codes: np.ndarray, lowest: int | None = None,
                         lowest_value: float | None = None) -> Threshold:
    """Smallest usable level at which no edge joins antipodal sphere vertices.

    ``codes`` are the dominant-axis codes of all vertices; an edge counts only
    while it lies in the filtration level.  ``lowest`` (default: the floor)
    is the smallest admissible rank and ``lowest_value`` the smallest value
    that may be reported.  Raises :class:`TooCoarse` when no level qualifies.
    """
    d = filt.domain
    grid = np.asarray(codes).reshape(d.shape)
    worst = -1
    for mask in range(1, 1 << d.m):
        a = gather(d, grid, mask, 0)
        b = gather(d, grid, mask, mask)
        bad = (a ^ b) == 1
        if bad.any():
            worst = max(worst, int(edge_values(filt, mask)[bad].max()))
    start = filt.floor if lowest is None else lowest
    rank = max(worst + 1, start)
    if rank >= len(filt.values):
        raise TooCoarse("the vertex approximation is not simplicial at any level")
    if worst + 1 >= start and worst >= 0:
        value = float(filt.values[worst])
    elif lowest_value is not None:
        value = lowest_value
    else:
        value = float(filt.values[rank])
    if lowest_value is not None:
        value = max(value, lowest_value)
    return Threshold(rank, value)


__all__ = [
    "CUBICAL",
    "SIMPLEXWISE",
    "Filtration",
    "Threshold",
    "TooCoarse",
    "VertexApprox",
    "build_filtration",
    "dominant_codes",
    "simplicial_threshold",
    "vertex_approximation",
]
