"""Grid domains, their Freudenthal triangulation, the cross-polytope sphere and cochains.

A k-simplex of the Freudenthal triangulation of a grid is a chain
``v_0 < v_1 < ... < v_k`` of grid vertices in the componentwise order such that
``v_k - v_0`` is a 0/1 vector.  Relative to its base vertex ``v_0`` a simplex is
described by its *type*: the tuple of cumulative axis bitmasks
``(0, w_1, ..., w_k)`` with ``w_{t-1}`` a proper subset of ``w_t``.  This is the
simplicial-set product of subdivided intervals, which the Eilenberg-Zilber maps
in :mod:`robzero.ez` rely on.

Simplices are passed around as tuples of vertex ids listed in chain order.  On
a cube domain chain order coincides with increasing vertex id.  On a torus a
simplex may wrap around an axis, and chain order is then the local order
inherited from the lattice; every face inherits it, which is all the
coboundary and cup-i formulas need.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

CUBE = "cube"
TORUS = "torus"

Z = "Z"
Z2 = "Z2"

Simplex = tuple[int, ...]


@dataclass(frozen=True)
class GridDomain:
    """A regular grid on ``[-1, 1]^m`` (cube) or on the flat torus ``(S^1)^m``."""

    resolutions: tuple[int, ...]
    topology: str = CUBE

    def __post_init__(self) -> None:
        res = tuple(int(g) for g in self.resolutions)
        object.__setattr__(self, "resolutions", res)
        if not res:
            raise ValueError("a grid needs at least one axis")
        if self.topology not in (CUBE, TORUS):
            raise ValueError(f"unknown topology {self.topology!r}")
        smallest = 3 if self.topology == TORUS else 2
        if min(res) < smallest:
            raise ValueError(
                f"every {self.topology} axis needs at least {smallest} vertices, got {res}"
            )

    @property
    def m(self) -> int:
        return len(self.resolutions)

    @property
    def periodic(self) -> bool:
        return self.topology == TORUS

    @cached_property
    def strides(self) -> tuple[int, ...]:
        strides = []
        acc = 1
        for g in reversed(self.resolutions):
            strides.append(acc)
            acc *= g
        return tuple(reversed(strides))

    @property
    def vertex_count(self) -> int:
        return int(np.prod(self.resolutions, dtype=np.int64))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolutions

    def vertex_id(self, index: Iterable[int]) -> int:
        vid = 0
        for i, g, s in zip(index, self.resolutions, self.strides):
            if self.periodic:
                i %= g
            elif not 0 <= i < g:
                raise IndexError(f"multi-index {tuple(index)} outside the grid")
            vid += i * s
        return vid

    def multi_index(self, vid: int) -> tuple[int, ...]:
        out = []
        for g in reversed(self.resolutions):
            vid, r = divmod(vid, g)
            out.append(r)
        return tuple(reversed(out))

    def coordinates(self, axis: int) -> np.ndarray:
        """Coordinates of the grid points along one axis.

        Cube axes are embedded in ``[-1, 1]``; torus axes carry the circle
        parameter ``i / g`` in ``[0, 1)``.
        """
        g = self.resolutions[axis]
        if self.periodic:
            return np.arange(g) / g
        return np.linspace(-1.0, 1.0, g)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.coordinates(a) for a in range(self.m)), indexing="ij")

    def shift(self, index: tuple[int, ...], mask: int, sign: int = 1) -> tuple[int, ...] | None:
        """``index + sign * 1_mask``; ``None`` when it leaves a cube grid."""
        out = list(index)
        for j in range(self.m):
            if mask >> j & 1:
                i = out[j] + sign
                g = self.resolutions[j]
                if self.periodic:
                    i %= g
                elif not 0 <= i < g:
                    return None
                out[j] = i
        return tuple(out)


def mask_axes(mask: int) -> tuple[int, ...]:
    return tuple(j for j in range(mask.bit_length()) if mask >> j & 1)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def simplex_types(m: int, k: int) -> list[tuple[int, ...]]:
    """All k-simplex types of an m-cube, as cumulative axis masks from the base vertex."""
    full = (1 << m) - 1
    out: list[tuple[int, ...]] = []

    def extend(chain: list[int]) -> None:
        if len(chain) == k + 1:
            out.append(tuple(chain))
            return
        rest = full & ~chain[-1]
        sub = rest
        while sub:
            chain.append(chain[-1] | sub)
            extend(chain)
            chain.pop()
            sub = (sub - 1) & rest

    extend([0])
    out.sort(key=lambda t: (t[-1], t))
    return out


def freudenthal_count(resolutions: tuple[int, ...], k: int, periodic: bool = False) -> int:
    """Closed-form number of k-simplices of the Freudenthal triangulation of a grid."""
    m = len(resolutions)
    total = 0
    for t in simplex_types(m, k):
        span = t[-1]
        count = 1
        for j, g in enumerate(resolutions):
            count *= g if periodic or not span >> j & 1 else g - 1
        total += count
    return total


@dataclass(frozen=True)
class SimplicialComplex:
    """The Freudenthal triangulation of a :class:`GridDomain`, generated on demand."""

    domain: GridDomain

    @property
    def m(self) -> int:
        return self.domain.m

    @cached_property
    def _types(self) -> dict[int, list[tuple[int, ...]]]:
        return {}

    def types(self, k: int) -> list[tuple[int, ...]]:
        if not 0 <= k <= self.m:
            raise ValueError(f"simplex dimension {k} outside 0..{self.m}")
        cache = self._types
        if k not in cache:
            cache[k] = simplex_types(self.m, k)
        return cache[k]

    @cached_property
    def _type_index(self) -> dict[tuple[int, ...], int]:
        return {t: i for k in range(self.m + 1) for i, t in enumerate(self.types(k))}

    def type_index(self, t: tuple[int, ...]) -> int:
        return self._type_index[t]

    def count(self, k: int) -> int:
        return freudenthal_count(self.domain.resolutions, k, self.domain.periodic)

    # -- conversions -------------------------------------------------------------

    def simplex_from(self, base: tuple[int, ...], t: tuple[int, ...]) -> Simplex | None:
        d = self.domain
        out = []
        for w in t:
            idx = d.shift(base, w)
            if idx is None:
                return None
            out.append(d.vertex_id(idx))
        return tuple(out)

    def decompose(self, simplex: Simplex) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Base multi-index and type of a simplex given in chain order."""
        d = self.domain
        base = d.multi_index(simplex[0])
        masks = [0]
        for v in simplex[1:]:
            idx = d.multi_index(v)
            mask = 0
            for j, (a, b, g) in enumerate(zip(base, idx, d.resolutions)):
                diff = (b - a) % g if d.periodic else b - a
                if diff == 1:
                    mask |= 1 << j
                elif diff != 0:
                    raise ValueError(f"{simplex} is not a Freudenthal simplex")
            if mask & masks[-1] != masks[-1] or mask == masks[-1]:
                raise ValueError(f"{simplex} is not a Freudenthal simplex in chain order")
            masks.append(mask)
        return base, tuple(masks)

    def carrier(self, simplex: Simplex) -> tuple[tuple[int, ...], int]:
        """The smallest grid cell containing the simplex: (base multi-index, axis mask)."""
        base, t = self.decompose(simplex)
        return base, t[-1]

    # -- enumeration ---------------------------------------------------------------

    def enumerate_simplices(self, k: int) -> Iterator[Simplex]:
        """Every k-simplex exactly once, cube by cube in vertex-id order of the base."""
        types = self.types(k)
        d = self.domain
        for base in itertools.product(*(range(g) for g in d.resolutions)):
            for t in types:
                s = self.simplex_from(base, t)
                if s is not None:
                    yield s

    # -- incidence -----------------------------------------------------------------

    def faces(self, simplex: Simplex) -> list[tuple[Simplex, int]]:
        """Codimension-one faces with the coboundary sign ``(-1)^i``."""
        return [(simplex[:i] + simplex[i + 1:], -1 if i & 1 else 1) for i in range(len(simplex))]

    def cofaces(self, simplex: Simplex) -> list[tuple[Simplex, int]]:
        """Codimension-one cofaces ``s`` with the sign of ``simplex`` in the boundary of ``s``."""
        d = self.domain
        base, t = self.decompose(simplex)
        k = len(t) - 1
        full = (1 << d.m) - 1
        free = full & ~t[-1]
        out: list[tuple[Simplex, int]] = []
        # new first vertex
        sub = free
        while sub:
            nb = d.shift(base, sub, -1)
            if nb is not None:
                out.append(((d.vertex_id(nb),) + simplex, 1))
            sub = (sub - 1) & free
        # new vertex splitting a step
        for pos in range(1, k + 1):
            step = t[pos] & ~t[pos - 1]
            sub = (step - 1) & step
            while sub:
                idx = d.shift(base, t[pos - 1] | sub)
                v = d.vertex_id(idx)
                out.append((simplex[:pos] + (v,) + simplex[pos:], -1 if pos & 1 else 1))
                sub = (sub - 1) & step
        # new last vertex
        sub = free
        last = d.shift(base, t[-1])
        while sub:
            nl = d.shift(last, sub)
            if nl is not None:
                out.append((simplex + (d.vertex_id(nl),), -1 if (k + 1) & 1 else 1))
            sub = (sub - 1) & free
        return out


@dataclass(frozen=True)
class SpherePolytope:
    """Boundary of the n-dimensional cross-polytope, a model of the (n-1)-sphere.

    Vertex codes: ``2j`` stands for ``+e_{j+1}`` and ``2j + 1`` for ``-e_{j+1}``, so
    the fixed order is ``e_1 < -e_1 < e_2 < -e_2 < ...``.
    """

    n: int

    @property
    def dimension(self) -> int:
        return self.n - 1

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(range(2 * self.n))

    @staticmethod
    def antipode(code: int) -> int:
        return code ^ 1

    @staticmethod
    def describe(code: int) -> str:
        return f"{'-' if code & 1 else '+'}e{code // 2 + 1}"

    def is_simplex(self, codes: Iterable[int]) -> bool:
        codes = list(codes)
        axes = [c >> 1 for c in codes]
        return len(set(codes)) == len(codes) and len(set(axes)) == len(axes)

    @property
    def top_simplex(self) -> tuple[int, ...]:
        """The simplex ``[e_1, ..., e_n]`` carrying the generating cocycle."""
        return tuple(2 * j for j in range(self.n))


def permutation_sign(seq: Iterable[int]) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass
class Cochain:
    """A sparse cochain: simplex (in chain order) -> coefficient.

    Integer coefficients are Python ints; Z2 coefficients are kept in {0, 1}.
    Zero coefficients are never stored.
    """

    k: int
    ring: str = Z
    entries: dict[Simplex, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.ring not in (Z, Z2):
            raise ValueError(f"unknown ring {self.ring!r}")
        clean = {}
        for s, c in self.entries.items():
            if len(s) != self.k + 1:
                raise ValueError(f"simplex {s} has wrong dimension for a {self.k}-cochain")
            c = int(c) % 2 if self.ring == Z2 else int(c)
            if c:
                clean[s] = c
        self.entries = clean

    def __getitem__(self, simplex: Simplex) -> int:
        return self.entries.get(simplex, 0)

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cochain):
            return NotImplemented
        return self.k == other.k and self.ring == other.ring and self.entries == other.entries

    def add(self, simplex: Simplex, coef: int) -> None:
        c = self.entries.get(simplex, 0) + coef
        if self.ring == Z2:
            c %= 2
        if c:
            self.entries[simplex] = c
        else:
            self.entries.pop(simplex, None)

    def __add__(self, other: Cochain) -> Cochain:
        self._check(other)
        out = Cochain(self.k, self.ring, dict(self.entries))
        for s, c in other.entries.items():
            out.add(s, c)
        return out

    def __neg__(self) -> Cochain:
        return Cochain(self.k, self.ring, {s: -c for s, c in self.entries.items()})

    def __sub__(self, other: Cochain) -> Cochain:
        return self + (-other)

    def scale(self, factor: int) -> Cochain:
        return Cochain(self.k, self.ring, {s: factor * c for s, c in self.entries.items()})

    def mod2(self) -> Cochain:
        return Cochain(self.k, Z2, dict(self.entries))

    def restrict(self, keep) -> Cochain:
        return Cochain(self.k, self.ring, {s: c for s, c in self.entries.items() if keep(s)})

    def _check(self, other: Cochain) -> None:
        if self.k != other.k or self.ring != other.ring:
            raise ValueError("cochains of different dimension or ring")


def coboundary(c: Cochain, complex: SimplicialComplex) -> Cochain:
    """``(delta c)(s) = sum_i (-1)^i c(d_i s)`` with faces taken in chain order."""
    if c.k >= complex.m:
        raise ValueError(f"no {c.k + 1}-simplices in a {complex.m}-dimensional complex")
    out: dict[Simplex, int] = {}
    for tau, coef in c.entries.items():
        for sigma, sign in complex.cofaces(tau):
            out[sigma] = out.get(sigma, 0) + sign * coef
    return Cochain(c.k + 1, c.ring, out)


def compatible_vertex_order(codes: np.ndarray, sphere_size: int | None = None) -> np.ndarray:
    """Rank of every vertex id in an order that makes the vertex approximation monotone.

    ``codes`` holds the sphere vertex code of each vertex (flattened, -1 where the
    approximation is undefined).  Vertices sort by code, undefined ones last,
    ties broken by vertex id.
    """
    codes = np.asarray(codes).ravel()
    sentinel = int(sphere_size if sphere_size is not None else max(int(codes.max()) + 1, 1))
    key = np.where(codes < 0, sentinel, codes).astype(np.int64)
    order = np.lexsort((np.arange(codes.size), key))
    rank = np.empty(codes.size, dtype=np.int64)
    rank[order] = np.arange(codes.size)
    return rank
