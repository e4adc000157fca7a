"""Primary and secondary obstruction persistence.

The pipeline pulls back the generating cocycle of the cross-polytope sphere
along the vertex approximation, extends it by zero, and asks for the earliest
filtration level at which the extension can be corrected into a cocycle
(primary), and then at which the Steenrod-square cocycle of the corrected
extension becomes a relative coboundary (secondary).

Matrices are assembled either on the Freudenthal simplices themselves
(simplicial mode) or on the grid cells (cubical mode), in which case
cochains are moved between the two structures with the Eilenberg-Zilber
maps of :mod:`robzero.ez`.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .cells import CubicalCells, FreudenthalCells, gather
from .domain import (
    CUBE,
    Z,
    Z2,
    Cochain,
    Simplex,
    SimplicialComplex,
    coboundary,
    compatible_vertex_order,
    permutation_sign,
)
from .ez import CubicalCochain, EZMaps
from .fields import SampledField
from .filtration import (
    CUBICAL,
    SIMPLEXWISE,
    Filtration,
    TooCoarse,
    build_filtration,
    dominant_codes,
    simplicial_threshold,
)
from .reduction import Entries, earliest_solution, generator_steps

log = logging.getLogger(__name__)

BELOW_R0 = "below_r0"
INCONCLUSIVE = "inconclusive"
NONE = "none"
CAPPED = "capped"

LEMMA = "lemma"
SIMPLICIAL_START = "simplicial"


# -- matrix assembly ----------------------------------------------------------------


class PaddedColumns:
    """Sparse columns backed by padded coboundary arrays, assembled chunk by chunk.

    ``ids`` are the column cells in order; ``assemble(ids)`` returns padded
    ``(rows, coefs)`` in cell ids and ``row_pos`` maps cell ids to row indices.
    """

    def __init__(self, ids: np.ndarray, assemble, row_pos, chunk: int = 1 << 14, keep: int = 8):
        self.ids = ids
        self.assemble = assemble
        self.row_pos = row_pos
        self.chunk = chunk
        self.keep = keep
        self._cache: dict[int, tuple[list, list]] = {}

    def __len__(self) -> int:
        return len(self.ids)

    def _block(self, start: int) -> tuple[list, list]:
        block = self._cache.pop(start, None)
        if block is None:
            rows, coefs = self.assemble(self.ids[start:start + self.chunk])
            block = (self.row_pos(rows).tolist(), coefs.tolist())
            if len(self._cache) >= self.keep:
                self._cache.pop(next(iter(self._cache)))
        self._cache[start] = block
        return block

    def __getitem__(self, j: int) -> Entries:
        start = j - j % self.chunk
        rows, coefs = self._block(start)
        r, c = rows[j - start], coefs[j - start]
        return [a for a, b in zip(r, c) if b], [b for b in c if b]

    def __iter__(self) -> Iterator[Entries]:
        for start in range(0, len(self.ids), self.chunk):
            rows, coefs = self._block(start)
            for r, c in zip(rows, coefs):
                yield [a for a, b in zip(r, c) if b], [b for b in c if b]


def sorted_cells(ids: np.ndarray, ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cells in filtration order: by value, ties by id."""
    order = np.lexsort((ids, ranks))
    return ids[order], ranks[order]


class RowIndex:
    """Dense map from cell id to its position in filtration order."""

    def __init__(self, ids: np.ndarray, ranks: np.ndarray, bound: int):
        self.ids, self.ranks = sorted_cells(ids, ranks)
        self.lookup = np.full(bound, -1, dtype=np.int64)
        self.lookup[self.ids] = np.arange(len(self.ids))

    def __call__(self, cell_ids: np.ndarray) -> np.ndarray:
        return self.lookup[np.asarray(cell_ids, dtype=np.int64)]


class Backend:
    """The cell structure the matrices are assembled on."""

    ring_cells: CubicalCells | FreudenthalCells

    def __init__(self, filt: Filtration):
        self.filt = filt
        self.domain = filt.domain
        self.complex = SimplicialComplex(filt.domain)
        self._sorted: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._rows: dict[int, RowIndex] = {}

    def sorted(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if k not in self._sorted:
            self._sorted[k] = sorted_cells(*self.cells(k))
        return self._sorted[k]

    def rows(self, k: int) -> RowIndex:
        if k not in self._rows:
            ids, ranks = self.cells(k)
            self._rows[k] = RowIndex(ids, ranks, self.id_bound(k))
            self._sorted[k] = (self._rows[k].ids, self._rows[k].ranks)
        return self._rows[k]

    def columns(self, k: int) -> PaddedColumns:
        """Coboundaries of the k-cells in filtration order, rows in (k+1)-cell order."""
        ids, _ = self.sorted(k)
        return PaddedColumns(ids, lambda sub: self.coboundary_arrays(sub, k), self.rows(k + 1))

    def vector(self, cochain: dict[int, int], k: int) -> Entries:
        rows = self.rows(k)
        ids = list(cochain)
        pos = rows(np.array(ids, dtype=np.int64)).tolist() if ids else []
        return pos, [cochain[c] for c in ids]

    def cells(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """All k-cells with their filtration ranks."""
        return self.cells_by(k, self.filt.vertex_rank)

    # overridden
    def cells_by(self, k: int, levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All k-cells with the minimum of ``levels`` (grid-shaped) over their vertices."""
        raise NotImplementedError

    def id_bound(self, k: int) -> int:
        raise NotImplementedError

    def coboundary_arrays(self, ids: np.ndarray, k: int):
        raise NotImplementedError

    def encode(self, c: Cochain) -> dict[int, int]:
        raise NotImplementedError

    def decode(self, entries: dict[int, int], k: int, ring: str = Z) -> Cochain:
        raise NotImplementedError

    def extension(self, ybar: Cochain, dybar: Cochain, c: dict[int, int]) -> Cochain:
        raise NotImplementedError

    staircases_only = False


class CubicalBackend(Backend):
    def __init__(self, filt: Filtration):
        super().__init__(filt)
        self.cube = CubicalCells(filt.domain)
        self.ez = EZMaps(filt.domain)

    def cells_by(self, k, levels):
        return self.cube.cells(k, levels)

    def id_bound(self, k):
        return self.cube.id_bound

    def coboundary_arrays(self, ids, k):
        return self.cube.coboundary_arrays(ids)

    def encode(self, c):
        return self.ez.eml(c).entries

    def decode(self, entries, k, ring=Z):
        return self.ez.aw(CubicalCochain(k, ring, dict(entries)))

    def extension(self, ybar, dybar, c):
        return self.ez.lift_extension(ybar, CubicalCochain(ybar.k, Z, dict(c)), dybar)

    staircases_only = True


class SimplicialBackend(Backend):
    def __init__(self, filt: Filtration):
        super().__init__(filt)
        self.simp = FreudenthalCells(filt.domain)

    def cells_by(self, k, levels):
        return self.simp.cells(k, levels)

    def id_bound(self, k):
        return self.simp.id_bound(k)

    def coboundary_arrays(self, ids, k):
        return self.simp.coboundary_arrays(ids, k)

    def encode(self, c):
        return {self.simp.sid(s): v for s, v in c.entries.items()}

    def decode(self, entries, k, ring=Z):
        return Cochain(k, ring, {self.simp.simplex(sid, k): v for sid, v in entries.items()})

    def extension(self, ybar, dybar, c):
        return ybar - self.decode(c, ybar.k)


def make_backend(filt: Filtration) -> Backend:
    return CubicalBackend(filt) if filt.mode == CUBICAL else SimplicialBackend(filt)


# -- the pullback cocycle ---------------------------------------------------------------


def _inversion_parity(cols: list[np.ndarray]) -> np.ndarray:
    parity = np.zeros(cols[0].shape, dtype=np.int64)
    for a in range(len(cols)):
        for b in range(a + 1, len(cols)):
            parity ^= (cols[a] > cols[b]).astype(np.int64)
    return parity


def pullback_cocycle(filt: Filtration, codes: np.ndarray, r0: int) -> Cochain:
    """Pull back the characteristic cocycle of ``[e_1, ..., e_n]`` along the vertex approximation.

    Evaluated on the (n-1)-simplices of filtration level rank ``r0`` and zero
    elsewhere, so the result is also the zero extension to the whole grid.
    """
    d = filt.domain
    n = filt.n
    cx = SimplicialComplex(d)
    vids = FreudenthalCells(d).vertex_ids
    grid = np.asarray(codes).reshape(d.shape)
    full_set = (1 << n) - 1
    out: dict[Simplex, int] = {}
    cube_vals = filt.cube_values() if filt.mode == CUBICAL else None
    for t in cx.types(n - 1):
        span = t[-1]
        vc = [gather(d, grid, span, w) for w in t]
        hit = np.ones(vc[0].shape, dtype=bool)
        seen = np.zeros(vc[0].shape, dtype=np.int64)
        for c in vc:
            hit &= (c >= 0) & ((c & 1) == 0)
            seen |= np.left_shift(1, np.maximum(c, 0) >> 1)
        hit &= seen == full_set
        if cube_vals is not None:
            hit &= cube_vals[span] >= r0
        else:
            for w in t:
                hit &= gather(d, filt.vertex_rank, span, w) >= r0
        if not hit.any():
            continue
        idx = np.nonzero(hit)
        sign = 1 - 2 * _inversion_parity([c[idx] for c in vc])
        verts = [gather(d, vids, span, w)[idx] for w in t]
        for row in zip(*(v.tolist() for v in verts), sign.tolist()):
            out[row[:-1]] = row[-1]
    return Cochain(n - 1, Z, out)


# -- cup-i products -------------------------------------------------------------------


def _cup_terms(p: int, q: int, i: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Kept vertex positions ``(front, back)`` of every term of the cup-i formula.

    For ``U = {u_1 < ... < u_{N-i}}`` in ``{0..N}`` with ``N = p + q - i``,
    ``U^0`` holds the ``u_j`` with ``u_j = j (mod 2)`` and ``U^1`` the rest;
    the term evaluates ``u`` on the face missing ``U^0`` and ``v`` on the face
    missing ``U^1``.  For ``i = 0`` this is the front/back face formula.
    """
    big = p + q - i
    out = []
    for us in itertools.combinations(range(big + 1), big - i):
        u0 = {u for j, u in enumerate(us, start=1) if (u - j) % 2 == 0}
        u1 = set(us) - u0
        if len(u0) != big - p or len(u1) != big - q:
            continue
        front = tuple(a for a in range(big + 1) if a not in u0)
        back = tuple(a for a in range(big + 1) if a not in u1)
        out.append((front, back))
    return out


def _cofaces_up(support, complex: SimplicialComplex, steps: int) -> set[Simplex]:
    layer = set(support)
    for _ in range(steps):
        nxt: set[Simplex] = set()
        for s in layer:
            for c, _sign in complex.cofaces(s):
                nxt.add(c)
        layer = nxt
    return layer


def _is_staircase(complex: SimplicialComplex, s: Simplex) -> bool:
    _, t = complex.decompose(s)
    return all((b & ~a) & ((b & ~a) - 1) == 0 for a, b in zip(t, t[1:]))


def cup_i(u: Cochain, v: Cochain, i: int, complex: SimplicialComplex, rank: np.ndarray | None = None,
          simplices=None, staircases_only: bool = False) -> Cochain:
    """The cup-i product ``u ⌣_i v``.

    Faces are taken in the vertex order given by ``rank`` (vertex id ->
    position; chain order when ``None``).  Over the integers only ``i = 0``
    is supported, with the usual sign-free front/back formula in that order.
    ``simplices`` restricts evaluation; by default every simplex having a
    face in the support of ``u`` is visited.
    """
    if u.ring != v.ring:
        raise ValueError("cochains over different rings")
    if u.ring == Z and i != 0:
        raise ValueError("integer cup-i products are only provided for i = 0")
    p, q = u.k, v.k
    big = p + q - i
    if i < 0 or big > complex.m:
        raise ValueError(f"cup-{i} of degrees {p}, {q} has no simplices in dimension {big}")
    z2 = u.ring == Z2
    out = Cochain(big, u.ring)
    if not u or not v:
        return out
    terms = _cup_terms(p, q, i)
    if simplices is None:
        simplices = _cofaces_up(u.entries, complex, big - p)
    ue, ve = u.entries, v.entries
    for s in simplices:
        if staircases_only and not _is_staircase(complex, s):
            continue
        if rank is None:
            perm = tuple(range(len(s)))
        else:
            perm = tuple(sorted(range(len(s)), key=lambda a: rank[s[a]]))
        total = 0
        for front, back in terms:
            fpos = [perm[a] for a in front]
            fkey = tuple(s[a] for a in sorted(fpos))
            a = ue.get(fkey)
            if not a:
                continue
            bpos = [perm[a] for a in back]
            b = ve.get(tuple(s[c] for c in sorted(bpos)))
            if not b:
                continue
            if z2:
                total ^= a & b & 1
            else:
                total += permutation_sign(fpos) * permutation_sign(bpos) * a * b
        if total:
            out.add(s, total if z2 else permutation_sign(perm) * total)
    return out


def steenrod_v(x: Cochain, n: int, complex: SimplicialComplex, rank: np.ndarray | None = None,
               staircases_only: bool = False, simplices=None) -> Cochain:
    """``(x mod 2) ⌣_{n-3} (x mod 2)``; for ``n = 3`` the integer cup square ``x ⌣ x``."""
    if x.k != n - 1:
        raise ValueError("v(x) needs an (n-1)-cochain")
    if n == 3:
        return cup_i(x, x, 0, complex, rank, simplices, staircases_only)
    xm = x.mod2()
    return cup_i(xm, xm, n - 3, complex, rank, simplices, staircases_only)


# -- results ----------------------------------------------------------------------------


@dataclass
class ObstructionResult:
    """Persistence levels as ranks into ``filt.values`` (``None`` = no value)."""

    filt: Filtration
    r0: int
    r0_value: float
    r1: int | None = None
    r1_below: bool = False
    r1_never: bool = False
    r2: int | None = None
    r2_below: bool = False
    r2_never: bool = False
    r2_inconclusive: bool = False
    secondary: bool = False
    extension: Cochain | None = None
    diagnostics: dict = field(default_factory=dict)

    def level(self, rank: int | None) -> float | None:
        return None if rank is None else float(self.filt.values[rank])


@dataclass
class PrimaryOutcome:
    killing: int | None       # rank of the killing column; None when never killed or trivially zero
    trivial: bool             # delta ybar = 0
    never: bool               # no prefix solves the system
    c: dict[int, int] | None  # solution in matrix cell ids
    ybar: Cochain
    dybar: Cochain
    columns_read: int
    columns: int
    rows: int


def primary_persistence(filt: Filtration, backend: Backend, codes: np.ndarray, r0: int,
                        track: bool = False) -> PrimaryOutcome:
    n = filt.n
    ybar = pullback_cocycle(filt, codes, r0)
    dybar = coboundary(ybar, backend.complex) if n - 1 < filt.domain.m else Cochain(n, Z)
    col_ids, col_ranks = backend.sorted(n - 1)
    nrows = len(backend.rows(n).ids)
    rhs = backend.encode(dybar)
    if not rhs:
        return PrimaryOutcome(None, True, False, {}, ybar, dybar, 0, len(col_ids), nrows)
    sol = earliest_solution(backend.columns(n - 1), backend.vector(rhs, n), Z, track=track)
    if sol is None:
        return PrimaryOutcome(None, False, True, None, ybar, dybar, len(col_ids), len(col_ids), nrows)
    c = None
    if track:
        c = {int(col_ids[j]): v for j, v in sol.x.items()}
    killing = int(col_ranks[sol.index - 1]) if sol.index else None
    return PrimaryOutcome(killing, sol.index == 0, False, c, ybar, dybar, sol.columns_read, len(col_ids), nrows)


def _generator_columns(filt: Filtration, backend: Backend, n: int):
    """Steps of the persistent generators of the (n-1)-st relative cohomology."""
    col_ids, col_ranks = backend.sorted(n - 1)
    m_cols = backend.columns(n - 1)
    if n - 2 < 0:
        return iter(()), col_ids, col_ranks
    low_ids, low_ranks = backend.sorted(n - 2)
    row_pos = backend.rows(n - 1)
    first = np.searchsorted(col_ranks, low_ranks, side="left")
    n_index = np.empty(len(low_ids), dtype=np.int64)
    step = 1 << 16
    for a in range(0, len(low_ids), step):
        rows, coefs = backend.coboundary_arrays(low_ids[a:a + step], n - 2)
        pos = np.where(coefs != 0, row_pos(rows), -1)
        last = pos.max(axis=1) if pos.shape[1] else np.full(len(pos), -1)
        n_index[a:a + step] = np.maximum(last, first[a:a + step])
    n_index = n_index.tolist()
    n_cols = PaddedColumns(low_ids, lambda sub: backend.coboundary_arrays(sub, n - 2), backend.rows(n - 1))
    return generator_steps(m_cols, n_cols, n_index, Z), col_ids, col_ranks


def _vw(backend: Backend, w: dict[int, int], col_ids: np.ndarray, n: int, rank, ring: str) -> dict[int, int]:
    cochain = backend.decode({int(col_ids[j]): v for j, v in w.items()}, n - 1)
    vw = steenrod_v(cochain, n, backend.complex, rank, backend.staircases_only)
    if ring == Z2:
        vw = vw.mod2()
    return backend.encode(vw)


def secondary_persistence(filt: Filtration, backend: Backend, x: Cochain, rank: np.ndarray,
                          diagnostics: dict, final_below: int = 0) -> tuple[int | None, bool, bool]:
    """Earliest level at which ``v(x)`` is killed; returns ``(rank, never, inconclusive)``.

    ``rank`` is ``None`` when ``v(x)`` is already zero.  A killing rank below
    ``final_below`` cannot be improved on by other extensions.
    """
    n = filt.n
    cube = filt.domain.topology == CUBE
    ring = Z if n == 3 else Z2
    vx = steenrod_v(x, n, backend.complex, rank, backend.staircases_only)
    rhs = backend.encode(vx)
    diagnostics["v_support"] = len(vx)
    if n == 3 and cube:
        # the cup square does not depend on the choice of extension here
        return _solve_secondary(backend, n, rhs, ring, iter(()), diagnostics, None, None)
    steps, col_ids, col_ranks = _generator_columns(filt, backend, n)
    if n > 3:
        return _solve_secondary(backend, n, rhs, ring, steps, diagnostics, col_ids, col_ranks, rank)
    # n = 3 on a non-cube domain: the class of the cup square depends on the extension
    best = _solve_secondary(backend, n, rhs, ring, iter(()), diagnostics, None, None)

    def done(res) -> bool:
        return not res[1] and (res[0] is None or res[0] < final_below)

    if done(best):
        return best[0], best[1], False
    gens = [(i, g) for i, g in steps if g is not None]
    diagnostics["generators"] = len(gens)
    for _, g in gens:
        w = backend.decode({int(col_ids[j]): v for j, v in g.items()}, n - 1)
        for sign in (1, -1):
            alt = x - w.scale(sign)
            vy = steenrod_v(alt, n, backend.complex, rank, backend.staircases_only)
            res = _solve_secondary(backend, n, backend.encode(vy), ring, iter(()), {}, None, None)
            if _earlier(res, best):
                best = res
            if done(best):
                return best[0], best[1], False
    return best[0], best[1], True


def _earlier(a, b) -> bool:
    ka = -1 if a[0] is None and not a[1] else (math.inf if a[1] else a[0])
    kb = -1 if b[0] is None and not b[1] else (math.inf if b[1] else b[0])
    return ka < kb


def _solve_secondary(backend: Backend, n: int, rhs: dict[int, int], ring: str, steps, diagnostics: dict,
                     col_ids, col_ranks, rank=None) -> tuple[int | None, bool, bool]:
    if not rhs:
        return None, False, False
    cell_ids, cell_ranks = backend.sorted(n)
    cols = backend.columns(n)
    ranks_read: list[int] = []
    stats = {"generators": 0}

    def stream():
        pending = iter(steps)
        nxt = next(pending, None)
        for j in range(len(cell_ids)):
            r = int(cell_ranks[j])
            while nxt is not None and col_ranks[nxt[0]] < r:
                i, g = nxt
                if g is not None:
                    stats["generators"] += 1
                    ranks_read.append(int(col_ranks[i]))
                    yield backend.vector(_vw(backend, g, col_ids, n, rank, ring), n + 1)
                nxt = next(pending, None)
            ranks_read.append(r)
            rr, cc = cols[j]
            yield rr, cc
        while nxt is not None:
            i, g = nxt
            if g is not None:
                stats["generators"] += 1
                ranks_read.append(int(col_ranks[i]))
                yield backend.vector(_vw(backend, g, col_ids, n, rank, ring), n + 1)
            nxt = next(pending, None)

    sol = earliest_solution(stream(), backend.vector(rhs, n + 1), ring, track=False)
    diagnostics["secondary_generators"] = stats["generators"]
    if sol is None:
        diagnostics["secondary_columns_read"] = len(ranks_read)
        return None, True, False
    diagnostics["secondary_columns_read"] = sol.columns_read
    if sol.index == 0:
        return None, False, False
    return ranks_read[sol.index - 1], False, False


# -- the full pipeline ------------------------------------------------------------------


@dataclass
class Options:
    mode: str | None = None          # CUBICAL or SIMPLEXWISE; default by dimension
    secondary: bool | None = None    # default: n > 3, or n = 3 on a cube
    start: str | None = None         # LEMMA or SIMPLICIAL_START; default by mode


def resolve_options(f: SampledField, opts: Options) -> Options:
    m, n = f.domain.m, f.n
    mode = opts.mode or (CUBICAL if m >= 4 else SIMPLEXWISE)
    secondary = opts.secondary
    if secondary is None:
        secondary = n > 3 or (n == 3 and f.domain.topology == CUBE)
    secondary = bool(secondary) and n >= 3 and m >= n + 1
    start = opts.start or (SIMPLICIAL_START if mode == CUBICAL else LEMMA)
    return Options(mode, secondary, start)


@dataclass
class Prepared:
    filt: Filtration
    codes: np.ndarray
    r0: int
    r0_value: float
    backend: Backend


def prepare(f: SampledField, opts: Options) -> Prepared:
    """Filtration, vertex approximation and threshold for a resolved set of options."""
    filt = build_filtration(f, opts.mode, apply_floor=opts.start == LEMMA)
    codes = dominant_codes(f.values)
    lowest = filt.floor if opts.start == LEMMA else (1 if filt.values[0] == 0 else 0)
    threshold = simplicial_threshold(filt, codes, lowest=lowest,
                                     lowest_value=filt.guarantee_floor if opts.start == LEMMA else None)
    return Prepared(filt, codes, threshold.rank, threshold.value, make_backend(filt))


def obstruction_persistence(f: SampledField, opts: Options | None = None) -> ObstructionResult:
    opts = resolve_options(f, opts or Options())
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    prep = prepare(f, opts)
    filt, codes, r0, r0_value = prep.filt, prep.codes, prep.r0, prep.r0_value
    timings["filtration"] = time.perf_counter() - t0
    backend = prep.backend
    res = ObstructionResult(filt, r0, r0_value, secondary=opts.secondary)
    diag = res.diagnostics
    diag["mode"] = opts.mode
    diag["start"] = opts.start

    t0 = time.perf_counter()
    prim = primary_persistence(filt, backend, codes, r0, track=opts.secondary)
    timings["primary"] = time.perf_counter() - t0
    diag.update(primary_columns=prim.columns, primary_rows=prim.rows, primary_columns_read=prim.columns_read,
                pullback_support=len(prim.ybar))
    log.info("primary: %d of %d columns read", prim.columns_read, prim.columns)
    res.r1_never = prim.never
    if prim.never:
        res.r1 = len(filt.values) - 1
    elif prim.killing is None or prim.killing < r0:
        res.r1_below = True
    else:
        res.r1 = prim.killing

    if opts.secondary and not prim.never:
        t0 = time.perf_counter()
        x = backend.extension(prim.ybar, prim.dybar, prim.c or {})
        res.extension = x
        order_codes = np.where(filt.vertex_rank.ravel() >= r0, codes, -1)
        rank = compatible_vertex_order(order_codes, 2 * f.n)
        final_below = res.r1 + 1 if res.r1 is not None else r0
        killing, never, inconclusive = secondary_persistence(filt, backend, x, rank, diag, final_below)
        timings["secondary"] = time.perf_counter() - t0
        res.r2_inconclusive = inconclusive and not _settled(res, killing, never)
        res.r2_never = never
        floor_rank = res.r1 if res.r1 is not None else r0
        if never:
            res.r2 = len(filt.values) - 1
        elif killing is None or killing < floor_rank:
            res.r2, res.r2_below = res.r1, res.r1_below
        else:
            res.r2 = killing
    diag["timings"] = timings
    return res


def _settled(res: ObstructionResult, killing: int | None, never: bool) -> bool:
    """True when the secondary adds nothing beyond the primary level."""
    if never:
        return False
    floor_rank = res.r1 if res.r1 is not None else res.r0
    return killing is None or killing < floor_rank or (res.r1 is not None and killing == res.r1)


# -- bounds -----------------------------------------------------------------------------


@dataclass
class RobustnessReport:
    """Bounds on the robustness of zero of a sampled field.

    Level fields hold a number or one of the sentinels ``BELOW_R0`` and
    ``INCONCLUSIVE``; bound fields hold a number or ``NONE`` / ``CAPPED``
    (the obstruction never dies, so only ``cap`` bounds the robustness).
    """

    r0: float
    r1: float | str
    r2: float | str | None
    lower_bound: float | str
    upper_bound: float | str
    cap: float
    nonexistence: float | None
    alpha: float
    norm: str
    mode: str
    secondary: bool
    heuristic: bool
    inconclusive: bool
    result: ObstructionResult = field(repr=False)

    @property
    def zero_guaranteed(self) -> bool:
        return not isinstance(self.lower_bound, str)


def _bound_level(res: ObstructionResult) -> tuple[int | None, bool, bool]:
    """The persistence that bounds are computed from: ``(rank, below, never)``."""
    if res.secondary and not res.r2_inconclusive and not res.r1_never:
        return res.r2, res.r2_below, res.r2_never
    return res.r1, res.r1_below, res.r1_never


def robustness_report(f: SampledField, opts: Options | None = None) -> RobustnessReport:
    from .fields import norm_name

    opts = resolve_options(f, opts or Options())
    res = obstruction_persistence(f, opts)
    filt = res.filt
    m, n = f.domain.m, f.n
    alpha = f.alpha
    slack = 3 * alpha if opts.mode == CUBICAL else alpha
    mags = filt.values
    cap = float(mags[-1]) + alpha

    rank, below, never = _bound_level(res)
    lower: float | str = NONE
    upper: float | str = NONE
    upper_allowed = m <= n or n <= 2 or (res.secondary and m <= n + 1 and not res.r2_inconclusive)
    if never:
        lower = res.level(rank) - alpha
        upper = CAPPED if upper_allowed else NONE
    elif below:
        if upper_allowed:
            # already extendable on the first working level, hence on every level above the previous one
            prev = float(mags[res.r0 - 1]) if res.r0 > 0 else res.r0_value
            upper = min(prev + slack, cap)
    else:
        lower = res.level(rank) - alpha
        if upper_allowed:
            upper = min(res.level(rank) + slack, cap)

    nonexistence = None
    min_mag = float(mags[0])
    if res.r1_below and res.r0 == 0 and min_mag - alpha > 0:
        nonexistence = min_mag - alpha

    def level_or(rank_: int | None, below_: bool) -> float | str:
        if below_:
            return BELOW_R0
        return res.level(rank_)

    r2: float | str | None = None
    if res.secondary:
        if res.r2_inconclusive:
            r2 = INCONCLUSIVE
        elif res.r1_never:
            r2 = res.level(res.r1)
        else:
            r2 = level_or(res.r2, res.r2_below)
    heuristic = f.heuristic_alpha or res.r0_value < filt.guarantee_floor
    return RobustnessReport(
        r0=res.r0_value,
        r1=level_or(res.r1, res.r1_below),
        r2=r2,
        lower_bound=lower,
        upper_bound=upper,
        cap=cap,
        nonexistence=nonexistence,
        alpha=alpha,
        norm=norm_name(f.p),
        mode=opts.mode,
        secondary=res.secondary,
        heuristic=heuristic,
        inconclusive=res.r2_inconclusive,
        result=res,
    )
