"""Exact sparse column reduction over the integers and over Z2.

Columns are reduced with respect to their *lowest* nonzero, i.e. the largest
row index carrying a nonzero coefficient.  Over the integers a collision
between two columns whose lowest coefficients do not divide each other is
resolved with an extended-Euclid step, a unimodular change that keeps the
lattice spanned by the admitted columns unchanged.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .domain import Z, Z2

Entries = tuple[Sequence[int], Sequence[int]]


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b) > 0``."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        return -old_r, -old_s, -old_t
    return old_r, old_s, old_t


class SparseColumn:
    """A column under reduction: row -> coefficient, with a lazy max-heap of rows.

    ``basis`` records the column as a combination of input columns (the
    augmented identity part) when tracking is enabled.
    """

    __slots__ = ("ring", "coef", "_heap", "basis")

    def __init__(self, rows: Iterable[int] = (), coefs: Iterable[int] = (), ring: str = Z,
                 basis: dict[int, int] | None = None):
        self.ring = ring
        self.coef: dict[int, int] = {}
        for r, c in zip(rows, coefs):
            c = self.coef.get(r, 0) + int(c)
            if ring == Z2:
                c &= 1
            if c:
                self.coef[r] = c
            else:
                self.coef.pop(r, None)
        self._heap = [-r for r in self.coef]
        heapq.heapify(self._heap)
        self.basis = basis

    def __bool__(self) -> bool:
        return bool(self.coef)

    def __len__(self) -> int:
        return len(self.coef)

    def lowest(self) -> int | None:
        heap = self._heap
        coef = self.coef
        while heap:
            r = -heap[0]
            if r in coef:
                return r
            heapq.heappop(heap)
        return None

    def entries(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        rows = tuple(sorted(self.coef))
        return rows, tuple(self.coef[r] for r in rows)

    def axpy(self, t: int, rows: Sequence[int], vals: Sequence[int]) -> None:
        """``self += t * column``."""
        coef = self.coef
        heap = self._heap
        z2 = self.ring == Z2
        for r, c in zip(rows, vals):
            old = coef.get(r)
            new = (old or 0) + t * c
            if z2:
                new &= 1
            if new:
                coef[r] = new
                if old is None:
                    heapq.heappush(heap, -r)
            elif old is not None:
                del coef[r]


def _combine(a: dict[int, int], s: int, b: dict[int, int], t: int, z2: bool) -> dict[int, int]:
    out = {k: s * v for k, v in a.items()} if s != 1 else dict(a)
    for k, v in b.items():
        new = out.get(k, 0) + t * v
        if z2:
            new &= 1
        if new:
            out[k] = new
        else:
            out.pop(k, None)
    if z2:
        out = {k: v for k, v in out.items() if v & 1}
    else:
        out = {k: v for k, v in out.items() if v}
    return out


def _add_into(acc: dict[int, int], t: int, b: dict[int, int], z2: bool) -> None:
    for k, v in b.items():
        new = acc.get(k, 0) + t * v
        if z2:
            new &= 1
        if new:
            acc[k] = new
        else:
            acc.pop(k, None)


@dataclass
class ReducedPrefix:
    """Admitted reduced columns with pairwise distinct lowest rows.

    Columns are stored as sorted row/value tuples.  With ``track`` each stored
    column also keeps its expression in terms of input column indices; ``None``
    stands for the column being exactly one input column (stored in ``origin``).
    """

    ring: str = Z
    track: bool = False
    pivot: dict[int, int] = field(default_factory=dict)
    rows: list[tuple[int, ...]] = field(default_factory=list)
    vals: list[tuple[int, ...]] = field(default_factory=list)
    bases: list[dict[int, int] | None] = field(default_factory=list)
    origin: list[int] = field(default_factory=list)

    def basis_of(self, slot: int) -> dict[int, int]:
        b = self.bases[slot]
        return {self.origin[slot]: 1} if b is None else b

    def admit(self, col: SparseColumn, index: int = -1, compress: bool = True) -> int:
        """Store a reduced column.

        With ``compress`` the entries above the lowest one are first reduced by
        exact multiples of admitted columns wherever possible.  This keeps the
        lattice and the pivots unchanged but shortens later reductions, much
        like path compression in a union-find structure.
        """
        low = col.lowest()
        if low is None:
            raise ValueError("cannot admit a zero column")
        if low in self.pivot:
            raise ValueError(f"row {low} already carries a pivot")
        if compress:
            self._reduce_tail(col, low)
        slot = len(self.rows)
        r, v = col.entries()
        self.rows.append(r)
        self.vals.append(v)
        if self.track:
            b = col.basis
            trivial = b is None or (len(b) == 1 and b.get(index) == 1)
            self.bases.append(None if trivial else b)
        else:
            self.bases.append(None)
        self.origin.append(index)
        self.pivot[low] = slot
        return slot

    def _reduce_tail(self, col: SparseColumn, low: int) -> None:
        z2 = self.ring == Z2
        tracking = self.track and col.basis is not None
        coef = col.coef
        pending = [-r for r in coef if r != low and r in self.pivot]
        heapq.heapify(pending)
        while pending:
            r = -heapq.heappop(pending)
            q = coef.get(r)
            if q is None:
                continue
            slot = self.pivot.get(r)
            rows, vals = self.rows[slot], self.vals[slot]
            p = vals[-1]
            if not z2 and q % p:
                continue
            t = q if z2 else q // p
            for rr, c in zip(rows, vals):
                old = coef.get(rr)
                new = (old or 0) - t * c
                if z2:
                    new &= 1
                if new:
                    coef[rr] = new
                    if old is None:
                        heapq.heappush(col._heap, -rr)
                        if rr in self.pivot:
                            heapq.heappush(pending, -rr)
                elif old is not None:
                    del coef[rr]
            if tracking:
                _add_into(col.basis, -t, self.basis_of(slot), z2)

    def replace(self, slot: int, rows: tuple[int, ...], vals: tuple[int, ...],
                basis: dict[int, int] | None) -> None:
        self.rows[slot] = rows
        self.vals[slot] = vals
        self.bases[slot] = basis

    def pivot_value(self, row: int) -> int | None:
        slot = self.pivot.get(row)
        if slot is None:
            return None
        return self.vals[slot][-1]

    def check(self) -> None:
        """Verify the reduced-prefix invariant (distinct lowest rows)."""
        lows = [r[-1] for r in self.rows]
        if len(set(lows)) != len(lows):
            raise AssertionError("two admitted columns share a lowest row")
        for low, slot in self.pivot.items():
            if self.rows[slot][-1] != low:
                raise AssertionError("pivot lookup out of date")


def reduce_column(curr: SparseColumn, prefix: ReducedPrefix, force_divisibility: bool = False) -> SparseColumn:
    """Reduce ``curr`` against ``prefix`` in place and return it.

    With ``force_divisibility`` only exact multiples of admitted columns are
    subtracted and the prefix is never modified; reduction stops at the first
    row whose pivot does not divide the current coefficient.  Otherwise a
    non-dividing collision replaces the admitted column by the gcd combination
    and continues with the complementary combination, whose lowest row is
    strictly smaller.
    """
    if curr.ring != prefix.ring:
        raise ValueError("ring mismatch between column and reduced prefix")
    z2 = prefix.ring == Z2
    tracking = prefix.track and curr.basis is not None
    while True:
        low = curr.lowest()
        if low is None:
            return curr
        slot = prefix.pivot.get(low)
        if slot is None:
            return curr
        rows, vals = prefix.rows[slot], prefix.vals[slot]
        p = vals[-1]
        q = curr.coef[low]
        if z2 or q % p == 0:
            t = q if z2 else q // p
            curr.axpy(-t, rows, vals)
            if tracking:
                _add_into(curr.basis, -t, prefix.basis_of(slot), z2)
            continue
        if force_divisibility:
            return curr
        g, s, u = extended_gcd(p, q)
        coll = dict(zip(rows, vals))
        new_coll = _combine(coll, s, curr.coef, u, False)
        new_basis = None
        if tracking:
            coll_basis = prefix.basis_of(slot)
            new_basis = _combine(coll_basis, s, curr.basis, u, False)
            curr.basis = _combine(curr.basis, p // g, coll_basis, -(q // g), False)
        # curr <- (p/g) curr - (q/g) coll
        _scale_coef(curr, p // g)
        curr.axpy(-(q // g), rows, vals)
        nr = tuple(sorted(new_coll))
        prefix.replace(slot, nr, tuple(new_coll[r] for r in nr), new_basis)


def _scale_coef(col: SparseColumn, t: int) -> None:
    for r in col.coef:
        col.coef[r] *= t


@dataclass
class Solution:
    """Result of :func:`earliest_solution`.

    ``index`` is the 1-based number of columns needed (the last column that
    may carry a nonzero coefficient); ``x`` maps 0-based column indices to
    coefficients and is ``None`` when tracking was off.
    """

    index: int
    x: dict[int, int] | None
    columns_read: int


def earliest_solution(columns: Iterable[Entries], rhs: Entries, ring: str = Z,
                      track: bool = True, prefix: ReducedPrefix | None = None) -> Solution | None:
    """Solve ``M x = a`` using the shortest possible prefix of the columns of ``M``.

    ``columns`` is consumed lazily and reading stops at the first prefix that
    admits a solution.  ``None`` is returned if no prefix does.
    """
    return next(iter(_earliest(columns, rhs, ring, track, prefix)), None)


def solvable_prefixes(columns: Iterable[Entries], rhs: Entries, ring: str = Z,
                      prefix: ReducedPrefix | None = None, observe=None) -> Solution | None:
    """Like :func:`earliest_solution` without tracking, calling ``observe(j, low)``.

    After each admitted input column ``j`` (0-based) the callback receives the
    lowest row of the partially reduced right-hand side (``None`` once it is
    zero).  Used by the optimization curve.
    """
    return next(iter(_earliest(columns, rhs, ring, False, prefix, observe)), None)


def _earliest(columns, rhs, ring, track, prefix, observe=None) -> Iterator[Solution]:
    z2 = ring == Z2
    if prefix is None:
        prefix = ReducedPrefix(ring=ring, track=track)
    target = SparseColumn(rhs[0], rhs[1], ring)
    # x accumulates: rhs - target == sum over subtracted prefix columns
    x: dict[int, int] = {}

    def settle() -> bool:
        while True:
            low = target.lowest()
            if low is None:
                return True
            slot = prefix.pivot.get(low)
            if slot is None:
                return False
            vals = prefix.vals[slot]
            p, q = vals[-1], target.coef[low]
            if not z2 and q % p:
                return False
            t = q if z2 else q // p
            target.axpy(-t, prefix.rows[slot], vals)
            if track:
                _add_into(x, t, prefix.basis_of(slot), z2)

    if settle():
        yield Solution(0, {} if track else None, 0)
        return
    read = 0
    for j, (rows, vals) in enumerate(columns):
        read = j + 1
        col = SparseColumn(rows, vals, ring, {j: 1} if track else None)
        watched = target.lowest()
        before = prefix.pivot_value(watched)
        reduce_column(col, prefix)
        if col:
            prefix.admit(col, j)
        after = prefix.pivot_value(watched)
        if after is not None and after != before:
            if settle():
                if observe is not None:
                    observe(j, None)
                yield Solution(read, x if track else None, read)
                return
        if observe is not None:
            observe(j, target.lowest())
    return


def generator_steps(m_columns: Iterable[Entries], n_columns: Sequence[Entries],
                    n_index: Sequence[int], ring: str = Z) -> Iterator[tuple[int, dict[int, int] | None]]:
    """Walk the refined filtration one (n-1)-cell at a time.

    ``m_columns`` yields the coboundaries of the (n-1)-cells in filtration
    order; ``n_columns[k]`` is the coboundary of the k-th (n-2)-cell with rows
    given as (n-1)-cell positions, and ``n_index[k]`` is the step at which it
    becomes available.  Yields ``(i, g)`` per step, with ``g`` a new generator
    cocycle (position -> coefficient) or ``None``.
    """
    z2 = ring == Z2
    order = sorted(range(len(n_columns)), key=lambda k: (n_index[k], k))
    n_prefix = ReducedPrefix(ring=ring)
    m_prefix = ReducedPrefix(ring=ring, track=True)
    pos = 0
    for i, (rows, vals) in enumerate(m_columns):
        while pos < len(order) and n_index[order[pos]] <= i:
            k = order[pos]
            col = SparseColumn(*n_columns[k], ring)
            reduce_column(col, n_prefix)
            if col:
                n_prefix.admit(col, k)
            pos += 1
        col = SparseColumn(rows, vals, ring, {i: 1})
        reduce_column(col, m_prefix)
        if col:
            m_prefix.admit(col, i)
            yield i, None
            continue
        g = {k: v for k, v in col.basis.items() if (v & 1 if z2 else v)}
        gi = g.get(i, 0)
        p = n_prefix.pivot_value(i)
        if gi and not (p is not None and (z2 or gi % p == 0)):
            yield i, g
        else:
            yield i, None


def persistent_generators(m_columns: Iterable[Entries], n_columns: Sequence[Entries],
                          n_index: Sequence[int], ring: str = Z) -> tuple[list[dict[int, int]], list[int], list[int]]:
    """Cocycles whose prefixes generate the relative cohomology at every step.

    Returns ``(generators, mu, birth)``: ``mu[i]`` counts the generators found
    up to step ``i`` and ``birth[k]`` is the step of generator ``k``.  See
    :func:`generator_steps` for the inputs.
    """
    gens: list[dict[int, int]] = []
    birth: list[int] = []
    mu: list[int] = []
    for i, g in generator_steps(m_columns, n_columns, n_index, ring):
        if g is not None:
            gens.append(g)
            birth.append(i)
        mu.append(len(gens))
    return gens, mu, birth
