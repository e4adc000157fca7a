"""Integer-indexed cells of a grid and vectorized coboundary assembly.

Two cell structures share one interface:

* :class:`CubicalCells` -- the cells of the grid itself.  A k-cell is a base
  vertex plus k spanning axes; its id is ``base_vid << m | axis_mask``.
* :class:`FreudenthalCells` -- the simplices of the Freudenthal triangulation.
  A k-simplex is a base vertex plus a type (see :mod:`robzero.domain`); its id
  is ``base_vid * T_k + type_index``.

Both compute filtration values from a grid-shaped array of vertex levels and
produce coboundary columns as padded numpy arrays, so that matrices with
millions of columns are assembled without Python-level loops.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .domain import GridDomain, SimplicialComplex, Simplex, mask_axes, popcount


def _window(domain: GridDomain, span: int, offset: int) -> tuple[slice, ...]:
    """Slice selecting ``arr[b + 1_offset]`` for all bases ``b`` whose cell ``span`` fits."""
    out = []
    for j, g in enumerate(domain.resolutions):
        s = span >> j & 1
        o = offset >> j & 1
        out.append(slice(o, g - s + o))
    return tuple(out)


def gather(domain: GridDomain, arr: np.ndarray, span: int, offset: int) -> np.ndarray:
    """Values of a grid array at ``b + 1_offset`` for every base ``b`` of a cell spanning ``span``."""
    if domain.periodic:
        axes = mask_axes(offset)
        if not axes:
            return arr
        return np.roll(arr, shift=[-1] * len(axes), axis=axes)
    return arr[_window(domain, span, offset)]


class _Cells:
    domain: GridDomain

    @cached_property
    def vertex_ids(self) -> np.ndarray:
        return np.arange(self.domain.vertex_count, dtype=np.int64).reshape(self.domain.shape)

    def base_ids(self, span: int) -> np.ndarray:
        return gather(self.domain, self.vertex_ids, span, 0).ravel()


class CubicalCells(_Cells):
    def __init__(self, domain: GridDomain):
        self.domain = domain
        self.m = domain.m
        self.full = (1 << self.m) - 1

    @property
    def id_bound(self) -> int:
        return self.domain.vertex_count << self.m

    def masks(self, k: int) -> list[int]:
        return [mask for mask in range(self.full + 1) if popcount(mask) == k]

    def count(self, k: int) -> int:
        total = 0
        for mask in self.masks(k):
            c = 1
            for j, g in enumerate(self.domain.resolutions):
                c *= g - 1 if (mask >> j & 1 and not self.domain.periodic) else g
            total += c
        return total

    def cell_min(self, levels: np.ndarray, mask: int) -> np.ndarray:
        """Minimum of a vertex array over the corners of every cell with the given axes."""
        cur = levels
        for j in mask_axes(mask):
            if self.domain.periodic:
                cur = np.minimum(cur, np.roll(cur, -1, axis=j))
            else:
                lo = [slice(None)] * self.m
                hi = [slice(None)] * self.m
                lo[j] = slice(0, -1)
                hi[j] = slice(1, None)
                cur = np.minimum(cur[tuple(lo)], cur[tuple(hi)])
        return cur

    def cells(self, k: int, levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All k-cells: ids and their values (minimum level over the cell's vertices)."""
        ids, vals = [], []
        for mask in self.masks(k):
            ids.append((self.base_ids(mask) << self.m) | mask)
            vals.append(self.cell_min(levels, mask).ravel())
        if not ids:
            return np.zeros(0, np.int64), np.zeros(0, levels.dtype)
        return np.concatenate(ids), np.concatenate(vals)

    def value_lookup(self, levels: np.ndarray) -> dict[int, np.ndarray]:
        """Per axis mask, a grid-shaped array of cell values (cells indexed by base)."""
        return {mask: self.cell_min(levels, mask) for mask in range(self.full + 1)}

    def decode(self, cid: int) -> tuple[tuple[int, ...], int]:
        return self.domain.multi_index(cid >> self.m), cid & self.full

    def encode(self, base: tuple[int, ...], mask: int) -> int:
        return self.domain.vertex_id(base) << self.m | mask

    def coboundary_arrays(self, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Padded coboundary columns of the given k-cells (all of one dimension).

        Returns ``(rows, coefs)`` of shape ``(len(ids), 2 * (m - k))``; unused
        slots have coefficient 0.  The sign of cell ``(b, S)`` in the boundary of
        ``(b, S + j)`` is ``-(-1)^p`` and in that of ``(b - e_j, S + j)`` it is
        ``(-1)^p``, where ``p`` counts the axes of ``S`` below ``j``.
        """
        d = self.domain
        m = self.m
        ids = np.asarray(ids, dtype=np.int64)
        masks = ids & self.full
        bases = ids >> m
        cols = []
        coefs = []
        for j in range(m):
            bit = 1 << j
            free = (masks & bit) == 0
            below = np.zeros_like(masks)
            for i in range(j):
                below += (masks >> i) & 1
            sign = np.where(below & 1, -1, 1).astype(np.int8)
            coord = (bases // d.strides[j]) % d.resolutions[j]
            g = d.resolutions[j]
            # coface with the same base
            up = (bases << m) | masks | bit
            ok_up = free & (True if d.periodic else coord <= g - 2)
            # coface whose base is one step down along j
            down_base = np.where(coord == 0, bases + (g - 1) * d.strides[j], bases - d.strides[j])
            down = (down_base << m) | masks | bit
            ok_down = free & (True if d.periodic else coord >= 1)
            cols.append(np.where(ok_up, up, 0))
            coefs.append(np.where(ok_up, -sign, 0).astype(np.int8))
            cols.append(np.where(ok_down, down, 0))
            coefs.append(np.where(ok_down, sign, 0).astype(np.int8))
        return np.stack(cols, axis=1), np.stack(coefs, axis=1)

    def boundary(self, cid: int) -> list[tuple[int, int]]:
        """Faces of a cell with their boundary signs."""
        base, mask = self.decode(cid)
        out = []
        for p, j in enumerate(mask_axes(mask)):
            sign = -1 if p & 1 else 1
            sub = mask & ~(1 << j)
            out.append((self.encode(base, sub), -sign))
            out.append((self.encode(self.domain.shift(base, 1 << j), sub), sign))
        return out

    def vertices(self, cid: int) -> list[int]:
        base, mask = self.decode(cid)
        axes = mask_axes(mask)
        out = []
        for bits in range(1 << len(axes)):
            sub = 0
            for i, j in enumerate(axes):
                if bits >> i & 1:
                    sub |= 1 << j
            out.append(self.domain.vertex_id(self.domain.shift(base, sub)))
        return out


class FreudenthalCells(_Cells):
    def __init__(self, domain: GridDomain):
        self.domain = domain
        self.m = domain.m
        self.complex = SimplicialComplex(domain)

    def types(self, k: int) -> list[tuple[int, ...]]:
        return self.complex.types(k)

    @property
    def id_bound_factor(self) -> int:
        return max(len(self.types(k)) for k in range(self.m + 1))

    def id_bound(self, k: int) -> int:
        return self.domain.vertex_count * len(self.types(k))

    def count(self, k: int) -> int:
        return self.complex.count(k)

    def cells(self, k: int, levels: np.ndarray, carrier_levels: dict[int, np.ndarray] | None = None):
        """All k-simplices with their values.

        Without ``carrier_levels`` the value is the minimum vertex level (the
        simplexwise filtration).  With it (a per-mask lookup of cubical cell
        values) the value is that of the smallest enclosing grid cell.
        """
        ids, vals = [], []
        types = self.types(k)
        nt = len(types)
        for ti, t in enumerate(types):
            span = t[-1]
            ids.append(self.base_ids(span) * nt + ti)
            if carrier_levels is not None:
                vals.append(carrier_levels[span].ravel())
            else:
                v = gather(self.domain, levels, span, t[0])
                for w in t[1:]:
                    v = np.minimum(v, gather(self.domain, levels, span, w))
                vals.append(v.ravel())
        return np.concatenate(ids), np.concatenate(vals)

    def simplex(self, sid: int, k: int) -> Simplex:
        types = self.types(k)
        vid, ti = divmod(int(sid), len(types))
        s = self.complex.simplex_from(self.domain.multi_index(vid), types[ti])
        if s is None:
            raise ValueError(f"id {sid} is not a {k}-simplex of this grid")
        return s

    def sid(self, simplex: Simplex) -> int:
        base, t = self.complex.decompose(simplex)
        k = len(t) - 1
        return self.domain.vertex_id(base) * len(self.types(k)) + self.complex.type_index(t)

    @cached_property
    def _coface_tables(self) -> dict[int, list[list[tuple[int, int, int]]]]:
        return {}

    def coface_table(self, k: int) -> list[list[tuple[int, int, int]]]:
        """Per k-simplex type: (coface type index, axes the base moves down, sign)."""
        cache = self._coface_tables
        if k in cache:
            return cache[k]
        full = (1 << self.m) - 1
        up_index = {t: i for i, t in enumerate(self.types(k + 1))}
        table = []
        for t in self.types(k):
            entries = []
            free = full & ~t[-1]
            sub = free
            while sub:
                entries.append((up_index[(0,) + tuple(w | sub for w in t)], sub, 1))
                sub = (sub - 1) & free
            for pos in range(1, k + 1):
                step = t[pos] & ~t[pos - 1]
                sub = (step - 1) & step
                while sub:
                    new = t[:pos] + (t[pos - 1] | sub,) + t[pos:]
                    entries.append((up_index[new], 0, -1 if pos & 1 else 1))
                    sub = (sub - 1) & step
            sub = free
            while sub:
                entries.append((up_index[t + (t[-1] | sub,)], 0, -1 if (k + 1) & 1 else 1))
                sub = (sub - 1) & free
            table.append(entries)
        cache[k] = table
        return table

    def coboundary_arrays(self, ids: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        d = self.domain
        types = self.types(k)
        nt = len(types)
        up_types = self.types(k + 1)
        nu = len(up_types)
        table = self.coface_table(k)
        width = max((len(e) for e in table), default=0)
        ids = np.asarray(ids, dtype=np.int64)
        vids, tis = np.divmod(ids, nt)
        coords = [(vids // s) % g for s, g in zip(d.strides, d.resolutions)]
        rows = np.zeros((len(ids), width), dtype=np.int64)
        coefs = np.zeros((len(ids), width), dtype=np.int8)
        for ti, entries in enumerate(table):
            sel = np.nonzero(tis == ti)[0]
            if not len(sel):
                continue
            for slot, (ui, down, sign) in enumerate(entries):
                span = up_types[ui][-1]
                ok = np.ones(len(sel), dtype=bool)
                nb = vids[sel].copy()
                for j in range(self.m):
                    c = coords[j][sel]
                    g = d.resolutions[j]
                    moved = c
                    if down >> j & 1:
                        moved = c - 1
                        if d.periodic:
                            nb += np.where(c == 0, (g - 1) * d.strides[j], -d.strides[j])
                            moved = moved % g
                        else:
                            nb -= d.strides[j]
                    if not d.periodic:
                        ok &= (moved >= 0) & (moved + (span >> j & 1) <= g - 1)
                rows[sel, slot] = np.where(ok, nb * nu + ui, 0)
                coefs[sel, slot] = np.where(ok, sign, 0)
        return rows, coefs
