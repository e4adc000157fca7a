"""Eilenberg-Zilber maps between cubical and Freudenthal-simplicial cochains of a grid.

The grid is a product of subdivided intervals, and the Freudenthal simplices
are exactly the nondegenerate simplices of that product of simplicial sets.
On chains:

* ``AW`` (Alexander-Whitney) sends a simplex ``v_0 < ... < v_k`` to the sum
  over axis sets ``S = {s_1 < ... < s_k}`` with ``s_i`` among the axes
  changing in step ``i`` of the cell spanned by ``S`` whose base is
  ``v_0`` moved up along every axis ``j`` by its change before step
  ``#{s in S : s < j}``.
* ``EML`` (shuffle map) sends a k-cell to the signed sum of its k!
  staircase simplices, ``sign`` being that of the axis order walked.
* ``H`` is a chain homotopy with ``EML AW - id = dH + Hd``, built inside each
  carrier cell by coning from its minimal vertex.

The cochain maps are the duals: ``aw`` (cubical to simplicial), ``eml``
(simplicial to cubical) and ``shi`` (degree -1 on simplicial cochains), with
``aw eml - id = delta shi + shi delta``.  Cubical cells are oriented by the
increasing order of their axes, which is the orientation used by
:meth:`robzero.cells.CubicalCells.coboundary_arrays`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .cells import CubicalCells
from .domain import Z, Z2, Cochain, GridDomain, SimplicialComplex, Simplex, mask_axes, permutation_sign

# A local simplex is a strictly increasing chain of axis masks inside one cell,
# relative to the cell's minimal corner.
Local = tuple[int, ...]


@dataclass
class CubicalCochain:
    """Sparse cochain on grid cells keyed by cell id (see :class:`CubicalCells`)."""

    k: int
    ring: str = Z
    entries: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {}
        for cid, c in self.entries.items():
            c = int(c) % 2 if self.ring == Z2 else int(c)
            if c:
                clean[int(cid)] = c
        self.entries = clean

    def __getitem__(self, cid: int) -> int:
        return self.entries.get(cid, 0)

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def add(self, cid: int, coef: int) -> None:
        c = self.entries.get(cid, 0) + coef
        if self.ring == Z2:
            c %= 2
        if c:
            self.entries[cid] = c
        else:
            self.entries.pop(cid, None)


def cubical_coboundary(c: CubicalCochain, cells: CubicalCells) -> CubicalCochain:
    import numpy as np

    out = CubicalCochain(c.k + 1, c.ring)
    if not c.entries:
        return out
    ids = np.fromiter(c.entries.keys(), dtype=np.int64, count=len(c.entries))
    rows, coefs = cells.coboundary_arrays(ids)
    for cid, rr, cc in zip(ids.tolist(), rows.tolist(), coefs.tolist()):
        v = c.entries[cid]
        for r, s in zip(rr, cc):
            if s:
                out.add(r, s * v)
    return out


# -- local combinatorics --------------------------------------------------------


def _steps(local: Local) -> list[int]:
    return [local[i] & ~local[i - 1] for i in range(1, len(local))]


def aw_terms(local: Local) -> list[tuple[int, int]]:
    """Cells ``(base offset mask, axis mask)`` of the AW image of a local simplex."""
    steps = _steps(local)
    k = len(steps)
    span = local[-1] & ~local[0]
    out = []
    for axes in itertools.combinations(mask_axes(span), k):
        if all(steps[i] >> a & 1 for i, a in enumerate(axes)):
            base = local[0]
            for j in mask_axes(span):
                before = sum(1 for a in axes if a < j)
                if local[before] >> j & 1:
                    base |= 1 << j
            base &= ~(sum(1 << a for a in axes))
            out.append((base, sum(1 << a for a in axes)))
    return out


def eml_terms(base: int, axes_mask: int) -> list[tuple[Local, int]]:
    """Signed staircase simplices of a cell, as local simplices."""
    axes = mask_axes(axes_mask)
    out = []
    for perm in itertools.permutations(axes):
        chain = [base]
        for a in perm:
            chain.append(chain[-1] | 1 << a)
        out.append((tuple(chain), permutation_sign(perm)))
    return out


def local_boundary(local: Local) -> list[tuple[Local, int]]:
    return [(local[:i] + local[i + 1:], -1 if i & 1 else 1) for i in range(len(local))]


def _add(acc: dict, key, coef: int) -> None:
    c = acc.get(key, 0) + coef
    if c:
        acc[key] = c
    else:
        acc.pop(key, None)


@lru_cache(maxsize=None)
def homotopy(local: Local) -> tuple[tuple[Local, int], ...]:
    """The chain homotopy on a local simplex, as a signed sum of local (k+1)-simplices.

    Every simplex of the cell containing ``local`` lies in the cone over the
    cell's minimal corner, which is where ``local`` is translated to have
    ``local[0] == 0``; the result is translation invariant.
    """
    shift = local[0]
    if shift:
        # translate to the minimal corner of the local simplex's own carrier
        rel = tuple(w & ~shift for w in local)
        return tuple((tuple(w | shift for w in s), c) for s, c in homotopy(rel))
    if len(local) == 1:
        return ()
    target: dict[Local, int] = {}
    for base, axes in aw_terms(local):
        for s, c in eml_terms(base, axes):
            _add(target, s, c)
    _add(target, local, -1)
    for face, sign in local_boundary(local):
        for s, c in homotopy(face):
            _add(target, s, -sign * c)
    out: dict[Local, int] = {}
    for s, c in target.items():
        if s[0] != 0:
            _add(out, (0,) + s, c)
    return tuple(sorted(out.items()))


def homotopy_relative(local: Local) -> tuple[tuple[Local, int], ...]:
    return homotopy(local)


# -- cochain maps -------------------------------------------------------------------


class EZMaps:
    """The three cochain maps on one grid, with lookup tables for sparse inputs."""

    def __init__(self, domain: GridDomain):
        self.domain = domain
        self.complex = SimplicialComplex(domain)
        self.cells = CubicalCells(domain)
        self.m = domain.m
        self._aw_inverse: dict[int, dict[int, list[tuple[tuple[int, ...], int]]]] = {}
        self._shi_inverse: dict[int, dict[tuple[int, ...], list[tuple[tuple[int, ...], int, int]]]] = {}

    # simplices <-> (base multi-index, type)

    def _simplex(self, base: tuple[int, ...], t: tuple[int, ...]) -> Simplex | None:
        return self.complex.simplex_from(base, t)

    def _shift_down(self, base: tuple[int, ...], mask: int) -> tuple[int, ...] | None:
        return self.domain.shift(base, mask, -1)

    def aw(self, c: CubicalCochain) -> Cochain:
        """Pull a cubical cochain back to the Freudenthal triangulation."""
        k = c.k
        out = Cochain(k, c.ring)
        inverse = self._aw_table(k)
        for cid, coef in c.entries.items():
            cbase, axes = self.cells.decode(cid)
            for t, offset in inverse.get(axes, ()):
                base = self._shift_down(cbase, offset)
                if base is None:
                    continue
                s = self._simplex(base, t)
                if s is not None:
                    out.add(s, coef)
        return out

    def _aw_table(self, k: int) -> dict[int, list[tuple[tuple[int, ...], int]]]:
        if k not in self._aw_inverse:
            table: dict[int, list] = {}
            for t in self.complex.types(k):
                for offset, axes in aw_terms(t):
                    table.setdefault(axes, []).append((t, offset))
            self._aw_inverse[k] = table
        return self._aw_inverse[k]

    def eml(self, s: Cochain) -> CubicalCochain:
        """Push a simplicial cochain to the cubical cells (sum over staircases)."""
        out = CubicalCochain(s.k, s.ring)
        for simplex, coef in s.entries.items():
            base, t = self.complex.decompose(simplex)
            steps = _steps(t)
            if any(st & (st - 1) for st in steps):
                continue
            axes = [st.bit_length() - 1 for st in steps]
            out.add(self.cells.encode(base, t[-1]), permutation_sign(axes) * coef)
        return out

    def eml_value(self, s_lookup, cid: int) -> int:
        """``eml(s)`` at one cell, given ``s`` as a mapping from simplices."""
        base, axes = self.cells.decode(cid)
        total = 0
        for local, sign in eml_terms(0, axes):
            simplex = self._simplex(base, local)
            total += sign * s_lookup.get(simplex, 0)
        return total

    def shi(self, c: Cochain) -> Cochain:
        """``shi(c)(tau) = c(H tau)``, a cochain one degree lower."""
        k = c.k
        out = Cochain(k - 1, c.ring)
        if k == 0:
            return out
        table = self._shi_table(k - 1)
        for simplex, coef in c.entries.items():
            base, t = self.complex.decompose(simplex)
            for tau_type, offset, h in table.get(t, ()):
                tb = self._shift_down(base, offset)
                if tb is None:
                    continue
                tau = self._simplex(tb, tau_type)
                if tau is not None:
                    out.add(tau, h * coef)
        return out

    def _shi_table(self, k: int) -> dict[tuple[int, ...], list[tuple[tuple[int, ...], int, int]]]:
        """For each (k+1)-type ``t``: the k-types ``tau`` whose homotopy contains a translate of ``t``."""
        if k not in self._shi_inverse:
            table: dict[tuple[int, ...], list] = {}
            for tau in self.complex.types(k):
                for local, coef in homotopy(tau):
                    offset = local[0]
                    t = tuple(w & ~offset for w in local)
                    table.setdefault(t, []).append((tau, offset, coef))
            self._shi_inverse[k] = table
        return self._shi_inverse[k]

    def lift_extension(self, ybar: Cochain, c_cube: CubicalCochain, dybar: Cochain | None = None) -> Cochain:
        """``x = ybar - (aw(c_cube) - shi(delta ybar))``."""
        from .domain import coboundary

        if dybar is None:
            dybar = coboundary(ybar, self.complex)
        tilde = self.aw(c_cube) - self.shi(dybar)
        return ybar - tilde
