"""Randomized checks shared by the unit tests and the acceptance suite.

Each ``check_*`` draws one random instance from ``rng`` and returns whether
the property held.
"""

from __future__ import annotations

import numpy as np

from oracles import brute_simplices, coboundary_matrix, integer_kernel, lattice_equal, solvable_z
from robzero.cells import CubicalCells
from robzero.domain import (
    CUBE,
    TORUS,
    Z,
    Z2,
    Cochain,
    GridDomain,
    SimplicialComplex,
    coboundary,
    compatible_vertex_order,
    permutation_sign,
)
from robzero.ez import CubicalCochain, EZMaps, cubical_coboundary
from robzero.fields import ObjectiveField, SampledField, gen_gaussian
from robzero.obstruction import Options, cup_i, steenrod_v
from robzero.robopt import opt_curve

_CACHE: dict = {}


def _cached(key, build):
    if key not in _CACHE:
        _CACHE[key] = build()
    return _CACHE[key]


def simplices(domain: GridDomain, k: int) -> list:
    return _cached(("s", domain, k), lambda: sorted(SimplicialComplex(domain).enumerate_simplices(k)))


def cells(domain: GridDomain, k: int) -> list[int]:
    def build():
        ids, _ = CubicalCells(domain).cells(k, np.zeros(domain.shape))
        return sorted(ids.tolist())

    return _cached(("c", domain, k), build)


def ez_maps(domain: GridDomain) -> EZMaps:
    return _cached(("ez", domain), lambda: EZMaps(domain))


def random_domain(rng, max_m: int = 3) -> GridDomain:
    m = int(rng.integers(1, max_m + 1))
    if rng.random() < 0.3:
        return GridDomain(tuple(int(g) for g in rng.integers(3, 4, m)), TORUS)
    return GridDomain(tuple(int(g) for g in rng.integers(2, 4, m)), CUBE)


def _coefs(rng, count: int, ring: str) -> list[int]:
    if ring == Z2:
        return [1] * count
    return [int(c) for c in rng.choice([-3, -2, -1, 1, 2, 3], count)]


def random_cochain(rng, domain: GridDomain, k: int, ring: str, size: int = 10) -> Cochain:
    pool = simplices(domain, k)
    pick = rng.choice(len(pool), min(size, len(pool)), replace=False)
    return Cochain(k, ring, dict(zip((pool[i] for i in pick), _coefs(rng, len(pick), ring))))


def random_cubical(rng, domain: GridDomain, k: int, ring: str, size: int = 10) -> CubicalCochain:
    pool = cells(domain, k)
    pick = rng.choice(len(pool), min(size, len(pool)), replace=False)
    return CubicalCochain(k, ring, dict(zip((pool[i] for i in pick), _coefs(rng, len(pick), ring))))


def _ring(rng) -> str:
    return Z2 if rng.random() < 0.5 else Z


# -- chain identities ---------------------------------------------------------------


def check_delta_squared(rng) -> bool:
    d = random_domain(rng)
    if d.m < 2:
        d = GridDomain((3, 3, 2))
    k = int(rng.integers(0, d.m - 1))
    cx = SimplicialComplex(d)
    c = random_cochain(rng, d, k, _ring(rng))
    return not coboundary(coboundary(c, cx), cx)


def check_eml_aw(rng) -> bool:
    d = random_domain(rng)
    c = random_cubical(rng, d, int(rng.integers(0, d.m + 1)), _ring(rng))
    ez = ez_maps(d)
    return ez.eml(ez.aw(c)).entries == c.entries


def check_homotopy(rng) -> bool:
    d = random_domain(rng)
    ez = ez_maps(d)
    s = random_cochain(rng, d, int(rng.integers(0, d.m + 1)), _ring(rng))
    rhs = Cochain(s.k, s.ring)
    if s.k > 0:
        rhs = rhs + coboundary(ez.shi(s), ez.complex)
    if s.k < d.m:
        rhs = rhs + ez.shi(coboundary(s, ez.complex))
    return ez.aw(ez.eml(s)) - s == rhs


def check_naturality(rng) -> bool:
    d = random_domain(rng)
    if d.m < 2:
        d = GridDomain((3, 3))
    ez = ez_maps(d)
    k = int(rng.integers(0, d.m))
    ring = _ring(rng)
    c = random_cubical(rng, d, k, ring)
    s = random_cochain(rng, d, k, ring)
    aw_ok = ez.aw(cubical_coboundary(c, ez.cells)) == coboundary(ez.aw(c), ez.complex)
    eml_ok = ez.eml(coboundary(s, ez.complex)).entries == cubical_coboundary(ez.eml(s), ez.cells).entries
    return aw_ok and eml_ok


# -- the secondary cochain v(x) ---------------------------------------------------------


def _cube_for(n: int) -> GridDomain:
    # v(x) lives in degree n + 1
    return GridDomain((2,) * (n + 1))


def random_cocycle(rng, domain: GridDomain, k: int, ring: str) -> Cochain:
    """A coboundary, hence a cocycle (the grids here are contractible)."""
    z = random_cochain(rng, domain, k - 1, ring, size=8)
    return coboundary(z, SimplicialComplex(domain))


def check_v_cocycle(rng, n: int | None = None) -> bool:
    n = n or int(rng.choice([3, 4]))
    d = _cube_for(n)
    cx = SimplicialComplex(d)
    x = random_cocycle(rng, d, n - 1, Z)
    rank = rng.permutation(d.vertex_count) if rng.random() < 0.5 else None
    v = steenrod_v(x, n, cx, rank)
    return not coboundary(v, cx) if v.k < d.m else True


def random_codes(rng, vertex_count: int, n: int) -> np.ndarray:
    # mostly positive axes, so that many simplices map into the sphere
    codes = 2 * rng.integers(0, n, vertex_count)
    codes[rng.random(vertex_count) < 0.1] += 1
    codes[rng.random(vertex_count) < 0.05] = -1
    return codes


def _in_sphere(codes, simplex) -> bool:
    cs = {int(codes[v]) for v in simplex}
    return -1 not in cs and not any(c ^ 1 in cs for c in cs)


def characteristic_pullback(codes, domain: GridDomain, n: int) -> Cochain:
    """The pulled-back characteristic cochain of the positive face, by direct enumeration."""
    out = {}
    for s in simplices(domain, n - 1):
        cs = [int(codes[v]) for v in s]
        if min(cs) < 0 or any(c & 1 for c in cs) or sorted(c >> 1 for c in cs) != list(range(n)):
            continue
        out[s] = permutation_sign([c >> 1 for c in cs])
    return Cochain(n - 1, Z, out)


def check_v_vanishes_on_sphere_part(rng, n: int | None = None) -> bool:
    """``v(x)`` is zero on every simplex mapped into the sphere, for ``x`` the pullback there."""
    n = n or int(rng.choice([3, 4]))
    d = _cube_for(n)
    cx = SimplicialComplex(d)
    codes = random_codes(rng, d.vertex_count, n)
    ybar = characteristic_pullback(codes, d, n)
    # any values off the sphere part; they cannot matter on it
    noise = random_cochain(rng, d, n - 1, Z, size=6).restrict(lambda s: not _in_sphere(codes, s))
    x = ybar + noise
    rank = compatible_vertex_order(codes, 2 * n)
    v = steenrod_v(x, n, cx, rank)
    return all(not _in_sphere(codes, s) for s in v.entries)


def check_cup_coboundary_formula(rng) -> bool:
    """``d(u cup_i v) = u cup_{i-1} v + v cup_{i-1} u + du cup_i v + u cup_i dv`` mod 2."""
    d = GridDomain((2, 2, 2, 2))
    cx = SimplicialComplex(d)
    i = int(rng.integers(1, 3))
    p = int(rng.integers(i, 3))
    q = int(rng.integers(i, 3))
    if p + q - i + 1 > d.m:
        p, q = i, i
    u = random_cochain(rng, d, p, Z2)
    v = random_cochain(rng, d, q, Z2)
    rank = rng.permutation(d.vertex_count)
    lhs = coboundary(cup_i(u, v, i, cx, rank), cx)
    rhs = cup_i(u, v, i - 1, cx, rank) + cup_i(v, u, i - 1, cx, rank)
    if p + 1 + q - i <= d.m:
        rhs = rhs + cup_i(coboundary(u, cx), v, i, cx, rank)
        rhs = rhs + cup_i(u, coboundary(v, cx), i, cx, rank)
    return lhs == rhs


def check_leibniz(rng) -> bool:
    """``d(u cup v) = du cup v + (-1)^p u cup dv`` over the integers, in a random vertex order."""
    d = GridDomain((2, 2, 2, 2))
    cx = SimplicialComplex(d)
    p = int(rng.integers(0, 2))
    q = int(rng.integers(0, 3 - p))
    u = random_cochain(rng, d, p, Z)
    v = random_cochain(rng, d, q, Z)
    rank = rng.permutation(d.vertex_count) if rng.random() < 0.7 else None
    lhs = coboundary(cup_i(u, v, 0, cx, rank), cx)
    rhs = cup_i(coboundary(u, cx), v, 0, cx, rank) + cup_i(u, coboundary(v, cx), 0, cx, rank).scale((-1) ** p)
    return lhs == rhs


# -- mixed terms over the integers on a cube -------------------------------------------


def _brute(domain: GridDomain, k: int) -> list:
    return _cached(("b", domain, k), lambda: sorted(brute_simplices(domain.resolutions, k)))


def _dense(domain: GridDomain, k: int, keep) -> tuple[list, list, np.ndarray]:
    rows = [s for s in _brute(domain, k + 1) if keep(s)]
    cols = [s for s in _brute(domain, k) if keep(s)]
    return rows, cols, coboundary_matrix(rows, cols)


def random_subcomplex(rng, domain: GridDomain) -> np.ndarray:
    """Vertex mask of a full subcomplex; on 3^4 it always misses the centre, so H^4(X, A) can be nonzero."""
    if domain.resolutions == (3, 3, 3, 3):
        inside = rng.random(domain.vertex_count) >= 0.1
        inside[domain.vertex_id((1, 1, 1, 1))] = False
        return inside
    return rng.random(domain.vertex_count) < 0.6


def check_cup_square_difference(rng, resolutions=None) -> bool:
    """``(x - w) cup (x - w) - x cup x`` is a relative coboundary over Z.

    ``x`` is a random 2-cocycle of the grid and ``w`` a random relative
    2-cocycle of the pair (grid, full subcomplex on a random vertex set).
    """
    if resolutions is None:
        resolutions = [(2, 2, 2, 2), (3, 2, 2, 2), (3, 3, 3, 3)][int(rng.integers(0, 3))]
    d = GridDomain(resolutions)
    cx = SimplicialComplex(d)
    inside = random_subcomplex(rng, d)

    def relative(s):
        return not all(inside[v] for v in s)

    x = random_cocycle(rng, d, 2, Z)
    rows2, cols2, mat2 = _dense(d, 2, relative)
    basis = integer_kernel(mat2)
    coeffs = rng.integers(-2, 3, basis.shape[1]).astype(object)
    wvec = basis.dot(coeffs) if basis.shape[1] else np.zeros(len(cols2), dtype=object)
    w = Cochain(2, Z, {s: int(c) for s, c in zip(cols2, wvec) if c})
    if coboundary(w, cx):
        return False
    diff = steenrod_v(x - w, 3, cx) - steenrod_v(x, 3, cx)
    if any(not relative(s) for s in diff.entries):
        return False
    rows4, cols3, mat4 = _dense(d, 3, relative)
    target = np.array([diff[s] for s in rows4], dtype=object)
    return solvable_z(mat4, target)


def relative_top_class_is_detected() -> bool:
    """Negative control: with A a 3-sphere, one relative 4-simplex is not a relative coboundary."""
    d = GridDomain((3, 3, 3, 3))
    inside = np.ones(d.vertex_count, dtype=bool)
    inside[d.vertex_id((1, 1, 1, 1))] = False

    def relative(s):
        return not all(inside[v] for v in s)

    rows4, _, mat4 = _dense(d, 3, relative)
    target = np.zeros(len(rows4), dtype=object)
    target[0] = 1
    return not solvable_z(mat4, target)


# -- robust optimization cases -------------------------------------------------------------


def line_case(g=41):
    d = GridDomain((g,))
    x = np.linspace(-1.0, 1.0, g)
    h = 2 / (g - 1)
    return SampledField(d, x[:, None], h), ObjectiveField(d, x, h)


def random_opt_case(seed, g=15):
    f = gen_gaussian(2, g, 2, scale=4.0, seed=seed)
    rng = np.random.default_rng(seed)
    o = ObjectiveField(f.domain, rng.normal(size=f.domain.vertex_count), 1.0)
    return f, o


def instances_with_points(mode, count):
    opts = Options(mode=mode, start="simplicial")
    found = []
    seed = 100
    while len(found) < count:
        f, o = random_opt_case(seed, g=10)
        curve = opt_curve(f, o, float(np.abs(f.values).max()), opts)
        if curve.points:
            found.append((f, o, curve))
        seed += 1
    return opts, found


# -- persistent generators against the lattice oracle ------------------------------------


def dense_columns(dense: np.ndarray) -> list:
    """Columns of a dense integer matrix as ``(rows, coefficients)`` pairs."""
    out = []
    for j in range(dense.shape[1]):
        rows = np.nonzero(dense[:, j])[0]
        out.append(([int(r) for r in rows], [int(dense[r, j]) for r in rows]))
    return out


def generator_case(rng, resolutions, n: int):
    """A random vertex filtration of a grid complex, as dense matrices in filtration order.

    Returns ``(M, N, n_index)``: the coboundary of the (n-1)-simplices (rows:
    n-simplices), the coboundary of the (n-2)-simplices with rows in the
    filtration order of the (n-1)-simplices, and the step at which each
    (n-2)-simplex joins the relative complex.
    """
    d = GridDomain(resolutions)
    values = rng.permutation(d.vertex_count)
    mid = _brute(d, n - 1)
    low = _brute(d, n - 2)
    top = _brute(d, n)

    def value(s):
        return min(values[v] for v in s)

    mid = sorted(mid, key=lambda s: (value(s), s))
    low = sorted(low, key=lambda s: (value(s), s))
    m_dense = coboundary_matrix(top, mid)
    n_dense = coboundary_matrix(mid, low)
    mid_values = np.array([value(s) for s in mid])
    n_index = []
    for k, s in enumerate(low):
        rows = np.nonzero(n_dense[:, k])[0]
        first = int(np.searchsorted(mid_values, value(s), side="left"))
        n_index.append(max(int(rows.max()) if rows.size else -1, first))
    return m_dense, n_dense, n_index


class Echelon:
    """Integer lattice basis kept in echelon form by last nonzero row (dense, exact)."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows: dict[int, list[int]] = {}

    def add(self, vector) -> None:
        v = [int(x) for x in vector]
        while True:
            p = next((k for k in range(self.dim - 1, -1, -1) if v[k]), None)
            if p is None:
                return
            if p not in self.rows:
                self.rows[p] = v if v[p] > 0 else [-x for x in v]
                return
            u = self.rows[p]
            g, s, t = _egcd(u[p], v[p])
            a, b = u[p] // g, v[p] // g
            self.rows[p] = [s * x + t * y for x, y in zip(u, v)]
            v = [b * x - a * y for x, y in zip(u, v)]

    def profile(self, upto: int) -> dict[int, int]:
        """Pivot row -> |pivot| for basis vectors with pivot at most ``upto``."""
        return {p: abs(v[p]) for p, v in self.rows.items() if p <= upto}


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def check_generators_at_every_step(m_dense, n_dense, n_index, gens, mu) -> bool:
    """At each step, generators plus relative coboundaries span exactly the relative cocycles.

    The relative cocycles at step ``i`` are the integer kernel of ``M`` cut down
    to vectors supported on the first ``i + 1`` rows.  An echelon basis of the
    whole kernel (by last nonzero row) yields those through its pivots, and a
    sublattice equals it exactly when both echelon forms share pivot rows and
    pivot magnitudes.
    """
    steps = m_dense.shape[1]
    kernel = integer_kernel(m_dense)
    if not lattice_equal(kernel, m_dense):
        return False
    target = Echelon(steps)
    for j in range(kernel.shape[1]):
        target.add(kernel[:, j])
    spanned = Echelon(steps)
    cocycle_map = m_dense.astype(object)
    order = sorted(range(n_dense.shape[1]), key=lambda k: n_index[k])
    added_n = added_g = 0
    for i in range(steps):
        new = []
        while added_g < mu[i]:
            g = gens[added_g]
            if any(r > i for r in g):
                return False
            new.append([g.get(r, 0) for r in range(steps)])
            added_g += 1
        while added_n < len(order) and n_index[order[added_n]] <= i:
            col = n_dense[:, order[added_n]]
            if col[i + 1:].any():
                return False
            new.append(col.tolist())
            added_n += 1
        for v in new:
            if any(cocycle_map.dot(np.array(v, dtype=object))):
                return False
            spanned.add(v)
        expected = target.profile(i)
        if spanned.profile(i) != expected or len(spanned.rows) != len(expected):
            return False
    return True
