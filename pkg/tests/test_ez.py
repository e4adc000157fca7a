import numpy as np
from hypothesis import given, settings

from ezstrategies import all_cells, all_simplices, cubical_cochains, simplicial_cochains
from oracles import coboundary_matrix
from robzero.cells import CubicalCells
from robzero.domain import CUBE, TORUS, Z, Cochain, GridDomain, SimplicialComplex, coboundary
from robzero.ez import (
    CubicalCochain,
    EZMaps,
    aw_terms,
    cubical_coboundary,
    eml_terms,
    homotopy,
)

_MAPS: dict = {}


def maps(domain):
    if domain not in _MAPS:
        _MAPS[domain] = EZMaps(domain)
    return _MAPS[domain]


def test_aw_of_a_staircase_edge_is_its_cell():
    assert aw_terms((0, 1)) == [(0, 1)]


def test_aw_of_a_diagonal_edge_is_the_front_back_path():
    # first along axis 1 from the origin, then along axis 0 from e1
    assert sorted(aw_terms((0, 3))) == [(0, 2), (2, 1)]


def test_aw_of_a_square_triangle():
    # (0, e0, e0+e1) goes to the square spanned at the origin
    assert aw_terms((0, 1, 3)) == [(0, 3)]


def test_eml_terms_of_a_square():
    terms = dict(eml_terms(0, 3))
    assert terms == {(0, 1, 3): 1, (0, 2, 3): -1}


def test_homotopy_vanishes_on_vertices_and_staircase_edges():
    assert homotopy((0,)) == ()
    assert homotopy((0, 1)) == ()


def test_diagonal_edge_homotopy_is_the_filling_triangles():
    # the boundary of H(diagonal) is the path through e1 minus the diagonal
    h = dict(homotopy((0, 3)))
    chain: dict = {}
    for s, c in h.items():
        for i in range(3):
            face = s[:i] + s[i + 1:]
            chain[face] = chain.get(face, 0) + (-1) ** i * c
    chain = {f: c for f, c in chain.items() if c}
    assert chain == {(0, 3): -1, (0, 2): 1, (2, 3): 1}


def test_cubical_coboundary_is_dual_to_boundary():
    d = GridDomain((3, 3, 2))
    cells = CubicalCells(d)
    for k in range(d.m):
        for cid in all_cells(d, k):
            up = cubical_coboundary(CubicalCochain(k, Z, {cid: 1}), cells)
            want: dict = {}
            for top in all_cells(d, k + 1):
                for face, sign in cells.boundary(top):
                    if face == cid:
                        want[top] = want.get(top, 0) + sign
            assert up.entries == {c: v for c, v in want.items() if v}


def test_simplicial_coboundary_matches_dense_oracle():
    for d in (GridDomain((3, 2, 2)), GridDomain((3, 3), TORUS)):
        cx = SimplicialComplex(d)
        for k in range(d.m):
            rows = all_simplices(d, k + 1)
            cols = all_simplices(d, k)
            dense = coboundary_matrix(rows, cols)
            pos = {s: i for i, s in enumerate(rows)}
            for j, tau in enumerate(cols):
                got = np.zeros(len(rows), dtype=np.int64)
                for s, c in coboundary(Cochain(k, Z, {tau: 1}), cx).entries.items():
                    got[pos[s]] = c
                assert np.array_equal(got, dense[:, j])


@settings(max_examples=250, deadline=None)
@given(cubical_cochains())
def test_eml_after_aw_is_identity(case):
    domain, c = case
    ez = maps(domain)
    assert ez.eml(ez.aw(c)).entries == c.entries


@settings(max_examples=250, deadline=None)
@given(simplicial_cochains())
def test_aw_eml_homotopic_to_identity(case):
    domain, s = case
    ez = maps(domain)
    lhs = ez.aw(ez.eml(s)) - s
    rhs = Cochain(s.k, s.ring)
    if s.k > 0:
        rhs = rhs + coboundary(ez.shi(s), ez.complex)
    if s.k < domain.m:
        rhs = rhs + ez.shi(coboundary(s, ez.complex))
    assert lhs == rhs


@settings(max_examples=250, deadline=None)
@given(cubical_cochains())
def test_aw_commutes_with_coboundary(case):
    domain, c = case
    if c.k == domain.m:
        return
    ez = maps(domain)
    assert ez.aw(cubical_coboundary(c, ez.cells)) == coboundary(ez.aw(c), ez.complex)


@settings(max_examples=250, deadline=None)
@given(simplicial_cochains(top=False))
def test_eml_commutes_with_coboundary(case):
    domain, s = case
    if s.k == domain.m:
        return
    ez = maps(domain)
    assert ez.eml(coboundary(s, ez.complex)).entries == cubical_coboundary(ez.eml(s), ez.cells).entries


@settings(max_examples=200, deadline=None)
@given(cubical_cochains())
def test_cubical_coboundary_squares_to_zero(case):
    domain, c = case
    if c.k + 2 > domain.m:
        return
    cells = maps(domain).cells
    assert not cubical_coboundary(cubical_coboundary(c, cells), cells)


def test_lift_extension_is_the_documented_combination():
    d = GridDomain((3, 3, 3), CUBE)
    ez = maps(d)
    edges = all_simplices(d, 1)
    ybar = Cochain(1, Z, {edges[0]: 1, edges[5]: -2, edges[9]: 3})
    squares = all_cells(d, 1)
    c = CubicalCochain(1, Z, {squares[2]: 1})
    x = ez.lift_extension(ybar, c)
    assert x == ybar - (ez.aw(c) - ez.shi(coboundary(ybar, ez.complex)))
