import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from checks import check_generators_at_every_step, dense_columns, generator_case
from oracles import earliest_prefix, solvable_z
from robzero.domain import Z, Z2
from robzero.reduction import (
    ReducedPrefix,
    SparseColumn,
    earliest_solution,
    extended_gcd,
    persistent_generators,
    reduce_column,
)


def _cols(matrix):
    m = np.asarray(matrix)
    out = []
    for j in range(m.shape[1]):
        rows = [int(i) for i in np.nonzero(m[:, j])[0]]
        out.append((rows, [int(m[i, j]) for i in rows]))
    return out


def _vec(v):
    v = np.asarray(v)
    rows = [int(i) for i in np.nonzero(v)[0]]
    return rows, [int(v[i]) for i in rows]


@pytest.mark.parametrize("a,b", [(4, 6), (-4, 6), (7, 0), (0, -3), (12, -18)])
def test_extended_gcd(a, b):
    g, s, t = extended_gcd(a, b)
    assert g > 0 and s * a + t * b == g
    assert a % g == 0 and b % g == 0


def test_column_lowest_and_entries():
    col = SparseColumn([4, 1, 7], [2, -1, 3])
    assert col.lowest() == 7
    col.axpy(-1, [7], [3])
    assert col.lowest() == 4
    assert col.entries() == ((1, 4), (-1, 2))


def test_z2_column_drops_even_entries():
    col = SparseColumn([0, 1, 1], [3, 1, 1], Z2)
    assert col.entries() == ((0,), (1,))


def test_no_collision_leaves_column_alone():
    prefix = ReducedPrefix()
    prefix.admit(SparseColumn([0, 2], [1, 1]), 0)
    col = SparseColumn([1, 3], [2, 5])
    reduce_column(col, prefix)
    assert col.entries() == ((1, 3), (2, 5))


def test_forced_divisibility_stops_at_non_dividing_pivot():
    prefix = ReducedPrefix()
    prefix.admit(SparseColumn([1], [2]), 0)
    col = SparseColumn([0, 1], [1, 3])
    reduce_column(col, prefix, force_divisibility=True)
    assert col.entries() == ((0, 1), (1, 3))
    assert prefix.pivot_value(1) == 2


def test_gcd_collision_matches_exhaustive_search():
    # the smallest positive coefficient reachable at the row from (4, 6) by small combinations
    reachable = {abs(4 * a + 6 * b) for a in range(-10, 11) for b in range(-10, 11)} - {0}
    prefix = ReducedPrefix()
    prefix.admit(SparseColumn([0, 1], [1, 4]), 0)
    col = SparseColumn([0, 1], [0, 6])
    col = SparseColumn([1], [6])
    reduce_column(col, prefix)
    assert abs(prefix.pivot_value(1)) == min(reachable) == 2
    assert col.lowest() is None or col.lowest() < 1


def test_ring_mismatch():
    with pytest.raises(ValueError):
        reduce_column(SparseColumn([0], [1], Z2), ReducedPrefix(ring=Z))


def test_identity_solution():
    sol = earliest_solution(_cols(np.eye(2, dtype=int)), _vec([3, 5]))
    assert sol.index == 2 and sol.x == {0: 3, 1: 5}


def test_no_integer_solution():
    assert earliest_solution(_cols([[2]]), _vec([3])) is None


def test_needs_the_second_column():
    sol = earliest_solution(_cols([[1, 1], [0, 2]]), _vec([2, 2]))
    assert sol.index == 2 and sol.x == {0: 1, 1: 1}
    # no multiple of the first column alone reaches (2, 2)
    assert not solvable_z(np.array([[1], [0]]), np.array([2, 2]))


def test_zero_rhs_needs_no_columns():
    sol = earliest_solution(_cols([[1]]), ([], []))
    assert sol.index == 0 and sol.x == {}


def test_stops_reading_at_first_solution():
    read = []

    def stream():
        for j, c in enumerate(_cols(np.eye(4, dtype=int))):
            read.append(j)
            yield c

    sol = earliest_solution(stream(), _vec([1, 1, 0, 0]))
    assert sol.index == 2 and read == [0, 1]


_entry = st.integers(-5, 5)


@st.composite
def _system(draw):
    rows = draw(st.integers(1, 8))
    cols = draw(st.integers(0, 8))
    m = np.array(draw(st.lists(st.lists(_entry, min_size=cols, max_size=cols), min_size=rows, max_size=rows)),
                 dtype=np.int64).reshape(rows, cols)
    if draw(st.booleans()) and cols:
        coeffs = np.array(draw(st.lists(st.integers(-3, 3), min_size=cols, max_size=cols)))
        a = m @ coeffs
    else:
        a = np.array(draw(st.lists(_entry, min_size=rows, max_size=rows)))
    return m, a


@settings(max_examples=300, deadline=None)
@given(_system())
def test_earliest_solution_against_prefix_oracle(system):
    m, a = system
    sol = earliest_solution(_cols(m), _vec(a))
    want = earliest_prefix(m, a)
    if want is None:
        assert sol is None
        return
    assert sol is not None and sol.index == want
    x = np.zeros(m.shape[1], dtype=object)
    for j, v in sol.x.items():
        assert j < sol.index
        x[j] = v
    assert np.array_equal(m.astype(object) @ x, a.astype(object))


@settings(max_examples=200, deadline=None)
@given(_system())
def test_earliest_solution_z2_against_prefix_oracle(system):
    m, a = system
    sol = earliest_solution(_cols(m % 2), _vec(a % 2), Z2)
    want = earliest_prefix(m % 2, a % 2, Z2)
    assert (sol is None) == (want is None)
    if sol is not None:
        assert sol.index == want
        x = np.zeros(m.shape[1], dtype=np.int64)
        for j, v in sol.x.items():
            x[j] = v
        assert np.array_equal((m @ x) % 2, a % 2)


@settings(max_examples=200, deadline=None)
@given(_system())
def test_reduction_preserves_the_column_lattice(system):
    m, _ = system
    prefix = ReducedPrefix(track=True)
    for j, (rows, vals) in enumerate(_cols(m)):
        col = SparseColumn(rows, vals, Z, {j: 1})
        reduce_column(col, prefix)
        if col:
            prefix.admit(col, j)
        prefix.check()
    reduced = np.zeros((m.shape[0], len(prefix.rows)), dtype=np.int64)
    for k, (rows, vals) in enumerate(zip(prefix.rows, prefix.vals)):
        reduced[list(rows), k] = vals
        # each stored column is the recorded combination of the inputs
        combo = np.zeros(m.shape[1], dtype=np.int64)
        for j, c in prefix.basis_of(k).items():
            combo[j] = c
        assert np.array_equal(m @ combo, reduced[:, k])
    for j in range(m.shape[1]):
        assert solvable_z(reduced, m[:, j])
    for k in range(reduced.shape[1]):
        assert solvable_z(m, reduced[:, k])


def test_generators_of_a_triangle_boundary():
    # edges e0=(0,1), e1=(1,2), e2=(0,2); no triangles, so every edge cochain is a cocycle
    m_cols = [([], []), ([], []), ([], [])]
    n_cols = [([0, 2], [-1, -1]), ([0, 1], [1, -1]), ([1, 2], [1, 1])]
    n_index = [2, 1, 2]
    gens, mu, birth = persistent_generators(m_cols, n_cols, n_index)
    assert mu == [1, 1, 1] and birth == [0]


def test_no_generator_before_anything_leaves():
    gens, mu, _ = persistent_generators([([0], [1])], [], [])
    assert gens == [] and mu == [0]


@pytest.mark.parametrize("seed", range(4))
def test_persistent_generators_against_lattice_oracle(seed):
    rng = np.random.default_rng(seed)
    m_dense, n_dense, n_index = generator_case(rng, (3, 3, 3), 2 + seed % 2)
    gens, mu, _ = persistent_generators(dense_columns(m_dense), dense_columns(n_dense), n_index)
    assert check_generators_at_every_step(m_dense, n_dense, n_index, gens, mu)


def test_lattice_oracle_rejects_a_too_small_span():
    rng = np.random.default_rng(0)
    m_dense, n_dense, n_index = generator_case(rng, (3, 3, 3), 2)
    gens, mu, _ = persistent_generators(dense_columns(m_dense), dense_columns(n_dense), n_index)
    assert gens
    doubled = [{r: 2 * v for r, v in g.items()} for g in gens]
    assert not check_generators_at_every_step(m_dense, n_dense, n_index, doubled, mu)
    assert not check_generators_at_every_step(m_dense, n_dense, n_index, gens[:-1], [min(x, len(gens) - 1) for x in mu])
