import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SECTION_BLOCKS, SECTION_COL_LABELS, SECTION_ROW_LABELS, TABLE1, TABLE2
from coclick.cocluster import (
    CoClusterGrid,
    build_grid,
    canonical_order,
    relation_page_normalized,
    relation_user_normalized,
    top_interest,
)


def relations_oracle(a, row_labels, col_labels, ku, kp):
    """Block sums and both normalizations by explicit loops over every cell."""
    n, m = len(a), len(a[0])
    blocks = [[0] * kp for _ in range(ku)]
    for i in range(ku):
        for j in range(kp):
            for u in range(n):
                for p in range(m):
                    if row_labels[u] == i and col_labels[p] == j:
                        blocks[i][j] += int(a[u][p])
    col_tot = [sum(blocks[i][j] for i in range(ku)) for j in range(kp)]
    row_tot = [sum(blocks[i][j] for j in range(kp)) for i in range(ku)]
    r1 = [[blocks[i][j] / col_tot[j] if col_tot[j] else 0.0 for j in range(kp)] for i in range(ku)]
    r2 = [[blocks[i][j] / row_tot[i] if row_tot[i] else 0.0 for j in range(kp)] for i in range(ku)]
    return blocks, r1, r2


def test_section_grid(section_matrix):
    g = build_grid(section_matrix, SECTION_ROW_LABELS, SECTION_COL_LABELS)
    assert g.block_hits.tolist() == SECTION_BLOCKS
    assert g.user_clusters == ((0, 1), (2, 3), (4, 5))
    assert g.page_clusters == ((0, 1, 2), (3, 4, 5))
    np.testing.assert_allclose(g.r1, [[21 / 37, 0], [0, 26 / 50], [16 / 37, 24 / 50]], atol=1e-12)
    np.testing.assert_allclose(g.r2, [[1, 0], [0, 1], [0.4, 0.6]], atol=1e-12)


def test_singleton_partitions_reproduce_matrix(rng):
    a = rng.integers(0, 7, size=(5, 4))
    g = build_grid(a, np.arange(5), np.arange(4))
    assert np.array_equal(g.block_hits, a)


def test_all_zero():
    g = build_grid(np.zeros((4, 3), dtype=int), [0, 1, 0, 1], [0, 0, 1])
    assert (g.block_hits == 0).all() and (g.r1 == 0).all() and (g.r2 == 0).all()


def test_single_user_cluster_gives_ones_row(rng):
    a = rng.integers(1, 5, size=(6, 5))
    g = build_grid(a, np.zeros(6, dtype=int), [0, 1, 1, 2, 2])
    assert g.r1.tolist() == [[1.0, 1.0, 1.0]]


def test_single_page_cluster_gives_ones_column(rng):
    a = rng.integers(1, 5, size=(6, 5))
    g = build_grid(a, [0, 1, 1, 2, 2, 0], np.zeros(5, dtype=int))
    assert g.r2.tolist() == [[1.0], [1.0], [1.0]]


def test_length_mismatch(section_matrix):
    with pytest.raises(ValueError):
        build_grid(section_matrix, [0, 1, 2], SECTION_COL_LABELS)
    with pytest.raises(ValueError):
        build_grid(section_matrix, SECTION_ROW_LABELS, [0, 1])


def test_canonical_order():
    assert canonical_order([2, 0, 2, 1, 1, 2]) == ((0, 2, 5), (3, 4), (1,))
    assert canonical_order([1, 1, 0, 0]) == ((0, 1), (2, 3))


def test_published_tables_sum_to_one():
    np.testing.assert_allclose(TABLE1.sum(axis=0), 1, atol=1.5e-4)
    np.testing.assert_allclose(TABLE2.sum(axis=0), 1, atol=1.5e-4)


def published_grid():
    return CoClusterGrid((), (), None, r1=TABLE1, r2=TABLE2.T)


def test_top_interest_table1():
    ranked = top_interest(published_grid(), page_cluster=2)
    assert ranked[0] == (1, 0.4192)


def test_top_interest_table2():
    ranked = top_interest(published_grid(), user_cluster=1)
    assert ranked[0] == (2, 0.8422)
    assert [c for c, _ in ranked] == [2, 0, 1]


def test_top_interest_single_pair():
    g = build_grid(np.array([[1, 2], [3, 4]]), [0, 0], [0, 0])
    assert top_interest(g, user_cluster=0) == [(0, 1.0)]
    assert top_interest(g, page_cluster=0) == [(0, 1.0)]


def test_top_interest_ties_and_errors():
    g = CoClusterGrid((), (), None, r1=np.array([[0.5, 0.2], [0.5, 0.8]]), r2=np.array([[0.5, 0.5]]))
    assert top_interest(g, page_cluster=0) == [(0, 0.5), (1, 0.5)]
    assert top_interest(g, user_cluster=0) == [(0, 0.5), (1, 0.5)]
    with pytest.raises(IndexError):
        top_interest(g, page_cluster=2)
    with pytest.raises(ValueError):
        top_interest(g)
    with pytest.raises(ValueError):
        top_interest(g, user_cluster=0, page_cluster=0)


@st.composite
def instances(draw):
    n = draw(st.integers(1, 8))
    m = draw(st.integers(1, 8))
    a = np.array(draw(st.lists(st.integers(0, 9), min_size=n * m, max_size=n * m))).reshape(n, m)
    ku = draw(st.integers(1, n))
    kp = draw(st.integers(1, m))
    # every label used at least once
    rows = np.array(list(range(ku)) + draw(st.lists(st.integers(0, ku - 1), min_size=n - ku, max_size=n - ku)))
    cols = np.array(list(range(kp)) + draw(st.lists(st.integers(0, kp - 1), min_size=m - kp, max_size=m - kp)))
    rows = np.array(draw(st.permutations(rows.tolist())))
    cols = np.array(draw(st.permutations(cols.tolist())))
    return a, rows, cols, ku, kp


@settings(max_examples=200)
@given(instances())
def test_matches_loop_oracle(inst):
    a, rows, cols, ku, kp = inst
    g = build_grid(a, rows, cols)
    # map oracle labels into the grid's display order
    row_rank = {rows[members[0]]: i for i, members in enumerate(g.user_clusters)}
    col_rank = {cols[members[0]]: j for j, members in enumerate(g.page_clusters)}
    blocks, r1, r2 = relations_oracle(
        a.tolist(), [row_rank[x] for x in rows], [col_rank[x] for x in cols], ku, kp
    )
    assert g.block_hits.tolist() == blocks
    assert g.r1.tolist() == r1
    assert g.r2.tolist() == r2
    assert g.block_hits.sum() == a.sum()
    nz = g.block_hits != 0
    assert np.array_equal(g.r1 != 0, nz) and np.array_equal(g.r2 != 0, nz)
    assert np.array_equal(relation_page_normalized(g), g.r1)
    assert np.array_equal(relation_user_normalized(g), g.r2)


@settings(max_examples=100)
@given(instances(), st.integers(2, 50))
def test_scaling_invariance(inst, c):
    a, rows, cols, _, _ = inst
    g, h = build_grid(a, rows, cols), build_grid(a * c, rows, cols)
    np.testing.assert_allclose(g.r1, h.r1, atol=1e-15)
    np.testing.assert_allclose(g.r2, h.r2, atol=1e-15)
    for i in range(g.shape[0]):
        assert [x for x, _ in top_interest(g, user_cluster=i)] == [x for x, _ in top_interest(h, user_cluster=i)]
    for j in range(g.shape[1]):
        assert [x for x, _ in top_interest(g, page_cluster=j)] == [x for x, _ in top_interest(h, page_cluster=j)]
