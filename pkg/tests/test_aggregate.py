import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensusdb.aggregate import GroupMatrix, expected_sq_distance, group_matrix_from_tree, mean_counts, median_counts
from consensusdb.model import from_bid
from consensusdb.oracle import (
    count_distribution,
    count_vector,
    expected_sq_distance_enum,
    group_assignments,
    median_counts_exhaustive,
    nearest_realizable,
)

from conftest import seeds


def random_matrix(seed, n_max=10, m_max=4, support=3):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, n_max + 1)), int(rng.integers(1, m_max + 1))
    P = np.zeros((n, m))
    for i in range(n):
        cols = rng.choice(m, size=int(rng.integers(1, min(support, m) + 1)), replace=False)
        w = rng.random(len(cols)) + 0.05
        if rng.random() < 0.2:
            w = np.round(w * 4)  + 1
        P[i, cols] = w / w.sum()
    return P


def test_group_matrix_validation():
    with pytest.raises(ValueError, match="sums to"):
        GroupMatrix([[0.5, 0.4]], ["A", "B"])
    with pytest.raises(ValueError, match="group names"):
        GroupMatrix([[1.0]], ["A", "B"])
    with pytest.raises(ValueError):
        GroupMatrix([[1.5, -0.5]], ["A", "B"])
    assert GroupMatrix([[1.0, 0.0]], ["A", "B"]).tuples == ["t1"]


def test_certain_groups():
    gm = GroupMatrix([[1, 0], [1, 0], [0, 1]], ["A", "B"])
    assert mean_counts(gm).as_dict() == {"A": 2.0, "B": 1.0}
    assert median_counts(gm).as_dict() == {"A": 2, "B": 1}
    assert expected_sq_distance(gm, [2, 1]) == 0.0


def test_fractional_mean_is_rounded_to_a_realizable_vector():
    gm = GroupMatrix([[0.5, 0.5], [0.5, 0.5]], ["A", "B"])
    r = median_counts(gm).r
    assert list(r) == [1, 1]
    assert expected_sq_distance(gm, r) == pytest.approx(1.0)


def test_example_file():
    from consensusdb.io import parse_group_csv

    gm = parse_group_csv(open("data/groups.csv").read())
    r = median_counts(gm)
    assert tuple(r.r) == nearest_realizable(gm.P)[0]


def test_from_bid_tree():
    tree = from_bid([("t1", "x", 0.3), ("t1", "y", 0.7), ("t2", "y", 1.0)])
    gm = group_matrix_from_tree(tree)
    assert gm.groups == ["x", "y"]
    np.testing.assert_allclose(gm.P, [[0.3, 0.7], [0.0, 1.0]])


def test_from_bid_tree_with_missing_tuples_is_rejected():
    with pytest.raises(ValueError):
        group_matrix_from_tree(from_bid([("t1", "x", 0.3)]))


def test_count_distribution_matches_assignment_product():
    P = random_matrix(3, n_max=5)
    brute = {}
    for choice, prob in group_assignments(P):
        r = count_vector(choice, P.shape[1])
        brute[r] = brute.get(r, 0.0) + prob
    dist = count_distribution(P)
    assert dist.keys() == brute.keys()
    for r in dist:
        assert dist[r] == pytest.approx(brute[r])


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_expected_sq_distance_matches_enumeration(seed):
    P = random_matrix(seed, n_max=7)
    gm = GroupMatrix(P, [f"g{j}" for j in range(P.shape[1])])
    r = np.random.default_rng(seed).integers(0, 4, P.shape[1])
    assert expected_sq_distance(gm, r) == pytest.approx(expected_sq_distance_enum(P, r), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_median_is_nearest_realizable(seed):
    P = random_matrix(seed)
    gm = GroupMatrix(P, [f"g{j}" for j in range(P.shape[1])])
    r = median_counts(gm).r
    mean = P.sum(axis=0)
    assert tuple(r) in count_distribution(P)
    assert np.sum((r - mean) ** 2) == pytest.approx(nearest_realizable(P)[1], abs=1e-9)
    for rj, mj in zip(r, mean):
        assert rj in (math.floor(mj + 1e-9), math.ceil(mj - 1e-9))
    _, best = median_counts_exhaustive(P)
    assert expected_sq_distance(gm, r) <= 4 * best + 1e-9


def test_expected_sq_distance_shape_check():
    gm = GroupMatrix([[1.0, 0.0]], ["A", "B"])
    with pytest.raises(ValueError):
        expected_sq_distance(gm, [1, 0, 0])


@given(st.integers(1, 6))
def test_uniform_rows(n):
    gm = GroupMatrix(np.full((n, 2), 0.5), ["A", "B"])
    r = median_counts(gm).r
    assert r.sum() == n
    assert abs(int(r[0]) - n / 2) <= 0.5
