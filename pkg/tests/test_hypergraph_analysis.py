import json
import math

import numpy as np
import pytest

from sketches.errors import InsufficientSamplesError
from sketches.hypergraph_analysis import (
    ComponentClass,
    Peelability,
    classify,
    component_size_stats,
    components,
    peelability,
    reference_components,
    same_component,
)
from sketches.set_query import RecoveryResult, SupportSet, recover
from sketches.sketch_core import apply, build_matrix, derive_params
from tests.conftest import hand_matrix, loose_matrix


def test_classify_counts_vertices():
    assert classify(7, 1, 7) is ComponentClass.HYPERTREE
    assert classify(13, 2, 7) is ComponentClass.HYPERTREE
    assert classify(12, 2, 7) is ComponentClass.UNICYCLIC
    assert classify(7, 2, 7) is ComponentClass.COMPLEX


@pytest.mark.parametrize(
    "second, expected",
    [
        ([6, 7, 8, 9, 10, 11, 12], ComponentClass.HYPERTREE),
        ([5, 6, 7, 8, 9, 10, 11], ComponentClass.UNICYCLIC),
        ([0, 1, 2, 3, 4, 5, 6], ComponentClass.COMPLEX),
    ],
)
def test_two_edges_sharing_rows(second, expected):
    matrix = hand_matrix([[0, 1, 2, 3, 4, 5, 6], second], w=20)
    report = components(matrix, [0, 1])
    assert len(report.components) == 1
    assert report.components[0].kind is expected
    assert report.edge_sizes.tolist() == [2, 2]
    assert same_component(report, 0, 1)


def test_disjoint_edges_are_separate_hypertrees():
    matrix = hand_matrix([[0, 1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12, 13]], w=20)
    report = components(matrix, [0, 1])
    assert report.class_counts == {"Hypertree": 2, "Unicyclic": 0, "Complex": 0}
    assert report.max_size == 1
    assert not same_component(report, 0, 1)
    assert peelability(report) is Peelability.ALL_GOOD


def test_complex_component_is_flagged():
    matrix = hand_matrix([[0, 1, 2, 3, 4, 5, 6]] * 2, w=20)
    assert peelability(components(matrix, [0, 1])) is Peelability.HAS_COMPLEX


@pytest.mark.parametrize("seed", range(20))
def test_union_find_matches_breadth_first_search(seed):
    rng = np.random.default_rng(seed)
    matrix = loose_matrix(400, 40, w=int(rng.integers(60, 400)), seed=seed)
    support = SupportSet.of(rng.choice(400, size=40, replace=False).tolist())
    fast = components(matrix, support)
    slow = reference_components(matrix, support)
    assert fast.components == slow.components
    np.testing.assert_array_equal(fast.component_ids, slow.component_ids)
    np.testing.assert_array_equal(fast.edge_sizes, slow.edge_sizes)


def test_all_good_supports_never_abort():
    all_good = 0
    for seed in range(40):
        rng = np.random.default_rng(seed)
        matrix = loose_matrix(300, 30, w=int(rng.integers(1_500, 3_000)), seed=seed)
        support = SupportSet.of(rng.choice(300, size=30, replace=False).tolist())
        if peelability(components(matrix, support)) is not Peelability.ALL_GOOD:
            continue
        all_good += 1
        x = rng.normal(size=300)
        outcome = recover(matrix, apply(matrix, x), support, rng)
        assert isinstance(outcome, RecoveryResult), f"semente {seed}"
        for i, v in outcome.estimate.pairs():
            assert v == pytest.approx(x[i], abs=1e-9)
    assert all_good >= 10


def test_at_most_one_d_minus_2_peel_per_good_component():
    checked = 0
    for seed in range(40):
        rng = np.random.default_rng(seed)
        matrix = loose_matrix(400, 40, w=int(rng.integers(300, 1_500)), seed=seed)
        support = SupportSet.of(rng.choice(400, size=40, replace=False).tolist())
        report = components(matrix, support)
        x = rng.normal(size=400)
        outcome = recover(matrix, apply(matrix, x), support, rng)
        late = {r.index for r in outcome.peel_log if r.at_d_minus_2}
        for component in report.components:
            if component.kind is ComponentClass.COMPLEX:
                continue
            assert len(late.intersection(component.edges)) <= 1, f"semente {seed}: {component}"
            checked += component.size >= 2
    assert checked > 0


def test_edge_sizes_sum_to_squares():
    matrix = hand_matrix(
        [[0, 1, 2, 3, 4, 5, 6], [6, 7, 8, 9, 10, 11, 12], [20, 21, 22, 23, 24, 25, 26]], w=30
    )
    report = components(matrix, [0, 1, 2])
    assert report.edge_sizes.tolist() == [2, 2, 1]
    assert sorted(c.size for c in report.components) == [1, 2]


def test_report_serializes():
    matrix = hand_matrix([[0, 1, 2, 3, 4, 5, 6], [5, 6, 7, 8, 9, 10, 11]], w=20)
    data = json.loads(components(matrix, [0, 1]).to_json())
    assert data["class_counts"]["Unicyclic"] == 1
    assert data["components"][0]["edges"] == [0, 1]
    assert data["max_size"] == 2


def test_component_size_stats():
    shared = hand_matrix([[0, 1, 2, 3, 4, 5, 6], [6, 7, 8, 9, 10, 11, 12]], w=20)
    apart = hand_matrix([[0, 1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12, 13]], w=20)
    samples = [components(shared, [0, 1]), components(apart, [0, 1])]
    stats = component_size_stats(samples)
    assert stats.samples == 2 and stats.edges == 4
    assert stats.mean == pytest.approx(1.5)
    assert stats.mean_sq == pytest.approx(2.5)
    assert stats.mean_fourth == pytest.approx(8.5)
    # Z = D²: (4, 4) e (1, 1); Var(soma) = 18, soma das variâncias = 9, k(k-1) = 2
    assert stats.cov_sq == pytest.approx(4.5)


def test_component_size_stats_needs_samples():
    matrix = hand_matrix([[0, 1, 2, 3, 4, 5, 6]], w=10)
    with pytest.raises(InsufficientSamplesError):
        component_size_stats([components(matrix, [0])])


def test_component_size_stats_with_mixed_k_has_no_covariance():
    matrix = hand_matrix([[0, 1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12, 13]], w=20)
    stats = component_size_stats([components(matrix, [0]), components(matrix, [0, 1])])
    assert math.isnan(stats.cov_sq)
    assert stats.mean == 1.0


def _threshold_reports(k, samples, seed):
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(samples):
        matrix = build_matrix(derive_params(20 * k, k, 1.0, seed=int(rng.integers(0, 2 ** 63))))
        support = SupportSet.of(rng.choice(20 * k, size=k, replace=False).tolist())
        reports.append(components(matrix, support))
    return reports


@pytest.mark.slow
def test_complex_fraction_falls_and_fourth_moment_stays_flat():
    small = _threshold_reports(100, 2_000, seed=31)
    large = _threshold_reports(1_000, 500, seed=32)
    complex_small = np.mean([peelability(r) is Peelability.HAS_COMPLEX for r in small])
    complex_large = np.mean([peelability(r) is Peelability.HAS_COMPLEX for r in large])
    assert complex_large <= complex_small
    if complex_small > 0:
        assert complex_large < complex_small

    fourth_small = component_size_stats(small).mean_fourth
    fourth_large = component_size_stats(large).mean_fourth
    assert 0.5 <= fourth_large / fourth_small <= 2.0
