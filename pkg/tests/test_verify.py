import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_articulation, bfs_connected, random_connected_neighbors, random_instance
from spatialqubo.dqm import Seeds
from spatialqubo.fixtures import (
    figure2_connected,
    figure2_disconnected,
    figure2_instance,
    figure2_region3_flows,
    figure2_seeds,
)
from spatialqubo.instance import Assignment, Instance, generate_grid
from spatialqubo.verify import (
    FlowConfig,
    articulation_areas,
    articulation_points,
    check_contiguity,
    complete_flows,
    connected_components,
    conservation_targets,
    theorem1_harness,
)


def first_member_seeds(assignment: Assignment, p: int) -> Seeds:
    return Seeds({k: assignment.region(k)[0] for k in range(1, p + 1)})


def test_worked_example_contiguity():
    inst = figure2_instance()
    assert check_contiguity(inst, figure2_connected()).ok
    report = check_contiguity(inst, figure2_disconnected())
    assert report.disconnected_regions() == [1, 3]
    # area ids 7 and {5}, {6}: internal indices are id - 1
    assert report.components[1] == [[2, 7, 8], [6]]
    assert report.components[3] == [[4], [5]]


def test_empty_region_is_a_violation():
    inst = generate_grid(2, 2, 3)
    report = check_contiguity(inst, Assignment([1, 1, 2, 2]))
    assert not report.ok and report.disconnected_regions() == [3]


def test_worked_example_region3_flows_meet_targets():
    inst = figure2_instance()
    a, seeds = figure2_connected(), figure2_seeds()
    targets = conservation_targets(inst, a, seeds)
    flows = figure2_region3_flows()
    # areas 6 (root), 7 and 5
    assert [flows.net_inflow(inst, i) for i in (5, 6, 4)] == [targets[5], targets[6], targets[4]] == [-2, 1, 1]


def test_worked_example_disconnected_residuals():
    inst = figure2_instance()
    a, seeds = figure2_disconnected(), figure2_seeds()
    flows = figure2_region3_flows(connected=False)
    assert [flows.net_inflow(inst, i) for i in (5, 6, 4)] == [0, 0, 0]
    # region 3 shrank to {5, 6}, so the root target is -1
    assert [conservation_targets(inst, a, seeds)[i] for i in (5, 4)] == [-1, 1]


def test_complete_flows_frozen_tree():
    flows = complete_flows(figure2_instance(), figure2_connected(), figure2_seeds())
    assert flows.flows == {(8, 7): 2, (7, 2): 1, (0, 1): 2, (1, 3): 1, (5, 6): 2, (6, 4): 1}


def test_complete_flows_fails_on_split_region_and_bad_root():
    inst = figure2_instance()
    assert complete_flows(inst, figure2_disconnected(), figure2_seeds()) is None
    with pytest.raises(ValueError, match="root"):
        complete_flows(inst, figure2_connected(), Seeds({1: 0, 2: 8, 3: 5}))


def test_flow_config_checks():
    inst = generate_grid(2, 2, 1)
    with pytest.raises(ValueError):
        FlowConfig({(0, 1): -1})
    with pytest.raises(ValueError, match="non-adjacent"):
        FlowConfig({(0, 3): 1}).validate(inst)
    with pytest.raises(ValueError, match="bound"):
        FlowConfig({(0, 1): 4}).validate(inst, M=3)
    fc = FlowConfig({(0, 1): 2, (1, 0): 1})
    assert fc[1, 0] == 1 and fc[2, 3] == 0 and fc.max_flow() == 2
    assert fc.net_inflow(inst, 1) == 1


def test_theorem1_harness_on_worked_example():
    inst, seeds = figure2_instance(), figure2_seeds()
    good = theorem1_harness(inst, figure2_connected(), seeds)
    assert good.contiguous and good.zero_penalty_flow and good.consistent
    assert good.witness.max_flow() <= 3
    bad = theorem1_harness(inst, figure2_disconnected(), seeds)
    assert not bad.contiguous and bad.zero_penalty_flow is False and bad.consistent


def test_theorem1_randomized_mode():
    inst, seeds = figure2_instance(), figure2_seeds()
    verdict = theorem1_harness(inst, figure2_disconnected(), seeds, mode="randomized", budget=200, seed=1)
    assert verdict.inconclusive and not verdict.consistent
    small = generate_grid(1, 3, 1)
    found = theorem1_harness(small, Assignment([1, 1, 1]), Seeds({1: 0}), M=2, mode="randomized", budget=5000)
    assert found.zero_penalty_flow and found.consistent
    with pytest.raises(ValueError):
        theorem1_harness(small, Assignment([1, 1, 1]), Seeds({1: 0}), mode="guess")


def test_theorem1_bound_too_small():
    # a path of 4 rooted at one end needs flow 3 on the first edge
    path = generate_grid(1, 4, 1)
    verdict = theorem1_harness(path, Assignment([1, 1, 1, 1]), Seeds({1: 0}), M=2)
    assert verdict.contiguous and verdict.zero_penalty_flow is False


def test_articulation_small_graphs():
    path = generate_grid(1, 5, 1)
    assert articulation_points(path.neighbors, range(5)) == {1, 2, 3}
    cycle = generate_grid(2, 2, 1)
    assert articulation_points(cycle.neighbors, range(4)) == set()
    star = ((1, 2, 3), (0,), (0,), (0,))
    assert articulation_points(star, range(4)) == {0}
    assert articulation_points(star, [0]) == set()


def test_articulation_areas_worked_example():
    inst, a = figure2_instance(), figure2_connected()
    # region 3 is the path 5 - 7 - 6, region 2 the path 1 - 2 - 4
    assert articulation_areas(inst, a, 3) == {6}
    assert articulation_areas(inst, a, 2) == {1}
    with pytest.raises(ValueError, match="not connected"):
        articulation_areas(inst, figure2_disconnected(), 3)
    with pytest.raises(ValueError, match="empty"):
        articulation_areas(inst, Assignment([1] * 9), 2)


def test_connected_components_order():
    inst = generate_grid(1, 5, 1)
    assert connected_components(inst.neighbors, [4, 0, 1, 3]) == [[0, 1], [3, 4]]


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 10), p=st.integers(1, 3))
def test_flow_completion_iff_contiguous(seed, n, p):
    rng = np.random.default_rng(seed)
    p = min(p, n)
    inst = random_instance(rng, n, p)
    labels = rng.integers(1, p + 1, size=n)
    labels[rng.permutation(n)[:p]] = np.arange(1, p + 1)
    a = Assignment(labels.tolist())
    seeds = first_member_seeds(a, p)
    flows = complete_flows(inst, a, seeds)
    contiguous = check_contiguity(inst, a).ok
    assert (flows is not None) == contiguous
    if flows is not None:
        targets = conservation_targets(inst, a, seeds)
        assert [flows.net_inflow(inst, i) for i in range(n)] == targets
        assert all(a[i] == a[j] for (i, j), v in flows.flows.items() if v)
        assert flows.max_flow() <= n - 1


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 14))
def test_articulation_matches_remove_and_recheck(seed, n):
    rng = np.random.default_rng(seed)
    nbrs = random_connected_neighbors(rng, n, int(rng.integers(0, n + 1)))
    subset = [i for i in range(n) if rng.random() < 0.8] or [0]
    assert articulation_points(nbrs, subset) == brute_articulation(nbrs, subset)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_exhaustive_theorem1_agrees_with_bfs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    inst = random_instance(rng, n, 2, extra=2)
    labels = rng.integers(1, 3, size=n)
    labels[:2] = rng.permutation([1, 2])
    a = Assignment(labels.tolist())
    verdict = theorem1_harness(inst, a, first_member_seeds(a, 2), M=n - 1)
    expect = all(bfs_connected(inst.neighbors, a.region(k)) for k in (1, 2))
    assert verdict.contiguous == expect
    assert verdict.zero_penalty_flow == expect


def test_instance_neighbors_used_by_oracles_are_symmetric():
    inst = Instance(("a", "b", "c"), ((1,), (0, 2), (1,)), np.zeros((3, 1)), 1)
    assert articulation_areas(inst, Assignment([1, 1, 1]), 1) == {1}
