import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialqubo.fixtures import figure2_connected, figure2_disconnected, figure2_instance
from spatialqubo.instance import (
    Assignment,
    Instance,
    InstanceError,
    generate_grid,
    heterogeneity,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)


def adjacent(inst, a, b):
    return inst.index(str(b)) in inst.neighbors[inst.index(str(a))]


def test_single_area_grid_has_no_edges():
    inst = generate_grid(1, 1, 1)
    assert inst.n == 1
    assert inst.edges == ()


def test_two_by_three_grid_edge_count():
    inst = generate_grid(2, 3, 2, "coordinate-sum")
    assert inst.n == 6
    assert len(inst.undirected_edges) == 7
    # coordinate-sum: attribute is row + column
    assert inst.attributes[:, 0].tolist() == [0.0, 1.0, 2.0, 1.0, 2.0, 3.0]


def test_grid_is_row_major_rook():
    inst = generate_grid(3, 3, 3)
    assert adjacent(inst, 5, 6) and adjacent(inst, 4, 7) and not adjacent(inst, 5, 9)
    assert [len(nb) for nb in inst.neighbors] == [2, 3, 2, 3, 4, 3, 2, 3, 2]
    assert inst.coordinates[5].tolist() == [2.0, 1.0]


def test_worked_example_layout_routes_6_to_5_through_7():
    inst = figure2_instance()
    assert not adjacent(inst, 6, 5)
    assert adjacent(inst, 6, 7) and adjacent(inst, 5, 7)


def test_grid_errors():
    with pytest.raises(InstanceError):
        generate_grid(2, 2, 5)
    with pytest.raises(InstanceError):
        generate_grid(2, 2, 2, "seeded-random")
    with pytest.raises(InstanceError):
        generate_grid(2, 2, 2, "spiral")


def test_seeded_random_is_reproducible_and_frozen():
    a = generate_grid(3, 3, 3, "seeded-random", seed=0)
    b = generate_grid(3, 3, 3, "seeded-random", seed=0)
    np.testing.assert_array_equal(a.attributes, b.attributes)
    assert a.attributes[:3, 0].tolist() == [6.369616873214543, 2.697867137638703, 0.4097352393619469]
    assert heterogeneity(a, Assignment([1, 1, 1, 2, 2, 2, 3, 3, 3])) == pytest.approx(33.56175349306056, abs=1e-12)


def test_heterogeneity_examples():
    inst = generate_grid(2, 2, 4)
    assert heterogeneity(inst, Assignment([1, 2, 3, 4])) == 0.0

    pair = Instance(("a", "b"), ((1,), (0,)), np.array([[3.0], [7.0]]), 1)
    assert heterogeneity(pair, Assignment([1, 1])) == 4.0

    grid = generate_grid(2, 2, 2)
    grid = Instance(grid.names, grid.neighbors, np.array([[1.0], [1.0], [9.0], [9.0]]), 2)
    assert heterogeneity(grid, Assignment([1, 1, 2, 2])) == 0.0
    assert heterogeneity(grid, Assignment([1, 2, 1, 2])) == 16.0


def test_worked_example_objective():
    inst = figure2_instance()
    assert heterogeneity(inst, figure2_connected()) == 6.0
    assert heterogeneity(inst, figure2_disconnected()) == 15.0
    assert inst.total_weight == 114.0


def test_l1_metric_differs_from_l2_for_vector_attributes():
    names = ("a", "b")
    nbrs = ((1,), (0,))
    attrs = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert Instance(names, nbrs, attrs, 1).weights[0, 1] == 5.0
    assert Instance(names, nbrs, attrs, 1, metric="l1").weights[0, 1] == 7.0


def test_weights_are_cached_symmetric_and_zero_diagonal():
    inst = generate_grid(3, 4, 2, "seeded-random", seed=5)
    w = inst.weights
    assert w is inst.weights
    np.testing.assert_array_equal(w, w.T)
    assert not np.diag(w).any()


def doc_3():
    return {
        "areas": [{"id": "a", "attrs": [1]}, {"id": "b", "attrs": [2]}, {"id": "c", "attrs": [4]}],
        "edges": [["a", "b"], ["b", "c"]],
        "p": 2,
    }


def test_instance_document_round_trip(tmp_path):
    inst = generate_grid(2, 3, 2, "seeded-random", seed=1)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert back.names == inst.names and back.neighbors == inst.neighbors and back.p == inst.p
    np.testing.assert_array_equal(back.attributes, inst.attributes)
    np.testing.assert_array_equal(back.coordinates, inst.coordinates)
    assert instance_to_dict(back) == json.loads(path.read_text())
    assert load_instance(json.dumps(doc_3())).n == 3


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["areas"].append({"id": "a", "attrs": [0]}), "duplicate"),
        (lambda d: d["edges"].append(["a", "a"]), "self"),
        (lambda d: d["edges"].append(["a", "zz"]), "unknown"),
        (lambda d: d.update(directed=True), "asymmetric"),
        (lambda d: d.update(p=4), "p="),
        (lambda d: d["edges"].pop(), "connected"),
        (lambda d: d.pop("p"), "missing"),
    ],
)
def test_invalid_documents(mutate, message):
    doc = doc_3()
    mutate(doc)
    with pytest.raises(InstanceError, match=message):
        instance_from_dict(doc)


def test_directed_documents_accept_symmetric_lists():
    doc = doc_3()
    doc["edges"] = [["a", "b"], ["b", "a"], ["b", "c"], ["c", "b"]]
    doc["directed"] = True
    assert len(instance_from_dict(doc).undirected_edges) == 2


def test_edges_are_both_orientations_sorted():
    inst = generate_grid(2, 2, 2)
    assert inst.edges == ((0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2))


def test_assignment_helpers():
    a = Assignment([2, 1, 2])
    assert a.region(2) == [0, 2]
    assert a.regions(2) == [[1], [0, 2]]
    assert a.relabel({1: 2}).labels == (2, 2, 2)
    with pytest.raises(ValueError):
        Assignment([0, 1])


@settings(max_examples=60, deadline=None)
@given(
    labels=st.lists(st.integers(1, 3), min_size=6, max_size=6),
    perm=st.permutations([1, 2, 3]),
    seed=st.integers(0, 10_000),
)
def test_heterogeneity_matches_pair_sum_and_ignores_region_names(labels, perm, seed):
    inst = generate_grid(2, 3, 3, "seeded-random", seed=seed)
    a = Assignment(labels)
    w = inst.weights
    direct = sum(w[i, j] for i in range(6) for j in range(i + 1, 6) if labels[i] == labels[j])
    assert heterogeneity(inst, a) == pytest.approx(direct, abs=1e-9)
    renamed = Assignment([perm[k - 1] for k in labels])
    assert heterogeneity(inst, renamed) == pytest.approx(direct, abs=1e-9)
    assert heterogeneity(inst, a) >= 0.0
