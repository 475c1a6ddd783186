import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import contiguous_labelings
from spatialqubo.dqm import (
    DqmModel,
    PenaltyConfig,
    Seeds,
    build_dqm,
    canonical_gap,
    dqm_configuration,
    evaluate_dqm,
    export_dqm,
)
from spatialqubo.fixtures import (
    figure2_connected,
    figure2_disconnected,
    figure2_instance,
    figure2_region3_flows,
    figure2_seeds,
)
from spatialqubo.instance import Assignment, generate_grid, heterogeneity
from spatialqubo.qubo import dqm_case_bits, dqm_to_qubo
from spatialqubo.verify import FlowConfig, complete_flows


def worked_example_flows():
    """Tree flows for regions 1 and 2 with the hand-written region 3 flows."""
    inst, seeds = figure2_instance(), figure2_seeds()
    region3 = {4, 5, 6}
    flows = {e: v for e, v in complete_flows(inst, figure2_connected(), seeds).flows.items() if e[0] not in region3}
    flows.update(figure2_region3_flows().flows)
    return FlowConfig(flows)


def test_default_penalties():
    inst = figure2_instance()
    cfg = PenaltyConfig.default(inst)
    assert (cfg.lambda1, cfg.lambda4, cfg.M, cfg.L) == (115.0, 115.0, 8, 4)
    assert cfg.flow_capacity == 15
    assert PenaltyConfig.default(inst, M=3).L == 2
    assert PenaltyConfig.default(inst, lambda3=2.0).lambda3 == 2.0
    assert cfg.with_(epsilon=0.5).epsilon == 0.5


def test_penalty_validation():
    with pytest.raises(ValueError, match="bits"):
        PenaltyConfig(1, 1, 1, 1, M=4, L=2)
    with pytest.raises(ValueError, match="nonnegative"):
        PenaltyConfig(-1, 1, 1, 1, M=1, L=1)


def test_seeds_validation():
    with pytest.raises(ValueError, match="duplicate"):
        Seeds({1: 0, 2: 0})
    inst = generate_grid(2, 2, 2)
    with pytest.raises(ValueError):
        Seeds({1: 0}).validate(inst)
    with pytest.raises(ValueError):
        Seeds({1: 0, 2: 7}).validate(inst)
    s = Seeds.from_list([3, 1])
    assert s.roots == {1: 3, 2: 1} and s.region_of(1) == 2 and 3 in s and 0 not in s


def test_variable_layout():
    inst = figure2_instance()
    d = build_dqm(inst, figure2_seeds())
    assert d.num_variables == 9 + 24 + 24
    assert d.index("d", 0) == 0
    assert d.index("f", 0, 1) == 9
    assert d.variables[d.index("f", 0, 1)].num_cases == 9
    assert d.variables[d.index("u", 0, 1)].num_cases == 3
    assert d.offset == 1035.0


def test_worked_example_zero_penalty():
    inst = figure2_instance()
    d = build_dqm(inst, figure2_seeds())
    config = dqm_configuration(d, inst, figure2_connected(), worked_example_flows())
    assert evaluate_dqm(d, config) == pytest.approx(6.0, abs=1e-9)


def test_worked_example_disconnected_is_penalized():
    inst = figure2_instance()
    d = build_dqm(inst, figure2_seeds())
    config = dqm_configuration(d, inst, figure2_disconnected(), FlowConfig({}))
    lam = d.penalty_config.lambda3
    assert evaluate_dqm(d, config) - heterogeneity(inst, figure2_disconnected()) >= lam


def test_canonical_gap():
    assert canonical_gap(1, 3) == 1
    assert canonical_gap(3, 1) == 0
    assert canonical_gap(2, 2) == 0


def test_gap_cases_are_the_unique_minimizers():
    """Per edge, only the canonical gap pair costs nothing once the labels are fixed."""
    inst = generate_grid(1, 2, 2)
    d = build_dqm(inst, Seeds({1: 0, 2: 1}))
    # variables: d_0, d_1, f_01, f_10, u_01, u_10
    for a in (1, 2):
        for b in (1, 2):
            best = {}
            for u01 in range(2):
                for u10 in range(2):
                    cfg = [a - 1, b - 1, 0, 0, u01, u10]
                    best[u01, u10] = evaluate_dqm(d, cfg) - evaluate_dqm(d, [a - 1, b - 1, 0, 0, 0, 0])
            want = (canonical_gap(a, b), canonical_gap(b, a))
            others = [e for key, e in best.items() if key != want]
            assert best[want] < min(others)


def test_evaluate_rejects_bad_configurations():
    d = build_dqm(figure2_instance(), figure2_seeds())
    with pytest.raises(ValueError, match="expected"):
        evaluate_dqm(d, [0])
    with pytest.raises(ValueError, match="out of range"):
        evaluate_dqm(d, [5] + [0] * (d.num_variables - 1))


def test_quadratic_tables_are_stored_once_per_pair():
    m = DqmModel.empty()
    a = m.add_variable(2, ("a",))
    b = m.add_variable(3, ("b",))
    m.add_quadratic(b, a, np.arange(6).reshape(3, 2))
    assert list(m.quadratic) == [(0, 1)]
    np.testing.assert_array_equal(m.quadratic[0, 1], np.arange(6).reshape(3, 2).T)
    with pytest.raises(ValueError):
        m.add_quadratic(a, a, np.zeros((2, 2)))
    with pytest.raises(ValueError, match="duplicate"):
        m.add_variable(2, ("a",))


def test_export_header_and_lines():
    d = build_dqm(figure2_instance(), figure2_seeds())
    text = export_dqm(d).splitlines()
    assert text[0] == "# dqm vars=57 offset=1035.0"
    assert text[1] == "var 0 d,0 cases=3 encoding=onehot"
    assert sum(line.startswith("var ") for line in text) == 57
    assert sum(line.startswith("quad ") for line in text) > 0


def test_contiguous_labelings_cost_their_heterogeneity():
    inst = generate_grid(2, 3, 2, "coordinate-sum")
    for a in contiguous_labelings(inst):
        seeds = Seeds({k: a.region(k)[0] for k in (1, 2)})
        d = build_dqm(inst, seeds)
        config = dqm_configuration(d, inst, a, complete_flows(inst, a, seeds))
        assert evaluate_dqm(d, config) == pytest.approx(heterogeneity(inst, a), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_penalty_is_never_negative(data):
    inst = generate_grid(2, 2, 2, "coordinate-sum")
    d = build_dqm(inst, Seeds({1: 0, 2: 3}), PenaltyConfig.default(inst, M=2))
    config = [data.draw(st.integers(0, v.num_cases - 1)) for v in d.variables]
    labels = Assignment([c + 1 for c in config[:4]])
    assert evaluate_dqm(d, config) >= heterogeneity(inst, labels) - 1e-9


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_dqm_to_qubo_preserves_every_case_energy(data):
    inst = generate_grid(2, 2, 2, "seeded-random", seed=3)
    d = build_dqm(inst, Seeds({1: 0, 2: 3}), PenaltyConfig.default(inst, M=3).with_(epsilon=0.25))
    q = dqm_to_qubo(d)
    config = [data.draw(st.integers(0, v.num_cases - 1)) for v in d.variables]
    assert q.energy(dqm_case_bits(q, d, config)) == pytest.approx(evaluate_dqm(d, config), abs=1e-9)


def test_dqm_to_qubo_worked_example():
    inst = figure2_instance()
    d = build_dqm(inst, figure2_seeds())
    q = dqm_to_qubo(d)
    assert q.num_vars == 195
    config = dqm_configuration(d, inst, figure2_connected(), worked_example_flows())
    assert q.energy(dqm_case_bits(q, d, config)) == pytest.approx(6.0, abs=1e-9)
