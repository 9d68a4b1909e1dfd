import networkx as nx
import numpy as np
import pytest

from bamrisk.batbuild import (
    build_bam,
    build_bat,
    effective_priors,
    node_count_bound,
    validate_polytree,
)
from bamrisk.params import ModelParams
from bamrisk.polytree import Cpt, PolytreeNet, cpt_attack_step, cpt_sensor, cpt_topological
from bamrisk.tag import TAG, AttackStep, Condition, GroupedSensor


def complete_tag(n, k=1, p=0.5, with_sensors=True):
    """Complete directed graph on n hosts with k parallel step types."""
    nodes = [f"n{i}" for i in range(1, n + 1)]
    steps = []
    for s in nodes:
        for t in nodes:
            if s == t:
                continue
            for ti in range(k):
                sensor = GroupedSensor((f"sen-{s}-{t}-{ti}",), 0.05, 0.01) if with_sensors else None
                steps.append(
                    AttackStep(
                        source=s,
                        target=t,
                        attack_type=f"type{ti}",
                        condition=Condition("", p),
                        sensor=sensor,
                        member_vuln_ids=(f"v-{s}-{t}-{ti}",),
                    )
                )
    return TAG(nodes=nodes, steps=steps)


def simple_path_count(n, nb_steps, source="n1"):
    """Independent oracle: simple paths of 1..nb_steps edges via networkx."""
    g = nx.complete_graph([f"n{i}" for i in range(1, n + 1)], nx.DiGraph)
    paths = set()
    for target in g.nodes:
        if target == source:
            continue
        for path in nx.all_simple_paths(g, source, target, cutoff=nb_steps):
            paths.add(tuple(path))
    return len(paths)


PARAMS = ModelParams()
PRIORS = {f"n{i}": 0.1 for i in range(1, 10)}


class TestPathMemories:
    def test_complete_three_nodes(self):
        bat = build_bat(complete_tag(3), "n1", PARAMS, PRIORS)
        assert bat.topo_path_memories() == {
            ("n1",),
            ("n1", "n2"),
            ("n1", "n3"),
            ("n1", "n2", "n3"),
            ("n1", "n3", "n2"),
        }

    def test_depth_truncation(self):
        bat = build_bat(complete_tag(3), "n1", PARAMS.with_overrides(nb_steps=1), PRIORS)
        assert bat.topo_path_memories() == {("n1",), ("n1", "n2"), ("n1", "n3")}

    def test_no_steps_single_node(self):
        tag = TAG(nodes=["n1", "n2"], steps=[])
        bat = build_bat(tag, "n1", PARAMS, PRIORS)
        assert bat.n == 1
        assert bat.node(0).kind == "AttackSource"
        assert bat.node(0).cpt.data == (0.1,)

    def test_no_backtracking(self):
        for n in (3, 4, 5):
            bat = build_bat(complete_tag(n), "n1", PARAMS, PRIORS)
            for pm in bat.topo_path_memories():
                assert len(set(pm)) == len(pm)

    def test_depth_bound(self):
        for nb in (1, 2, 3):
            bat = build_bat(complete_tag(4), "n1", PARAMS.with_overrides(nb_steps=nb), PRIORS)
            assert max(len(pm) for pm in bat.topo_path_memories()) <= nb + 1


class TestCptTables:
    def test_topological_matches_reference_rows(self):
        cpt = cpt_topological(2, 0.001)
        # parent combinations (step1, step2): FF, SF, FS, SS
        assert cpt.rows().tolist() == [0.001, 1.0, 1.0, 1.0]

    def test_topological_single_parent_zero_leak_is_identity(self):
        assert cpt_topological(1, 0.0).rows().tolist() == [0.0, 1.0]

    def test_attack_step_rows(self):
        cpt = cpt_attack_step(1, 0.3)
        # (topo, condition): only Compromised & Succeeded yields pnas
        assert cpt.rows().tolist() == [0.0, 0.0, 0.0, 0.3]

    def test_attack_step_no_conditions_degenerate(self):
        assert cpt_attack_step(0, 1.0).rows().tolist() == [0.0, 1.0]

    def test_sensor_rows(self):
        cpt = cpt_sensor(0.05, 0.01)
        assert cpt.rows().tolist() == [0.05, 1.0 - 0.01]

    def test_noiseless_sensor_copies_parent(self):
        assert cpt_sensor(0.0, 0.0).rows().tolist() == [0.0, 1.0]

    def test_topological_requires_parents(self):
        with pytest.raises(ValueError):
            cpt_topological(0, 0.001)

    def test_rows_and_complements_in_unit_interval(self):
        for cpt in (cpt_topological(3, 0.001), cpt_attack_step(2, 0.3), cpt_sensor(0.05, 0.01)):
            rows = cpt.rows()
            assert np.all(rows >= 0.0) and np.all(rows <= 1.0)

    def test_built_bat_carries_reference_cpts(self):
        bat = build_bat(complete_tag(2), "n1", PARAMS, PRIORS)
        by_kind = {}
        for node in bat.nodes():
            by_kind.setdefault(node.kind, node)
        assert by_kind["Topological"].cpt.rows().tolist() == [0.001, 1.0]
        assert by_kind["AttackStep"].cpt.rows().tolist() == [0.0, 0.0, 0.0, 0.3]
        assert by_kind["Sensor"].cpt.rows().tolist() == [0.05, 0.99]
        assert by_kind["Condition"].cpt.data == (0.5,)
        assert by_kind["AttackSource"].cpt.data == (0.1,)


class TestNodeCounts:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_counts_match_path_oracle(self, n):
        bat = build_bat(complete_tag(n), "n1", PARAMS, PRIORS)
        expected = 1 + 4 * simple_path_count(n, PARAMS.nb_steps)
        assert bat.n == expected

    @pytest.mark.parametrize("n,nb", [(3, 1), (4, 2), (6, 3), (5, 5)])
    def test_counts_within_bound(self, n, nb):
        bat = build_bat(complete_tag(n), "n1", PARAMS.with_overrides(nb_steps=nb), PRIORS)
        assert bat.n <= node_count_bound(n, 1, nb) + 1

    def test_bound_values(self):
        assert node_count_bound(3, 1, 2) == 24
        assert node_count_bound(3, 1, 1) == 12
        assert node_count_bound(5, 2, 3) == 4 * 2 * 5 * 4 * 3

    def test_bound_zero_types(self):
        assert node_count_bound(3, 0, 2) == 0

    def test_bound_depth_exceeds_nodes(self):
        with pytest.raises(ValueError):
            node_count_bound(3, 1, 4)

    def test_multi_type_counts(self):
        k = 2
        bat = build_bat(complete_tag(3, k=k), "n1", PARAMS, PRIORS)
        expected = 1 + (3 * k + 1) * simple_path_count(3, PARAMS.nb_steps)
        assert bat.n == expected
        assert bat.n <= node_count_bound(3, k, PARAMS.nb_steps) + 1


class TestPolytreeStructure:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_built_bats_are_polytrees(self, n):
        bat = build_bat(complete_tag(n), "n1", PARAMS, PRIORS)
        assert bat.is_polytree
        assert validate_polytree(bat)

    def test_shared_condition_is_not_a_polytree(self):
        # one condition node feeding two attack steps closes an undirected cycle
        net = PolytreeNet.from_nodes(
            [[], [], [0, 1], [0, 1], [2], [3]],
            [
                Cpt.prior(0.5),
                Cpt.prior(0.8),
                cpt_attack_step(1, 0.3),
                cpt_attack_step(1, 0.3),
                cpt_topological(1, 0.001),
                cpt_topological(1, 0.001),
            ],
        )
        assert validate_polytree(net) is False

    def test_single_node_bat_is_polytree(self):
        bat = build_bat(TAG(nodes=["n1"], steps=[]), "n1", PARAMS, PRIORS)
        assert validate_polytree(bat)

    def test_multi_type_sibling_expansion_shares_target(self):
        """Parallel step types toward one target join at a shared topological
        node (fan-in k), which costs the polytree property for k > 1."""
        bat = build_bat(complete_tag(2, k=2), "n1", PARAMS, PRIORS)
        assert not bat.is_polytree
        topo_fanin = [
            len(bat.net.parents(i))
            for i in range(bat.n)
            if bat.node(i).kind == "Topological"
        ]
        assert set(topo_fanin) == {2}


class TestDeterminism:
    def test_identical_builds(self):
        a = build_bat(complete_tag(4), "n1", PARAMS, PRIORS)
        b = build_bat(complete_tag(4), "n1", PARAMS, PRIORS)
        np.testing.assert_array_equal(a.kind, b.kind)
        np.testing.assert_array_equal(a.net.pidx, b.net.pidx)
        np.testing.assert_array_equal(a.net.cdat, b.net.cdat)
        np.testing.assert_array_equal(a.terminal, b.terminal)

    def test_expansion_order_lexicographic(self):
        bat = build_bat(complete_tag(3), "n1", PARAMS, PRIORS)
        topo = [bat.path_memory(i) for i in range(bat.n) if bat.node_id(i).startswith("tn:")]
        assert topo == [
            ("n1",),
            ("n1", "n2"),
            ("n1", "n2", "n3"),
            ("n1", "n3"),
            ("n1", "n3", "n2"),
        ]

    def test_export_stable(self):
        a = build_bat(complete_tag(3), "n1", PARAMS, PRIORS).to_dict()
        b = build_bat(complete_tag(3), "n1", PARAMS, PRIORS).to_dict()
        assert a == b

    def test_export_golden_file(self):
        import json
        import pathlib

        golden = json.loads(
            (pathlib.Path(__file__).parent / "golden" / "bat_complete2_n1.json").read_text()
        )
        assert build_bat(complete_tag(2), "n1", PARAMS, PRIORS).to_dict() == golden


class TestBam:
    def test_one_bat_per_node(self):
        bam = build_bam(complete_tag(3), PARAMS, PRIORS)
        assert len(bam) == 3
        assert [b.source for b in bam.bats] == ["n1", "n2", "n3"]

    def test_empty_tag(self):
        bam = build_bam(TAG(nodes=[], steps=[]), PARAMS, {})
        assert len(bam) == 0

    def test_single_step_asymmetry(self):
        tag = TAG(
            nodes=["A", "B"],
            steps=[AttackStep("A", "B", condition=Condition("", 0.5), member_vuln_ids=("v",))],
        )
        bam = build_bam(tag, PARAMS, {"A": 0.1, "B": 0.1})
        kinds_a = [n.kind for n in bam.bat("A").nodes()]
        assert kinds_a.count("AttackStep") == 1
        assert [n.kind for n in bam.bat("B").nodes()] == ["AttackSource"]

    def test_unknown_source_rejected(self):
        with pytest.raises(ValueError, match="not a TAG node"):
            build_bat(complete_tag(2), "zz", PARAMS, PRIORS)

    def test_missing_prior_rejected(self):
        with pytest.raises(KeyError, match="prior"):
            build_bat(complete_tag(2), "n1", PARAMS, {})

    def test_effective_priors_defaults(self):
        tag = TAG(nodes=["internet", "web"], steps=[])
        priors = effective_priors(tag, PARAMS, {})
        assert priors == {"internet": 0.7, "web": 0.1}
        priors = effective_priors(tag, PARAMS, {"web": 0.4})
        assert priors["web"] == 0.4

    def test_parallel_build_matches_serial(self):
        tag = complete_tag(4)
        serial = build_bam(tag, PARAMS, PRIORS, workers=1)
        parallel = build_bam(tag, PARAMS, PRIORS, workers=4)
        for a, b in zip(serial.bats, parallel.bats):
            np.testing.assert_array_equal(a.net.cdat, b.net.cdat)
            np.testing.assert_array_equal(a.net.pidx, b.net.pidx)


class TestNodeViews:
    def test_source_node_view(self):
        bat = build_bat(complete_tag(2), "n1", PARAMS, PRIORS)
        root = bat.node(0)
        assert root.kind == "AttackSource"
        assert root.path_memory == ("n1",)
        assert root.state_labels == ("NotCompromised", "Compromised")
        assert root.parents == ()

    def test_sensor_node_view(self):
        bat = build_bat(complete_tag(2), "n1", PARAMS, PRIORS)
        sensors = [n for n in bat.nodes() if n.kind == "Sensor"]
        assert sensors and all(s.state_labels == ("NoAlert", "Alert") for s in sensors)
        assert all(len(s.parents) == 1 and s.parents[0].startswith("as[") for s in sensors)

    def test_parent_structure_invariants(self):
        bat = build_bat(complete_tag(3), "n1", PARAMS, PRIORS)
        for i in range(bat.n):
            node = bat.node(i)
            parent_kinds = [bat.node(bat.net.parents(i)[j]).kind for j in range(len(bat.net.parents(i)))]
            if node.kind == "AttackSource":
                assert parent_kinds == []
            elif node.kind == "Condition":
                assert parent_kinds == []
            elif node.kind == "Sensor":
                assert parent_kinds == ["AttackStep"]
            elif node.kind == "AttackStep":
                assert parent_kinds[0] in ("Topological", "AttackSource")
                assert all(k == "Condition" for k in parent_kinds[1:])
            else:
                assert parent_kinds and all(k == "AttackStep" for k in parent_kinds)
