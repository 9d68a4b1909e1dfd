import numpy as np
import pytest

from bamrisk.inference import (
    ContradictoryEvidenceError,
    EvidenceItem,
    ImpossibleEvidenceError,
    NonPolytreeError,
    brute_force_marginals,
    infer_marginals,
)
from bamrisk.polytree import Cpt, PolytreeNet, cpt_attack_step, cpt_sensor, cpt_topological

from conftest import random_evidence, random_polytree


def chain_net(prior=0.7, cond=1.0, pnas=0.3, pua=0.001, sensor=None):
    """source(0) + condition(1) -> step(2) -> topo(3) [-> sensor(4)]"""
    parents = [[], [], [0, 1], [2]]
    cpts = [Cpt.prior(prior), Cpt.prior(cond), cpt_attack_step(1, pnas), cpt_topological(1, pua)]
    if sensor is not None:
        fp, fn = sensor
        parents.append([2])
        cpts.append(cpt_sensor(fp, fn))
    return PolytreeNet.from_nodes(parents, cpts)


class TestChainExamples:
    def test_no_evidence_chain(self):
        net = chain_net()
        m = infer_marginals(net)
        assert m[2] == pytest.approx(0.21, abs=1e-12)
        assert m[3] == pytest.approx(0.21 * 1 + 0.79 * 0.001, abs=1e-12)
        bf = brute_force_marginals(net)
        np.testing.assert_allclose(m.positive, bf.positive, atol=1e-12)

    def test_alerted_sensor_bayes(self):
        net = chain_net(sensor=(0.05, 0.01))
        m = infer_marginals(net, [EvidenceItem.hard_positive(4)])
        expected = 0.99 * 0.21 / (0.99 * 0.21 + 0.05 * 0.79)
        assert m[2] == pytest.approx(expected, abs=1e-9)
        bf = brute_force_marginals(net, [EvidenceItem.hard_positive(4)])
        np.testing.assert_allclose(m.positive, bf.positive, atol=1e-12)

    def test_isolated_root_prior(self):
        net = PolytreeNet.from_nodes([[]], [Cpt.prior(0.37)])
        assert infer_marginals(net)[0] == 0.37


class TestEvidenceSemantics:
    def test_hard_positive_is_exactly_one(self):
        net = chain_net()
        m = infer_marginals(net, [EvidenceItem.hard_positive(3)])
        assert m[3] == 1.0

    def test_hard_negative_is_exactly_zero(self):
        net = chain_net()
        m = infer_marginals(net, [EvidenceItem.hard_negative(3)])
        assert m[3] == 0.0

    def test_soft_limits_match_hard(self):
        net = chain_net(sensor=(0.05, 0.01))
        hard = infer_marginals(net, [EvidenceItem.hard_positive(4)])
        soft1 = infer_marginals(net, [EvidenceItem.soft(4, 1.0)])
        np.testing.assert_array_equal(hard.positive, soft1.positive)
        hardn = infer_marginals(net, [EvidenceItem.hard_negative(4)])
        soft0 = infer_marginals(net, [EvidenceItem.soft(4, 0.0)])
        np.testing.assert_array_equal(hardn.positive, soft0.positive)

    def test_soft_half_is_noop(self):
        net = chain_net(sensor=(0.05, 0.01))
        base = infer_marginals(net)
        half = infer_marginals(net, [EvidenceItem.soft(4, 0.5)])
        np.testing.assert_allclose(base.positive, half.positive, atol=1e-12)

    def test_monotone_alarm(self, rng):
        """An alert never lowers the posterior of the watched step (fp < 1-fn)."""
        for _ in range(25):
            fp = float(rng.uniform(0.0, 0.45))
            fn = float(rng.uniform(0.0, 0.45))
            net = chain_net(
                prior=float(rng.uniform(0.05, 0.95)),
                cond=float(rng.uniform(0.05, 0.95)),
                pnas=float(rng.uniform(0.05, 0.95)),
                sensor=(fp, fn),
            )
            base = infer_marginals(net)
            alerted = infer_marginals(net, [EvidenceItem.hard_positive(4)])
            assert alerted[2] >= base[2] - 1e-12

    def test_evidence_order_independence(self, rng):
        net = random_polytree(rng, 12)
        items = random_evidence(np.random.default_rng(7), 12, rate=0.5)
        if not items:
            items = [EvidenceItem.hard_positive(0)]
        forward = infer_marginals(net, items)
        backward = infer_marginals(net, list(reversed(items)))
        np.testing.assert_array_equal(forward.positive, backward.positive)

    def test_duplicate_evidence_rejected(self):
        net = chain_net()
        with pytest.raises(ContradictoryEvidenceError):
            infer_marginals(net, [EvidenceItem.hard_positive(3), EvidenceItem.hard_negative(3)])
        with pytest.raises(ContradictoryEvidenceError):
            infer_marginals(net, [EvidenceItem.soft(3, 0.2), EvidenceItem.soft(3, 0.2)])

    def test_impossible_evidence(self):
        # deterministic chain: root hard-negative forbids a positive child
        net = PolytreeNet.from_nodes([[], [0]], [Cpt.prior(0.5), Cpt.table([0.0, 1.0])])
        with pytest.raises(ImpossibleEvidenceError):
            infer_marginals(net, [EvidenceItem.hard_negative(0), EvidenceItem.hard_positive(1)])
        with pytest.raises(ImpossibleEvidenceError):
            brute_force_marginals(net, [EvidenceItem.hard_negative(0), EvidenceItem.hard_positive(1)])

    def test_non_polytree_rejected(self):
        # diamond: 0 -> 1, 0 -> 2, {1,2} -> 3
        net = PolytreeNet.from_nodes(
            [[], [0], [0], [1, 2]],
            [Cpt.prior(0.5), Cpt.table([0.2, 0.8]), Cpt.table([0.3, 0.7]), Cpt.table([0.1, 0.2, 0.3, 0.4])],
        )
        assert not net.is_polytree
        with pytest.raises(NonPolytreeError):
            infer_marginals(net)


class TestOracleEquivalence:
    def test_random_polytrees_match_brute_force(self, rng):
        for _ in range(60):
            n = int(rng.integers(2, 15))
            net = random_polytree(rng, n)
            evidence = random_evidence(rng, n)
            bp = infer_marginals(net, evidence)
            bf = brute_force_marginals(net, evidence)
            np.testing.assert_allclose(bp.positive, bf.positive, atol=1e-9)

    def test_deterministic_chain_all_marginals_binary(self):
        net = PolytreeNet.from_nodes(
            [[], [0], [1]],
            [Cpt.prior(0.5), Cpt.table([0.0, 1.0]), Cpt.table([0.0, 1.0])],
        )
        m = infer_marginals(net, [EvidenceItem.hard_positive(0)])
        assert m.positive.tolist() == [1.0, 1.0, 1.0]
        m = infer_marginals(net, [EvidenceItem.hard_negative(0)])
        assert m.positive.tolist() == [0.0, 0.0, 0.0]

    def test_disconnected_components(self):
        net = PolytreeNet.from_nodes(
            [[], [], [1]],
            [Cpt.prior(0.3), Cpt.prior(0.6), Cpt.table([0.1, 0.8])],
        )
        assert net.is_polytree and net.n_components == 2
        ev = [EvidenceItem.hard_positive(2)]
        np.testing.assert_allclose(
            infer_marginals(net, ev).positive,
            brute_force_marginals(net, ev).positive,
            atol=1e-12,
        )

    def test_shared_root_two_leaves_hand_joint(self):
        # 0 -> 1 and 0 -> 2; condition on both leaves positive.
        net = PolytreeNet.from_nodes(
            [[], [0], [0]],
            [Cpt.prior(0.3), Cpt.table([0.2, 0.9]), Cpt.table([0.4, 0.6])],
        )
        ev = [EvidenceItem.hard_positive(1), EvidenceItem.hard_positive(2)]
        m = infer_marginals(net, ev)
        # hand joint: P(0=1|e) = .3*.9*.6 / (.3*.9*.6 + .7*.2*.4)
        num = 0.3 * 0.9 * 0.6
        den = num + 0.7 * 0.2 * 0.4
        assert m[0] == pytest.approx(num / den, abs=1e-12)

    def test_normalization(self, rng):
        # belief pairs always sum to one within 1e-12
        from bamrisk._kernels import get_kernel
        from bamrisk.inference import evidence_likelihoods

        for _ in range(10):
            n = int(rng.integers(2, 12))
            net = random_polytree(rng, n)
            L = evidence_likelihoods(n, random_evidence(rng, n))
            belief, status = get_kernel("bp_sweep", "python")(
                net.pind, net.pidx, net.ckind, net.coff, net.cdat,
                net.chptr, net.chedge, net.order, net.skelp, net.skele, net.skeld,
                L, net.max_children,
            )
            assert status == 0
            np.testing.assert_allclose(belief.sum(axis=1), 1.0, atol=1e-12)


class TestClosedFormFamilies:
    def test_wide_or_gate_matches_brute_force(self, rng):
        """Above 10 parents the noisy-OR switches to its closed form."""
        n_par = 12
        parents = [[] for _ in range(n_par)] + [list(range(n_par))]
        cpts = [Cpt.prior(float(p)) for p in rng.uniform(0.05, 0.6, n_par)]
        cpts.append(Cpt.or_leak(n_par, 0.01))
        net = PolytreeNet.from_nodes(parents, cpts)
        ev = [EvidenceItem.soft(0, 0.9), EvidenceItem.hard_negative(1)]
        bp = infer_marginals(net, ev)
        bf = brute_force_marginals(net, ev)
        np.testing.assert_allclose(bp.positive, bf.positive, atol=1e-9)

    def test_wide_and_gate_matches_brute_force(self, rng):
        n_par = 12
        parents = [[] for _ in range(n_par)] + [list(range(n_par))]
        cpts = [Cpt.prior(float(p)) for p in rng.uniform(0.5, 0.99, n_par)]
        cpts.append(Cpt.and_gate(n_par, 0.7))
        net = PolytreeNet.from_nodes(parents, cpts)
        ev = [EvidenceItem.hard_positive(n_par)]
        bp = infer_marginals(net, ev)
        bf = brute_force_marginals(net, ev)
        np.testing.assert_allclose(bp.positive, bf.positive, atol=1e-9)

    def test_families_bit_compatible_with_tables_at_small_fanin(self, rng):
        """At <= 10 parents the gate families run through the same row-expansion
        path as explicit tables, so marginals agree to the last bit."""
        for m in (1, 2, 3, 6):
            parents = [[] for _ in range(m)] + [list(range(m))]
            priors = [Cpt.prior(float(p)) for p in rng.uniform(0.05, 0.95, m)]
            gate = Cpt.or_leak(m, 0.013)
            table = Cpt.table(gate.rows())
            net_gate = PolytreeNet.from_nodes(parents, priors + [gate])
            net_table = PolytreeNet.from_nodes(parents, priors + [table])
            ev = [EvidenceItem.hard_positive(m)]
            np.testing.assert_array_equal(
                infer_marginals(net_gate, ev).positive, infer_marginals(net_table, ev).positive
            )


class TestBruteForce:
    def test_node_limit(self, rng):
        net = random_polytree(rng, 23)
        with pytest.raises(Exception, match="at most 22"):
            brute_force_marginals(net)

    def test_unknown_evidence_node(self):
        net = chain_net()
        with pytest.raises(Exception, match="unknown node"):
            infer_marginals(net, [EvidenceItem.hard_positive(99)])
