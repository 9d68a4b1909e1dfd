import pytest
from hypothesis import given
from hypothesis import strategies as st

from bamrisk.topology import (
    AttackComplexity,
    AttackVector,
    PrivilegesRequired,
    TopologyError,
    UserInteraction,
    Vulnerability,
    cvss_exploit_probability,
    parse_topology,
)


def _vuln(ac="Low", pr="None", ui="None", probability=None):
    return Vulnerability(
        id="v",
        attack_vector=AttackVector.NETWORK,
        attack_complexity=AttackComplexity(ac),
        privileges_required=PrivilegesRequired(pr),
        user_interaction=UserInteraction(ui),
        explicit_probability=probability,
    )


class TestParse:
    def test_empty_host_list(self):
        topo = parse_topology({"formatVersion": 1, "hosts": []})
        assert topo.hosts == ()

    def test_minimal_document(self, tiny_topology_doc):
        topo = parse_topology(tiny_topology_doc)
        assert len(topo.hosts) == 3
        assert ("internet", "A") in topo.reachability

    def test_prior_out_of_range(self):
        doc = {"formatVersion": 1, "hosts": [{"id": "A"}], "sourcePriors": {"A": 1.3}}
        with pytest.raises(TopologyError, match="prior out of range"):
            parse_topology(doc)

    def test_duplicate_host_id(self):
        doc = {"formatVersion": 1, "hosts": [{"id": "A"}, {"id": "A"}]}
        with pytest.raises(TopologyError, match="duplicate host id"):
            parse_topology(doc)

    def test_schema_violation_names_path(self):
        doc = {
            "formatVersion": 1,
            "hosts": [{"id": "A", "vulnerabilities": [{"id": "v", "av": "Teleport", "ac": "Low", "pr": "None", "ui": "None"}]}],
        }
        with pytest.raises(TopologyError, match=r"hosts\[0\].vulnerabilities\[0\].av"):
            parse_topology(doc)

    def test_missing_format_version(self, tiny_topology_doc):
        doc = dict(tiny_topology_doc)
        doc.pop("formatVersion")
        with pytest.raises(TopologyError, match="formatVersion"):
            parse_topology(doc)

    def test_unknown_reachability_host(self):
        doc = {"formatVersion": 1, "hosts": [{"id": "A"}], "reachability": [["A", "Z"]]}
        with pytest.raises(TopologyError, match="unknown host 'Z'"):
            parse_topology(doc)

    def test_duplicate_vuln_per_host(self):
        v = {"id": "v", "av": "N", "ac": "L", "pr": "N", "ui": "N"}
        doc = {"formatVersion": 1, "hosts": [{"id": "A", "vulnerabilities": [v, v]}]}
        with pytest.raises(TopologyError, match="duplicate vulnerability"):
            parse_topology(doc)

    def test_round_trip(self, tiny_topology_doc):
        topo = parse_topology(tiny_topology_doc)
        again = parse_topology(topo.to_dict())
        assert again.to_dict() == topo.to_dict()

    def test_abbreviated_metrics(self):
        doc = {
            "formatVersion": 1,
            "hosts": [{"id": "A", "vulnerabilities": [{"id": "v", "av": "N", "ac": "H", "pr": "L", "ui": "R"}]}],
        }
        v = parse_topology(doc).hosts[0].vulnerabilities[0]
        assert v.attack_vector is AttackVector.NETWORK
        assert v.attack_complexity is AttackComplexity.HIGH
        assert v.privileges_required is PrivilegesRequired.LOW
        assert v.user_interaction is UserInteraction.REQUIRED


class TestCvss:
    def test_easiest_vector_is_exactly_one(self):
        assert cvss_exploit_probability(_vuln("Low", "None", "None")) == 1.0

    def test_high_complexity(self):
        p = cvss_exploit_probability(_vuln("High", "None", "None"))
        assert abs(p - 0.44 / 0.77) < 1e-12
        assert round(p, 4) == 0.5714

    def test_explicit_probability_overrides(self):
        assert cvss_exploit_probability(_vuln("High", "High", "Required", probability=0.9)) == 0.9

    def test_results_in_unit_interval(self):
        for ac in AttackComplexity:
            for pr in PrivilegesRequired:
                for ui in UserInteraction:
                    v = _vuln(ac.value, pr.value, ui.value)
                    assert 0.0 < cvss_exploit_probability(v) <= 1.0

    @given(
        ac=st.sampled_from([c.value for c in AttackComplexity]),
        pr=st.sampled_from([c.value for c in PrivilegesRequired]),
        ui=st.sampled_from([c.value for c in UserInteraction]),
    )
    def test_monotone_in_each_metric(self, ac, pr, ui):
        """Weakening any single metric never increases the probability."""
        base = cvss_exploit_probability(_vuln(ac, pr, ui))
        harder = {
            "ac": {"Low": "High", "High": "High"},
            "pr": {"None": "Low", "Low": "High", "High": "High"},
            "ui": {"None": "Required", "Required": "Required"},
        }
        assert cvss_exploit_probability(_vuln(harder["ac"][ac], pr, ui)) <= base
        assert cvss_exploit_probability(_vuln(ac, harder["pr"][pr], ui)) <= base
        assert cvss_exploit_probability(_vuln(ac, pr, harder["ui"][ui])) <= base
