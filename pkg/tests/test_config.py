import copy
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platformsim.config import (ConfigError, CorrelatedTransform, DiscreteDist,
                                EndpointModel, expand_grid, get_path,
                                parse_scenario, scenario_to_dict,
                                serialize_scenario, validate)

from conftest import scenario_dict


class TestParse:
    def test_example_scenario_fields(self, example_spec):
        spec = example_spec
        assert spec.efficacy.comb.values == (0.35, 0.40, 0.45)
        assert spec.efficacy.comb.probs == (0.4, 0.4, 0.2)
        assert spec.efficacy.soc.values == (0.10, 0.12, 0.14)
        assert spec.platform.n_int == 50
        assert spec.platform.n_fin == 100
        assert spec.platform.cohorts_max == 5
        assert spec.platform.cohort_random == 0.02
        assert spec.platform.sr_drugs_pos == 1
        assert spec.platform.safety_prob == 0.0001
        assert spec.platform.sharing_type == "cohort"
        assert spec.target.margin_comb == 0.10
        assert spec.target.margin_mono == 0.05
        assert spec.target.scale == 1
        assert spec.rules.interim[0].bayes_sup[0].rows == ((0.10, 0.80, 1.00),)
        assert spec.rules.final[3].bayes_sup[0].rows == ((0.05, 0.80, 1.00),)
        # documented default
        assert spec.platform.run_out_active_cohorts is True

    def test_probs_must_sum_to_one(self):
        d = scenario_dict()
        d["efficacy"]["comb"] = {"values": [0.3, 0.4], "probs": [0.5, 0.6]}
        with pytest.raises(ConfigError, match="sum to 1"):
            parse_scenario(d)

    def test_n_int_greater_than_n_fin(self):
        with pytest.raises(ConfigError, match="n_int"):
            parse_scenario(scenario_dict(n_int=200, n_fin=100))

    def test_unknown_field_rejected(self):
        d = scenario_dict()
        d["platform"]["n_intt"] = 10
        with pytest.raises(ConfigError, match="n_intt"):
            parse_scenario(d)

    def test_missing_field_rejected(self):
        d = scenario_dict()
        del d["platform"]["n_int"]
        with pytest.raises(ConfigError, match="n_int"):
            parse_scenario(d)

    def test_inf_spelling(self):
        spec = parse_scenario(scenario_dict(sr_pats="inf"))
        assert math.isinf(spec.platform.sr_pats)

    def test_yaml_text_and_dict_agree(self, example_config_path, example_spec):
        with open(example_config_path) as fh:
            assert parse_scenario(fh.read()) == example_spec


class TestValidate:
    def test_valid_spec_no_violations(self, example_spec):
        assert validate(example_spec) == []

    def test_confidence_out_of_range(self):
        d = scenario_dict()
        d["rules"]["interim"]["comb_vs_mono_a"]["bayes_sup"] = [{"rows": [[0.1, 1.5, 1.0]]}]
        spec_violations = [v for v in validate_unchecked(d) if v.severity == "error"]
        assert len(spec_violations) == 1
        assert "confidence" in spec_violations[0].message

    def test_overlapping_sup_fut_is_warning_only(self):
        d = scenario_dict()
        d["rules"]["interim"]["comb_vs_mono_a"] = {
            "bayes_sup": [{"rows": [[0.0, 0.5, 1.0]]}],
            "bayes_fut": [{"rows": [[0.0, 0.6]]}],
        }
        violations = validate_unchecked(d)
        assert [v.severity for v in violations] == ["warning"]
        parse_scenario(d)  # warnings do not block

    def test_no_plac_with_soc_rules_warns(self):
        d = scenario_dict(trial_struc="no_plac")
        warnings = [v for v in validate_unchecked(d) if v.severity == "warning"]
        assert any("no_plac" in v.message for v in warnings)

    def test_validate_is_pure(self, example_spec):
        assert validate(example_spec) == validate(example_spec)

    def test_transform_marginal_enforced(self):
        bad = EndpointModel((lambda rr: (1.0 - rr, 0.0, rr, 0.0),), (1.0,))
        d = scenario_dict()
        spec = parse_scenario(d)
        import dataclasses
        broken = dataclasses.replace(spec, endpoint=bad)
        assert any("marginal" in v.message for v in validate(broken))


def validate_unchecked(d):
    """Build without the parse-time validation gate, then validate."""
    from platformsim.config import scenario_from_dict
    return validate(scenario_from_dict(d))


class TestRoundTrip:
    def test_example_round_trip(self, example_spec):
        assert parse_scenario(serialize_scenario(example_spec)) == example_spec

    def test_round_trip_with_correlated_transform_and_inf(self):
        d = scenario_dict(sr_pats="inf", sr_drugs_pos=2)
        d["endpoint"] = {"transforms": [{"kind": "identity"},
                                        {"kind": "correlated", "sens": 0.8, "spec": 0.9}],
                         "probs": [0.25, 0.75]}
        d["rules"]["final"]["comb_vs_mono_a"]["est_sup_fut"] = [
            {"est": "RR", "p_hat_sup": 1.2, "p_hat_fut": 1.0, "p_hat_prom": "inf"}]
        spec = parse_scenario(d)
        assert isinstance(spec.endpoint.transforms[1], CorrelatedTransform)
        assert parse_scenario(serialize_scenario(spec)) == spec

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_correlated_transform_is_valid_joint(self, sens, spec_):
        t = CorrelatedTransform(sens=sens, spec=spec_)
        for rr in (0.0, 0.3, 0.7, 1.0):
            probs = t(rr)
            assert all(p >= -1e-12 for p in probs)
            assert sum(probs) == pytest.approx(1.0, abs=1e-9)
            assert probs[1] + probs[3] == pytest.approx(rr, abs=1e-9)


class TestExpandGrid:
    def test_three_by_four(self, example_spec):
        axes = {"cohort_random": [0.01, 0.02, 0.03], "n_int": [50, 60, 70, 80]}
        specs = expand_grid(example_spec, axes)
        assert len(specs) == 12
        assert len({s.id for s in specs}) == 12

    def test_empty_axes_identity(self, example_spec):
        assert expand_grid(example_spec, {}) == [example_spec]

    def test_row_major_order(self, example_spec):
        axes = {"cohort_random": [0.1, 0.2], "n_int": [10, 20, 30]}
        specs = expand_grid(example_spec, axes)
        combos = [(s.platform.cohort_random, s.platform.n_int) for s in specs]
        assert combos == [(0.1, 10), (0.1, 20), (0.1, 30),
                          (0.2, 10), (0.2, 20), (0.2, 30)]

    def test_only_axis_fields_differ(self, example_spec):
        specs = expand_grid(example_spec, {"n_int": [40, 60]})
        for s in specs:
            d = scenario_to_dict(s)
            e = scenario_to_dict(example_spec)
            d["platform"]["n_int"] = e["platform"]["n_int"]
            d["id"] = e["id"]
            assert d == e

    def test_dotted_and_bare_paths_agree(self, example_spec):
        a = expand_grid(example_spec, {"platform.n_int": [40]})
        b = expand_grid(example_spec, {"n_int": [40]})
        assert a[0].platform.n_int == b[0].platform.n_int == 40

    def test_unknown_path(self, example_spec):
        with pytest.raises(ConfigError, match="no scalar field"):
            expand_grid(example_spec, {"not_a_field": [1]})

    def test_get_path(self, example_spec):
        assert get_path(example_spec, "n_fin") == 100
        assert get_path(example_spec, "target.margin_comb") == 0.10


class TestDiscreteDist:
    def test_sampling_stays_on_support(self):
        import numpy as np
        d = DiscreteDist((0.1, 0.2, 0.7), (0.2, 0.3, 0.5))
        rng = np.random.default_rng(0)
        draws = {d.sample(rng) for _ in range(500)}
        assert draws <= {0.1, 0.2, 0.7}

    def test_point_mass(self):
        import numpy as np
        d = DiscreteDist.point(0.4)
        rng = np.random.default_rng(0)
        assert all(d.sample(rng) == 0.4 for _ in range(10))
