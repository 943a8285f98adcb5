import copy
import pathlib

import pytest

from platformsim.config import parse_scenario

ROOT = pathlib.Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

COMPARISON_KEYS = ("comb_vs_mono_a", "comb_vs_mono_b", "mono_a_vs_soc", "mono_b_vs_soc")


def bayes_stage_rules(sup_margins=(0.10, 0.10, 0.05, 0.05), sup_conf=0.80,
                      prom=1.00, fut_conf=0.60, with_fut=True):
    """The four-comparison Bayesian rule block used across tests: one
    superiority row per comparison plus (optionally) a margin-0 futility row."""
    stage = {}
    for key, margin in zip(COMPARISON_KEYS, sup_margins):
        d = {"bayes_sup": [{"rows": [[margin, sup_conf, prom]]}]}
        if with_fut:
            d["bayes_fut"] = [{"rows": [[0.00, fut_conf]]}]
        stage[key] = d
    return stage


def scenario_dict(*, rates=(0.35, 0.2, 0.2, 0.1), scenario_id="test",
                  rules=None, **platform_overrides):
    """A compact single-point-rates scenario; platform fields overridable."""
    platform = {
        "cohorts_max": 5, "cohort_random": 0.02, "cohort_offset": 0,
        "initial_cohorts": 1, "safety_prob": 0.0, "sr_drugs_pos": "inf",
        "sr_pats": "inf", "sr_first_pos": False, "trial_struc": "all_plac",
        "sharing_type": "cohort", "n_int": 50, "n_fin": 100,
        "allocation_ratio": [2, 1, 1, 1], "run_out_active_cohorts": True,
    }
    platform.update(platform_overrides)
    if rules is None:
        stage = bayes_stage_rules()
        rules = {"interim": copy.deepcopy(stage), "final": copy.deepcopy(stage)}
    comb, mono_a, mono_b, soc = rates
    return {
        "id": scenario_id,
        "efficacy": {
            "random": True, "random_type": "absolute",
            "comb": {"values": [comb], "probs": [1.0]},
            "mono_a": {"values": [mono_a], "probs": [1.0]},
            "mono_b": {"values": [mono_b], "probs": [1.0]},
            "soc": {"values": [soc], "probs": [1.0]},
        },
        "endpoint": {"transforms": [{"kind": "identity"}], "probs": [1.0]},
        "target": {"margin_comb": 0.10, "margin_mono": 0.05, "scale": 1, "strict": True},
        "prior": {"alpha": 1.0, "beta": 1.0},
        "platform": platform,
        "rules": rules,
    }


def make_scenario(**kwargs):
    return parse_scenario(scenario_dict(**kwargs))


@pytest.fixture(scope="session")
def example_spec():
    return parse_scenario((CONFIGS / "example_scenario.yaml").read_text())


@pytest.fixture(scope="session")
def example_config_path():
    return str(CONFIGS / "example_scenario.yaml")


@pytest.fixture(scope="session")
def grid_base_path():
    return str(CONFIGS / "grid_base.yaml")


@pytest.fixture(scope="session")
def grid_axes_path():
    return str(CONFIGS / "grid_axes.yaml")
