import json

import numpy as np
import pytest

from bblrm import (
    BUILTIN_SCENARIO_NAMES,
    InvalidArgumentError,
    Scenario,
    ScenarioFormatError,
    builtin_scenarios,
    get_scenario,
    load_scenario_file,
    ndltae_prob_for,
    parse_scenario,
    scenario_to_dict,
    simulate_cohort,
)

# Builtin profiles, frozen. A change here must be deliberate.
EXPECTED_DLT = {
    "S1": (0.11, 0.25, 0.35, 0.41, 0.47, 0.52, 0.58, 0.63, 0.70),
    "S2": (0.08, 0.16, 0.25, 0.35, 0.42, 0.45, 0.53, 0.60, 0.70),
    "S3": (0.02, 0.05, 0.14, 0.25, 0.35, 0.42, 0.51, 0.60, 0.68),
    "S4": (0.03, 0.05, 0.10, 0.16, 0.25, 0.35, 0.40, 0.48, 0.55),
    "S5": (0.001, 0.005, 0.03, 0.10, 0.16, 0.25, 0.38, 0.50, 0.60),
    "S6": (0.01, 0.02, 0.05, 0.08, 0.11, 0.14, 0.25, 0.37, 0.47),
    "S7": (0.01, 0.03, 0.04, 0.05, 0.08, 0.11, 0.14, 0.25, 0.37),
}
EXPECTED_NDLTAE = {
    "S1": (0.35, 0.80, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95),
    "S2": (0.20, 0.55, 0.80, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95),
    "S3": (0.10, 0.20, 0.35, 0.80, 0.95, 0.95, 0.95, 0.95, 0.95),
    "S4": (0.10, 0.20, 0.35, 0.55, 0.80, 0.95, 0.95, 0.95, 0.95),
    "S5": (0.10, 0.10, 0.10, 0.35, 0.55, 0.80, 0.95, 0.95, 0.95),
    "S6": (0.10, 0.10, 0.20, 0.20, 0.35, 0.55, 0.80, 0.95, 0.95),
    "S7": (0.10, 0.10, 0.10, 0.20, 0.20, 0.35, 0.55, 0.80, 0.95),
}


class TestBuiltins:
    def test_names_and_order(self):
        assert BUILTIN_SCENARIO_NAMES == ("S1", "S2", "S3", "S4", "S5", "S6", "S7")
        assert [s.name for s in builtin_scenarios()] == list(BUILTIN_SCENARIO_NAMES)

    @pytest.mark.parametrize("name", BUILTIN_SCENARIO_NAMES)
    def test_profiles_frozen(self, name):
        s = get_scenario(name)
        assert s.dlt_probs == EXPECTED_DLT[name]
        assert s.ndltae_probs == EXPECTED_NDLTAE[name]

    def test_true_mtd_walks_up_the_ladder(self):
        assert [s.true_mtd_index for s in builtin_scenarios()] == [1, 2, 3, 4, 5, 6, 7]
        for s in builtin_scenarios():
            assert s.dlt_probs[s.true_mtd_index] == 0.25

    def test_toxic_sets(self):
        expected = {
            "S1": (2, 3, 4, 5, 6, 7, 8),
            "S2": (3, 4, 5, 6, 7, 8),
            "S3": (4, 5, 6, 7, 8),
            "S4": (5, 6, 7, 8),
            "S5": (6, 7, 8),
            "S6": (7, 8),
            "S7": (8,),
        }
        for s in builtin_scenarios():
            assert s.toxic_indices() == expected[s.name]
            # the true MTD itself is never in the toxic set
            assert s.true_mtd_index not in s.toxic_indices()

    def test_unknown_name(self):
        with pytest.raises(InvalidArgumentError):
            get_scenario("S8")


class TestNdltaeMapping:
    def test_plateau_boundaries(self):
        assert ndltae_prob_for(0.0) == 0.10
        assert ndltae_prob_for(0.049) == 0.10
        assert ndltae_prob_for(0.05) == 0.20
        assert ndltae_prob_for(0.099) == 0.20
        assert ndltae_prob_for(0.10) == 0.35
        assert ndltae_prob_for(0.149) == 0.35
        assert ndltae_prob_for(0.15) == 0.55
        assert ndltae_prob_for(0.199) == 0.55
        assert ndltae_prob_for(0.20) == 0.80
        assert ndltae_prob_for(0.25) == 0.80  # upper edge included
        assert ndltae_prob_for(0.2500001) == 0.90
        assert ndltae_prob_for(0.299) == 0.90
        assert ndltae_prob_for(0.30) == 0.93
        assert ndltae_prob_for(0.329) == 0.93
        assert ndltae_prob_for(0.33) == 0.95
        assert ndltae_prob_for(1.0) == 0.95

    def test_range_validated(self):
        with pytest.raises(InvalidArgumentError):
            ndltae_prob_for(-0.01)
        with pytest.raises(InvalidArgumentError):
            ndltae_prob_for(1.01)

    def test_builtin_tables_mostly_follow_the_mapping(self):
        """61 of the 63 builtin entries agree with the step function.

        The two exceptions are carried verbatim in the builtin tables: S6
        dose 6 and S7 dose 7 sit one plateau higher (0.55) than the mapping
        of their DLT rate 0.14 (0.35).
        """
        mismatches = []
        for s in builtin_scenarios():
            for i, (p, q) in enumerate(zip(s.dlt_probs, s.ndltae_probs)):
                if ndltae_prob_for(p) != q:
                    mismatches.append((s.name, i, p, q))
        assert mismatches == [("S6", 5, 0.14, 0.55), ("S7", 6, 0.14, 0.55)]


class TestScenarioValidation:
    def test_lengths_must_match(self):
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (0.1, 0.2), (0.1,))
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (0.1, 0.2), (0.1, 0.2), doses=(2.0,))

    def test_probability_range_closed(self):
        # 0 and 1 are legal endpoints
        s = Scenario("edge", (0.0, 1.0), (0.0, 1.0))
        assert s.dlt_probs == (0.0, 1.0)
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (-0.1, 0.5), (0.1, 0.1))
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (0.1, 0.5), (0.1, 1.1))

    def test_dlt_monotonicity_enforced(self):
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (0.3, 0.2), (0.1, 0.1))
        # plateaus are fine
        Scenario("x", (0.2, 0.2), (0.1, 0.1))

    def test_true_mtd_autoderived_only_when_unique(self):
        assert Scenario("x", (0.1, 0.25, 0.4), (0.1, 0.1, 0.1)).true_mtd_index == 1
        assert Scenario("x", (0.25, 0.25, 0.4), (0.1,) * 3).true_mtd_index is None
        assert Scenario("x", (0.1, 0.2, 0.4), (0.1,) * 3).true_mtd_index is None

    def test_explicit_true_mtd_checked(self):
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (0.1, 0.25), (0.1, 0.1), true_mtd_index=0)
        with pytest.raises(InvalidArgumentError):
            Scenario("x", (0.1, 0.25), (0.1, 0.1), true_mtd_index=5)

    def test_empty_name_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Scenario("", (0.1,), (0.1,))


class TestSimulateCohort:
    def test_deterministic_and_in_range(self):
        s = get_scenario("S4")
        a = simulate_cohort(s, 4, 3, np.random.default_rng(11))
        b = simulate_cohort(s, 4, 3, np.random.default_rng(11))
        assert a == b
        assert a.dose_index == 4 and a.n_patients == 3
        assert 0 <= a.dlt_count <= 3 and 0 <= a.ndltae_count <= 3

    def test_rates_recovered_in_aggregate(self):
        s = get_scenario("S1")
        rng = np.random.default_rng(12)
        n = 4000
        dlt = sum(simulate_cohort(s, 2, 1, rng).dlt_count for _ in range(n))
        assert dlt / n == pytest.approx(s.dlt_probs[2], abs=0.02)

    def test_dose_bounds(self):
        with pytest.raises(InvalidArgumentError):
            simulate_cohort(get_scenario("S1"), 9, 3, np.random.default_rng(0))


class TestLoader:
    def good(self):
        return {
            "name": "custom",
            "doses": [1.0, 2.0, 4.0],
            "dlt_probs": [0.05, 0.25, 0.5],
            "ndltae_probs": [0.2, 0.8, 0.95],
        }

    def test_round_trip(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(self.good()))
        s = load_scenario_file(path)
        assert s.name == "custom"
        assert s.true_mtd_index == 1
        assert scenario_to_dict(s)["dlt_probs"] == [0.05, 0.25, 0.5]

    def test_errors_are_itemised(self):
        bad = {
            "name": "",
            "dlt_probs": [0.5, 0.2],
            "ndltae_probs": [0.1, "x"],
            "extra": 1,
        }
        with pytest.raises(ScenarioFormatError) as err:
            parse_scenario(bad)
        text = str(err.value)
        assert "unknown key 'extra'" in text
        assert "'name' must be a non-empty string" in text
        assert "non-decreasing" in text
        assert "'ndltae_probs' must be a list of numbers" in text

    def test_missing_keys(self):
        with pytest.raises(ScenarioFormatError) as err:
            parse_scenario({"name": "x"})
        assert "'dlt_probs' is required" in str(err.value)
        assert "'ndltae_probs' is required" in str(err.value)

    def test_length_mismatch_reported(self):
        bad = self.good()
        bad["ndltae_probs"] = [0.2, 0.8]
        with pytest.raises(ScenarioFormatError) as err:
            parse_scenario(bad)
        assert "has 2 entries but 'dlt_probs' has 3" in str(err.value)

    def test_true_mtd_must_hit_target_rate(self):
        bad = self.good()
        bad["true_mtd_index"] = 0
        with pytest.raises(ScenarioFormatError) as err:
            parse_scenario(bad)
        assert "0.25" in str(err.value)

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioFormatError):
            load_scenario_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioFormatError):
            load_scenario_file(tmp_path / "absent.json")

    def test_not_an_object(self):
        with pytest.raises(ScenarioFormatError):
            parse_scenario([1, 2, 3])
