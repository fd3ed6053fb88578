import datetime as dt

import numpy as np
import pytest

from wwmonitor import (
    PanelDataset,
    SamplingScenario,
    SewerScenario,
    apply_sampling_scenario,
    apply_sewer_scenario,
    rank_scenarios,
    sampling_scenario_grid,
    sewer_scenario_grid,
    wwtp_influence,
)
from wwmonitor.ingest import SEWER_TYPES

from conftest import D0, make_plant, make_sample, panel_from_rates


def weekly_dataset(n_plants=4, weeks=8, weekdays=(0, 3)):
    """Plants sampled Mon+Thu with distinct rate patterns."""
    plants, samples = [], []
    rng = np.random.default_rng(77)
    for i in range(n_plants):
        pid = f"P{i + 1:02d}"
        plants.append(
            make_plant(
                pid,
                residents=50_000 * (i + 1),
                state=f"State{i % 3}",
                sewer=SEWER_TYPES[i % 4],
                initial=(i % 2 == 0),
            )
        )
        for w in range(weeks):
            for wd in weekdays:
                day = D0 + dt.timedelta(days=7 * w + wd)
                samples.append(make_sample(pid, day, float(rng.uniform(100, 5000))))
    return PanelDataset(tuple(plants), tuple(samples))


class TestGrids:
    def test_sampling_grid_enumerates_reference_plus_eleven(self):
        grid = sampling_scenario_grid()
        ids = [sc.scenario_id for sc in grid]
        assert ids == ["Reference"] + [f"S{i}" for i in range(1, 12)]
        combos = {(sc.volume, sc.frequency) for sc in grid}
        assert len(combos) == 12  # 4 volumes x 3 frequencies, bijective

    def test_sampling_grid_table_layout(self):
        byid = {sc.scenario_id: sc for sc in sampling_scenario_grid()}
        assert (byid["Reference"].volume, byid["Reference"].frequency) == ("all48", "twice_per_week")
        assert (byid["S6"].volume, byid["S6"].frequency) == ("initial24", "twice_per_week")
        assert (byid["S4"].volume, byid["S4"].frequency) == ("largest_per_state9", "twice_per_week")
        assert (byid["S2"].volume, byid["S2"].frequency) == ("largest1", "twice_per_week")
        assert (byid["S10"].volume, byid["S10"].frequency) == ("all48", "once_per_week")
        assert (byid["S11"].volume, byid["S11"].frequency) == ("all48", "once_per_two_weeks")
        assert (byid["S7"].volume, byid["S7"].frequency) == ("largest1", "once_per_two_weeks")

    def test_sewer_grid_is_four_types_by_two_sizes(self):
        grid = sewer_scenario_grid()
        assert [sc.scenario_id for sc in grid] == [f"S{i}" for i in range(1, 9)]
        assert {(next(iter(sc.sewer_types)), sc.large) for sc in grid} == {
            (t, size) for t in SEWER_TYPES for size in (True, False)
        }


class TestApplySampling:
    def test_reference_is_identity(self):
        ds = weekly_dataset()
        out = apply_sampling_scenario(ds, SamplingScenario("all48", "twice_per_week"))
        assert out is ds

    def test_largest1_keeps_max_residents(self, synth_dataset):
        out = apply_sampling_scenario(synth_dataset, SamplingScenario("largest1", "twice_per_week"))
        assert len(out.plants) == 1
        assert out.plants[0].residents == max(p.residents for p in synth_dataset.plants)

    def test_largest_per_state_one_each(self, synth_dataset):
        out = apply_sampling_scenario(
            synth_dataset, SamplingScenario("largest_per_state9", "twice_per_week")
        )
        states = [p.state for p in out.plants]
        assert len(out.plants) == 9
        assert len(set(states)) == 9
        for p in out.plants:
            peers = [q for q in synth_dataset.plants if q.state == p.state]
            assert p.residents == max(q.residents for q in peers)

    def test_initial24(self, synth_dataset):
        out = apply_sampling_scenario(synth_dataset, SamplingScenario("initial24", "twice_per_week"))
        assert len(out.plants) == 24
        assert all(p.in_initial_program for p in out.plants)

    def test_once_per_week_drops_thursdays(self):
        ds = weekly_dataset()
        out = apply_sampling_scenario(ds, SamplingScenario("all48", "once_per_week"))
        assert len(out.samples) == len(ds.samples) / 2
        assert all(s.date.weekday() == 0 for s in out.samples)

    def test_once_per_two_weeks_keeps_every_other_monday(self):
        ds = weekly_dataset(weeks=8)
        out = apply_sampling_scenario(ds, SamplingScenario("all48", "once_per_two_weeks"))
        # blocks anchored at the dataset start (a Monday): Mondays of weeks 0,2,4,6
        assert len(out.samples) == 4 * len(ds.plants)
        offsets = sorted({(s.date - D0).days for s in out.samples})
        assert offsets == [0, 14, 28, 42]

    def test_output_is_subset_of_input(self, synth_dataset):
        for sc in sampling_scenario_grid():
            out = apply_sampling_scenario(synth_dataset, sc)
            assert set(out.samples) <= set(synth_dataset.samples)
            assert {p.plant_id for p in out.plants} <= {p.plant_id for p in synth_dataset.plants}

    def test_ties_on_residents_break_lexicographically(self):
        plants = (
            make_plant("B", residents=100_000),
            make_plant("A", residents=100_000),
            make_plant("C", residents=50_000),
        )
        samples = tuple(make_sample(p.plant_id, D0, 100.0) for p in plants)
        ds = PanelDataset(plants, samples)
        out = apply_sampling_scenario(ds, SamplingScenario("largest1", "twice_per_week"))
        assert out.plants[0].plant_id == "A"


class TestApplySewer:
    def test_single_matching_plant_survives(self):
        plants = (
            make_plant("P1", residents=150_000, sewer="combined"),
            make_plant("P2", residents=80_000, sewer="combined"),
            make_plant("P3", residents=150_000, sewer="separate"),
        )
        samples = tuple(make_sample(p.plant_id, D0, 100.0) for p in plants)
        ds = PanelDataset(plants, samples)
        out = apply_sewer_scenario(ds, SewerScenario(frozenset({"combined"}), True, "S5"))
        assert [p.plant_id for p in out.plants] == ["P1"]

    def test_grid_partitions_all_plants(self, synth_dataset):
        seen: list[str] = []
        for sc in sewer_scenario_grid():
            try:
                out = apply_sewer_scenario(synth_dataset, sc)
            except ValueError:
                continue  # empty cell is legitimate for a given panel
            seen.extend(p.plant_id for p in out.plants)
        assert sorted(seen) == synth_dataset.plant_ids()  # each plant exactly once

    def test_empty_selection_rejected(self):
        plants = (make_plant("P1", residents=150_000, sewer="combined"),)
        ds = PanelDataset(plants, (make_sample("P1", D0, 100.0),))
        with pytest.raises(ValueError, match="no plants"):
            apply_sewer_scenario(ds, SewerScenario(frozenset({"separate"}), True, "S3"))


class TestRanking:
    def test_reference_dissimilarity_zero_everywhere(self, synth_dataset):
        results = rank_scenarios(synth_dataset, sampling_scenario_grid(), method="method1")
        ref = next(r for r in results if r.scenario_id == "Reference")
        assert ref.dissimilarity_by_measure["l2"] == 0.0
        assert ref.dissimilarity_by_measure["corr"] == 0.0
        assert ref.dissimilarity_by_measure["crosscorr"] == 0.0
        assert results[0].scenario_id == "Reference"  # nothing beats zero

    def test_identical_plants_make_volume_reductions_free(self):
        rates = [20.0, 30.0, 50.0, 40.0, 25.0, 35.0, 45.0, 30.0]
        panel = panel_from_rates(
            {f"P{i}": rates for i in range(6)}, {f"P{i}": 100_000 for i in range(6)}
        )
        # give plants the metadata needed by the volume rules
        plants = tuple(
            make_plant(p.plant_id, residents=100_000, state=f"State{i % 2}", initial=(i < 3))
            for i, p in enumerate(panel.plants)
        )
        ds = PanelDataset(plants, panel.samples)
        volume_only = [
            SamplingScenario("initial24", "twice_per_week"),
            SamplingScenario("largest_per_state9", "twice_per_week"),
            SamplingScenario("largest1", "twice_per_week"),
        ]
        results = rank_scenarios(ds, volume_only, method="method1", measures=("corr",))
        for r in results:
            assert r.dissimilarity_by_measure["corr"] == pytest.approx(0.0, abs=1e-12)

    def test_errors_recorded_not_raised(self):
        # constant curves make corr undefined; the batch must still complete
        rates = [10.0] * 20
        panel = panel_from_rates({"P1": rates, "P2": rates}, {"P1": 100_000, "P2": 100_000})
        ds = PanelDataset(
            tuple(make_plant(p.plant_id, initial=True) for p in panel.plants), panel.samples
        )
        results = rank_scenarios(
            ds, [SamplingScenario("all48", "once_per_week")], measures=("corr", "l2")
        )
        (r,) = results
        assert np.isnan(r.dissimilarity_by_measure["corr"])
        assert "corr" in r.errors
        assert r.dissimilarity_by_measure["l2"] >= 0.0

    def test_deterministic_tie_break(self, synth_dataset):
        results = rank_scenarios(synth_dataset, sampling_scenario_grid(), method="method1")
        again = rank_scenarios(synth_dataset, sampling_scenario_grid(), method="method1")
        assert [r.scenario_id for r in results] == [r.scenario_id for r in again]

    def test_qualitative_rank_order_on_heterogeneous_panel(self, synth_dataset):
        # wide plant spread: keeping many plants at full frequency must beat
        # any single-plant program, for both aggregation methods
        for method in ("method1", "method2"):
            results = rank_scenarios(
                synth_dataset, sampling_scenario_grid(), method=method, measures=("corr",)
            )
            order = [r.scenario_id for r in results]
            assert order[0] == "Reference"
            single_plant = {"S1", "S2", "S7"}
            assert single_plant <= set(order[-4:])
            assert order.index("S6") < min(order.index(s) for s in single_plant)


class TestInfluence:
    def test_identical_plants_have_zero_influence(self):
        rates = [20.0, 30.0, 50.0, 40.0]
        ds = panel_from_rates(
            {f"P{i}": rates for i in range(4)}, {f"P{i}": 100_000 for i in range(4)}
        )
        influence = wwtp_influence(ds, measure="l2", method="method1")
        assert all(v == pytest.approx(0.0, abs=1e-9) for v in influence.values())

    def test_dominant_plant_has_largest_influence(self):
        # BIG carries 99% of the pooled weight and deviates from the others
        ds = panel_from_rates(
            {"BIG": [20.0, 80.0, 40.0], "S1": [32.0, 61.0, 55.0], "S2": [28.0, 64.0, 49.0]},
            {"BIG": 9_900_000, "S1": 50_000, "S2": 50_000},
        )
        influence = wwtp_influence(ds, measure="l2", method="method1")
        assert max(influence, key=influence.get) == "BIG"

    def test_normalization_can_flip_the_argmax(self):
        # a tiny plant with a wild pattern: small absolute influence, large
        # population-normalized influence
        ds = panel_from_rates(
            {
                "BIG": [50.0, 52.0, 51.0, 53.0],
                "MID": [48.0, 50.0, 49.0, 52.0],
                "TINY": [500.0, 5.0, 800.0, 1.0],
            },
            {"BIG": 2_000_000, "MID": 1_500_000, "TINY": 2_000},
        )
        raw = wwtp_influence(ds, measure="l2", method="method1")
        norm = wwtp_influence(ds, measure="l2", method="method1", normalize=True)
        assert max(raw, key=raw.get) != "TINY"
        assert max(norm, key=norm.get) == "TINY"
        for pid in raw:
            assert norm[pid] == pytest.approx(raw[pid] / {"BIG": 2_000_000, "MID": 1_500_000, "TINY": 2_000}[pid])

    def test_median_plant_zero_influence_method2(self):
        # odd plant count; removing the always-median plant leaves the median
        ds = panel_from_rates(
            {"LO": [10.0, 20.0], "MID": [20.0, 30.0], "HI": [30.0, 40.0]},
            {"LO": 100_000, "MID": 100_000, "HI": 100_000},
        )
        influence = wwtp_influence(
            ds, measure="l2", method="method2", enable_method2_extension=True
        )
        assert influence["MID"] == pytest.approx(0.0, abs=1e-12)

    def test_method2_requires_explicit_flag(self):
        ds = panel_from_rates(
            {"A": [10.0, 20.0], "B": [20.0, 30.0]}, {"A": 100_000, "B": 100_000}
        )
        with pytest.raises(ValueError, match="extension"):
            wwtp_influence(ds, method="method2")

    def test_two_plants_minimum(self):
        ds = panel_from_rates({"A": [10.0, 20.0]}, {"A": 100_000})
        with pytest.raises(ValueError, match="2 plants"):
            wwtp_influence(ds)
