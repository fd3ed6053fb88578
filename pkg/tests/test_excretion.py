import datetime as dt

import numpy as np
import pytest

from wwmonitor import (
    ExcretionConfig,
    PanelDataset,
    build_excretors_panel,
    fictitious_excretors,
    interpolate_daily,
    per_capita_rate,
    virus_load,
)
from wwmonitor.excretion import export_excretors_csv

from conftest import D0, make_plant, make_sample


def d(i):
    return D0 + dt.timedelta(days=i)


class TestFictitiousExcretors:
    def test_direct_arithmetic(self):
        assert fictitious_excretors(1000.0, 10_000.0) == pytest.approx(625.0)

    def test_zero_concentration(self):
        assert fictitious_excretors(0.0, 5_000.0) == 0.0

    def test_unit_case(self):
        assert fictitious_excretors(1600.0, 10.0) == pytest.approx(1.0)

    def test_virus_load_byproduct(self):
        e, v = fictitious_excretors(1000.0, 10_000.0, return_virus_load=True)
        assert v == pytest.approx(1000.0 * 10_000.0 * 1e6)
        assert e == pytest.approx(v / 16e9)
        assert virus_load(1000.0, 10_000.0) == v

    def test_linear_in_concentration_and_inflow(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            c, i = rng.uniform(0.1, 1e5), rng.uniform(1.0, 1e6)
            assert fictitious_excretors(2 * c, i) == pytest.approx(2 * fictitious_excretors(c, i))
            assert fictitious_excretors(c, 2 * i) == pytest.approx(2 * fictitious_excretors(c, i))

    def test_doubling_shedding_halves_excretors(self):
        base = ExcretionConfig()
        double = ExcretionConfig(shedding_per_person=2 * base.shedding_per_person)
        assert fictitious_excretors(1000.0, 10_000.0, double) == pytest.approx(
            fictitious_excretors(1000.0, 10_000.0, base) / 2
        )

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            fictitious_excretors(float("nan"), 10.0)
        with pytest.raises(ValueError):
            fictitious_excretors(10.0, float("inf"))

    def test_nonpositive_inflow_rejected(self):
        with pytest.raises(ValueError):
            fictitious_excretors(10.0, 0.0)


class TestPerCapitaRate:
    def test_examples(self):
        assert per_capita_rate(625.0, 125_000) == pytest.approx(500.0)
        assert per_capita_rate(0.0, 50_000) == 0.0
        assert per_capita_rate(42.5, 100_000) == pytest.approx(42.5)

    def test_nonpositive_residents(self):
        with pytest.raises(ValueError):
            per_capita_rate(1.0, 0)


class TestInterpolateDaily:
    def test_midpoint(self):
        s = interpolate_daily([(d(0), 10.0), (d(2), 30.0)])
        assert s.start_date == d(0)
        np.testing.assert_allclose(s.values, [10.0, 20.0, 30.0])

    def test_single_sample(self):
        s = interpolate_daily([(d(0), 7.0)])
        assert len(s) == 1
        assert s.values[0] == 7.0

    def test_hand_interpolation_gap_of_two(self):
        # hand arithmetic: slope 3 over days 1..3
        s = interpolate_daily([(d(0), 1.0), (d(1), 2.0), (d(3), 8.0)])
        np.testing.assert_allclose(s.values, [1.0, 2.0, 5.0, 8.0])

    def test_hand_interpolation_gap_of_three(self):
        s = interpolate_daily([(d(0), 1.0), (d(1), 2.0), (d(4), 8.0)])
        np.testing.assert_allclose(s.values, [1.0, 2.0, 4.0, 6.0, 8.0])

    def test_same_date_duplicates_averaged(self):
        s = interpolate_daily([(d(0), 10.0), (d(0), 20.0), (d(2), 5.0)])
        assert s.values[0] == pytest.approx(15.0)

    def test_empty_input(self):
        with pytest.raises(ValueError):
            interpolate_daily([])

    def test_values_hit_samples_exactly_and_stay_bounded(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = rng.integers(2, 12)
            offsets = np.sort(rng.choice(60, size=n, replace=False))
            vals = rng.uniform(-50, 50, size=n)
            s = interpolate_daily([(d(int(o)), float(v)) for o, v in zip(offsets, vals)])
            for o, v in zip(offsets, vals):
                assert s.value_on(d(int(o))) == pytest.approx(v)
            assert s.values.min() >= vals.min() - 1e-12
            assert s.values.max() <= vals.max() + 1e-12


class TestBuildPanel:
    def test_single_plant_matches_interpolation(self):
        ds = PanelDataset(
            (make_plant("P1", residents=125_000),),
            (make_sample("P1", d(0), 1000.0), make_sample("P1", d(2), 2000.0)),
        )
        panel = build_excretors_panel(ds)
        expected = interpolate_daily(
            [(d(0), fictitious_excretors(1000.0, 10_000.0)), (d(2), fictitious_excretors(2000.0, 10_000.0))]
        )
        np.testing.assert_allclose(panel.per_plant["P1"].values, expected.values)
        np.testing.assert_allclose(
            panel.per_capita["P1"].values, 1e5 * expected.values / 125_000
        )

    def test_disjoint_spans_get_common_grid_with_missing(self):
        ds = PanelDataset(
            (make_plant("P1"), make_plant("P2")),
            (
                make_sample("P1", d(0), 100.0),
                make_sample("P1", d(2), 100.0),
                make_sample("P2", d(5), 100.0),
                make_sample("P2", d(7), 100.0),
            ),
        )
        panel = build_excretors_panel(ds)
        assert panel.start_date == d(0)
        assert panel.n_days == 8
        p1, p2 = panel.per_plant["P1"].values, panel.per_plant["P2"].values
        assert np.isnan(p1[3:]).all() and not np.isnan(p1[:3]).any()
        assert np.isnan(p2[:5]).all() and not np.isnan(p2[5:]).any()

    def test_per_capita_recomputed_elementwise(self, synth_dataset):
        panel = build_excretors_panel(synth_dataset)
        for pid in panel.plant_ids():
            e = panel.per_plant[pid].values
            r = panel.per_capita[pid].values
            np.testing.assert_allclose(r, 1e5 * e / panel.residents[pid], equal_nan=True)

    def test_export_skips_missing_days(self, tmp_path):
        ds = PanelDataset(
            (make_plant("P1"), make_plant("P2")),
            (
                make_sample("P1", d(0), 100.0),
                make_sample("P1", d(1), 100.0),
                make_sample("P2", d(3), 100.0),
            ),
        )
        panel = build_excretors_panel(ds)
        out = tmp_path / "tidy.csv"
        export_excretors_csv(panel, out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "plant_id,date,excretors,rate_per_100k"
        assert len(lines) == 1 + 2 + 1  # header + P1 days + P2 day
