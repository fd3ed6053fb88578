"""Reduced-sampling scenario engine and per-plant influence estimation.

Two scenario grids are evaluated against the reference national curve:

* sampling programs: every combination of sampling volume (all plants,
  the initial-program plants, the largest plant per state, or the single
  largest plant) and sampling frequency (twice weekly, once weekly, once
  per two weeks);
* sewer subsets: sewer type crossed with catchment size (large means
  residents >= 100,000).

Each scenario dataset is pushed through the full pipeline (excretor
series, interpolation, aggregation) and compared to the reference curve
with the configured dissimilarity measures.

A plant's influence is the dissimilarity between the national curve with
and without that plant, optionally normalized by its catchment
population.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregation import METHOD1, METHOD2, AggregationConfig, NationalCurve, aggregate
from .dissimilarity import MEASURES, DissimilarityConfig, DissimilarityUndefinedError, dissimilarity
from .excretion import ExcretionConfig, build_excretors_panel
from .ingest import PanelDataset

VOLUMES = ("all48", "initial24", "largest_per_state9", "largest1")
FREQUENCIES = ("twice_per_week", "once_per_week", "once_per_two_weeks")
SIZE_THRESHOLD = 100_000

#: (volume, frequency) -> scenario label of the sampling-program grid
_SAMPLING_IDS = {
    ("all48", "twice_per_week"): "Reference",
    ("largest1", "once_per_week"): "S1",
    ("largest1", "twice_per_week"): "S2",
    ("largest_per_state9", "once_per_week"): "S3",
    ("largest_per_state9", "twice_per_week"): "S4",
    ("initial24", "once_per_week"): "S5",
    ("initial24", "twice_per_week"): "S6",
    ("largest1", "once_per_two_weeks"): "S7",
    ("largest_per_state9", "once_per_two_weeks"): "S8",
    ("initial24", "once_per_two_weeks"): "S9",
    ("all48", "once_per_week"): "S10",
    ("all48", "once_per_two_weeks"): "S11",
}


@dataclass(frozen=True)
class SamplingScenario:
    volume: str
    frequency: str

    def __post_init__(self):
        if self.volume not in VOLUMES:
            raise ValueError(f"unknown volume rule {self.volume!r}")
        if self.frequency not in FREQUENCIES:
            raise ValueError(f"unknown frequency rule {self.frequency!r}")

    @property
    def scenario_id(self) -> str:
        return _SAMPLING_IDS[(self.volume, self.frequency)]

    @classmethod
    def from_id(cls, scenario_id: str) -> "SamplingScenario":
        for (volume, frequency), sid in _SAMPLING_IDS.items():
            if sid == scenario_id:
                return cls(volume, frequency)
        raise ValueError(f"unknown scenario id {scenario_id!r}")


def sampling_scenario_grid() -> list[SamplingScenario]:
    """Reference plus the 11 reduced sampling programs, in label order."""
    order = ["Reference"] + [f"S{i}" for i in range(1, 12)]
    return [SamplingScenario.from_id(sid) for sid in order]


@dataclass(frozen=True)
class SewerScenario:
    sewer_types: frozenset[str]
    large: bool  # residents >= SIZE_THRESHOLD
    scenario_id: str

    def __post_init__(self):
        object.__setattr__(self, "sewer_types", frozenset(self.sewer_types))
        if not self.sewer_types:
            raise ValueError("sewer_types must be non-empty")


def sewer_scenario_grid() -> list[SewerScenario]:
    """The 8 sewer type x size scenarios (4 types, large/small catchments)."""
    grid = []
    for i, sewer_type in enumerate(("unknown", "separate", "combined", "separate_and_combined")):
        grid.append(SewerScenario(frozenset({sewer_type}), True, f"S{2 * i + 1}"))
        grid.append(SewerScenario(frozenset({sewer_type}), False, f"S{2 * i + 2}"))
    return grid


def _largest(plants) -> str:
    """Plant id with the most residents; ties go to the smallest id."""
    return min(plants, key=lambda p: (-p.residents, p.plant_id)).plant_id


def apply_sampling_scenario(ds: PanelDataset, sc: SamplingScenario) -> PanelDataset:
    """Filter a dataset down to one sampling program.

    Volume picks plants; frequency keeps the first sampled date per
    ISO-8601 week (once weekly) or per two-week block anchored at the
    dataset's first date (biweekly). Same-date lab replicates of a kept
    date survive together.
    """
    if sc.volume == "all48":
        reduced = ds
    elif sc.volume == "initial24":
        keep = {p.plant_id for p in ds.plants if p.in_initial_program}
        if not keep:
            raise ValueError("no plants are flagged in_initial_program")
        reduced = ds.restrict_plants(keep)
    elif sc.volume == "largest_per_state9":
        by_state: dict[str, list] = {}
        for p in ds.plants:
            by_state.setdefault(p.state, []).append(p)
        if not by_state:
            raise ValueError("dataset has no plants")
        reduced = ds.restrict_plants({_largest(plants) for plants in by_state.values()})
    else:  # largest1
        if not ds.plants:
            raise ValueError("dataset has no plants")
        reduced = ds.restrict_plants({_largest(ds.plants)})

    if sc.frequency == "twice_per_week":
        return reduced

    if sc.frequency == "once_per_week":
        block = lambda d: d.isocalendar()[:2]
    else:  # once_per_two_weeks: blocks anchored at the input dataset's start
        anchor = ds.date_span[0]
        block = lambda d: (d - anchor).days // 14

    first: dict[tuple, object] = {}
    for s in reduced.samples:
        key = (s.plant_id, block(s.date))
        if key not in first or s.date < first[key]:
            first[key] = s.date
    return reduced.restrict_samples(lambda s: first[(s.plant_id, block(s.date))] == s.date)


def apply_sewer_scenario(ds: PanelDataset, sc: SewerScenario) -> PanelDataset:
    """Keep plants matching the sewer-type subset and the size side."""
    keep = {
        p.plant_id
        for p in ds.plants
        if p.sewer_type in sc.sewer_types and ((p.residents >= SIZE_THRESHOLD) == sc.large)
    }
    if not keep:
        raise ValueError(f"sewer scenario {sc.scenario_id} selects no plants")
    return ds.restrict_plants(keep)


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    dissimilarity_by_measure: dict[str, float]
    curve: NationalCurve
    errors: dict[str, str] = field(default_factory=dict)


def _pipeline_curve(ds: PanelDataset, method: str, agg_cfg: AggregationConfig | None,
                    exc_cfg: ExcretionConfig) -> NationalCurve:
    panel = build_excretors_panel(ds, exc_cfg)
    cfg = agg_cfg or AggregationConfig(method=method)
    if cfg.method != method:
        cfg = AggregationConfig(method=method, quantile_level=cfg.quantile_level)
    return aggregate(panel, cfg)


def _aligned_values(a: NationalCurve, b: NationalCurve) -> tuple[np.ndarray, np.ndarray, bool]:
    """Values of both curves on their common date span, missing days dropped."""
    start = max(a.series.start_date, b.series.start_date)
    end = min(a.series.end_date, b.series.end_date)
    if end < start:
        raise ValueError("curves share no dates")
    av = a.series.window(start, end).values
    bv = b.series.window(start, end).values
    valid = ~(np.isnan(av) | np.isnan(bv))
    return av[valid], bv[valid], bool(valid.all())


def rank_scenarios(
    ds: PanelDataset,
    scenarios,
    method: str = METHOD1,
    measures=MEASURES,
    sort_by: str | None = None,
    agg_cfg: AggregationConfig | None = None,
    exc_cfg: ExcretionConfig = ExcretionConfig(),
    diss_cfg: DissimilarityConfig | None = None,
) -> list[ScenarioResult]:
    """Evaluate scenarios against the reference curve, sorted ascending.

    Per-scenario dissimilarity errors (e.g. an undefined cross-correlation
    measure) are recorded, not raised, so one bad pair cannot abort the
    batch. Ties and undefined values order by scenario id.
    """
    measures = list(measures)
    sort_by = sort_by or measures[0]
    if sort_by not in measures:
        raise ValueError(f"sort_by {sort_by!r} not among measures {measures}")
    reference = _pipeline_curve(ds, method, agg_cfg, exc_cfg)

    results = []
    for sc in scenarios:
        if isinstance(sc, SamplingScenario):
            reduced = apply_sampling_scenario(ds, sc)
        elif isinstance(sc, SewerScenario):
            reduced = apply_sewer_scenario(ds, sc)
        else:
            raise TypeError(f"unsupported scenario type {type(sc).__name__}")
        curve = _pipeline_curve(reduced, method, agg_cfg, exc_cfg)
        ref_vals, sc_vals, _ = _aligned_values(reference, curve)
        values: dict[str, float] = {}
        errors: dict[str, str] = {}
        for m in measures:
            try:
                values[m] = dissimilarity(ref_vals, sc_vals, m, diss_cfg)
            except (DissimilarityUndefinedError, ValueError) as exc:
                values[m] = float("nan")
                errors[m] = str(exc)
        results.append(ScenarioResult(sc.scenario_id, values, curve, errors))

    def key(r: ScenarioResult):
        v = r.dissimilarity_by_measure[sort_by]
        return (np.isnan(v), v if not np.isnan(v) else 0.0, r.scenario_id)

    return sorted(results, key=key)


def wwtp_influence(
    ds: PanelDataset,
    measure: str = "corr",
    method: str = METHOD1,
    normalize: bool = False,
    agg_cfg: AggregationConfig | None = None,
    exc_cfg: ExcretionConfig = ExcretionConfig(),
    diss_cfg: DissimilarityConfig | None = None,
    enable_method2_extension: bool = False,
) -> dict[str, float]:
    """Leave-one-out influence of each plant on the national curve.

    The influence of plant j is the dissimilarity between the full curve
    and the curve rebuilt without j, computed on their common valid
    span; with ``normalize`` it is divided by j's residents. The
    leave-one-out reading is only well-defined for the pooled (method-1)
    statistic; the quantile-curve variant is a clearly flagged extension
    behind ``enable_method2_extension``.
    """
    if method == METHOD2 and not enable_method2_extension:
        raise ValueError("method-2 influence is an extension; pass enable_method2_extension=True")
    if len(ds.plants) < 2:
        raise ValueError("influence needs at least 2 plants")
    full = _pipeline_curve(ds, method, agg_cfg, exc_cfg)
    all_ids = set(ds.plant_ids())
    residents = {p.plant_id: p.residents for p in ds.plants}

    out: dict[str, float] = {}
    for pid in sorted(all_ids):
        reduced = ds.restrict_plants(all_ids - {pid})
        curve = _pipeline_curve(reduced, method, agg_cfg, exc_cfg)
        a, b, clean = _aligned_values(full, curve)
        if not clean:
            warnings.warn(f"plant {pid}: influence computed on a restricted day span", stacklevel=2)
        value = dissimilarity(a, b, measure, diss_cfg)
        out[pid] = value / residents[pid] if normalize else value
    return out


def write_ranking_csv(results: list[ScenarioResult], measures, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario_id", *measures])
        for r in results:
            row = [r.scenario_id]
            for m in measures:
                v = r.dissimilarity_by_measure.get(m, float("nan"))
                row.append("" if np.isnan(v) else repr(float(v)))
            w.writerow(row)


def write_influence_csv(influence: dict[str, float], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["plant_id", "influence"])
        for pid in sorted(influence):
            w.writerow([pid, repr(float(influence[pid]))])
