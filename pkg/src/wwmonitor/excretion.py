"""Fictitious-excretor series per plant.

The monitoring variable is the number of fictitious excretors: the
infected-population size implied by the measured viral load at a plant,

    E = concentration * inflow * 1e6 / shedding_per_person

where concentration is RNA copies/ml, inflow is m3/day, the 1e6 factor
converts both to litres, and the denominator is the average viral
excretion per infected person and day. The intermediate
``concentration * inflow * 1e6`` is the virus load (RNA copies/day).

Per-plant sample values are linearly interpolated to a daily grid; no
extrapolation happens beyond a plant's own first/last sample.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import PanelDataset
from .series import DailySeries

#: average viral shedding per infected person and day, RNA copies
DEFAULT_SHEDDING_PER_PERSON = 16e9

#: unit conversion of copies/ml * m3/day into copies/day
ML_TO_DAY_FACTOR = 1e6


@dataclass(frozen=True)
class ExcretionConfig:
    shedding_per_person: float = DEFAULT_SHEDDING_PER_PERSON
    ml_to_day_factor: float = ML_TO_DAY_FACTOR

    def __post_init__(self):
        if not (self.shedding_per_person > 0):
            raise ValueError("shedding_per_person must be positive")
        if not (self.ml_to_day_factor > 0):
            raise ValueError("ml_to_day_factor must be positive")


@dataclass(frozen=True)
class ExcretorsPanel:
    """Per-plant daily excretor and per-capita series on one common grid."""

    per_plant: dict[str, DailySeries]
    per_capita: dict[str, DailySeries]
    residents: dict[str, int]

    def __post_init__(self):
        grids = {(s.start_date, len(s)) for s in self.per_plant.values()}
        grids |= {(s.start_date, len(s)) for s in self.per_capita.values()}
        if len(grids) != 1:
            raise ValueError("panel series must share one daily grid")

    @property
    def start_date(self) -> dt.date:
        return next(iter(self.per_plant.values())).start_date

    @property
    def n_days(self) -> int:
        return len(next(iter(self.per_plant.values())))

    def plant_ids(self) -> list[str]:
        return sorted(self.per_plant)

    def rate_matrix(self) -> tuple[list[str], np.ndarray]:
        """(plant ids, plants x days array of per-capita rates, NaN = missing)."""
        ids = self.plant_ids()
        return ids, np.vstack([self.per_capita[p].values for p in ids])

    def excretor_matrix(self) -> tuple[list[str], np.ndarray]:
        ids = self.plant_ids()
        return ids, np.vstack([self.per_plant[p].values for p in ids])


def virus_load(concentration, inflow, cfg: ExcretionConfig = ExcretionConfig()):
    """Viral load in RNA copies/day from copies/ml and m3/day."""
    c = np.asarray(concentration, dtype=float)
    i = np.asarray(inflow, dtype=float)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(i))):
        raise ValueError("non-finite concentration or inflow")
    if np.any(c < 0):
        raise ValueError("negative concentration")
    if np.any(i <= 0):
        raise ValueError("non-positive inflow")
    out = c * i * cfg.ml_to_day_factor
    return float(out) if out.ndim == 0 else out


def fictitious_excretors(
    concentration,
    inflow,
    cfg: ExcretionConfig = ExcretionConfig(),
    return_virus_load: bool = False,
):
    """Number of fictitious excretors implied by one measurement.

    With ``return_virus_load`` the (excretors, virus load) pair is
    returned. Accepts scalars or arrays.
    """
    v = virus_load(concentration, inflow, cfg)
    e = v / cfg.shedding_per_person
    if return_virus_load:
        return e, v
    return e


def per_capita_rate(excretors, residents):
    """Fictitious excretors per 100,000 residents."""
    r = np.asarray(residents, dtype=float)
    if np.any(r <= 0):
        raise ValueError("residents must be positive")
    out = 1e5 * np.asarray(excretors, dtype=float) / r
    return float(out) if out.ndim == 0 else out


def interpolate_daily(samples: list[tuple[dt.date, float]], label: str = "") -> DailySeries:
    """Linear interpolation of dated samples onto a daily grid.

    Same-date duplicates are averaged first. The grid runs from the
    first to the last sample date only; a single distinct date yields a
    length-1 series.
    """
    if not samples:
        raise ValueError("no samples to interpolate")
    by_date: dict[dt.date, list[float]] = {}
    for day, value in samples:
        by_date.setdefault(day, []).append(float(value))
    days = sorted(by_date)
    means = [sum(by_date[d]) / len(by_date[d]) for d in days]

    start, end = days[0], days[-1]
    x = np.array([(d - start).days for d in days], dtype=float)
    grid = np.arange((end - start).days + 1, dtype=float)
    values = np.interp(grid, x, np.asarray(means))
    return DailySeries(start, values, label)


def build_excretors_panel(ds: PanelDataset, cfg: ExcretionConfig = ExcretionConfig()) -> ExcretorsPanel:
    """Per-plant excretor and per-capita series aligned to a common grid.

    The grid spans the union of all plants' sample spans; days outside a
    plant's own span are NaN (missing), never extrapolated.
    """
    residents = {p.plant_id: p.residents for p in ds.plants}
    raw: dict[str, DailySeries] = {}
    for pid in ds.plant_ids():
        rows = ds.samples_of(pid)
        if not rows:
            raise ValueError(f"plant {pid} has no samples")
        pts = [(s.date, fictitious_excretors(s.concentration, s.inflow, cfg)) for s in rows]
        raw[pid] = interpolate_daily(pts, label=pid)

    grid_start = min(s.start_date for s in raw.values())
    grid_end = max(s.end_date for s in raw.values())
    n = (grid_end - grid_start).days + 1

    per_plant: dict[str, DailySeries] = {}
    per_capita: dict[str, DailySeries] = {}
    for pid, s in raw.items():
        padded = np.full(n, np.nan)
        i = (s.start_date - grid_start).days
        padded[i : i + len(s)] = s.values
        per_plant[pid] = DailySeries(grid_start, padded, label=pid)
        per_capita[pid] = DailySeries(grid_start, 1e5 * padded / residents[pid], label=pid)
    return ExcretorsPanel(per_plant, per_capita, residents)


def export_excretors_csv(panel: ExcretorsPanel, path: str | Path) -> None:
    """Tidy export (plant_id, date, excretors, rate_per_100k); missing days skipped."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["plant_id", "date", "excretors", "rate_per_100k"])
        for pid in panel.plant_ids():
            e = panel.per_plant[pid]
            r = panel.per_capita[pid]
            for i, day in enumerate(e.dates()):
                if np.isnan(e.values[i]):
                    continue
                w.writerow([pid, day.isoformat(), repr(float(e.values[i])), repr(float(r.values[i]))])
