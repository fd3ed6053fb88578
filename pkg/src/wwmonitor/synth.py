"""Deterministic synthetic wastewater panel generator.

Stands in for the real (non-public) national dataset. A shared national
prevalence curve (sum of Gaussian epidemic waves over a baseline) is
scaled by a per-plant multiplier; concentrations are back-solved from
the excretor equation so the true per-capita curve is known exactly,
then multiplicative lognormal measurement noise is applied. Plants
sample twice weekly on fixed weekdays; metadata (state, sewer type,
initial-program flag) is assigned round-robin.

With zero noise and zero plant spread the pipeline must reproduce the
configured national curve exactly at sample dates.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .excretion import ExcretionConfig
from .ingest import SEWER_TYPES, PanelDataset, PlantMeta, SampleRecord
from .series import DailySeries

AUSTRIAN_STATES = (
    "Burgenland",
    "Carinthia",
    "Lower Austria",
    "Upper Austria",
    "Salzburg",
    "Styria",
    "Tyrol",
    "Vorarlberg",
    "Vienna",
)


@dataclass(frozen=True)
class EpidemicWave:
    peak_date: dt.date
    peak_rate: float  # fictitious excretors per 100k at the peak
    width_days: float

    def __post_init__(self):
        if not (self.peak_rate > 0 and self.width_days > 0):
            raise ValueError("peak_rate and width_days must be positive")


def _default_waves() -> tuple[EpidemicWave, ...]:
    return (
        EpidemicWave(dt.date(2023, 11, 15), 120.0, 40.0),
        EpidemicWave(dt.date(2024, 8, 1), 90.0, 55.0),
    )


@dataclass(frozen=True)
class SynthConfig:
    n_plants: int = 48
    states: tuple[str, ...] = AUSTRIAN_STATES
    residents_range: tuple[int, int] = (8_000, 1_900_000)
    waves: tuple[EpidemicWave, ...] = field(default_factory=_default_waves)
    baseline_rate: float = 5.0
    plant_sd_log: float = 0.25
    noise_sd_log: float = 0.2
    sampling_days: tuple[int, int] = (0, 3)  # Monday and Thursday
    start_date: dt.date = dt.date(2023, 1, 19)
    n_weeks: int = 103
    seed: int = 0
    excretion: ExcretionConfig = field(default_factory=ExcretionConfig)

    def __post_init__(self):
        if self.n_plants < 1:
            raise ValueError("n_plants must be >= 1")
        if not self.states:
            raise ValueError("need at least one state label")
        lo, hi = self.residents_range
        if not 0 < lo <= hi:
            raise ValueError("residents_range must be positive and ordered")
        if self.noise_sd_log < 0 or self.plant_sd_log < 0:
            raise ValueError("noise scales must be non-negative")
        if len(set(self.sampling_days)) != 2 or any(not 0 <= d <= 6 for d in self.sampling_days):
            raise ValueError("sampling_days must be two distinct weekdays")
        if self.n_weeks < 1:
            raise ValueError("n_weeks must be >= 1")

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=7 * self.n_weeks - 1)


def national_rate(cfg: SynthConfig, day: dt.date) -> float:
    """True national per-capita rate (per 100k) on a given day."""
    rate = cfg.baseline_rate
    for wave in cfg.waves:
        z = (day - wave.peak_date).days / wave.width_days
        rate += wave.peak_rate * math.exp(-0.5 * z * z)
    return rate


def truth_series(cfg: SynthConfig) -> DailySeries:
    """The configured national curve on the full daily span."""
    n = (cfg.end_date - cfg.start_date).days + 1
    values = [national_rate(cfg, cfg.start_date + dt.timedelta(days=i)) for i in range(n)]
    return DailySeries(cfg.start_date, np.array(values), label="synthetic truth")


def _sample_dates(cfg: SynthConfig) -> list[dt.date]:
    days = set(cfg.sampling_days)
    out = []
    d = cfg.start_date
    while d <= cfg.end_date:
        if d.weekday() in days:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def generate_panel(cfg: SynthConfig) -> PanelDataset:
    """Generate a panel; byte-identical output for identical configs."""
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_plants)
    dates = _sample_dates(cfg)
    width = max(2, len(str(cfg.n_plants)))
    log_lo, log_hi = (math.log(v) for v in cfg.residents_range)

    plants: list[PlantMeta] = []
    samples: list[SampleRecord] = []
    for i in range(cfg.n_plants):
        rng = np.random.default_rng(streams[i])
        pid = f"WWTP{i + 1:0{width}d}"
        residents = int(round(math.exp(rng.uniform(log_lo, log_hi))))
        multiplier = math.exp(rng.normal(0.0, cfg.plant_sd_log))
        base_inflow = residents * 0.35 * math.exp(rng.normal(0.0, 0.1))
        plants.append(
            PlantMeta(
                plant_id=pid,
                in_initial_program=(i % 2 == 0),
                state=cfg.states[i % len(cfg.states)],
                sewer_type=SEWER_TYPES[i % len(SEWER_TYPES)],
                residents=residents,
            )
        )
        for day in dates:
            rate = national_rate(cfg, day) * multiplier
            excretors = rate * residents / 1e5
            inflow = base_inflow * math.exp(rng.normal(0.0, 0.05))
            concentration = (
                excretors
                * cfg.excretion.shedding_per_person
                / (inflow * cfg.excretion.ml_to_day_factor)
            )
            concentration *= math.exp(rng.normal(0.0, cfg.noise_sd_log))
            doy = day.timetuple().tm_yday
            samples.append(
                SampleRecord(
                    plant_id=pid,
                    date=day,
                    concentration=concentration,
                    inflow=inflow,
                    lab_sample_id=f"{pid}-{day.isoformat()}",
                    temperature=12.0 + 8.0 * math.sin(2 * math.pi * (doy - 110) / 365.25) + rng.normal(0.0, 1.5),
                    cod=float(rng.lognormal(math.log(500.0), 0.15)),
                    nitrogen=float(rng.lognormal(math.log(45.0), 0.15)),
                    ammonium_nitrogen=float(rng.lognormal(math.log(28.0), 0.2)),
                )
            )
    return PanelDataset(tuple(plants), tuple(samples))
