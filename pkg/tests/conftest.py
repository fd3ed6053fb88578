import datetime as dt

import numpy as np
import pytest

from wwmonitor import PanelDataset, PlantMeta, SampleRecord, SynthConfig, generate_panel

D0 = dt.date(2023, 1, 2)  # a Monday


def make_plant(pid, residents=100_000, state="Styria", sewer="combined", initial=True):
    return PlantMeta(
        plant_id=pid,
        in_initial_program=initial,
        state=state,
        sewer_type=sewer,
        residents=residents,
    )


def make_sample(pid, date, concentration, inflow=10_000.0, lab=None):
    return SampleRecord(
        plant_id=pid,
        date=date,
        concentration=concentration,
        inflow=inflow,
        lab_sample_id=lab or f"{pid}-{date.isoformat()}",
    )


def panel_from_rates(rates_by_plant, residents_by_plant, start=D0, shedding=16e9):
    """Dataset whose per-capita pipeline rates equal the given daily values.

    rates are per 100k residents; one sample per day, so interpolation is
    the identity and the resulting panel is fully controlled.
    """
    plants, samples = [], []
    for pid, rates in rates_by_plant.items():
        residents = residents_by_plant[pid]
        plants.append(make_plant(pid, residents=residents))
        for i, rate in enumerate(rates):
            if rate is None or (isinstance(rate, float) and np.isnan(rate)):
                continue
            day = start + dt.timedelta(days=i)
            excretors = rate * residents / 1e5
            inflow = 10_000.0
            conc = excretors * shedding / (inflow * 1e6)
            samples.append(make_sample(pid, day, conc, inflow))
    return PanelDataset(tuple(plants), tuple(samples))


@pytest.fixture(scope="session")
def synth_dataset():
    """48-plant synthetic panel shared by the heavier tests."""
    return generate_panel(SynthConfig(seed=2024))


@pytest.fixture(scope="session")
def noiseless_dataset():
    return generate_panel(SynthConfig(seed=9, noise_sd_log=0.0, plant_sd_log=0.0))
