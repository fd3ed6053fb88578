"""Parse, validate and hold the raw per-plant wastewater panel.

The panel follows a 13-variable schema: plant key, initial-program flag,
federal state, sewer type, sampling date, lab sample id, virus
concentration (RNA copies/ml), inflow (m3/day), inflow temperature,
catchment residents, and three optional chemistry variables (chemical
oxygen demand, total nitrogen, ammonium-nitrogen). Chemistry variables
are ingested and preserved but consumed by no downstream computation.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

SEWER_TYPES = ("unknown", "separate", "combined", "separate_and_combined")

#: canonical column names, in schema order
CANONICAL_COLUMNS = (
    "plant_id",
    "in_initial_program",
    "state",
    "sewer_type",
    "date",
    "lab_sample_id",
    "concentration",
    "inflow",
    "temperature",
    "residents",
    "cod",
    "nitrogen",
    "ammonium_nitrogen",
)

MANDATORY_COLUMNS = (
    "plant_id",
    "in_initial_program",
    "state",
    "sewer_type",
    "date",
    "lab_sample_id",
    "concentration",
    "inflow",
    "residents",
)

_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f"}


class PanelFormatError(ValueError):
    """Raised when a panel CSV violates the schema; message names the data row."""


@dataclass(frozen=True)
class PlantMeta:
    plant_id: str
    in_initial_program: bool
    state: str
    sewer_type: str
    residents: int


@dataclass(frozen=True)
class SampleRecord:
    plant_id: str
    date: dt.date
    concentration: float
    inflow: float
    lab_sample_id: str
    temperature: float | None = None
    cod: float | None = None
    nitrogen: float | None = None
    ammonium_nitrogen: float | None = None


@dataclass(frozen=True)
class PanelDataset:
    """Immutable panel of plants and samples with its covered date span."""

    plants: tuple[PlantMeta, ...]
    samples: tuple[SampleRecord, ...]
    date_span: tuple[dt.date, dt.date] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "plants", tuple(self.plants))
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.date_span is None:
            if not self.samples:
                raise ValueError("cannot derive date_span of an empty sample set")
            days = [s.date for s in self.samples]
            object.__setattr__(self, "date_span", (min(days), max(days)))

    def plant(self, plant_id: str) -> PlantMeta:
        for p in self.plants:
            if p.plant_id == plant_id:
                return p
        raise KeyError(plant_id)

    def plant_ids(self) -> list[str]:
        return sorted(p.plant_id for p in self.plants)

    def samples_of(self, plant_id: str) -> list[SampleRecord]:
        return [s for s in self.samples if s.plant_id == plant_id]

    def restrict_plants(self, keep: set[str]) -> "PanelDataset":
        """Dataset reduced to the given plants; date_span recomputed."""
        plants = tuple(p for p in self.plants if p.plant_id in keep)
        samples = tuple(s for s in self.samples if s.plant_id in keep)
        if not plants or not samples:
            raise ValueError("plant selection is empty")
        return PanelDataset(plants, samples)

    def restrict_samples(self, keep) -> "PanelDataset":
        """Dataset reduced to samples where keep(sample) is true."""
        samples = tuple(s for s in self.samples if keep(s))
        if not samples:
            raise ValueError("sample selection is empty")
        return PanelDataset(self.plants, samples)


@dataclass(frozen=True)
class Finding:
    """One invariant violation, with plant/date context when available."""

    code: str
    message: str
    plant_id: str | None = None
    date: dt.date | None = None


def _parse_bool(raw: str, row: int, col: str) -> bool:
    v = raw.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise PanelFormatError(f"row {row}: cannot parse boolean {col}={raw!r}")


def _parse_float(raw: str, row: int, col: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise PanelFormatError(f"row {row}: cannot parse number {col}={raw!r}") from None


def _parse_date(raw: str, row: int) -> dt.date:
    # Time-of-day, if present, is discarded: the pipeline works at daily resolution.
    txt = raw.strip()
    if "T" in txt:
        txt = txt.split("T", 1)[0]
    elif " " in txt:
        txt = txt.split(" ", 1)[0]
    try:
        return dt.date.fromisoformat(txt)
    except ValueError:
        raise PanelFormatError(f"row {row}: cannot parse date {raw!r}") from None


def parse_panel_csv(
    path: str | Path,
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> PanelDataset:
    """Read a panel CSV into a PanelDataset.

    ``schema`` maps canonical column names to the file's column names;
    unmapped names default to themselves. Row numbers in error messages
    count data rows (header excluded, first data row = 1). Optional
    columns (temperature, cod, nitrogen, ammonium_nitrogen) may be
    absent entirely or blank per row.
    """
    colmap = dict(schema or {})
    for name in CANONICAL_COLUMNS:
        colmap.setdefault(name, name)

    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise PanelFormatError(f"{path}: empty file, header row required")
        header = set(reader.fieldnames)
        missing = [colmap[c] for c in MANDATORY_COLUMNS if colmap[c] not in header]
        if missing:
            raise PanelFormatError(f"{path}: missing mandatory column(s): {', '.join(missing)}")
        optional_present = {
            c: (colmap[c] in header)
            for c in ("temperature", "cod", "nitrogen", "ammonium_nitrogen")
        }

        plants: dict[str, PlantMeta] = {}
        samples: list[SampleRecord] = []
        seen: set[tuple[str, dt.date, str]] = set()
        for i, rec in enumerate(reader, start=1):
            get = lambda c: (rec.get(colmap[c]) or "").strip()
            plant_id = get("plant_id")
            if not plant_id:
                raise PanelFormatError(f"row {i}: empty plant_id")
            date = _parse_date(get("date"), i)
            concentration = _parse_float(get("concentration"), i, "concentration")
            inflow = _parse_float(get("inflow"), i, "inflow")
            if not (concentration >= 0):
                raise PanelFormatError(f"row {i}: negative concentration {concentration}")
            if not (inflow > 0):
                raise PanelFormatError(f"row {i}: non-positive inflow {inflow}")
            lab_id = get("lab_sample_id")
            key = (plant_id, date, lab_id)
            if key in seen:
                raise PanelFormatError(
                    f"row {i}: duplicate sample (plant {plant_id}, {date}, lab id {lab_id!r})"
                )
            seen.add(key)

            meta = PlantMeta(
                plant_id=plant_id,
                in_initial_program=_parse_bool(get("in_initial_program"), i, "in_initial_program"),
                state=get("state"),
                sewer_type=get("sewer_type"),
                residents=int(_parse_float(get("residents"), i, "residents")),
            )
            if meta.sewer_type not in SEWER_TYPES:
                raise PanelFormatError(f"row {i}: unknown sewer_type {meta.sewer_type!r}")
            if plant_id in plants:
                if plants[plant_id] != meta:
                    raise PanelFormatError(
                        f"row {i}: plant {plant_id} metadata differs from an earlier row"
                    )
            else:
                plants[plant_id] = meta

            def opt(c: str) -> float | None:
                if not optional_present[c]:
                    return None
                raw = get(c)
                return _parse_float(raw, i, c) if raw else None

            samples.append(
                SampleRecord(
                    plant_id=plant_id,
                    date=date,
                    concentration=concentration,
                    inflow=inflow,
                    lab_sample_id=lab_id,
                    temperature=opt("temperature"),
                    cod=opt("cod"),
                    nitrogen=opt("nitrogen"),
                    ammonium_nitrogen=opt("ammonium_nitrogen"),
                )
            )

    if not samples:
        raise PanelFormatError(f"{path}: no data rows")
    return PanelDataset(tuple(plants.values()), tuple(samples))


def write_panel_csv(ds: PanelDataset, path: str | Path, delimiter: str = ",") -> None:
    """Write a dataset back to CSV in canonical schema order."""
    meta = {p.plant_id: p for p in ds.plants}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(CANONICAL_COLUMNS)
        for s in ds.samples:
            p = meta[s.plant_id]
            w.writerow(
                [
                    p.plant_id,
                    str(p.in_initial_program).lower(),
                    p.state,
                    p.sewer_type,
                    s.date.isoformat(),
                    s.lab_sample_id,
                    repr(s.concentration),
                    repr(s.inflow),
                    "" if s.temperature is None else repr(s.temperature),
                    p.residents,
                    "" if s.cod is None else repr(s.cod),
                    "" if s.nitrogen is None else repr(s.nitrogen),
                    "" if s.ammonium_nitrogen is None else repr(s.ammonium_nitrogen),
                ]
            )


def validate_panel(ds: PanelDataset) -> list[Finding]:
    """Check every dataset invariant; returns one finding per violation.

    Empty list means the dataset is internally consistent. Findings are
    reports, not failures: callers decide whether to proceed.
    """
    findings: list[Finding] = []
    ids: dict[str, int] = {}
    for p in ds.plants:
        ids[p.plant_id] = ids.get(p.plant_id, 0) + 1
    for pid, n in sorted(ids.items()):
        if n > 1:
            findings.append(Finding("duplicate_plant", f"plant {pid} listed {n} times", pid))
    for p in ds.plants:
        if p.residents <= 0:
            findings.append(
                Finding("nonpositive_residents", f"plant {p.plant_id} has residents={p.residents}", p.plant_id)
            )
        if p.sewer_type not in SEWER_TYPES:
            findings.append(
                Finding("bad_sewer_type", f"plant {p.plant_id} has sewer_type={p.sewer_type!r}", p.plant_id)
            )

    known = set(ids)
    seen: set[tuple[str, dt.date, str]] = set()
    for s in ds.samples:
        if s.plant_id not in known:
            findings.append(
                Finding("orphan_sample", f"sample references unknown plant {s.plant_id} on {s.date}", s.plant_id, s.date)
            )
        if s.concentration < 0:
            findings.append(
                Finding("negative_concentration", f"plant {s.plant_id} on {s.date}: concentration={s.concentration}", s.plant_id, s.date)
            )
        if s.inflow <= 0:
            findings.append(
                Finding("nonpositive_inflow", f"plant {s.plant_id} on {s.date}: inflow={s.inflow}", s.plant_id, s.date)
            )
        key = (s.plant_id, s.date, s.lab_sample_id)
        if key in seen:
            findings.append(
                Finding("duplicate_sample", f"plant {s.plant_id} on {s.date}: lab id {s.lab_sample_id!r} repeated", s.plant_id, s.date)
            )
        seen.add(key)

    if ds.samples:
        lo, hi = min(s.date for s in ds.samples), max(s.date for s in ds.samples)
        if ds.date_span != (lo, hi):
            findings.append(
                Finding("date_span_mismatch", f"date_span {ds.date_span} does not equal sample extent ({lo}, {hi})")
            )
    return findings
