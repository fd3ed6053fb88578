"""Command-line front end.

Subcommands: simulate, validate, aggregate, scenarios, influence,
bootstrap-ci, monitor, fit-count-model. Every run writes its CSV/JSON
artifacts plus a manifest (resolved configuration and library versions)
into the output directory, so seeded runs are reproducible
artifact-for-artifact.

Exit codes: 0 ok, 1 usage error, 2 data or numeric error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .aggregation import (
    METHOD1,
    METHOD2,
    AggregationConfig,
    aggregate,
    iqr_band,
    normalize_curve,
    read_curve_csv,
    write_curve_csv,
)
from .charts import (
    CusumConfig,
    PccConfig,
    ShewhartConfig,
    calibrate_pcc_alpha,
    cusum_run,
    pcc_run,
    residual_shewhart_run,
    shewhart_run,
    write_chart_csv,
)
from .count_model import IngarchSpec, fit_ingarch_qcml
from .dissimilarity import MEASURES
from .excretion import ExcretionConfig, build_excretors_panel
from .ingest import parse_panel_csv, validate_panel, write_panel_csv
from .scenarios import (
    rank_scenarios,
    sampling_scenario_grid,
    sewer_scenario_grid,
    write_influence_csv,
    write_ranking_csv,
    wwtp_influence,
)
from .synth import EpidemicWave, SynthConfig, generate_panel
from .uncertainty import (
    BootstrapConfig,
    bootstrap_percentile_ci,
    method2_pointwise_interval,
    write_interval_csv,
)

OUTPUT_DIR_ENV = "WWMONITOR_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        raise UsageError(f"bad date {text!r}: {exc}") from None


def _order(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"order must be p,d,q; got {text!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _lags(text: str) -> tuple[int, ...]:
    if not text.strip():
        return ()
    return tuple(int(p) for p in text.split(","))


def _waves(text: str) -> tuple[EpidemicWave, ...]:
    waves = []
    for chunk in text.split(","):
        try:
            day, height, width = chunk.split(":")
            waves.append(EpidemicWave(_date(day), float(height), float(width)))
        except (ValueError, UsageError) as exc:
            raise UsageError(f"bad wave spec {chunk!r} (want DATE:HEIGHT:WIDTH): {exc}") from None
    return tuple(waves)


def _span(text: str) -> tuple[dt.date, dt.date]:
    try:
        a, b = text.split(":")
    except ValueError:
        raise UsageError(f"span must be START:END, got {text!r}") from None
    return _date(a), _date(b)


def _method(text: str) -> str:
    m = {"1": METHOD1, "2": METHOD2, METHOD1: METHOD1, METHOD2: METHOD2}.get(text)
    if m is None:
        raise UsageError(f"method must be 1 or 2, got {text!r}")
    return m


def _colmap(pairs: list[str] | None) -> dict[str, str]:
    out: dict[str, str] = {}
    for chunk in pairs or []:
        for pair in chunk.split(","):
            if "=" not in pair:
                raise UsageError(f"--col wants CANONICAL=ACTUAL[,...], got {pair!r}")
            canonical, actual = pair.split("=", 1)
            out[canonical.strip()] = actual.strip()
    return out


def _load_config(path: str) -> list[str]:
    """Flat key-value config file, returned as pseudo-flags (flags win)."""
    extra: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "config":
            raise UsageError(f"{path}:{lineno}: config files cannot nest")
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                extra.append(flag)
        else:
            extra.extend([flag, value])
    return extra


def build_parser() -> _Parser:
    parser = _Parser(prog="wwmonitor", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--output-dir", default=os.environ.get(OUTPUT_DIR_ENV, "."),
                       help="artifact directory (env %s)" % OUTPUT_DIR_ENV)
        p.add_argument("--config", default=None, help="flat key=value config file; flags win")
        p.add_argument("--plot", action="store_true", help="also emit SVG figures")

    def reads_panel(p: _Parser) -> None:
        p.add_argument("--input", required=True, help="panel CSV")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--col", action="append", metavar="CANONICAL=ACTUAL[,...]",
                       help="column-name mapping; repeatable or comma-separated")
        p.add_argument("--shedding", type=float, default=None,
                       help="viral shedding per person and day (override)")

    p = sub.add_parser("simulate", help="generate a synthetic panel CSV")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-plants", type=int, default=48)
    p.add_argument("--weeks", type=int, default=103)
    p.add_argument("--start-date", type=_date, default=dt.date(2023, 1, 19))
    p.add_argument("--noise-sd", type=float, default=0.2, help="lognormal measurement noise")
    p.add_argument("--plant-sd", type=float, default=0.25, help="lognormal plant-level spread")
    p.add_argument("--baseline", type=float, default=5.0)
    p.add_argument("--waves", type=_waves, default=None, metavar="DATE:HEIGHT:WIDTH[,...]")

    p = sub.add_parser("validate", help="report dataset invariant violations")
    common(p)
    reads_panel(p)

    p = sub.add_parser("aggregate", help="build a national curve")
    common(p)
    reads_panel(p)
    p.add_argument("--method", type=_method, default=METHOD1)
    p.add_argument("--quantile-level", type=float, default=0.5)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--iqr-band", action="store_true", help="also write the quartile band")

    p = sub.add_parser("scenarios", help="rank reduced designs against the reference")
    common(p)
    reads_panel(p)
    p.add_argument("--grid", choices=("sampling", "sewer"), default="sampling")
    p.add_argument("--method", type=_method, default=METHOD1)
    p.add_argument("--measures", default="l2,corr,crosscorr")
    p.add_argument("--sort-by", default=None)

    p = sub.add_parser("influence", help="leave-one-out plant influence")
    common(p)
    reads_panel(p)
    p.add_argument("--measure", choices=MEASURES, default="corr")
    p.add_argument("--method", type=_method, default=METHOD1)
    p.add_argument("--normalize", action="store_true", help="divide by catchment residents")
    p.add_argument("--enable-method2", action="store_true",
                   help="allow the method-2 extension (not part of the standard procedure)")

    p = sub.add_parser("bootstrap-ci", help="pointwise interval for a national curve")
    common(p)
    reads_panel(p)
    p.add_argument("--method", type=_method, default=METHOD1)
    p.add_argument("--pointwise", action="store_true",
                   help="per-day percentile interval across plants instead of the bootstrap")
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", type=_order, default=(1, 0, 3))
    p.add_argument("--quantile-level", type=float, default=0.5)

    p = sub.add_parser("monitor", help="run a control chart over a curve CSV")
    common(p)
    p.add_argument("--input", required=True, help="curve CSV (from `aggregate`)")
    p.add_argument("--chart", choices=("cusum", "shewhart", "residual-shewhart", "pcc"), required=True)
    p.add_argument("--phase1", type=_span, default=None, metavar="START:END",
                   help="in-control span (inclusive dates) used to calibrate the chart")
    p.add_argument("--mu0", type=float, default=None, help="in-control mean override")
    p.add_argument("--sigma", type=float, default=None, help="in-control sd override")
    p.add_argument("--k", type=float, default=0.5)
    p.add_argument("--h", type=float, default=4.5)
    p.add_argument("--L", type=float, default=3.0)
    p.add_argument("--order", type=_order, default=(1, 0, 3))
    p.add_argument("--alpha", type=float, default=None,
                   help="PCC false-alarm rate; default matches the CUSUM in-control ARL")
    p.add_argument("--pcc-train", type=int, default=2)

    p = sub.add_parser("fit-count-model", help="fit the count model to a rounded curve")
    common(p)
    p.add_argument("--input", required=True, help="curve CSV (from `aggregate`)")
    p.add_argument("--obs-lags", type=_lags, default=(1,))
    p.add_argument("--mean-lags", type=_lags, default=(2, 3, 4))

    return parser


def _write_manifest(args: argparse.Namespace, outdir: Path) -> None:
    def clean(v):
        if isinstance(v, dt.date):
            return v.isoformat()
        if isinstance(v, tuple):
            return [clean(x) for x in v]
        if isinstance(v, EpidemicWave):
            return {"peak_date": v.peak_date.isoformat(), "peak_rate": v.peak_rate, "width_days": v.width_days}
        return v

    manifest = {
        "command": args.command,
        "config": {k: clean(v) for k, v in sorted(vars(args).items()) if k != "command"},
        "versions": {
            "wwmonitor": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    path = outdir / f"{args.command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_panel(args: argparse.Namespace):
    return parse_panel_csv(args.input, schema=_colmap(args.col), delimiter=args.delimiter)


def _excretion_cfg(args: argparse.Namespace) -> ExcretionConfig:
    if getattr(args, "shedding", None):
        return ExcretionConfig(shedding_per_person=args.shedding)
    return ExcretionConfig()


def _cmd_simulate(args, outdir: Path) -> None:
    kwargs = dict(
        n_plants=args.n_plants,
        n_weeks=args.weeks,
        start_date=args.start_date,
        noise_sd_log=args.noise_sd,
        plant_sd_log=args.plant_sd,
        baseline_rate=args.baseline,
        seed=args.seed,
    )
    if args.waves is not None:
        kwargs["waves"] = args.waves
    ds = generate_panel(SynthConfig(**kwargs))
    write_panel_csv(ds, outdir / "panel.csv")
    print(f"wrote {outdir / 'panel.csv'} ({len(ds.samples)} samples, {len(ds.plants)} plants)")


def _cmd_validate(args, outdir: Path) -> None:
    findings = validate_panel(_read_panel(args))
    path = outdir / "findings.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["code", "plant_id", "date", "message"])
        for f in findings:
            w.writerow([f.code, f.plant_id or "", f.date.isoformat() if f.date else "", f.message])
    print(f"{len(findings)} finding(s); wrote {path}")


def _cmd_aggregate(args, outdir: Path) -> None:
    panel = build_excretors_panel(_read_panel(args), _excretion_cfg(args))
    cfg = AggregationConfig(method=args.method, quantile_level=args.quantile_level)
    curve = aggregate(panel, cfg)
    if args.normalize:
        curve = normalize_curve(curve)
    write_curve_csv(curve, outdir / "curve.csv")
    band = None
    if args.iqr_band:
        band = iqr_band(panel)
        lo, hi = band
        with (outdir / "band.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["date", "p25", "p75"])
            for i, day in enumerate(lo.dates()):
                fmt = lambda v: "" if np.isnan(v) else repr(float(v))
                w.writerow([day.isoformat(), fmt(lo.values[i]), fmt(hi.values[i])])
    if args.plot:
        from . import plots

        plots.curve_plot([(curve.method, curve.series)], outdir / "curve.svg",
                         band=band, title="national curve")
    print(f"wrote {outdir / 'curve.csv'} ({len(curve.series)} days)")


def _cmd_scenarios(args, outdir: Path) -> None:
    measures = [m.strip() for m in args.measures.split(",") if m.strip()]
    for m in measures:
        if m not in MEASURES:
            raise UsageError(f"unknown measure {m!r}")
    scenarios = sampling_scenario_grid() if args.grid == "sampling" else sewer_scenario_grid()
    results = rank_scenarios(
        _read_panel(args), scenarios, method=args.method, measures=measures,
        sort_by=args.sort_by, exc_cfg=_excretion_cfg(args),
    )
    write_ranking_csv(results, measures, outdir / "scenarios.csv")
    if args.plot:
        from . import plots

        key = args.sort_by or measures[0]
        plots.bar_plot(
            [r.scenario_id for r in results],
            [r.dissimilarity_by_measure[key] for r in results],
            outdir / "scenarios.svg",
            title=f"{args.grid} scenarios vs reference", ylabel=key,
        )
    print(f"wrote {outdir / 'scenarios.csv'} ({len(results)} scenarios)")


def _cmd_influence(args, outdir: Path) -> None:
    influence = wwtp_influence(
        _read_panel(args), measure=args.measure, method=args.method,
        normalize=args.normalize, exc_cfg=_excretion_cfg(args),
        enable_method2_extension=args.enable_method2,
    )
    write_influence_csv(influence, outdir / "influence.csv")
    if args.plot:
        from . import plots

        ids = sorted(influence)
        plots.bar_plot(ids, [influence[i] for i in ids], outdir / "influence.svg",
                       title="plant influence on the national curve", ylabel=args.measure)
    print(f"wrote {outdir / 'influence.csv'} ({len(influence)} plants)")


def _cmd_bootstrap_ci(args, outdir: Path) -> None:
    panel = build_excretors_panel(_read_panel(args), _excretion_cfg(args))
    cfg = AggregationConfig(method=args.method, quantile_level=args.quantile_level)
    curve = aggregate(panel, cfg)
    if args.pointwise:
        interval = method2_pointwise_interval(panel, args.alpha)
        center = curve.series
    else:
        bcfg = BootstrapConfig(replications=args.replications, alpha=args.alpha,
                               seed=args.seed, model_order=args.order)
        interval = bootstrap_percentile_ci(curve, bcfg)
        center = curve.series
    write_interval_csv(interval, center, outdir / "interval.csv")
    if args.plot:
        from . import plots

        plots.ribbon_plot(center, interval.lower, interval.upper, outdir / "interval.svg",
                          title=f"{int(interval.level * 100)}% pointwise interval")
    print(f"wrote {outdir / 'interval.csv'}")


def _cmd_monitor(args, outdir: Path) -> None:
    if args.phase1 is None:
        if args.chart in ("residual-shewhart", "pcc"):
            raise UsageError(f"--chart {args.chart} requires --phase1")
        if args.mu0 is None or args.sigma is None:
            raise UsageError("without --phase1, --mu0 and --sigma are required")
    curve = read_curve_csv(args.input)
    series = curve.series
    values = series.values
    dates = tuple(series.dates())

    if args.phase1 is not None:
        ph_start, ph_end = args.phase1
        i0, i1 = series.index_of(ph_start), series.index_of(ph_end)
        if i1 < i0:
            raise UsageError("--phase1 end precedes start")
        phase = values[i0 : i1 + 1]
        if np.isnan(phase).any():
            raise ValueError("phase-1 span contains missing days")
        mu0 = args.mu0 if args.mu0 is not None else float(phase.mean())
        sigma = args.sigma if args.sigma is not None else float(phase.std(ddof=1))
        monitored = values[i1 + 1 :]
        monitored_dates = dates[i1 + 1 :]
        boundary = i1 + 1
    else:
        mu0, sigma = args.mu0, args.sigma
        phase = values[:0]
        monitored = values
        monitored_dates = dates
        boundary = 0

    if args.chart == "cusum":
        run = cusum_run(monitored, CusumConfig(mu0=mu0, sigma=sigma, k=args.k, h=args.h), monitored_dates)
    elif args.chart == "shewhart":
        run = shewhart_run(monitored, ShewhartConfig(mu=mu0, sigma=sigma, L=args.L), monitored_dates)
    elif args.chart == "residual-shewhart":
        run = residual_shewhart_run(values, args.order, (i0, i1 + 1), L=args.L, dates=dates)
    else:  # pcc
        alpha = args.alpha if args.alpha is not None else calibrate_pcc_alpha(CusumConfig(0.0, 1.0, args.k, args.h))
        cfg = PccConfig.from_historical(phase, alpha=alpha, n_train=args.pcc_train)
        run = pcc_run(monitored, cfg, monitored_dates)

    write_chart_csv(run, outdir / "chart.csv")
    if args.plot:
        from . import plots

        plots.chart_plot(run, outdir / "chart.svg", title=f"{args.chart} chart",
                         phase_boundary_index=boundary if args.chart == "residual-shewhart" else None)
    n_alarms = int(run.signal.sum())
    print(f"wrote {outdir / 'chart.csv'} ({n_alarms} alarm(s), first at index {run.first_alarm_index})")


def _cmd_fit_count_model(args, outdir: Path) -> None:
    curve = read_curve_csv(args.input)
    values = curve.series.values
    if np.isnan(values).any():
        raise ValueError("curve has missing days; cannot fit the count model")
    y = np.round(values).astype(np.int64)
    spec = IngarchSpec(past_obs_lags=args.obs_lags, past_mean_lags=args.mean_lags)
    fit = fit_ingarch_qcml(y, spec)

    payload = {
        "intercept": fit.intercept,
        "obs_lags": list(spec.past_obs_lags),
        "obs_coeffs": list(fit.obs_coeffs),
        "mean_lags": list(spec.past_mean_lags),
        "mean_coeffs": list(fit.mean_coeffs),
        "dispersion": fit.dispersion,
        "loglik": fit.loglik,
        "flags": list(fit.flags),
    }
    (outdir / "count_fit.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    with (outdir / "count_fit.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "observed", "fitted"])
        for i, day in enumerate(curve.series.dates()):
            w.writerow([day.isoformat(), int(y[i]), repr(float(fit.lambda_path[i]))])
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        from .plots import _save

        fig, ax = plt.subplots(figsize=(10, 4))
        ax.scatter(curve.series.dates(), y, s=8, color="0.6", label="observed")
        ax.plot(curve.series.dates(), fit.lambda_path, color="tab:red", lw=1.2, label="fitted")
        ax.legend(loc="best", fontsize=8)
        fig.autofmt_xdate()
        _save(fig, outdir / "count_fit.svg")
    print(f"wrote {outdir / 'count_fit.json'}")


_HANDLERS = {
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "aggregate": _cmd_aggregate,
    "scenarios": _cmd_scenarios,
    "influence": _cmd_influence,
    "bootstrap-ci": _cmd_bootstrap_ci,
    "monitor": _cmd_monitor,
    "fit-count-model": _cmd_fit_count_model,
}


def run_command(argv: list[str]) -> int:
    """Parse and execute one CLI invocation; returns the exit status."""
    parser = build_parser()
    try:
        if "--config" in argv:
            i = argv.index("--config")
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file argument")
            # config entries become flags right after the subcommand, so
            # explicitly passed flags override them
            extra = _load_config(argv[i + 1])
            argv = [argv[0]] + extra + argv[1:]
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        outdir = Path(args.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        _HANDLERS[args.command](args, outdir)
        _write_manifest(args, outdir)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # data or numeric failure: exit 2, name the module
        module = type(exc).__module__.rsplit(".", 1)[-1]
        print(f"error [{module}]: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        return run_command(list(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
