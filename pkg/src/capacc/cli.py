"""Command-line front end: fixtures, trend fitting, sampling, UC runs and accreditation studies.

Configuration precedence (lowest first): built-in defaults, the JSON config
file (``--config`` or ``$CAPACC_CONFIG``), then command-line flags.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .accreditation import (COMPARISON_COLUMNS, PortfolioSpec, VariantCache, compute_li_marginal,
                            compute_traced, write_comparison_csv)
from .climate import (HistoricalArchive, ScenarioSet, TrendModel, fit_trend_model, ingest_archive,
                      sample_scenarios)
from .errors import (CapaccError, ExportError, FitError, IngestionError, InputError, ModelBuildError,
                     NonBracketableError, SolverError, StructuralError, ValidationError)
from .fixtures import FixtureSpec, generate_archive, make_system, write_archive
from .grid import PowerSystem, build_ptdf, load_system, save_system, validate_system
from .milp import SolverOptions, export_model
from .reliability import LolhEvaluator, compute_lolh, find_load_adjustment
from .uc import (CommitmentState, UcParams, build_uc_model, make_window, month_inputs,
                 solve_rolling_horizon, window_starts)

log = logging.getLogger("capacc")

ENV_CONFIG = "CAPACC_CONFIG"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_SOLVER = 4
EXIT_NONBRACKETABLE = 5
EXIT_FIT = 6
EXIT_MODEL = 7

SENSITIVITY_PARAMS = ("beta_tau", "beta_hurr", "line_capacity_scale")


class ConfigError(CapaccError):
    pass


@dataclass
class StudyConfig:
    system: str | None = None
    weather: str | None = None
    load: str | None = None
    hurricanes: str | None = None
    trends: str | None = None
    out: str = "out"
    month: int = 7
    year: int | None = None  # evaluation year; defaults to the year after the archive
    samples: int = 100
    seed: int = 0
    target_lolh: float = 0.2
    epsilon_la: float = 1.0
    voll: float = 10_000.0
    curtail_multiplier: float = 10.0
    solver: str = "bundled"
    engine: str = "highs"
    time_limit: float = 600.0
    mip_gap_rel: float = 0.0
    threads: int = 1
    accredit: list[str] | None = None  # resource ids; default all solar/wind/storage
    beta_tau: float | list[float] | None = None
    beta_hurr: float | None = None
    buff: float | None = None
    per_scenario: bool = False
    la: float = 0.0

    def validate(self) -> None:
        if not 1 <= int(self.month) <= 12:
            raise ConfigError(f"month must be in 1..12, got {self.month}")
        if int(self.samples) < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if not float(self.target_lolh) > 0:
            raise ConfigError(f"target LOLH must be > 0, got {self.target_lolh}")
        if not float(self.epsilon_la) > 0:
            raise ConfigError(f"epsilon_la must be > 0, got {self.epsilon_la}")
        if self.solver not in ("bundled", "export"):
            raise ConfigError(f"--solver must be bundled or export, got {self.solver}")
        if self.engine not in ("highs", "bnb"):
            raise ConfigError(f"engine must be highs or bnb, got {self.engine}")
        if isinstance(self.beta_tau, list) and len(self.beta_tau) != 12:
            raise ConfigError("beta_tau override must be one value or 12 monthly values")

    def digest(self) -> str:
        """Hash of every setting that can change results; input files enter by content."""
        d = asdict(self)
        for k in ("out", "threads"):
            d.pop(k)
        for k in _PATH_KEYS[:-1]:
            if d[k] is not None and Path(d[k]).is_file():
                d[k] = hashlib.sha256(Path(d[k]).read_bytes()).hexdigest()
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def solver_options(self, export_path: str | None = None) -> SolverOptions:
        return SolverOptions(mode=self.solver, engine=self.engine, time_limit=self.time_limit,
                             mip_gap_rel=self.mip_gap_rel, export_path=export_path)

    def uc_params(self) -> UcParams:
        return UcParams(voll=self.voll, curtail_multiplier=self.curtail_multiplier)


_PATH_KEYS = ("system", "weather", "load", "hurricanes", "trends", "out")


def load_config(path: str | Path | None) -> StudyConfig:
    cfg = StudyConfig()
    if path is None:
        return cfg
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: config file not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    known = {f.name for f in fields(StudyConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    for k in _PATH_KEYS:
        if data.get(k) is not None and not Path(data[k]).is_absolute():
            data[k] = str(path.parent / data[k])
    return replace(cfg, **data)


def _override(cfg: StudyConfig, args: argparse.Namespace) -> StudyConfig:
    upd = {}
    for f in fields(StudyConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            upd[f.name] = v
    cfg = replace(cfg, **upd)
    cfg.validate()
    return cfg


def _need(cfg: StudyConfig, *keys: str) -> None:
    for k in keys:
        v = getattr(cfg, k)
        if v is None:
            raise ConfigError(f"missing required setting '{k}' (config file or --{k})")
        if not Path(v).exists():
            raise IngestionError("file not found", v)


# --------------------------------------------------------------------------
# shared stages


def _system(cfg: StudyConfig) -> PowerSystem:
    _need(cfg, "system")
    try:
        system = load_system(cfg.system)
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"malformed system file ({exc})", cfg.system) from exc
    problems = validate_system(system)
    if problems:
        raise ValidationError(f"{cfg.system}: " + "; ".join(problems))
    return system


def _archive(cfg: StudyConfig) -> HistoricalArchive:
    _need(cfg, "weather", "load")
    if cfg.hurricanes is not None:
        _need(cfg, "hurricanes")
    return ingest_archive(cfg.weather, cfg.load, cfg.hurricanes)


def _apply_overrides(trend: TrendModel, cfg: StudyConfig) -> TrendModel:
    if cfg.beta_tau is not None:
        bt = np.broadcast_to(np.asarray(cfg.beta_tau, dtype=float), (12,)).copy()
        trend = replace(trend, beta_tau=bt)
    if cfg.beta_hurr is not None:
        trend = replace(trend, beta_hurr=float(cfg.beta_hurr))
    if cfg.buff is not None:
        trend = replace(trend, buff=float(cfg.buff))
    return trend


def _trend(cfg: StudyConfig, archive: HistoricalArchive) -> TrendModel:
    if cfg.trends is not None and Path(cfg.trends).exists():
        trend = TrendModel.load(cfg.trends)
    else:
        trend = fit_trend_model(archive)
    return _apply_overrides(trend, cfg)


def _scenarios(cfg: StudyConfig, archive=None, trend=None) -> ScenarioSet:
    archive = archive if archive is not None else _archive(cfg)
    trend = trend if trend is not None else _trend(cfg, archive)
    year = cfg.year if cfg.year is not None else archive.last_year + 1
    return sample_scenarios(archive, trend, int(cfg.month), int(year), int(cfg.samples), int(cfg.seed))


def _portfolio(cfg: StudyConfig, system: PowerSystem) -> PortfolioSpec:
    try:
        return PortfolioSpec.from_system(system, cfg.accredit)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _provenance(cfg: StudyConfig) -> dict:
    return {"config_hash": cfg.digest(), "seed": int(cfg.seed), "version": f"capacc {__version__}"}


def _out(cfg: StudyConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _run_info(out: Path, cfg: StudyConfig, command: str, started: float) -> None:
    _write_json(out / "run_info.json", {
        "command": command,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "wall_seconds": round(time.monotonic() - started, 3),
        "threads": cfg.threads,
        **_provenance(cfg),
    })


def _csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _num(x) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# commands


def cmd_make_fixture(args, cfg: StudyConfig) -> int:
    spec = FixtureSpec(
        n_buses=args.buses, line_density=args.line_density, n_thermal=args.thermal, n_solar=args.solar,
        n_wind=args.wind, n_storage=args.storage, peak_load=args.peak_load, congestion=args.congestion,
        congestion_capacity=args.congestion_capacity, first_year=args.first_year, n_years=args.years,
        temp_drift=args.drift, storm_rate=args.storm_rate, storm_trend=args.storm_trend,
        seed=cfg.seed if args.seed is not None else 1,
    )
    out = _out(cfg)
    system, ids = make_system(spec)
    save_system(system, out / "system.json")
    paths = write_archive(generate_archive(spec), out)
    study = {
        "system": "system.json",
        "weather": paths["weather"].name,
        "load": paths["load"].name,
        "hurricanes": paths["hurricanes"].name,
        "out": "results",
        "month": cfg.month,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "accredit": ids,
    }
    _write_json(out / "study.json", study)
    _write_json(out / "fixture.json", {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()})
    print(f"fixture written to {out} (resources to accredit: {', '.join(ids)})")
    return EXIT_OK


def cmd_fit_trends(args, cfg: StudyConfig) -> int:
    archive = _archive(cfg)
    trend = _apply_overrides(fit_trend_model(archive), cfg)
    out = _out(cfg)
    path = out / "trends.json"
    trend.save(path)
    reg = trend.load_regression
    print(f"trends written to {path}: mean beta_tau {np.mean(trend.beta_tau):.6g} degC/yr, "
          f"beta_hurr {trend.beta_hurr:.6g} events/yr, breakpoint {reg.breakpoint:g} degC")
    return EXIT_OK


def cmd_sample(args, cfg: StudyConfig) -> int:
    ss = _scenarios(cfg)
    out = _out(cfg)
    ss.save(out / "scenarios.npz")
    rows = [[k, s.source_year, s.shift_days, _num(s.demand.max()), _num(s.demand.mean()),
             int(s.hurricane.sum()), s.clamped_hours] for k, s in enumerate(ss)]
    _csv(out / "scenarios.csv", ["scenario", "source_year", "shift_days", "peak_demand_mw",
                                 "mean_demand_mw", "hurricane_hours", "clamped_hours"], rows)
    print(f"{len(ss)} scenarios for month {ss.month}/{ss.eval_year} written to {out}")
    return EXIT_OK


def cmd_uc_run(args, cfg: StudyConfig) -> int:
    system = _system(cfg)
    ss = _scenarios(cfg)
    out = _out(cfg)
    if cfg.solver == "export":
        return _export_first_window(system, ss, cfg, out / "uc_window_0.lp")
    ptdf = build_ptdf(system)
    opts = cfg.solver_options()
    summary, hourly = [], []
    for k, sc in enumerate(ss):
        sol = solve_rolling_horizon(system, ptdf, sc, cfg.la, opts, cfg.uc_params())
        ratings = month_inputs(system, sc).ratings
        loading = float(np.max(np.abs(sol.flows) / ratings)) if len(system.lines) else 0.0
        summary.append([k, _num(sol.objective), int(np.count_nonzero(sol.shed > 1e-3)),
                        _num(sol.shed.sum()), _num(loading)])
        dem = np.maximum(sc.demand + cfg.la, 0.0)
        for t in range(sol.hours):
            hourly.append([k, t, _num(dem[t]), _num(sol.thermal_g[:, t].sum()), _num(sol.solar_g[:, t].sum()),
                           _num(sol.wind_g[:, t].sum()), _num(sol.charge[:, t].sum()),
                           _num(sol.discharge[:, t].sum()), _num(sol.shed[t])])
    _csv(out / "uc_summary.csv", ["scenario", "objective", "shed_hours", "shed_mwh", "max_line_loading"], summary)
    _csv(out / "uc_hourly.csv", ["scenario", "hour", "demand_mw", "thermal_mw", "solar_mw", "wind_mw",
                                 "charge_mw", "discharge_mw", "shed_mw"], hourly)
    print(f"UC solved for {len(ss)} scenarios; summary in {out / 'uc_summary.csv'}")
    return EXIT_OK


def cmd_lole(args, cfg: StudyConfig) -> int:
    system = _system(cfg)
    ss = _scenarios(cfg)
    out = _out(cfg)
    ev = LolhEvaluator(system, ss, cfg.solver_options(), cfg.uc_params(), threads=cfg.threads)
    payload = {"provenance": _provenance(cfg), "month": ss.month, "eval_year": ss.eval_year}
    if args.find_la:
        res = find_load_adjustment(system, ss, cfg.target_lolh, cfg.epsilon_la, evaluator=ev,
                                   per_scenario=cfg.per_scenario, label="system")
        res.write_trace(out / "la_trace.csv")
        payload.update({"la_mw": res.la, "la_min_mw": res.la_min, "la_max_mw": res.la_max,
                        "iterations": res.iterations, "converged": res.converged,
                        "target_lolh": cfg.target_lolh})
        print(f"LA = {res.la:.4f} MW after {res.iterations} probes (bracket {res.la_min:.4f} .. {res.la_max:.4f})")
    else:
        r = ev.result(cfg.la)
        payload.update({"la_mw": cfg.la, "mean_lolh": r.mean, "shed_hours": [int(c) for c in r.counts],
                        "shed_tolerance_mw": r.shed_tolerance})
        print(f"LOLH at LA = {cfg.la:g} MW: {r.mean:.4f} h/month over {len(ss)} scenarios")
    _write_json(out / "lole.json", payload)
    return EXIT_OK


def _accredit_once(cfg: StudyConfig, system: PowerSystem, ss: ScenarioSet, cache: VariantCache):
    spec = _portfolio(cfg, system)
    kw = dict(target_lolh=cfg.target_lolh, epsilon_la=cfg.epsilon_la, options=cfg.solver_options(),
              params=cfg.uc_params(), threads=cfg.threads, cache=cache)
    res = compute_traced(spec, ss, per_scenario=cfg.per_scenario, **kw)
    li = compute_li_marginal(spec, ss, **kw)
    return spec, res, li


def cmd_accredit(args, cfg: StudyConfig) -> int:
    if cfg.solver == "export":
        raise ConfigError("accredit needs bundled solves; use export-lp to write models for an external solver")
    started = time.monotonic()
    system = _system(cfg)
    ss = _scenarios(cfg)
    out = _out(cfg)
    _, res, li = _accredit_once(cfg, system, ss, VariantCache())
    body = res.to_dict()
    body["li_marginal_mw"] = dict(sorted(li.items()))
    body["provenance"] = _provenance(cfg)
    _write_json(out / "results.json", body)
    res.write_csv(out / "results.csv")
    write_comparison_csv(res, out / "comparison.csv")
    tdir = out / "traces"
    tdir.mkdir(exist_ok=True)
    for label, tr in sorted(res.traces.items()):
        tr.write_trace(tdir / f"{label.replace(':', '_')}.csv")
    _run_info(out, cfg, "accredit", started)
    for r in res.resources:
        print(f"{r.id:>8} {r.kind:<8} ELCC {r.elcc_mw:9.2f} MW ({r.elcc_pct:6.2f} %)  LI {r.li_mw:9.2f} MW")
    print(f"PORT {res.port_mw:.2f} MW, PIE {res.pie_mw:.2f} MW, delta {res.delta:.4g}")
    return EXIT_OK


def cmd_sensitivity(args, cfg: StudyConfig) -> int:
    if args.param not in SENSITIVITY_PARAMS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SENSITIVITY_PARAMS)}")
    if not args.values:
        raise ConfigError("--values needs at least one number")
    started = time.monotonic()
    system = _system(cfg)
    archive = _archive(cfg)
    base_trend = _trend(cfg, archive)
    cache = VariantCache()
    rows = []
    out = _out(cfg)
    if args.param == "line_capacity_scale":
        if not args.lines:
            raise ConfigError("line_capacity_scale sweeps need --lines")
        known = {ln.id for ln in system.lines}
        bad = [i for i in args.lines if i not in known]
        if bad:
            raise ConfigError(f"unknown line ids {bad}")
        ss = _scenarios(cfg, archive, base_trend)
        _, ref, _ = _accredit_once(cfg, system, ss, cache)
        caps = {ln.id: ln.capacity for ln in system.lines}
        for v in args.values:
            scaled = system.scale_lines({i: v for i in args.lines})
            _, res, li = _accredit_once(cfg, scaled, ss, cache)
            added = sum(caps[i] * (v - 1.0) for i in args.lines)
            roc = (res.port_mw - ref.port_mw) / added if added else 0.0
            for r in res.resources:
                rows.append([args.param, _num(v), r.id, _num(r.elcc_mw), _num(li[r.id]), _num(res.port_mw), _num(roc)])
        header = ["parameter", "value", "resource", "elcc_mw", "li_mw", "port_mw", "roc"]
    else:
        for v in args.values:
            trend = replace(base_trend, beta_tau=np.full(12, float(v))) if args.param == "beta_tau" \
                else replace(base_trend, beta_hurr=float(v))
            ss = _scenarios(cfg, archive, trend)
            _, res, li = _accredit_once(cfg, system, ss, cache)
            for r in res.resources:
                rows.append([args.param, _num(v), r.id, _num(r.elcc_mw), _num(li[r.id]), _num(res.port_mw)])
        header = ["parameter", "value", "resource", "elcc_mw", "li_mw", "port_mw"]
    _csv(out / "sensitivity.csv", header, rows)
    _write_json(out / "sensitivity.json", {"provenance": _provenance(cfg), "parameter": args.param,
                                           "values": [float(v) for v in args.values]})
    _run_info(out, cfg, "sensitivity", started)
    print(f"{len(rows)} sweep rows written to {out / 'sensitivity.csv'}")
    return EXIT_OK


def _export_first_window(system, ss, cfg, path: Path, window: int = 0) -> int:
    inputs = month_inputs(system, ss[0])
    starts = window_starts(inputs.hours)
    if not 0 <= window < len(starts):
        raise ConfigError(f"window index {window} outside 0..{len(starts) - 1}")
    t0, t1, _ = starts[window]
    w = make_window(inputs, t0, t1, CommitmentState.cold_start(system), cfg.la)
    model, _ = build_uc_model(system, build_ptdf(system), w, cfg.uc_params())
    export_model(model, path)
    print(f"UC window {t0}-{t1} of scenario 0 written to {path} ({model.n_vars} variables, {model.n_rows} rows)")
    return EXIT_OK


def cmd_export_lp(args, cfg: StudyConfig) -> int:
    system = _system(cfg)
    ss = _scenarios(replace(cfg, samples=1))
    out = _out(cfg)
    return _export_first_window(system, ss, cfg, out / f"uc_window_{args.window}.lp", args.window)


# --------------------------------------------------------------------------
# parser


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _beta_tau(text: str):
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON study config (default: ${ENV_CONFIG})")
    common.add_argument("--system")
    common.add_argument("--weather")
    common.add_argument("--load")
    common.add_argument("--hurricanes")
    common.add_argument("--trends")
    common.add_argument("--month", type=int)
    common.add_argument("--year", type=int, help="evaluation year")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--target-lolh", dest="target_lolh", type=float)
    common.add_argument("--epsilon-la", dest="epsilon_la", type=float)
    common.add_argument("--voll", type=float)
    common.add_argument("--curtail-multiplier", dest="curtail_multiplier", type=float)
    common.add_argument("--solver", choices=["bundled", "export"])
    common.add_argument("--engine", choices=["highs", "bnb"])
    common.add_argument("--threads", type=int)
    common.add_argument("--out")
    common.add_argument("--beta-tau", dest="beta_tau", type=_beta_tau)
    common.add_argument("--beta-hurr", dest="beta_hurr", type=float)
    common.add_argument("--buff", type=float)
    common.add_argument("--la", type=float, help="load adjustment MW for uc-run/lole/export-lp")
    common.add_argument("--per-scenario", dest="per_scenario", action="store_true", default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="capacc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"capacc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("fit-trends", parents=[common], help="fit temperature, storm and load-temperature trends")
    sub.add_parser("sample", parents=[common], help="draw climate-adjusted monthly scenarios")
    sub.add_parser("uc-run", parents=[common], help="solve the monthly rolling-horizon UC per scenario")
    sp = sub.add_parser("lole", parents=[common], help="LOLH at a load adjustment, or the LA meeting the target")
    sp.add_argument("--find-la", action="store_true")
    sub.add_parser("accredit", parents=[common], help="Delta-method ELCC of the portfolio")
    sp = sub.add_parser("sensitivity", parents=[common], help="re-run accreditation across a parameter sweep")
    sp.add_argument("--param", required=True)
    sp.add_argument("--values", type=_floats, required=True)
    sp.add_argument("--lines", type=_ints)
    sp = sub.add_parser("make-fixture", parents=[common], help="write a synthetic system and archives")
    sp.add_argument("--buses", type=int, default=3)
    sp.add_argument("--line-density", type=float, default=1.0)
    sp.add_argument("--thermal", type=int, default=3)
    sp.add_argument("--solar", type=int, default=1)
    sp.add_argument("--wind", type=int, default=1)
    sp.add_argument("--storage", type=int, default=1)
    sp.add_argument("--peak-load", type=float, default=400.0)
    sp.add_argument("--congestion", action="store_true")
    sp.add_argument("--congestion-capacity", type=float, default=50.0)
    sp.add_argument("--first-year", type=int, default=1995)
    sp.add_argument("--years", type=int, default=12)
    sp.add_argument("--drift", type=float, default=0.05)
    sp.add_argument("--storm-rate", type=float, default=1.0)
    sp.add_argument("--storm-trend", type=float, default=0.01)
    sp = sub.add_parser("export-lp", parents=[common], help="write one UC window as an LP file")
    sp.add_argument("--window", type=int, default=0)
    return p


COMMANDS = {
    "fit-trends": cmd_fit_trends,
    "sample": cmd_sample,
    "uc-run": cmd_uc_run,
    "lole": cmd_lole,
    "accredit": cmd_accredit,
    "sensitivity": cmd_sensitivity,
    "make-fixture": cmd_make_fixture,
    "export-lp": cmd_export_lp,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, IngestionError):
        return EXIT_INGEST
    if isinstance(exc, NonBracketableError):
        return EXIT_NONBRACKETABLE
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, FitError):
        return EXIT_FIT
    if isinstance(exc, (ValidationError, StructuralError, ModelBuildError, ExportError, InputError)):
        return EXIT_MODEL
    return EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _override(load_config(args.config or os.environ.get(ENV_CONFIG)), args)
        return COMMANDS[args.command](args, cfg)
    except CapaccError as exc:
        print(f"capacc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"capacc {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
