"""Command-line entry point: ``cbscm <subcommand> ...``.

Analysis settings live in an INI file::

    [analysis]
    matches = matches.csv          ; relative to the config file
    outcome = dcb                  ; dcb | namsi_hat | avg_goals
    treated = ENG
    treatment_year = 1981
    donors = GER, ESP, NED, ITA, FRA
    lag_gap = 2
    covariates = avg_win_share, avg_draw_share, team_count
    window = 1963, 1993
    seed = 0

    [rule_schedule]
    ENG = 1981

Without a ``[rule_schedule]`` section the built-in adoption years apply;
an empty section means no league switches rules.
"""

from __future__ import annotations

import argparse
import configparser
import io
import logging
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__, _backend, artifacts, metrics, simgen
from .did import fit_did
from .inference import leave_one_out, placebo_in_space, placebo_in_time
from .league import (
    DEFAULT_ADOPTION_YEARS,
    RuleSchedule,
    build_season_tables,
    parse_matches,
    write_matches,
)
from .panel import COVARIATES, OUTCOMES, PanelDataset, PredictorSpec, build_panel, default_donors
from .scm import ScmConfig, ScmFit, fit_scm

log = logging.getLogger("cbscm")

MANIFEST = "run_manifest.json"

_ANALYSIS_KEYS = {
    "matches", "outcome", "treated", "treatment_year", "donors", "lag_gap", "covariates",
    "window", "covariate_window", "seed", "n_random_starts", "post_end", "pseudo_year",
    "did_covariates",
}


class ConfigError(ValueError):
    pass


@dataclass
class AnalysisConfig:
    matches: Path | None = None
    outcome: str = "dcb"
    treated: str = "ENG"
    treatment_year: int = 1981
    donors: tuple[str, ...] | None = None
    lag_gap: int = 2
    covariates: tuple[str, ...] = COVARIATES
    window: tuple[int, int] | None = None
    covariate_window: str = "pre"
    seed: int = 0
    n_random_starts: int = 4
    post_end: int | None = None
    pseudo_year: int | None = None
    did_covariates: tuple[str, ...] = ("avg_draw_share", "team_count")
    adoption_years: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_ADOPTION_YEARS))

    @property
    def schedule(self) -> RuleSchedule:
        return RuleSchedule(self.adoption_years)

    def predictor_spec(self) -> PredictorSpec:
        first = self.window[0] if self.window else None
        return PredictorSpec(self.lag_gap, self.covariates, first, self.covariate_window)

    def scm_config(self, donors: Sequence[str]) -> ScmConfig:
        return ScmConfig(
            self.treated,
            self.treatment_year,
            tuple(donors),
            self.predictor_spec(),
            self.post_end,
            self.seed,
            self.n_random_starts,
        )

    def resolved(self) -> dict:
        d = asdict(self)
        d["matches"] = str(self.matches) if self.matches else None
        return d


def _names(value: str) -> tuple[str, ...]:
    value = value.strip()
    if value.lower() in ("", "none"):
        return ()
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _int(section: str, key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}") from None


def load_config(path: str | Path) -> AnalysisConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # league ids are case-sensitive
    cp.read(path, encoding="utf-8")
    if "analysis" not in cp:
        raise ConfigError(f"{path}: missing [analysis] section")
    sec = cp["analysis"]
    unknown = sorted(set(sec) - _ANALYSIS_KEYS)
    if unknown:
        raise ConfigError(f"[analysis]: unknown keys {unknown}")

    cfg = AnalysisConfig()
    if "matches" in sec:
        m = Path(sec["matches"])
        cfg.matches = m if m.is_absolute() else path.parent / m
    for key in ("outcome", "treated", "covariate_window"):
        if key in sec:
            setattr(cfg, key, sec[key].strip())
    for key in ("treatment_year", "lag_gap", "seed", "n_random_starts", "post_end", "pseudo_year"):
        if key in sec:
            setattr(cfg, key, _int("analysis", key, sec[key]))
    if "donors" in sec:
        cfg.donors = _names(sec["donors"]) or None
    for key in ("covariates", "did_covariates"):
        if key in sec:
            setattr(cfg, key, _names(sec[key]))
    if "window" in sec:
        parts = _names(sec["window"])
        if len(parts) != 2:
            raise ConfigError("[analysis] window: expected 'first, last'")
        cfg.window = (_int("analysis", "window", parts[0]), _int("analysis", "window", parts[1]))
        if cfg.window[1] < cfg.window[0]:
            raise ConfigError("[analysis] window is reversed")
    if "rule_schedule" in cp:
        cfg.adoption_years = {k: _int("rule_schedule", k, v) for k, v in cp["rule_schedule"].items()}

    if cfg.outcome not in OUTCOMES:
        raise ConfigError(f"[analysis] outcome: unknown {cfg.outcome!r}; choose from {sorted(OUTCOMES)}")
    for key in ("covariates", "did_covariates"):
        bad = [c for c in getattr(cfg, key) if c not in COVARIATES]
        if bad:
            raise ConfigError(f"[analysis] {key}: unknown {bad}; choose from {list(COVARIATES)}")
    try:
        cfg.predictor_spec()
    except ValueError as exc:
        raise ConfigError(f"[analysis] {exc}") from None
    return cfg


# ---------------------------------------------------------------- manifest


def _write_manifest(out: Path, command: str, argv: Sequence[str], config: dict, inputs, outputs) -> None:
    path = out / MANIFEST
    manifest = artifacts.read_json(path) if path.is_file() else {}
    if not isinstance(manifest, dict) or "runs" not in manifest:
        manifest = {"tool": "cbscm", "runs": {}}
    manifest["tool_version"] = __version__
    manifest["runs"][command] = {
        "argv": list(argv),
        "backend": _backend.BACKEND,
        "config": config,
        "inputs": {str(p): artifacts.sha256_file(p) for p in inputs},
        "outputs": {p.name: artifacts.sha256_file(p) for p in outputs},
    }
    artifacts.write_json(path, manifest)


# ---------------------------------------------------------------- data loading


def _read_matches(path: Path):
    if not path.is_file():
        raise ConfigError(f"matches file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_matches(fh)


def _load_panel(cfg: AnalysisConfig) -> tuple[PanelDataset, tuple[str, ...]]:
    if cfg.matches is None:
        raise ConfigError("no matches file: set [analysis] matches or pass --matches")
    records = _read_matches(cfg.matches)
    schedule = cfg.schedule
    tables = build_season_tables(records, schedule)
    leagues = sorted({k[0] for k in tables})
    if cfg.treated not in leagues:
        raise ConfigError(f"treated league {cfg.treated!r} not in data (found {leagues})")
    units = [cfg.treated] + [u for u in (cfg.donors or leagues) if u != cfg.treated]
    missing = [u for u in units if u not in leagues]
    if missing:
        raise ConfigError(f"donor leagues {missing} not in data")
    panel = build_panel(tables, cfg.outcome, schedule, units=units, window=cfg.window)
    donors = cfg.donors or tuple(default_donors(panel, cfg.treated, schedule))
    if not donors:
        raise ConfigError("donor pool is empty")
    return panel, tuple(donors)


def _apply_overrides(cfg: AnalysisConfig, args) -> AnalysisConfig:
    if getattr(args, "matches", None):
        cfg.matches = Path(args.matches)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


# ---------------------------------------------------------------- writers


def _path_rows(fit: ScmFit) -> list[dict]:
    return [
        {"year": int(t), "actual": float(a), "synthetic": float(s), "gap": float(g), "post": bool(m)}
        for t, a, s, g, m in zip(fit.seasons, fit.actual, fit.synthetic, fit.gaps, fit.post_mask)
    ]


def _fit_record(fit: ScmFit) -> dict:
    return {
        "treated": fit.config.treated,
        "treatment_year": fit.config.treatment_year,
        "ate": fit.ate,
        "pre_rmse": fit.pre_rmse,
        "seed": fit.seed,
        "donor_weights": fit.G.as_dict(),
        "objective_value": fit.G.objective_value,
        "v_weights": dict(zip(fit.V.labels, map(float, fit.V.values))),
        "path": _path_rows(fit),
    }


def write_scm_outputs(fit: ScmFit, out: Path) -> list[Path]:
    paths = [
        artifacts.write_csv(out / "weights.csv", ["donor", "weight"], fit.G.as_dict().items()),
        artifacts.write_csv(
            out / "vweights.csv", ["predictor", "weight"], zip(fit.V.labels, map(float, fit.V.values))
        ),
        artifacts.write_csv(
            out / "balance.csv",
            ["predictor", "v_weight", "treated", "synthetic", "control_bias_pct", "donor_average", "average_bias_pct"],
            [
                (b.predictor, b.v_weight, b.treated, b.synthetic, 100 * b.control_bias, b.donor_average, 100 * b.average_bias)
                for b in fit.balance
            ],
        ),
        artifacts.write_csv(out / "effects.csv", ["year", "actual", "predicted", "effect"], fit.effects()),
        artifacts.write_csv(
            out / "path.csv",
            ["year", "actual", "synthetic", "gap"],
            [(r["year"], r["actual"], r["synthetic"], r["gap"]) for r in _path_rows(fit)],
        ),
    ]
    summary = _fit_record(fit)
    summary["balance"] = [asdict(b) for b in fit.balance]
    paths.append(artifacts.write_json(out / "summary.json", summary))
    return paths


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args) -> tuple[dict, list, list]:
    cfg = load_config(args.config) if args.config else AnalysisConfig()
    src = Path(args.matches)
    records = _read_matches(src)
    tables = build_season_tables(records, cfg.schedule)
    rows = []
    for (lg, season), t in tables.items():
        for r in t.rows():
            rows.append([lg, season, t.rule.label, *r.values()])
    header = ["league_id", "season_start_year", "rule", "team", "matches_played", "wins", "draws",
              "losses", "goals_for", "goals_against", "points"]
    out = Path(args.out)
    seasons = [[lg, s, t.K, t.n_matches, t.rule.label] for (lg, s), t in tables.items()]
    paths = [
        artifacts.write_csv(out / "standings.csv", header, rows),
        artifacts.write_csv(out / "seasons.csv", ["league_id", "season_start_year", "teams", "matches", "rule"], seasons),
    ]
    log.info("ingested %d matches in %d league-seasons", len(records), len(tables))
    return {"matches": str(src), "adoption_years": cfg.adoption_years}, [src], paths


def cmd_metrics(args) -> tuple[dict, list, list]:
    cfg = load_config(args.config) if args.config else AnalysisConfig()
    if args.matches:
        cfg.matches = Path(args.matches)
    if cfg.matches is None:
        raise ConfigError("no matches file: pass --matches or a config with one")
    tables = build_season_tables(_read_matches(cfg.matches), cfg.schedule)
    rows = [metrics.balance_indices(t).as_dict() for t in tables.values()]
    header = list(rows[0]) if rows else ["league_id", "season_start_year"]
    path = artifacts.write_csv(Path(args.out) / "metrics.csv", header, [list(r.values()) for r in rows])
    return {"matches": str(cfg.matches), "adoption_years": cfg.adoption_years}, [cfg.matches], [path]


def _analysis(args) -> tuple[AnalysisConfig, PanelDataset, ScmConfig]:
    cfg = _apply_overrides(load_config(args.config), args)
    panel, donors = _load_panel(cfg)
    return cfg, panel, cfg.scm_config(donors)


def cmd_scm(args) -> tuple[dict, list, list]:
    cfg, panel, sc = _analysis(args)
    fit = fit_scm(panel, sc)
    log.info("ATE %.4f, pre-period RMSE %.4f", fit.ate, fit.pre_rmse)
    return cfg.resolved(), [Path(args.config), cfg.matches], write_scm_outputs(fit, Path(args.out))


def cmd_placebo(args) -> tuple[dict, list, list]:
    cfg, panel, sc = _analysis(args)
    if args.pseudo_year is not None:
        cfg.pseudo_year = args.pseudo_year
    if cfg.pseudo_year is None:
        first = cfg.window[0] if cfg.window else panel.seasons[0]
        cfg.pseudo_year = (first + cfg.treatment_year) // 2
    space = placebo_in_space(panel, sc)
    time = placebo_in_time(panel, sc, cfg.pseudo_year)
    out = Path(args.out)
    paths = [
        artifacts.write_csv(
            out / "placebo_space.csv",
            ["pseudo_treated", "ate", "pre_rmse"],
            [(p.pseudo_treated, p.ate, p.pre_rmse) for p in space],
        ),
        artifacts.write_csv(out / "placebo_time.csv", ["year", "actual", "predicted", "effect"], time.fit.effects()),
        artifacts.write_json(
            out / "placebo.json",
            {
                "space": [_fit_record(p.fit) for p in space],
                "time": {"pseudo_year": cfg.pseudo_year, **_fit_record(time.fit)},
            },
        ),
    ]
    return cfg.resolved(), [Path(args.config), cfg.matches], paths


def cmd_loo(args) -> tuple[dict, list, list]:
    cfg, panel, sc = _analysis(args)
    base = fit_scm(panel, sc)
    res = leave_one_out(panel, sc, base)
    out = Path(args.out)
    paths = [
        artifacts.write_csv(out / "loo_envelope.csv", ["year", "effect", "min", "max"], res.envelope()),
        artifacts.write_json(
            out / "loo.json",
            {
                "base": _fit_record(base),
                "single_donor": res.single_donor,
                "refits": [{"dropped": d, **_fit_record(f)} for d, f in res.refits],
                "envelope": [dict(zip(("year", "effect", "min", "max"), row)) for row in res.envelope()],
            },
        ),
    ]
    return cfg.resolved(), [Path(args.config), cfg.matches], paths


def cmd_did(args) -> tuple[dict, list, list]:
    cfg = _apply_overrides(load_config(args.config), args)
    panel, donors = _load_panel(cfg)
    fit = fit_did(panel, cfg.treated, cfg.treatment_year, cfg.did_covariates, units=(cfg.treated, *donors))
    rows = [(t.name, t.label, t.estimate, t.std_error, t.p_value, t.stars) for t in fit.terms]
    out = Path(args.out)
    paths = [
        artifacts.write_csv(out / "did.csv", ["term", "label", "estimate", "std_error", "p_value", "stars"], rows),
        artifacts.write_json(
            out / "did.json",
            {
                "variance": fit.variance,
                "n_observations": fit.n_observations,
                "r_squared": fit.r_squared,
                "terms": [
                    {"name": t.name, "label": t.label, "estimate": t.estimate, "std_error": t.std_error,
                     "z": t.z, "p_value": t.p_value, "stars": t.stars}
                    for t in fit.terms
                ],
            },
        ),
    ]
    return cfg.resolved(), [Path(args.config), cfg.matches], paths


def cmd_simulate(args) -> tuple[dict, list, list]:
    spec = simgen.default_scenario(
        seed=args.seed or 0,
        n_leagues=args.leagues,
        seasons=(args.first, args.last),
        treatment_year=args.treatment_year,
        K=args.teams,
        common_factor=args.common_factor,
    )
    if args.target_effect is not None:
        nominal = simgen.calibrate_effect(spec, args.target_effect)
    else:
        nominal = args.effect
    spec = spec.with_(treated_effect=nominal)
    records = simgen.simulate_matches(spec)
    _, truth = simgen.generate_panel_scenario(spec)
    truth["model"] = {
        "form": "P(home)=exp(d/2)/Z, P(away)=exp(-d/2)/Z, P(draw)=kappa/Z, kappa=2*nu/(1-nu)",
        "teams": args.teams,
        "draw_propensity": spec.leagues[0].draw_propensity,
        "strength_scale": spec.leagues[0].strength_scale,
        "strength_drift": spec.leagues[0].strength_drift,
        "common_factor": spec.common_factor,
        "rule": "2 points for a win in every league and season",
    }
    out = Path(args.out)
    buf = io.StringIO()
    write_matches(records, buf)
    ids = [lg.league_id for lg in spec.leagues]
    cfg_text = (
        "[analysis]\n"
        "matches = matches.csv\n"
        f"treated = {spec.treated}\n"
        f"treatment_year = {spec.treatment_year}\n"
        f"donors = {', '.join(ids[1:])}\n"
        f"window = {args.first}, {args.last}\n"
        "did_covariates = avg_draw_share\n"
        "\n[rule_schedule]\n"
    )
    paths = [
        artifacts.atomic_write_text(out / "matches.csv", buf.getvalue()),
        artifacts.write_json(out / "truth.json", truth),
        artifacts.atomic_write_text(out / "analysis.cfg", cfg_text),
    ]
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out", "verbose")}
    config["nominal_effect"] = nominal
    return config, [], paths


def build_report(run: Path) -> dict:
    summary_path = run / "summary.json"
    if not summary_path.is_file():
        raise ConfigError(f"{run}: no summary.json; run `scm` into this directory first")
    s = artifacts.read_json(summary_path)
    post = [r for r in s["path"] if r["post"]]
    report: dict[str, Any] = {
        "balance_table": {"donor_weights": s["donor_weights"], "v_weights": s["v_weights"], "rows": s["balance"]},
        "effects_table": {
            "rows": [{"year": r["year"], "actual": r["actual"], "predicted": r["synthetic"], "effect": r["gap"]} for r in post],
            "ate": s["ate"],
            "pre_rmse": s["pre_rmse"],
            "seed": s["seed"],
        },
        "series_actual_vs_synthetic": [{"year": r["year"], "actual": r["actual"], "synthetic": r["synthetic"]} for r in s["path"]],
        "series_gap": [{"year": r["year"], "gap": r["gap"]} for r in s["path"]],
    }
    if (run / "loo.json").is_file():
        loo = artifacts.read_json(run / "loo.json")
        report["loo_table"] = loo["envelope"]
        report["series_loo_envelope"] = [{"year": e["year"], "min": e["min"], "max": e["max"]} for e in loo["envelope"]]
    if (run / "did.json").is_file():
        report["did_table"] = artifacts.read_json(run / "did.json")
    if (run / "placebo.json").is_file():
        pl = artifacts.read_json(run / "placebo.json")
        report["placebo"] = {
            "space": [{"pseudo_treated": p["treated"], "ate": p["ate"], "pre_rmse": p["pre_rmse"]} for p in pl["space"]],
            "time": {"pseudo_year": pl["time"]["pseudo_year"], "ate": pl["time"]["ate"], "pre_rmse": pl["time"]["pre_rmse"]},
        }
    return report


def cmd_report(args) -> tuple[dict, list, list]:
    run = Path(args.run)
    out = Path(args.out) if args.out else run
    report = build_report(run)
    inputs = [p for p in (run / n for n in ("summary.json", "loo.json", "did.json", "placebo.json")) if p.is_file()]
    return {"run": str(run)}, inputs, [artifacts.write_json(out / "report.json", report)]


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbscm", description="Competitive-balance synthetic control toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def analysis(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", required=True, help="analysis INI file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--matches", help="override the config's matches file")
        sp.add_argument("--seed", type=int, help="override the optimizer seed")
        sp.set_defaults(func=func)
        return sp

    sp = sub.add_parser("ingest", help="validate a matches CSV and write standings")
    sp.add_argument("--matches", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config", help="optional config supplying the rule schedule")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("metrics", help="per-season balance indices")
    sp.add_argument("--matches")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_metrics)

    analysis("scm", cmd_scm, "fit the synthetic control")
    sp = analysis("placebo", cmd_placebo, "placebo-in-space and placebo-in-time refits")
    sp.add_argument("--pseudo-year", type=int, help="placebo treatment year (default: config, else mid pre-period)")
    analysis("loo", cmd_loo, "leave-one-out donor sensitivity")
    analysis("did", cmd_did, "difference-in-differences regression")

    sp = sub.add_parser("simulate", help="write a simulated matches CSV, truth.json and a ready config")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--leagues", type=int, default=6)
    sp.add_argument("--teams", type=int, default=18)
    sp.add_argument("--first", type=int, default=1963)
    sp.add_argument("--last", type=int, default=1993)
    sp.add_argument("--treatment-year", type=int, default=1981)
    sp.add_argument("--common-factor", type=float, default=0.1)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--effect", type=float, default=0.0, help="nominal dispersion shift of the treated league")
    g.add_argument("--target-effect", type=float, help="calibrate the shift to this realized outcome effect")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("report", help="bundle a run directory into report.json")
    sp.add_argument("--run", required=True)
    sp.add_argument("--out", help="where to write report.json (default: the run directory)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            config, inputs, outputs = args.func(args)
        out = Path(args.out) if getattr(args, "out", None) else Path(args.run)
        _write_manifest(out, args.command, argv, config, inputs, outputs)
    except (ValueError, KeyError, OSError, configparser.Error) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"cbscm {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
