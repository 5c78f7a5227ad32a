"""Leagues x seasons outcome panel and synthetic-control predictor blocks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import metrics
from .league import RuleSchedule, SeasonTable, season_covariates

OUTCOMES: dict[str, Callable[[SeasonTable], float]] = {
    "dcb": metrics.dcb,
    "namsi_hat": metrics.namsi_hat,
    "avg_goals": metrics.avg_goals_per_team_match,
}
OUTCOME_LABELS = {"dcb": "DCB", "namsi_hat": "NAMSI_HAT", "avg_goals": "AVG_GOALS"}

COVARIATES = ("avg_win_share", "avg_draw_share", "team_count")
COVARIATE_LABELS = {
    "avg_win_share": "Average share of wins in a season",
    "avg_draw_share": "Average share of draws in a season",
    "team_count": "Number of teams in a season",
}
ALLOWED_GAPS = (1, 2, 3, 5)


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Complete rectangle of outcomes and season covariates.

    ``outcome`` has shape (units, seasons); ``covariates`` has shape
    (units, seasons, 3) in :data:`COVARIATES` order.
    """

    units: tuple[str, ...]
    seasons: tuple[int, ...]
    outcome: np.ndarray
    covariates: np.ndarray
    outcome_name: str = "dcb"

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "seasons", tuple(int(s) for s in self.seasons))
        outcome = np.asarray(self.outcome, dtype=float)
        cov = np.asarray(self.covariates, dtype=float)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "covariates", cov)
        U, T = len(self.units), len(self.seasons)
        if len(set(self.units)) != U:
            raise ValueError("duplicate unit identifiers")
        if any(b <= a for a, b in zip(self.seasons, self.seasons[1:])):
            raise ValueError("seasons must be strictly increasing")
        if outcome.shape != (U, T):
            raise ValueError(f"outcome shape {outcome.shape} != {(U, T)}")
        if cov.shape != (U, T, len(COVARIATES)):
            raise ValueError(f"covariates shape {cov.shape} != {(U, T, len(COVARIATES))}")
        if not (np.all(np.isfinite(outcome)) and np.all(np.isfinite(cov))):
            raise ValueError("panel has missing or non-finite cells")

    def unit_index(self, unit: str) -> int:
        try:
            return self.units.index(unit)
        except ValueError:
            raise KeyError(f"unknown unit {unit!r}; panel has {list(self.units)}") from None

    def season_index(self, year: int) -> int:
        try:
            return self.seasons.index(int(year))
        except ValueError:
            raise KeyError(f"season {year} not in panel") from None

    def series(self, unit: str) -> np.ndarray:
        return self.outcome[self.unit_index(unit)]

    def subset(self, units: Sequence[str] | None = None, seasons: Sequence[int] | None = None) -> "PanelDataset":
        ui = [self.unit_index(u) for u in (units if units is not None else self.units)]
        ti = [self.season_index(t) for t in (seasons if seasons is not None else self.seasons)]
        return PanelDataset(
            tuple(self.units[i] for i in ui),
            tuple(self.seasons[i] for i in ti),
            self.outcome[np.ix_(ui, ti)],
            self.covariates[np.ix_(ui, ti)],
            self.outcome_name,
        )

    def replace_unit(self, unit: str, outcome: np.ndarray, covariates: np.ndarray | None = None) -> "PanelDataset":
        i = self.unit_index(unit)
        y = self.outcome.copy()
        y[i] = outcome
        cov = self.covariates.copy()
        if covariates is not None:
            cov[i] = covariates
        return PanelDataset(self.units, self.seasons, y, cov, self.outcome_name)


def build_panel(
    tables: Mapping[tuple[str, int], SeasonTable] | Sequence[SeasonTable],
    outcome_name: str = "dcb",
    rule_schedule: RuleSchedule | None = None,
    units: Sequence[str] | None = None,
    window: tuple[int, int] | None = None,
) -> PanelDataset:
    """Compute the chosen outcome for every league-season under the rule in force."""
    if outcome_name not in OUTCOMES:
        raise ValueError(f"unknown outcome {outcome_name!r}; choose from {sorted(OUTCOMES)}")
    schedule = rule_schedule or RuleSchedule()
    if not isinstance(tables, Mapping):
        tables = {(t.league_id, t.season_start_year): t for t in tables}
    if units is None:
        units = sorted({k[0] for k in tables})
    if window is None:
        years = sorted({k[1] for k in tables})
        if not years:
            raise ValueError("no season tables supplied")
        window = (years[0], years[-1])
    seasons = tuple(range(window[0], window[1] + 1))

    missing = [(u, t) for u in units for t in seasons if (u, t) not in tables]
    if missing:
        shown = ", ".join(f"{u} {t}" for u, t in missing[:20])
        more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
        raise ValueError(f"panel has gaps: {shown}{more}")

    fn = OUTCOMES[outcome_name]
    y = np.empty((len(units), len(seasons)))
    cov = np.empty((len(units), len(seasons), len(COVARIATES)))
    for i, u in enumerate(units):
        for j, t in enumerate(seasons):
            table = tables[(u, t)].with_rule(schedule.rule_for(u, t))
            y[i, j] = fn(table)
            cov[i, j] = season_covariates(table)
    return PanelDataset(tuple(units), seasons, y, cov, outcome_name)


@dataclass(frozen=True)
class PredictorSpec:
    lag_gap: int = 2
    covariates: tuple[str, ...] = COVARIATES
    first_year: int | None = None
    # "pre": covariate means over the pre-period; "full": over the whole panel window
    covariate_window: str = "pre"

    def __post_init__(self):
        if self.lag_gap not in ALLOWED_GAPS:
            raise ValueError(f"lag_gap must be one of {ALLOWED_GAPS}, got {self.lag_gap}")
        bad = [c for c in self.covariates if c not in COVARIATES]
        if bad:
            raise ValueError(f"unknown covariates {bad}")
        if self.covariate_window not in ("pre", "full"):
            raise ValueError("covariate_window must be 'pre' or 'full'")
        object.__setattr__(self, "covariates", tuple(self.covariates))

    def lag_years(self, first_year: int, treatment_year: int) -> list[int]:
        return list(range(first_year, treatment_year, self.lag_gap))


@dataclass(frozen=True, eq=False)
class PredictorBlock:
    X1: np.ndarray
    X0: np.ndarray
    labels: tuple[str, ...]
    donors: tuple[str, ...]
    lag_years: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.X0.shape[0] != self.X1.shape[0] or len(self.labels) != self.X1.shape[0]:
            raise ValueError("predictor rows disagree between X1, X0 and labels")
        if self.X0.shape[1] != len(self.donors):
            raise ValueError("X0 columns disagree with donor list")


def default_donors(panel: PanelDataset, treated: str, schedule: RuleSchedule | None = None) -> list[str]:
    """Non-treated units still under the old rule through the last panel season."""
    schedule = schedule or RuleSchedule()
    last = panel.seasons[-1]
    return [
        u
        for u in panel.units
        if u != treated and schedule.adoption_years.get(u, last + 1) > last
    ]


def build_predictors(
    panel: PanelDataset,
    treated: str,
    treatment_year: int,
    spec: PredictorSpec = PredictorSpec(),
    donors: Sequence[str] | None = None,
) -> PredictorBlock:
    """Lagged outcomes plus covariate means for the treated unit and donors."""
    ti = panel.unit_index(treated)
    if donors is None:
        donors = [u for u in panel.units if u != treated]
    donors = list(donors)
    if not donors:
        raise ValueError("no donors")
    if treated in donors:
        raise ValueError("treated unit cannot be its own donor")
    di = [panel.unit_index(d) for d in donors]

    first = spec.first_year if spec.first_year is not None else panel.seasons[0]
    if first < panel.seasons[0]:
        raise ValueError(f"first pre-period year {first} precedes panel start {panel.seasons[0]}")
    if not panel.seasons[0] < treatment_year <= panel.seasons[-1]:
        raise ValueError(f"treatment year {treatment_year} outside the panel's seasons")
    pre = [j for j, t in enumerate(panel.seasons) if first <= t < treatment_year]
    if not pre:
        raise ValueError("empty pre-period")

    lag_years = spec.lag_years(first, treatment_year)
    label = OUTCOME_LABELS.get(panel.outcome_name, panel.outcome_name.upper())
    rows1, rows0, labels = [], [], []
    for year in lag_years:
        j = panel.season_index(year)
        rows1.append(panel.outcome[ti, j])
        rows0.append(panel.outcome[di, j])
        labels.append(f"{label}({year})")

    cov_cols = pre if spec.covariate_window == "pre" else list(range(len(panel.seasons)))
    for name in spec.covariates:
        c = COVARIATES.index(name)
        rows1.append(panel.covariates[ti, cov_cols, c].mean())
        rows0.append(panel.covariates[di][:, cov_cols, c].mean(axis=1))
        labels.append(name)

    return PredictorBlock(
        np.array(rows1, dtype=float),
        np.array(rows0, dtype=float).reshape(len(labels), len(donors)),
        tuple(labels),
        tuple(donors),
        tuple(lag_years),
    )
