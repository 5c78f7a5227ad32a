"""Seeded multi-league panels with known treatment effects.

Match model: for strengths a (home) and b (away) with difference d = a - b,

    P(home win) = exp(d/2) / Z,  P(away win) = exp(-d/2) / Z,  P(draw) = kappa / Z

with kappa = 2 * nu / (1 - nu), so ``draw_propensity`` nu is the draw
probability between equal teams. Each season's strengths are the league's
base strengths plus seeded drift, with deviations from the league mean
scaled by a dispersion multiplier 1 + common shock (+ treatment shift for
the treated league from the treatment year on).

Every random draw comes from a generator keyed by (seed, season, purpose),
and per-match draws are taken as fixed-size arrays before any outcome is
decided. Two runs that differ only in dispersion therefore consume
identical random numbers, which is what the paired-seed twin relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .league import MatchRecord, RuleSchedule, build_season_tables
from .panel import PanelDataset, build_panel

_BASE, _DRIFT, _MATCH, _COMMON = 11, 12, 13, 14


@dataclass(frozen=True)
class LeagueScenario:
    league_id: str
    K: int = 18
    strengths: tuple[float, ...] | None = None
    strength_scale: float = 0.8
    draw_propensity: float = 0.27
    seasons: tuple[int, int] = (1963, 1993)
    strength_drift: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("a league needs at least two teams")
        if self.strengths is not None:
            if len(self.strengths) != self.K:
                raise ValueError("strength vector length must equal K")
            object.__setattr__(self, "strengths", tuple(float(s) for s in self.strengths))
        if not 0.0 <= self.draw_propensity <= 1.0:
            raise ValueError("draw_propensity must lie in [0, 1]")
        if self.seasons[1] < self.seasons[0]:
            raise ValueError("season range is reversed")

    @property
    def teams(self) -> list[str]:
        return [f"{self.league_id}-{k + 1:02d}" for k in range(self.K)]

    def base_strengths(self) -> np.ndarray:
        if self.strengths is not None:
            return np.array(self.strengths)
        rng = np.random.default_rng([self.seed, _BASE])
        return rng.normal(0.0, self.strength_scale, self.K)

    def season_strengths(self, season: int, dispersion: float = 1.0) -> np.ndarray:
        s = self.base_strengths()
        if self.strength_drift > 0:
            rng = np.random.default_rng([self.seed, season, _DRIFT])
            s = s + rng.normal(0.0, self.strength_drift, self.K)
        return s.mean() + max(dispersion, 0.0) * (s - s.mean())


def outcome_probabilities(diff: np.ndarray, draw_propensity: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(home win, draw, away win) probabilities for strength differences."""
    diff = np.asarray(diff, dtype=float)
    if draw_propensity >= 1.0:
        z = np.zeros_like(diff)
        return z, np.ones_like(diff), z
    kappa = 2.0 * draw_propensity / (1.0 - draw_propensity)
    eh, ea = np.exp(diff / 2), np.exp(-diff / 2)
    Z = eh + ea + kappa
    return eh / Z, kappa / Z, ea / Z


def generate_season(scenario: LeagueScenario, season: int, dispersion: float = 1.0) -> list[MatchRecord]:
    """Full double round robin, home fixtures in team order."""
    s = scenario.season_strengths(season, dispersion)
    home, away = np.array([(i, j) for i in range(scenario.K) for j in range(scenario.K) if i != j]).T
    p_home, p_draw, _ = outcome_probabilities(s[home] - s[away], scenario.draw_propensity)
    rng = np.random.default_rng([scenario.seed, season, _MATCH])
    n = home.size
    u = rng.random(n)
    base = rng.poisson(0.8, n)
    margin = 1 + rng.poisson(0.5, n)

    teams = scenario.teams
    out = []
    for k in range(n):
        if u[k] < p_home[k]:
            hg, ag = base[k] + margin[k], base[k]
        elif u[k] < p_home[k] + p_draw[k]:
            hg = ag = base[k]
        else:
            hg, ag = base[k], base[k] + margin[k]
        out.append(MatchRecord(scenario.league_id, season, teams[home[k]], teams[away[k]], int(hg), int(ag)))
    return out


@dataclass(frozen=True)
class PanelScenario:
    """Donor and treated leagues sharing a per-season dispersion shock.

    ``rule_schedule`` defaults to the 2-point rule everywhere so that a zero
    ``treated_effect`` is a clean null.
    """

    leagues: tuple[LeagueScenario, ...]
    treated: str
    treatment_year: int = 1981
    treated_effect: float = 0.0
    common_factor: float = 0.1
    seed: int = 0
    outcome_name: str = "dcb"
    rule_schedule: RuleSchedule = field(default_factory=RuleSchedule)

    def __post_init__(self):
        object.__setattr__(self, "leagues", tuple(self.leagues))
        ids = [lg.league_id for lg in self.leagues]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate league ids")
        if self.treated not in ids:
            raise ValueError(f"treated league {self.treated!r} not among {ids}")
        if len({lg.seasons for lg in self.leagues}) != 1:
            raise ValueError("all leagues must span the same seasons")

    @property
    def seasons(self) -> range:
        a, b = self.leagues[0].seasons
        return range(a, b + 1)

    def common_shock(self, season: int) -> float:
        if self.common_factor <= 0:
            return 0.0
        rng = np.random.default_rng([self.seed, season, _COMMON])
        return float(rng.normal(0.0, self.common_factor))

    def dispersion(self, league_id: str, season: int) -> float:
        d = 1.0 + self.common_shock(season)
        if league_id == self.treated and season >= self.treatment_year:
            d += self.treated_effect
        return d

    def with_(self, **changes) -> "PanelScenario":
        return replace(self, **changes)


def default_scenario(
    seed: int = 0,
    n_leagues: int = 6,
    treated_effect: float = 0.0,
    seasons: tuple[int, int] = (1963, 1993),
    treatment_year: int = 1981,
    K: int = 18,
    common_factor: float = 0.1,
    **league_kwargs,
) -> PanelScenario:
    """Exchangeable leagues: same parameters, independent seeds derived from ``seed``."""
    ids = ["ENG", "GER", "ESP", "NED", "ITA", "FRA"]
    ids += [f"L{k:02d}" for k in range(len(ids), n_leagues)]
    ss = np.random.SeedSequence(seed).spawn(n_leagues)
    leagues = tuple(
        LeagueScenario(
            ids[k], K=K, seasons=seasons, seed=int(ss[k].generate_state(1)[0]), **league_kwargs
        )
        for k in range(n_leagues)
    )
    return PanelScenario(leagues, ids[0], treatment_year, treated_effect, common_factor, seed)


def simulate_matches(spec: PanelScenario) -> list[MatchRecord]:
    records: list[MatchRecord] = []
    for lg in spec.leagues:
        for t in spec.seasons:
            records.extend(generate_season(lg, t, spec.dispersion(lg.league_id, t)))
    return records


def _panel_from(spec: PanelScenario) -> PanelDataset:
    tables = build_season_tables(simulate_matches(spec), spec.rule_schedule)
    units = [lg.league_id for lg in spec.leagues]
    return build_panel(tables, spec.outcome_name, spec.rule_schedule, units=units)


def generate_panel_scenario(spec: PanelScenario) -> tuple[PanelDataset, dict]:
    """Simulate, score through the real metrics path, and record the truth.

    With a non-zero effect the same spec is re-run with ``treated_effect=0``;
    the realized effect is the mean post-period outcome difference of the
    treated league between the two runs.
    """
    panel = _panel_from(spec)
    post = np.asarray(panel.seasons) >= spec.treatment_year
    path = np.zeros(len(panel.seasons))
    if spec.treated_effect != 0.0:
        twin = _panel_from(spec.with_(treated_effect=0.0))
        path = panel.series(spec.treated) - twin.series(spec.treated)
    truth = {
        "treated": spec.treated,
        "treatment_year": spec.treatment_year,
        "outcome": spec.outcome_name,
        "nominal_effect": spec.treated_effect,
        "realized_effect": float(path[post].mean()) if post.any() else 0.0,
        "realized_path": {int(t): float(x) for t, x in zip(panel.seasons, path)},
        "seed": spec.seed,
    }
    return panel, truth


def calibrate_effect(
    spec: PanelScenario,
    target: float = -0.05,
    tol: float = 1e-3,
    max_iter: int = 40,
    mixture: dict[str, float] | None = None,
) -> float:
    """Nominal dispersion shift whose realized outcome effect is ``target``.

    Bisection on the paired-seed realized effect over [-0.95, 0.95]. With
    ``mixture`` the effect is measured on :func:`generate_mixture_panel`.
    """
    def realized(x):
        s = spec.with_(treated_effect=x)
        if mixture is not None:
            return generate_mixture_panel(s, mixture)[1]["realized_effect"]
        return generate_panel_scenario(s)[1]["realized_effect"]

    lo, hi = -0.95, 0.95
    f_lo, f_hi = realized(lo), realized(hi)
    if not f_lo <= target <= f_hi:
        raise ValueError(f"target {target} outside achievable range [{f_lo:.4f}, {f_hi:.4f}]")
    mid = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = realized(mid)
        if abs(f_mid - target) <= tol:
            break
        if f_mid < target:
            lo = mid
        else:
            hi = mid
    return mid


def mix_treated(
    panel: PanelDataset,
    treated: str,
    weights: dict[str, float],
    noise: float = 0.0,
    seed: int = 0,
) -> PanelDataset:
    """Replace ``treated`` by a convex combination of other units plus outcome noise."""
    w = np.array(list(weights.values()), dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("mixture weights must lie on the simplex")
    idx = [panel.unit_index(u) for u in weights]
    if panel.unit_index(treated) in idx:
        raise ValueError("treated unit cannot be part of its own mixture")
    y = w @ panel.outcome[idx]
    cov = np.tensordot(w, panel.covariates[idx], axes=1)
    if noise > 0:
        y = y + np.random.default_rng([seed, 0x5EED]).normal(0.0, noise, y.shape)
    return panel.replace_unit(treated, y, cov)


def shift_treated(panel: PanelDataset, treated: str, start_year: int, effect: float) -> PanelDataset:
    """Add ``effect`` to the treated unit's outcome from ``start_year`` on."""
    y = panel.series(treated).copy()
    y[np.asarray(panel.seasons) >= start_year] += effect
    return panel.replace_unit(treated, y)


def _league_outcomes(spec: PanelScenario, league: LeagueScenario, effect: float) -> tuple[np.ndarray, np.ndarray]:
    records = []
    for t in spec.seasons:
        d = 1.0 + spec.common_shock(t) + (effect if t >= spec.treatment_year else 0.0)
        records.extend(generate_season(league, t, d))
    tables = build_season_tables(records, spec.rule_schedule)
    row = build_panel(tables, spec.outcome_name, spec.rule_schedule, units=[league.league_id])
    return row.outcome[0], row.covariates[0]


def generate_mixture_panel(
    spec: PanelScenario,
    weights: dict[str, float],
    treated_id: str = "MIX",
    noise: float = 0.0,
    noise_seed: int = 0,
) -> tuple[PanelDataset, dict]:
    """Panel whose treated unit is a convex mixture of donor leagues.

    The treated unit's outcome is ``sum_c w_c * Y_c(effect) + noise`` where
    ``Y_c(effect)`` re-simulates league ``c`` with the same seeds and the
    dispersion shift ``spec.treated_effect`` from the treatment year on.
    Its untreated counterpart is therefore exactly the mixture of the donor
    paths, and the realized effect is measured against that paired-seed twin.
    """
    by_id = {lg.league_id: lg for lg in spec.leagues}
    unknown = set(weights) - set(by_id)
    if unknown:
        raise ValueError(f"mixture components {sorted(unknown)} are not leagues of the scenario")
    w = np.array(list(weights.values()), dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("mixture weights must lie on the simplex")
    if treated_id in by_id:
        raise ValueError(f"treated id {treated_id!r} clashes with a donor league")

    base = _panel_from(spec.with_(treated=spec.leagues[0].league_id, treated_effect=0.0))
    y = np.zeros(len(base.seasons))
    cov = np.zeros(base.covariates.shape[1:])
    path = np.zeros(len(base.seasons))
    for c, wc in zip(weights, w):
        if spec.treated_effect != 0.0:
            yc, cc = _league_outcomes(spec, by_id[c], spec.treated_effect)
        else:
            yc, cc = base.series(c), base.covariates[base.unit_index(c)]
        y += wc * yc
        cov += wc * cc
        path += wc * (yc - base.series(c))
    eps = np.zeros_like(y)
    if noise > 0:
        eps = np.random.default_rng([noise_seed, 0x5EED]).normal(0.0, noise, y.shape)
    y = y + eps

    panel = PanelDataset(
        (treated_id,) + base.units,
        base.seasons,
        np.vstack([y, base.outcome]),
        np.concatenate([cov[None], base.covariates]),
        base.outcome_name,
    )
    post = np.asarray(panel.seasons) >= spec.treatment_year
    truth = {
        "treated": treated_id,
        "treatment_year": spec.treatment_year,
        "outcome": spec.outcome_name,
        "mixture": dict(weights),
        "noise": noise,
        "noise_rms_pre": float(np.sqrt(np.mean(eps[~post] ** 2))) if (~post).any() else 0.0,
        "nominal_effect": spec.treated_effect,
        "realized_effect": float(path[post].mean()) if post.any() else 0.0,
        "realized_path": {int(t): float(x) for t, x in zip(panel.seasons, path)},
        "seed": spec.seed,
    }
    return panel, truth
