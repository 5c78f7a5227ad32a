"""Match records, points rules and season league tables."""

from __future__ import annotations

import csv
import io
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

MATCH_COLUMNS = (
    "league_id",
    "season_start_year",
    "home_team",
    "away_team",
    "home_goals",
    "away_goals",
)

# First season played under three points for a win (season labelled by start year).
DEFAULT_ADOPTION_YEARS = {
    "ENG": 1981,
    "GER": 1995,
    "ESP": 1995,
    "NED": 1995,
    "ITA": 1994,
    "FRA": 1994,
}


class MatchParseError(ValueError):
    """Raised for a malformed row in a matches CSV."""

    def __init__(self, line: int, field_name: str, message: str):
        self.line = line
        self.field = field_name
        super().__init__(f"line {line}: field {field_name!r}: {message}")


class DataWarning(UserWarning):
    """Suspicious but accepted input data."""


@dataclass(frozen=True)
class MatchRecord:
    league_id: str
    season_start_year: int
    home_team: str
    away_team: str
    home_goals: int
    away_goals: int

    def __post_init__(self):
        if self.home_team == self.away_team:
            raise ValueError(f"team {self.home_team!r} cannot play itself")
        for name in ("home_goals", "away_goals"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def is_draw(self) -> bool:
        return self.home_goals == self.away_goals


@dataclass(frozen=True)
class PointsRule:
    win_points: int = 2
    draw_points: int = 1
    loss_points: int = 0

    def __post_init__(self):
        if not self.win_points > self.draw_points > self.loss_points >= 0:
            raise ValueError(
                "points rule needs win > draw > loss >= 0, got "
                f"{self.win_points}/{self.draw_points}/{self.loss_points}"
            )

    @property
    def label(self) -> str:
        return f"{self.win_points}-{self.draw_points}-{self.loss_points}"


TWO_POINTS = PointsRule(2, 1, 0)
THREE_POINTS = PointsRule(3, 1, 0)


@dataclass(frozen=True)
class RuleSchedule:
    """Per-league first season of the three-point rule.

    Leagues absent from the mapping never switch inside the data window.
    """

    adoption_years: Mapping[str, int] = field(default_factory=dict)
    before: PointsRule = TWO_POINTS
    after: PointsRule = THREE_POINTS

    def __post_init__(self):
        object.__setattr__(self, "adoption_years", dict(self.adoption_years))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]]) -> "RuleSchedule":
        years: dict[str, int] = {}
        for league, year in pairs:
            if league in years:
                raise ValueError(f"league {league!r} listed twice in rule schedule")
            years[league] = int(year)
        return cls(years)

    @classmethod
    def historical(cls) -> "RuleSchedule":
        return cls(DEFAULT_ADOPTION_YEARS)

    def rule_for(self, league_id: str, season: int) -> PointsRule:
        year = self.adoption_years.get(league_id)
        if year is not None and season >= year:
            return self.after
        return self.before


def parse_matches(source: TextIO | str) -> list[MatchRecord]:
    """Parse the matches CSV format.

    ``source`` is an open text stream or the CSV text itself. Row order is
    preserved. A malformed row raises :class:`MatchParseError` naming the
    line number and field; exact duplicate fixtures in a season are kept
    but trigger a :class:`DataWarning`.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise MatchParseError(1, "header", "empty input, header required") from None
    header = [h.strip().lstrip("﻿") for h in header]
    if tuple(header) != MATCH_COLUMNS:
        raise MatchParseError(1, "header", f"expected {','.join(MATCH_COLUMNS)}")

    records: list[MatchRecord] = []
    seen: Counter = Counter()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(MATCH_COLUMNS):
            raise MatchParseError(line, "row", f"expected 6 fields, got {len(row)}")
        cells = dict(zip(MATCH_COLUMNS, (c.strip() for c in row)))
        for name in ("league_id", "home_team", "away_team"):
            if not cells[name]:
                raise MatchParseError(line, name, "empty value")
        ints = {}
        for name in ("season_start_year", "home_goals", "away_goals"):
            try:
                ints[name] = int(cells[name])
            except ValueError:
                raise MatchParseError(line, name, f"not an integer: {cells[name]!r}") from None
            if name != "season_start_year" and ints[name] < 0:
                raise MatchParseError(line, name, f"negative goals: {ints[name]}")
        if cells["home_team"] == cells["away_team"]:
            raise MatchParseError(line, "away_team", "same as home_team")
        rec = MatchRecord(
            cells["league_id"],
            ints["season_start_year"],
            cells["home_team"],
            cells["away_team"],
            ints["home_goals"],
            ints["away_goals"],
        )
        key = (rec.league_id, rec.season_start_year, rec.home_team, rec.away_team)
        seen[key] += 1
        if seen[key] == 2:
            warnings.warn(
                f"line {line}: duplicate fixture {rec.home_team} v {rec.away_team} "
                f"in {rec.league_id} {rec.season_start_year}",
                DataWarning,
                stacklevel=2,
            )
        records.append(rec)
    return records


def write_matches(records: Iterable[MatchRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(MATCH_COLUMNS)
    for r in records:
        writer.writerow(
            [r.league_id, r.season_start_year, r.home_team, r.away_team, r.home_goals, r.away_goals]
        )


def group_by_season(records: Iterable[MatchRecord]) -> dict[tuple[str, int], list[MatchRecord]]:
    groups: dict[tuple[str, int], list[MatchRecord]] = {}
    for r in records:
        groups.setdefault((r.league_id, r.season_start_year), []).append(r)
    return dict(sorted(groups.items()))


@dataclass(frozen=True, eq=False)
class SeasonTable:
    """Standings of one league-season; teams are held in identifier order.

    Points are derived from the stored results and ``rule``, so the same
    table can be re-scored under another rule with :meth:`with_rule`.
    """

    league_id: str
    season_start_year: int
    teams: tuple[str, ...]
    matches_played: np.ndarray
    wins: np.ndarray
    draws: np.ndarray
    losses: np.ndarray
    goals_for: np.ndarray
    goals_against: np.ndarray
    rule: PointsRule = TWO_POINTS

    @property
    def K(self) -> int:
        return len(self.teams)

    @property
    def n_matches(self) -> int:
        return int(self.matches_played.sum()) // 2

    @property
    def points(self) -> np.ndarray:
        r = self.rule
        return r.win_points * self.wins + r.draw_points * self.draws + r.loss_points * self.losses

    @property
    def shares(self) -> np.ndarray:
        """Points shares ``s``; sums to one whenever any points were awarded."""
        pts = self.points.astype(float)
        total = pts.sum()
        if total <= 0:
            raise ValueError(f"{self.league_id} {self.season_start_year}: no points awarded")
        return pts / total

    @property
    def win_shares(self) -> np.ndarray:
        """Per-team win fraction ``wins / matches_played``."""
        return self.wins / self._checked_m()

    @property
    def draw_shares(self) -> np.ndarray:
        return self.draws / self._checked_m()

    def _checked_m(self) -> np.ndarray:
        m = self.matches_played
        if np.any(m <= 0):
            idle = [t for t, k in zip(self.teams, m) if k <= 0]
            raise ValueError(f"teams without matches: {idle}")
        return m.astype(float)

    def with_rule(self, rule: PointsRule) -> "SeasonTable":
        if rule == self.rule:
            return self
        return SeasonTable(
            self.league_id,
            self.season_start_year,
            self.teams,
            self.matches_played,
            self.wins,
            self.draws,
            self.losses,
            self.goals_for,
            self.goals_against,
            rule,
        )

    def rows(self) -> list[dict]:
        pts = self.points
        return [
            {
                "team": t,
                "matches_played": int(self.matches_played[k]),
                "wins": int(self.wins[k]),
                "draws": int(self.draws[k]),
                "losses": int(self.losses[k]),
                "goals_for": int(self.goals_for[k]),
                "goals_against": int(self.goals_against[k]),
                "points": int(pts[k]),
            }
            for k, t in enumerate(self.teams)
        ]


def build_season_table(matches: Sequence[MatchRecord], rule: PointsRule = TWO_POINTS) -> SeasonTable:
    """Tabulate one league-season from its realized fixtures."""
    if not matches:
        raise ValueError("cannot build a season table from zero matches")
    ids = {(m.league_id, m.season_start_year) for m in matches}
    if len(ids) > 1:
        raise ValueError(f"matches span several league-seasons: {sorted(ids)}")
    league_id, season = ids.pop()

    teams = tuple(sorted({m.home_team for m in matches} | {m.away_team for m in matches}))
    index = {t: k for k, t in enumerate(teams)}
    K = len(teams)
    cols = np.zeros((6, K), dtype=np.int64)
    played, won, drawn, lost, gf, ga = cols
    for m in matches:
        h, a = index[m.home_team], index[m.away_team]
        played[h] += 1
        played[a] += 1
        gf[h] += m.home_goals
        ga[h] += m.away_goals
        gf[a] += m.away_goals
        ga[a] += m.home_goals
        if m.home_goals > m.away_goals:
            won[h] += 1
            lost[a] += 1
        elif m.home_goals < m.away_goals:
            won[a] += 1
            lost[h] += 1
        else:
            drawn[h] += 1
            drawn[a] += 1
    return SeasonTable(league_id, season, teams, played, won, drawn, lost, gf, ga, rule)


def build_season_tables(
    records: Iterable[MatchRecord], schedule: RuleSchedule | None = None
) -> dict[tuple[str, int], SeasonTable]:
    """One table per (league, season), scored under the rule in force."""
    schedule = schedule or RuleSchedule()
    return {
        key: build_season_table(ms, schedule.rule_for(*key))
        for key, ms in group_by_season(records).items()
    }


def season_covariates(table: SeasonTable) -> tuple[float, float, int]:
    """Mean win share, mean draw share and team count of a season."""
    return float(table.win_shares.mean()), float(table.draw_shares.mean()), table.K
