"""Competitive-balance indices for a single league-season.

Two readings of a team's "win share" are in play. The dispersion family
(``sigma``, ``r``, ``namsi`` and their hatted variants) uses the win
fraction ``wins / matches_played``; the concentration family (``hhi_w``,
``ahhi_w``) uses the team's share of all wins in the league.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _backend
from .league import DataWarning, MatchRecord, PointsRule, SeasonTable, TWO_POINTS

SHARE_TOL = 1e-9
DCB_TOL = 1e-9
EXHAUSTIVE_MAX_K = 4


class BoundsViolationError(ValueError):
    """Normalized HHI fell outside [0, 1]: the upper bound is not a true maximum here."""


@dataclass(frozen=True)
class HhiBounds:
    hhi_min: float
    hhi_max: float
    K: int
    rule: PointsRule
    method: str  # "exhaustive" or "cascade-formula"


def hhi(shares: Sequence[float]) -> float:
    s = np.asarray(shares, dtype=float)
    if np.any(s < 0):
        raise ValueError("shares must be non-negative")
    if abs(s.sum() - 1.0) > SHARE_TOL:
        raise ValueError(f"shares sum to {s.sum()!r}, not 1")
    return float(np.dot(s, s))


def cascade_hhi(K: int) -> float:
    """HHI of the fully hierarchical season (each team beats every team below it).

    Points shares are 2(K-j)/(K(K-1)) for ranks j=1..K under any rule with
    zero points for a loss, giving 2(2K-1)/(3K(K-1)).
    """
    if K < 2:
        raise ValueError("need at least two teams")
    return 2.0 * (2 * K - 1) / (3.0 * K * (K - 1))


@lru_cache(maxsize=None)
def _exhaustive_max(K: int, win: int, draw: int, loss: int) -> float:
    return _backend.hhi_max_enumerate(K, win, draw, loss)


def hhi_bounds(K: int, rule: PointsRule = TWO_POINTS, method: str = "auto") -> HhiBounds:
    """Concentration bounds of a K-team double round robin.

    ``method="auto"`` enumerates all 3^(K(K-1)) results for K <= 4 and uses
    the cascade closed form above that. ``"cascade"`` and ``"exhaustive"``
    force one route.
    """
    if K < 2:
        raise ValueError(f"HHI bounds need K >= 2, got {K}")
    if method == "auto":
        method = "exhaustive" if K <= EXHAUSTIVE_MAX_K else "cascade"
    if method == "exhaustive":
        hmax = _exhaustive_max(K, rule.win_points, rule.draw_points, rule.loss_points)
        return HhiBounds(1.0 / K, hmax, K, rule, "exhaustive")
    if method == "cascade":
        if rule.loss_points != 0:
            raise ValueError("cascade closed form assumes zero points for a loss")
        return HhiBounds(1.0 / K, cascade_hhi(K), K, rule, "cascade-formula")
    raise ValueError(f"unknown bounds method {method!r}")


def dcb_from_shares(shares: Sequence[float], bounds: HhiBounds) -> float:
    h = hhi(shares)
    span = bounds.hhi_max - bounds.hhi_min
    if span <= 0:
        raise ValueError("degenerate bounds: hhi_max equals hhi_min")
    raw = (h - bounds.hhi_min) / span
    if raw < -DCB_TOL or raw > 1.0 + DCB_TOL:
        raise BoundsViolationError(
            f"normalized HHI {raw:.12g} outside [0, 1] with {bounds.method} bounds "
            f"(K={bounds.K}, rule {bounds.rule.label})"
        )
    return math.sqrt(min(max(raw, 0.0), 1.0))


def dcb(table: SeasonTable, rule: PointsRule | None = None, bounds: HhiBounds | None = None) -> float:
    """Distance to Competitive Balance of a season's points shares.

    The default normalizer is the cascade configuration, which keeps the
    index on one scale under 2- and 3-point rules. Pass ``bounds`` (e.g.
    ``hhi_bounds(K, rule, "exhaustive")``) to normalize by another maximum.
    """
    if rule is not None:
        table = table.with_rule(rule)
    if bounds is None:
        bounds = hhi_bounds(table.K, table.rule, "cascade")
    return dcb_from_shares(table.shares, bounds)


def _require_balanced(table: SeasonTable) -> None:
    if table.K < 2:
        raise ValueError(f"{table.league_id} {table.season_start_year}: need K >= 2")
    table.win_shares  # raises on a team without matches


def sigma(table: SeasonTable) -> float:
    _require_balanced(table)
    w = table.win_shares
    return float(np.sqrt(np.mean((w - 0.5) ** 2)))


def sigma_hat(table: SeasonTable) -> float:
    _require_balanced(table)
    w = table.win_shares
    return float(np.sqrt(np.mean((w - w.mean()) ** 2)))


def _matches_per_team(table: SeasonTable) -> float:
    m = table.matches_played
    if np.any(m != m[0]):
        warnings.warn(
            f"{table.league_id} {table.season_start_year}: teams played unequal numbers "
            f"of matches ({m.min()}..{m.max()}); using the mean",
            DataWarning,
            stacklevel=3,
        )
        return float(m.mean())
    return float(m[0])


def r(table: SeasonTable) -> float:
    """Relative dispersion: sigma over the idealized sd 0.5/sqrt(m)."""
    return sigma(table) * math.sqrt(_matches_per_team(table)) / 0.5


def r_hat(table: SeasonTable) -> float:
    return sigma_hat(table) * math.sqrt(_matches_per_team(table)) / 0.5


def full_predictability_shares(K: int) -> np.ndarray:
    """Win fractions of the perfectly predictable season, best team first."""
    return (K - np.arange(1, K + 1)) / (K - 1.0)


def _namsi(table: SeasonTable, center: float) -> float:
    if table.K < 2:
        raise ValueError("NAMSI needs K >= 2")
    w = table.win_shares
    w_max = full_predictability_shares(table.K)
    den = float(np.sum((w_max - center) ** 2))
    if den <= 0:
        raise ValueError("degenerate NAMSI denominator")
    return math.sqrt(float(np.sum((w - center) ** 2)) / den)


def namsi(table: SeasonTable) -> float:
    return _namsi(table, 0.5)


def namsi_hat(table: SeasonTable) -> float:
    return _namsi(table, float(table.win_shares.mean()))


def _concentration(counts: np.ndarray, what: str) -> float:
    total = counts.sum()
    if total <= 0:
        raise ValueError(f"no {what} in season: share-of-{what} HHI undefined")
    return hhi(counts / total)


def hhi_w(table: SeasonTable) -> float:
    return _concentration(table.wins, "wins")


def ahhi_w(table: SeasonTable) -> float:
    return hhi_w(table) - 1.0 / table.K


def hhi_d(table: SeasonTable) -> float:
    return _concentration(table.draws, "draws")


def ahhi_d(table: SeasonTable) -> float:
    return hhi_d(table) - 1.0 / table.K


def avg_goals_per_team_match(season: SeasonTable | Sequence[MatchRecord], divisor: float = 2.0) -> float:
    """Goals per team per match (``divisor=1`` gives goals per match)."""
    if isinstance(season, SeasonTable):
        goals = int(season.goals_for.sum())
        n = season.n_matches
    else:
        goals = sum(m.home_goals + m.away_goals for m in season)
        n = len(season)
    if n == 0:
        raise ValueError("no matches in season")
    return goals / (divisor * n)


@dataclass(frozen=True)
class BalanceIndices:
    league_id: str
    season_start_year: int
    rule: str
    K: int
    dcb: float
    hhi: float
    hhi_min: float
    hhi_max: float
    sigma: float
    r: float
    sigma_hat: float
    r_hat: float
    namsi: float
    namsi_hat: float
    hhi_w: float | None
    ahhi_w: float | None
    hhi_d: float | None
    ahhi_d: float | None
    avg_goals_per_team_match: float
    mean_win_share: float
    dcb_exhaustive: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _maybe(fn, table):
    try:
        return fn(table)
    except ValueError:
        return None


def balance_indices(table: SeasonTable, rule: PointsRule | None = None) -> BalanceIndices:
    """Every index for one season; undefined win/draw HHIs come back as None."""
    if rule is not None:
        table = table.with_rule(rule)
    bounds = hhi_bounds(table.K, table.rule, "cascade")
    dcb_ex = None
    if table.K <= EXHAUSTIVE_MAX_K:
        # incomplete seasons can exceed the complete-round-robin maximum
        dcb_ex = _maybe(lambda t: dcb(t, bounds=hhi_bounds(t.K, t.rule, "exhaustive")), table)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DataWarning)
        r_val, r_hat_val = r(table), r_hat(table)
    return BalanceIndices(
        league_id=table.league_id,
        season_start_year=table.season_start_year,
        rule=table.rule.label,
        K=table.K,
        dcb=dcb(table, bounds=bounds),
        hhi=hhi(table.shares),
        hhi_min=bounds.hhi_min,
        hhi_max=bounds.hhi_max,
        sigma=sigma(table),
        r=r_val,
        sigma_hat=sigma_hat(table),
        r_hat=r_hat_val,
        namsi=namsi(table),
        namsi_hat=namsi_hat(table),
        hhi_w=_maybe(hhi_w, table),
        ahhi_w=_maybe(ahhi_w, table),
        hhi_d=_maybe(hhi_d, table),
        ahhi_d=_maybe(ahhi_d, table),
        avg_goals_per_team_match=avg_goals_per_team_match(table),
        mean_win_share=float(table.win_shares.mean()),
        dcb_exhaustive=dcb_ex,
    )
