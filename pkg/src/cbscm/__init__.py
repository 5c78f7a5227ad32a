"""Competitive-balance indices and synthetic-control analysis of league rule changes."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from ._backend import BACKEND
from .did import DidFit, RankDeficiencyError, fit_did
from .inference import LooResult, PlaceboResult, leave_one_out, placebo_in_space, placebo_in_time
from .league import (
    THREE_POINTS,
    TWO_POINTS,
    MatchRecord,
    PointsRule,
    RuleSchedule,
    SeasonTable,
    build_season_table,
    build_season_tables,
    parse_matches,
)
from .metrics import balance_indices, dcb, hhi_bounds
from .panel import PanelDataset, PredictorSpec, build_panel, build_predictors
from .scm import ScmConfig, ScmFit, fit_scm, optimize_v, solve_inner

__all__ = [
    "BACKEND",
    "DidFit",
    "LooResult",
    "MatchRecord",
    "PanelDataset",
    "PlaceboResult",
    "PointsRule",
    "PredictorSpec",
    "RankDeficiencyError",
    "RuleSchedule",
    "ScmConfig",
    "ScmFit",
    "SeasonTable",
    "THREE_POINTS",
    "TWO_POINTS",
    "balance_indices",
    "build_panel",
    "build_predictors",
    "build_season_table",
    "build_season_tables",
    "dcb",
    "fit_did",
    "fit_scm",
    "hhi_bounds",
    "leave_one_out",
    "optimize_v",
    "parse_matches",
    "placebo_in_space",
    "placebo_in_time",
    "solve_inner",
]
