"""Placebo and leave-one-out robustness checks around a synthetic-control fit."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .panel import PanelDataset
from .scm import ScmConfig, ScmFit, ScmWarning, fit_scm

POSITIVE_WEIGHT = 1e-6


@dataclass(frozen=True, eq=False)
class PlaceboResult:
    """One placebo refit: a pseudo-treated unit (space) or a pseudo year (time)."""

    fit: ScmFit
    pseudo_treated: str | None = None
    pseudo_year: int | None = None

    @property
    def ate(self) -> float:
        return self.fit.ate

    @property
    def pre_rmse(self) -> float:
        return self.fit.pre_rmse

    @property
    def effect_path(self) -> list[tuple[int, float]]:
        return [(t, float(g)) for t, g in zip(self.fit.seasons, self.fit.gaps)]


def _donor_pool(panel: PanelDataset, config: ScmConfig) -> tuple[str, ...]:
    if config.donors is not None:
        return config.donors
    return tuple(u for u in panel.units if u != config.treated)


def placebo_in_space(panel: PanelDataset, config: ScmConfig) -> list[PlaceboResult]:
    """Reassign treatment to each donor in turn.

    The truly treated unit never enters a pseudo donor pool, since its
    post-treatment outcomes are themselves treated.
    """
    donors = _donor_pool(panel, config)
    if len(donors) < 2:
        raise ValueError(f"placebo-in-space needs at least 2 donors, got {len(donors)}")
    out = []
    for d in donors:
        pool = tuple(u for u in donors if u != d)
        fit = fit_scm(panel, config.with_(treated=d, donors=pool))
        out.append(PlaceboResult(fit, pseudo_treated=d))
    return out


def placebo_in_time(panel: PanelDataset, config: ScmConfig, pseudo_year: int) -> PlaceboResult:
    """Refit with an earlier treatment year; effects are read up to the real one."""
    first = config.spec.first_year if config.spec.first_year is not None else panel.seasons[0]
    if pseudo_year >= config.treatment_year:
        raise ValueError(
            f"pseudo year {pseudo_year} must precede the treatment year {config.treatment_year}"
        )
    n_pre = sum(1 for t in panel.seasons if first <= t < pseudo_year)
    if n_pre < 2:
        raise ValueError(f"pseudo year {pseudo_year} leaves {n_pre} pre-period season(s); need at least 2")
    fit = fit_scm(panel, config.with_(treatment_year=pseudo_year, post_end=config.treatment_year - 1))
    return PlaceboResult(fit, pseudo_year=pseudo_year)


@dataclass(frozen=True, eq=False)
class LooResult:
    base: ScmFit
    refits: tuple[tuple[str, ScmFit], ...]
    years: tuple[int, ...]
    base_effect: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    # set when the base fit had a single positively weighted donor
    single_donor: bool = False

    def envelope(self) -> list[tuple[int, float, float, float]]:
        """(year, base effect, min refit effect, max refit effect)."""
        return [
            (t, float(b), float(lo), float(hi))
            for t, b, lo, hi in zip(self.years, self.base_effect, self.lower, self.upper)
        ]


def leave_one_out(panel: PanelDataset, config: ScmConfig, base: ScmFit) -> LooResult:
    """Drop each positively weighted donor of ``base`` and refit."""
    donors = base.donors
    dropped = [d for d, g in zip(donors, base.G.values) if g > POSITIVE_WEIGHT]
    single = len(dropped) < 2
    if single:
        warnings.warn(
            "base fit has fewer than 2 positively weighted donors; leave-one-out is degenerate",
            ScmWarning,
            stacklevel=2,
        )
    refits = []
    for d in dropped:
        pool = tuple(u for u in donors if u != d)
        if not pool:
            warnings.warn(f"dropping {d} leaves no donors; refit skipped", ScmWarning, stacklevel=2)
            continue
        refits.append((d, fit_scm(panel, config.with_(donors=pool))))

    post = base.post_mask
    years = tuple(t for t, m in zip(base.seasons, post) if m)
    base_effect = base.gaps[post]
    if refits:
        paths = np.array([f.gaps[post] for _, f in refits])
        lower, upper = paths.min(axis=0), paths.max(axis=0)
    else:
        lower = upper = np.full(len(years), np.nan)
    return LooResult(base, tuple(refits), years, base_effect, lower, upper, single)
