"""Two-group difference-in-differences regression with HC1 robust errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .panel import COVARIATE_LABELS, COVARIATES, PanelDataset

VARIANCE = "HC1"

TERM_LABELS = {
    "time": "Time Dummy",
    "interaction": "Time*Treatment",
    "treatment": "Treatment",
    **COVARIATE_LABELS,
    "constant": "Constant",
}


class RankDeficiencyError(ValueError):
    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        super().__init__(f"design matrix is rank deficient; collinear columns: {', '.join(self.columns)}")


@dataclass(frozen=True, eq=False)
class DidDesign:
    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    rows: tuple[tuple[str, int], ...]


def build_design(
    panel: PanelDataset,
    treated: str,
    treatment_year: int,
    covariates: Sequence[str] | bool = True,
    units: Sequence[str] | None = None,
) -> DidDesign:
    """One row per unit-season; columns time, interaction, treatment, covariates, constant."""
    if covariates is True:
        covariates = COVARIATES
    elif covariates is False:
        covariates = ()
    bad = [c for c in covariates if c not in COVARIATES]
    if bad:
        raise ValueError(f"unknown covariates {bad}")
    units = list(units) if units is not None else list(panel.units)
    if treated not in units:
        raise ValueError(f"treated unit {treated!r} not in the design")
    if len(units) < 2:
        raise ValueError("difference-in-differences needs at least two units")
    seasons = np.asarray(panel.seasons)
    if not seasons[0] < treatment_year <= seasons[-1]:
        raise ValueError(f"treatment year {treatment_year} outside the panel's seasons")

    rows, blocks, ys = [], [], []
    time = (seasons >= treatment_year).astype(float)
    for u in units:
        i = panel.unit_index(u)
        treat = np.full(len(seasons), float(u == treated))
        cols = [time, time * treat, treat]
        cols += [panel.covariates[i, :, COVARIATES.index(c)] for c in covariates]
        cols.append(np.ones(len(seasons)))
        blocks.append(np.column_stack(cols))
        ys.append(panel.outcome[i])
        rows.extend((u, int(t)) for t in seasons)
    columns = ("time", "interaction", "treatment", *covariates, "constant")
    return DidDesign(np.vstack(blocks), np.concatenate(ys), columns, tuple(rows))


def _check_rank(X: np.ndarray, columns: Sequence[str]) -> None:
    norms = np.linalg.norm(X, axis=0)
    zero = norms == 0
    if zero.any():
        raise RankDeficiencyError([c for c, z in zip(columns, zero) if z])
    _, s, vt = np.linalg.svd(X / norms, full_matrices=False)
    tol = max(X.shape) * np.finfo(float).eps * s[0]
    null = vt[s <= tol]
    if null.size:
        involved = np.any(np.abs(null) > 1e-8, axis=0)
        raise RankDeficiencyError([c for c, k in zip(columns, involved) if k])


def _stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


@dataclass(frozen=True)
class DidTerm:
    name: str
    estimate: float
    std_error: float
    z: float
    p_value: float

    @property
    def stars(self) -> str:
        return _stars(self.p_value)

    @property
    def label(self) -> str:
        return TERM_LABELS.get(self.name, self.name)


@dataclass(frozen=True, eq=False)
class DidFit:
    terms: tuple[DidTerm, ...]
    r_squared: float
    n_observations: int
    variance: str
    design: DidDesign
    residuals: np.ndarray

    def term(self, name: str) -> DidTerm:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def coefficients(self) -> dict[str, float]:
        return {t.name: t.estimate for t in self.terms}


def ols_hc1(X: np.ndarray, y: np.ndarray, columns: Sequence[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """QR-based OLS. Returns (beta, HC1 covariance, residuals)."""
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more observations ({n}) than regressors ({p})")
    _check_rank(X, columns)
    Q, R = linalg.qr(X, mode="economic")
    beta = linalg.solve_triangular(R, Q.T @ y)
    e = y - X @ beta
    Rinv = linalg.solve_triangular(R, np.eye(p))
    QtE = Q.T * e
    meat = QtE @ QtE.T
    cov = Rinv @ meat @ Rinv.T * (n / (n - p))
    return beta, cov, e


def fit_did(
    panel: PanelDataset,
    treated: str,
    treatment_year: int,
    covariates: Sequence[str] | bool = True,
    units: Sequence[str] | None = None,
) -> DidFit:
    """Outcome on time, treatment, their product and season covariates.

    Robust standard errors are HC1; p-values use the normal approximation.
    """
    design = build_design(panel, treated, treatment_year, covariates, units)
    beta, cov, e = ols_hc1(design.X, design.y, design.columns)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    terms = []
    for name, b, s in zip(design.columns, beta, se):
        z = b / s if s > 0 else math.copysign(math.inf, b) if b else 0.0
        p = math.erfc(abs(z) / math.sqrt(2.0))
        terms.append(DidTerm(name, float(b), float(s), float(z), float(p)))
    tss = float(np.sum((design.y - design.y.mean()) ** 2))
    r2 = 1.0 - float(e @ e) / tss if tss > 0 else float("nan")
    return DidFit(tuple(terms), r2, len(design.y), VARIANCE, design, e)
