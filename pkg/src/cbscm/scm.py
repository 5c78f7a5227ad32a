"""Synthetic control: simplex-constrained donor weights inside an outer V search."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import _backend
from .panel import PanelDataset, PredictorBlock, PredictorSpec, build_predictors

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
RMSE_TIE_TOL = 1e-10


class ScmWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class VWeights:
    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or abs(v.sum() - 1.0) > FEASIBILITY_TOL:
            raise ValueError("V weights must be non-negative and sum to one")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class DonorWeights:
    values: np.ndarray
    objective_value: float
    donors: tuple[str, ...] = ()

    def __post_init__(self):
        g = np.asarray(self.values, dtype=float)
        if np.any(g < 0) or abs(g.sum() - 1.0) > FEASIBILITY_TOL:
            raise ValueError("donor weights must lie on the simplex")
        object.__setattr__(self, "values", g)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.donors, map(float, self.values)))


def solve_inner(X1, X0, V, donors: Sequence[str] = ()) -> DonorWeights:
    """Donor weights minimizing (X1 - X0 G)' V (X1 - X0 G) over the simplex.

    ``V`` may be the diagonal as a vector or a diagonal matrix.
    """
    X1 = np.asarray(X1, dtype=float).ravel()
    X0 = np.asarray(X0, dtype=float)
    if X0.ndim == 1:
        X0 = X0.reshape(len(X1), -1)
    V = np.asarray(V, dtype=float)
    if V.ndim == 2:
        if V.shape[0] != V.shape[1] or np.any(V - np.diag(np.diag(V))):
            raise ValueError("V must be diagonal")
        V = np.diag(V)
    if X0.ndim != 2 or X0.shape[0] != X1.shape[0] or V.shape != X1.shape:
        raise ValueError(
            f"dimension mismatch: X1 {X1.shape}, X0 {X0.shape}, V {V.shape}"
        )
    if X0.shape[1] == 0 or X1.shape[0] == 0:
        raise ValueError("need at least one predictor and one donor")
    if np.any(V < 0):
        raise ValueError("V entries must be non-negative")
    sv = np.sqrt(V)
    g, obj, _ = _backend.simplex_ls(sv[:, None] * X0, sv * X1)
    return DonorWeights(g, float(obj), tuple(donors))


@dataclass(frozen=True)
class ScmConfig:
    treated: str
    treatment_year: int
    donors: tuple[str, ...] | None = None
    spec: PredictorSpec = field(default_factory=PredictorSpec)
    post_end: int | None = None
    seed: int = 0
    n_random_starts: int = 4
    maxfev: int | None = None
    standardize: bool = True

    def __post_init__(self):
        if self.donors is not None:
            object.__setattr__(self, "donors", tuple(self.donors))

    def with_(self, **changes) -> "ScmConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class BalanceRow:
    predictor: str
    v_weight: float
    treated: float
    synthetic: float
    control_bias: float
    donor_average: float
    average_bias: float


@dataclass(frozen=True, eq=False)
class ScmFit:
    config: ScmConfig
    donors: tuple[str, ...]
    G: DonorWeights
    V: VWeights
    seasons: tuple[int, ...]
    actual: np.ndarray
    synthetic: np.ndarray
    gaps: np.ndarray
    ate: float
    pre_rmse: float
    balance: tuple[BalanceRow, ...]
    block: PredictorBlock
    post_mask: np.ndarray
    pre_mask: np.ndarray

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def post_years(self) -> list[int]:
        return [t for t, m in zip(self.seasons, self.post_mask) if m]

    def effects(self) -> list[tuple[int, float, float, float]]:
        """(year, actual, synthetic, effect) over the evaluation window."""
        return [
            (t, float(a), float(s), float(g))
            for t, a, s, g, m in zip(self.seasons, self.actual, self.synthetic, self.gaps, self.post_mask)
            if m
        ]


def _pre_mask(panel: PanelDataset, first: int, treatment_year: int) -> np.ndarray:
    seasons = np.asarray(panel.seasons)
    return (seasons >= first) & (seasons < treatment_year)


def _row_scale(block: PredictorBlock) -> np.ndarray:
    allx = np.column_stack([block.X1, block.X0])
    sd = allx.std(axis=1, ddof=1) if allx.shape[1] > 1 else np.zeros(allx.shape[0])
    return np.where(sd > 0, sd, 1.0)


def _u_to_v(u: np.ndarray) -> np.ndarray | None:
    q = u * u
    s = q.sum()
    if not np.isfinite(s) or s <= 0:
        return None
    return q / s


def optimize_v(
    panel: PanelDataset,
    treated: str,
    treatment_year: int,
    block: PredictorBlock,
    *,
    first_year: int | None = None,
    seed: int = 0,
    n_random_starts: int = 4,
    maxfev: int | None = None,
    standardize: bool = True,
) -> tuple[VWeights, DonorWeights]:
    """Predictor weights minimizing the pre-period outcome RMSE of the synthetic unit.

    Nelder-Mead runs over v = u**2 / sum(u**2) from equal weights, each
    one-hot vector and ``n_random_starts`` seeded Dirichlet draws. The best
    RMSE wins; candidates within 1e-10 of it are ranked by distance to
    equal weights. The returned ``DonorWeights.objective_value`` is on the
    standardized predictor scale when ``standardize`` is set.
    """
    first = first_year if first_year is not None else panel.seasons[0]
    pre = _pre_mask(panel, first, treatment_year)
    if not pre.any():
        raise ValueError("empty pre-period")
    y1 = panel.series(treated)[pre]
    Y0 = panel.outcome[[panel.unit_index(d) for d in block.donors]][:, pre].T
    X1, X0 = block.X1, block.X0
    if standardize:
        scale = _row_scale(block)
        X1, X0 = X1 / scale, X0 / scale[:, None]
    K, I = X0.shape
    equal_v = np.full(K, 1.0 / K)

    if I > 1 and np.all(X0 == X0[:, :1]) and np.all(Y0 == Y0[:, :1]):
        warnings.warn("all donors are identical; returning equal donor weights", ScmWarning, stacklevel=2)
        g = np.full(I, 1.0 / I)
        r = X1 - X0 @ g
        return VWeights(equal_v, block.labels), DonorWeights(g, float(r @ r / K), block.donors)

    def rmse(u):
        v = _u_to_v(u)
        if v is None:
            return np.inf
        return _backend.weighted_fit(v, X1, X0, y1, Y0)[0]

    rng = np.random.default_rng(seed)
    starts = [np.ones(K)] + [np.eye(K)[k] for k in range(K)] if K > 1 else [np.ones(1)]
    starts += [np.sqrt(rng.dirichlet(np.ones(K))) for _ in range(n_random_starts)] if K > 1 else []
    maxfev = maxfev or 60 * K + 200

    candidates = []
    for u0 in starts:
        if K == 1:
            candidates.append((rmse(u0), np.ones(1)))
            continue
        res = minimize(
            rmse,
            u0,
            method="Nelder-Mead",
            options={"maxfev": maxfev, "xatol": 1e-7, "fatol": 1e-12, "adaptive": True},
        )
        u_best = res.x if res.fun <= rmse(u0) else u0
        v = _u_to_v(u_best)
        candidates.append((rmse(u_best), v))

    best = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] <= best + RMSE_TIE_TOL]
    _, v = min(tied, key=lambda c: float(np.sum((c[1] - equal_v) ** 2)))
    _, g, obj = _backend.weighted_fit(v, X1, X0, y1, Y0)
    log.debug("V search: %d starts, best pre-RMSE %.6g", len(starts), best)
    return VWeights(v, block.labels), DonorWeights(g, float(obj), block.donors)


def _bias(value: float, reference: float) -> float:
    return (value - reference) / reference if reference != 0 else float("nan")


def fit_scm(panel: PanelDataset, config: ScmConfig) -> ScmFit:
    """Build predictors, search V, and compute the synthetic path and effects."""
    donors = config.donors
    if donors is None:
        donors = tuple(u for u in panel.units if u != config.treated)
    block = build_predictors(panel, config.treated, config.treatment_year, config.spec, donors)
    first = config.spec.first_year if config.spec.first_year is not None else panel.seasons[0]
    V, G = optimize_v(
        panel,
        config.treated,
        config.treatment_year,
        block,
        first_year=first,
        seed=config.seed,
        n_random_starts=config.n_random_starts,
        maxfev=config.maxfev,
        standardize=config.standardize,
    )

    actual = panel.series(config.treated).copy()
    Y0 = panel.outcome[[panel.unit_index(d) for d in block.donors]].T
    synthetic = Y0 @ G.values
    gaps = actual - synthetic
    seasons = np.asarray(panel.seasons)
    post_end = config.post_end if config.post_end is not None else panel.seasons[-1]
    post = (seasons >= config.treatment_year) & (seasons <= post_end)
    if not post.any():
        raise ValueError("empty evaluation window")
    pre = _pre_mask(panel, first, config.treatment_year)

    syn_x = block.X0 @ G.values
    avg_x = block.X0.mean(axis=1)
    balance = tuple(
        BalanceRow(
            label,
            float(V.values[k]),
            float(block.X1[k]),
            float(syn_x[k]),
            _bias(syn_x[k], block.X1[k]),
            float(avg_x[k]),
            _bias(avg_x[k], block.X1[k]),
        )
        for k, label in enumerate(block.labels)
    )
    return ScmFit(
        config=config,
        donors=block.donors,
        G=G,
        V=V,
        seasons=panel.seasons,
        actual=actual,
        synthetic=synthetic,
        gaps=gaps,
        ate=float(gaps[post].mean()),
        pre_rmse=float(np.sqrt(np.mean(gaps[pre] ** 2))),
        balance=balance,
        block=block,
        post_mask=post,
        pre_mask=pre,
    )
