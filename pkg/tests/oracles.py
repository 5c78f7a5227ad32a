"""Independent reference computations used by the tests."""

from __future__ import annotations

from functools import lru_cache

import mpmath
import numpy as np


@lru_cache(maxsize=None)
def compositions(n: int, k: int) -> np.ndarray:
    """All non-negative integer k-vectors summing to n, as uint8 rows."""
    if k == 1:
        return np.array([[n]], dtype=np.uint8)
    parts = []
    for first in range(n + 1):
        rest = compositions(n - first, k - 1)
        parts.append(np.column_stack([np.full(len(rest), first, dtype=np.uint8), rest]))
    return np.vstack(parts)


def simplex_grid_min(X1, X0, v, steps: int = 100, chunk: int = 400_000) -> float:
    """Minimum of (X1 - X0 g)' diag(v) (X1 - X0 g) over the simplex grid of step 1/steps."""
    X1 = np.asarray(X1, float)
    X0 = np.asarray(X0, float)
    v = np.asarray(v, float)
    grid = compositions(steps, X0.shape[1])
    best = np.inf
    for s in range(0, len(grid), chunk):
        G = grid[s : s + chunk].astype(float) / steps
        R = G @ X0.T - X1  # residual per grid point
        best = min(best, float(np.min((R * R) @ v)))
    return best


def ols_normal_equations(X, y, dps: int = 50):
    """(X'X)^-1 X'y and the HC1 covariance at high precision."""
    with mpmath.workdps(dps):
        Xm = mpmath.matrix(X.tolist())
        ym = mpmath.matrix(y.tolist())
        XtX = Xm.T * Xm
        inv = XtX**-1
        beta = inv * (Xm.T * ym)
        e = ym - Xm * beta
        n, p = X.shape
        meat = mpmath.matrix(p, p)
        for i in range(n):
            row = Xm[i, :]
            meat += (e[i] ** 2) * (row.T * row)
        cov = inv * meat * inv * mpmath.mpf(n) / (n - p)
        return (
            np.array([float(beta[j]) for j in range(p)]),
            np.array([[float(cov[i, j]) for j in range(p)] for i in range(p)]),
        )


def hhi_max_numpy(K: int, win: int, draw: int, loss: int) -> float:
    """Max points-share HHI over all 3^(K(K-1)) double round robin results, vectorized."""
    fixtures = [(i, j) for i in range(K) for j in range(K) if i != j]
    n = len(fixtures)
    codes = (np.arange(3**n)[:, None] // 3 ** np.arange(n)) % 3  # 0 home win, 1 draw, 2 away win
    home_pts = np.choose(codes, [win, draw, loss])
    away_pts = np.choose(codes, [loss, draw, win])
    pts = np.zeros((len(codes), K))
    for f, (i, j) in enumerate(fixtures):
        pts[:, i] += home_pts[:, f]
        pts[:, j] += away_pts[:, f]
    tot = pts.sum(axis=1)
    return float(np.max((pts * pts).sum(axis=1) / (tot * tot)))
