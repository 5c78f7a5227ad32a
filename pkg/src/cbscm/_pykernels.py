"""Pure-Python (numpy) versions of the hot kernels.

These mirror ``_kernels.pyx`` step for step and are used when the compiled
extension is unavailable or ``CBSCM_BACKEND=python`` is set.
"""

from __future__ import annotations

import itertools

import numpy as np

_EPS = np.finfo(float).eps


def helmert_basis(f: int) -> np.ndarray:
    """Orthonormal basis (f x f-1) of the sum-zero subspace of R^f."""
    N = np.zeros((f, f - 1))
    for j in range(1, f):
        c = 1.0 / np.sqrt(j * (j + 1.0))
        N[:j, j - 1] = c
        N[j, j - 1] = -j * c
    return N


def simplex_ls(A, b, tol=1e-12, max_iter=0):
    """Minimize ||A g - b||^2 over the probability simplex.

    Primal active-set method started from equal weights. Each subspace
    step is a minimum-norm least-squares solve, so rank-deficient faces
    are handled without regularization and the result is deterministic.

    Returns ``(g, objective, iterations)``.
    """
    A = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    K, I = A.shape
    if I == 1:
        g = np.ones(1)
        r = A[:, 0] - b
        return g, float(r @ r), 0
    if max_iter <= 0:
        max_iter = 50 + 20 * I

    norm_a = np.sqrt(np.sum(A * A))
    thresh = tol * norm_a * (norm_a + np.sqrt(b @ b))

    g = np.full(I, 1.0 / I)
    free = np.ones(I, dtype=bool)
    just_added = -1
    it = 0
    while it < max_iter:
        it += 1
        F = np.flatnonzero(free)
        f = F.size
        if f > 1:
            r = A @ g - b
            N = helmert_basis(f)
            AF = A[:, F]
            M = AF @ N
            # a face whose columns coincide yields pure rounding noise in M
            if np.sqrt(np.sum(M * M)) <= 16 * _EPS * max(K, f) * np.sqrt(np.sum(AF * AF)):
                p = np.zeros(f)
            else:
                z = np.linalg.lstsq(M, -r, rcond=_EPS * max(K, f - 1))[0]
                p = N @ z
            alpha = 1.0
            block = -1
            for k in range(f):
                if p[k] < 0.0:
                    a = -g[F[k]] / p[k]
                    if a < alpha:
                        alpha = a
                        block = k
            if block >= 0:
                if F[block] == just_added and alpha <= 0.0:
                    break
                g[F] += alpha * p
                g[F[block]] = 0.0
                free[F[block]] = False
                for k in range(f):
                    if g[F[k]] <= 0.0:
                        g[F[k]] = 0.0
                        free[F[k]] = False
                just_added = -1
                continue
            g[F] += p
        r = A @ g - b
        grad = A.T @ r
        lam = grad[F].mean()
        j = -1
        best = -thresh
        for i in range(I):
            if not free[i] and grad[i] - lam < best:
                best = grad[i] - lam
                j = i
        if j < 0:
            break
        free[j] = True
        just_added = j

    np.maximum(g, 0.0, out=g)
    g /= g.sum()
    r = A @ g - b
    return g, float(r @ r), it


def weighted_fit(v, X1, X0, y1, Y0, tol=1e-12):
    """Inner solve for predictor weights ``v`` plus the outcome RMSE it induces.

    Returns ``(rmse, g, objective)`` where ``objective`` is the V-weighted
    predictor discrepancy and ``rmse`` is over the rows of ``y1``/``Y0``.
    """
    sv = np.sqrt(np.asarray(v, dtype=float))
    A = sv[:, None] * X0
    b = sv * X1
    g, obj, _ = simplex_ls(A, b, tol)
    gap = y1 - Y0 @ g
    return float(np.sqrt(np.mean(gap * gap))), g, obj


def hhi_max_enumerate(K, win_points, draw_points, loss_points):
    """Largest points-share HHI over every result of a K-team double round robin."""
    fixtures = [(i, j) for i in range(K) for j in range(K) if i != j]
    n = len(fixtures)
    # points gained by (home, away) for outcome codes 0=home win, 1=draw, 2=away win
    gain = np.array(
        [[win_points, loss_points], [draw_points, draw_points], [loss_points, win_points]],
        dtype=np.int64,
    )
    inc = np.zeros((n, 3, K), dtype=np.int64)
    for c, (i, j) in enumerate(fixtures):
        inc[c, :, i] = gain[:, 0]
        inc[c, :, j] = gain[:, 1]

    # split fixtures into a head block (enumerated in chunks) and a tail block
    n_tail = min(n, 8)
    n_head = n - n_tail
    tail_codes = np.array(list(itertools.product(range(3), repeat=n_tail)), dtype=np.int64)
    tail_pts = inc[np.arange(n_head, n), tail_codes].sum(axis=1)  # (3^n_tail, K)

    best = 0.0
    for head in itertools.product(range(3), repeat=n_head):
        base = inc[np.arange(n_head), head].sum(axis=0) if n_head else 0
        pts = (tail_pts + base).astype(float)
        tot = pts.sum(axis=1)
        h = np.sum(pts * pts, axis=1) / (tot * tot)
        best = max(best, float(h.max()))
    return best
