# cython: language_level=3
"""Compiled versions of the hot kernels; see ``_pykernels`` for the reference."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_lapack cimport dgelsd

cnp.import_array()

cdef double _EPS = np.finfo(float).eps


cdef void _helmert(int f, double* N) noexcept nogil:
    # column-major f x (f-1)
    cdef int i, j
    cdef double c
    for j in range(f * (f - 1)):
        N[j] = 0.0
    for j in range(1, f):
        c = 1.0 / sqrt(j * (j + 1.0))
        for i in range(j):
            N[(j - 1) * f + i] = c
        N[(j - 1) * f + j] = -j * c


cdef class _Workspace:
    cdef int nrow, ncol, lwork
    cdef double* r
    cdef double* N
    cdef double* M
    cdef double* rhs
    cdef double* s
    cdef double* p
    cdef double* grad
    cdef double* work
    cdef int* iwork
    cdef int* F
    cdef char* free_

    def __cinit__(self, int K, int I):
        cdef int ld = K if K > I else I
        cdef int m = K, n = I - 1 if I > 1 else 1, nrhs = 1, lda = K, ldb = ld
        cdef int rank, info, lwork = -1
        cdef double rcond = -1.0, wq
        cdef int iwq
        self.nrow = K
        self.ncol = I
        self.r = <double*> malloc(K * sizeof(double))
        self.N = <double*> malloc(I * I * sizeof(double))
        self.M = <double*> malloc(K * I * sizeof(double))
        self.rhs = <double*> malloc(ld * sizeof(double))
        self.s = <double*> malloc(I * sizeof(double))
        self.p = <double*> malloc(I * sizeof(double))
        self.grad = <double*> malloc(I * sizeof(double))
        self.F = <int*> malloc(I * sizeof(int))
        self.free_ = <char*> malloc(I * sizeof(char))
        # workspace query for the largest subproblem (K x I-1)
        dgelsd(&m, &n, &nrhs, self.M, &lda, self.rhs, &ldb, self.s, &rcond,
               &rank, &wq, &lwork, &iwq, &info)
        self.lwork = <int> wq + 16
        self.work = <double*> malloc(self.lwork * sizeof(double))
        self.iwork = <int*> malloc((iwq + 16 + 11 * I) * sizeof(int))

    def __dealloc__(self):
        free(self.r); free(self.N); free(self.M); free(self.rhs); free(self.s)
        free(self.p); free(self.grad); free(self.F); free(self.free_)
        free(self.work); free(self.iwork)


cdef double _residual(const double* A, const double* b, const double* g,
                      int K, int I, double* r) noexcept nogil:
    cdef int i, k
    cdef double acc, ss = 0.0
    for k in range(K):
        acc = -b[k]
        for i in range(I):
            acc += A[k * I + i] * g[i]
        r[k] = acc
        ss += acc * acc
    return ss


cdef int _simplex_ls(const double* A, const double* b, int K, int I,
                     double tol, int max_iter, double* g, _Workspace ws) noexcept:
    # A is row-major K x I. Same algorithm as _pykernels.simplex_ls.
    cdef int i, j, k, c, f, it = 0, just_added = -1, block, jbest
    cdef int m, n, nrhs = 1, lda, ldb, rank, info, lwork = ws.lwork
    cdef double alpha, a, lam, best, acc, norm_m, norm_f, norm_a = 0.0, norm_b = 0.0, thresh, rcond, tot
    cdef double* r = ws.r
    cdef double* N = ws.N
    cdef double* M = ws.M
    cdef double* rhs = ws.rhs
    cdef double* p = ws.p
    cdef double* grad = ws.grad
    cdef int* F = ws.F
    cdef char* fr = ws.free_

    if I == 1:
        g[0] = 1.0
        return 0
    if max_iter <= 0:
        max_iter = 50 + 20 * I
    for k in range(K * I):
        norm_a += A[k] * A[k]
    for k in range(K):
        norm_b += b[k] * b[k]
    norm_a = sqrt(norm_a)
    thresh = tol * norm_a * (norm_a + sqrt(norm_b))

    for i in range(I):
        g[i] = 1.0 / I
        fr[i] = 1

    while it < max_iter:
        it += 1
        f = 0
        for i in range(I):
            if fr[i]:
                F[f] = i
                f += 1
        if f > 1:
            _residual(A, b, g, K, I, r)
            _helmert(f, N)
            # M = A[:, F] @ N, column-major K x (f-1)
            norm_m = 0.0
            norm_f = 0.0
            for c in range(f - 1):
                for k in range(K):
                    acc = 0.0
                    for j in range(f):
                        acc += A[k * I + F[j]] * N[c * f + j]
                    M[c * K + k] = acc
                    norm_m += acc * acc
            for j in range(f):
                for k in range(K):
                    norm_f += A[k * I + F[j]] * A[k * I + F[j]]
            if sqrt(norm_m) <= 16 * _EPS * (K if K > f else f) * sqrt(norm_f):
                for j in range(f):
                    p[j] = 0.0
            else:
                for k in range(K):
                    rhs[k] = -r[k]
                m = K
                n = f - 1
                lda = K
                ldb = K if K > n else n
                rcond = _EPS * (K if K > n else n)
                dgelsd(&m, &n, &nrhs, M, &lda, rhs, &ldb, ws.s, &rcond, &rank,
                       ws.work, &lwork, ws.iwork, &info)
                # p_F = N z
                for j in range(f):
                    acc = 0.0
                    for c in range(f - 1):
                        acc += N[c * f + j] * rhs[c]
                    p[j] = acc
            alpha = 1.0
            block = -1
            for j in range(f):
                if p[j] < 0.0:
                    a = -g[F[j]] / p[j]
                    if a < alpha:
                        alpha = a
                        block = j
            if block >= 0:
                if F[block] == just_added and alpha <= 0.0:
                    break
                for j in range(f):
                    g[F[j]] += alpha * p[j]
                g[F[block]] = 0.0
                fr[F[block]] = 0
                for j in range(f):
                    if g[F[j]] <= 0.0:
                        g[F[j]] = 0.0
                        fr[F[j]] = 0
                just_added = -1
                continue
            for j in range(f):
                g[F[j]] += p[j]
        _residual(A, b, g, K, I, r)
        lam = 0.0
        for i in range(I):
            acc = 0.0
            for k in range(K):
                acc += A[k * I + i] * r[k]
            grad[i] = acc
        for j in range(f):
            lam += grad[F[j]]
        lam /= f
        jbest = -1
        best = -thresh
        for i in range(I):
            if not fr[i] and grad[i] - lam < best:
                best = grad[i] - lam
                jbest = i
        if jbest < 0:
            break
        fr[jbest] = 1
        just_added = jbest

    tot = 0.0
    for i in range(I):
        if g[i] < 0.0:
            g[i] = 0.0
        tot += g[i]
    for i in range(I):
        g[i] /= tot
    return it


def simplex_ls(A, b, double tol=1e-12, int max_iter=0):
    """Minimize ||A g - b||^2 over the probability simplex.

    Returns ``(g, objective, iterations)``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Ac = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] bc = np.ascontiguousarray(b, dtype=np.float64)
    cdef int K = Ac.shape[0], I = Ac.shape[1]
    if bc.shape[0] != K:
        raise ValueError("A and b disagree in row count")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = np.empty(I)
    cdef _Workspace ws = _Workspace(K, I)
    it = _simplex_ls(&Ac[0, 0], &bc[0], K, I, tol, max_iter, &g[0], ws)
    obj = _residual(&Ac[0, 0], &bc[0], &g[0], K, I, ws.r)
    return g, obj, it


def weighted_fit(v, X1, X0, y1, Y0, double tol=1e-12):
    """Inner solve for predictor weights ``v`` plus the outcome RMSE it induces."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vc = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] x1 = np.ascontiguousarray(X1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] x0 = np.ascontiguousarray(X0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] yc = np.ascontiguousarray(y1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Yc = np.ascontiguousarray(Y0, dtype=np.float64)
    cdef int K = x0.shape[0], I = x0.shape[1], T = Yc.shape[0]
    cdef int k, i, t
    cdef double sv, acc, ss = 0.0, obj
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] A = np.empty((K, I))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.empty(K)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = np.empty(I)
    for k in range(K):
        sv = sqrt(vc[k])
        b[k] = sv * x1[k]
        for i in range(I):
            A[k, i] = sv * x0[k, i]
    cdef _Workspace ws = _Workspace(K, I)
    _simplex_ls(&A[0, 0], &b[0], K, I, tol, 0, &g[0], ws)
    obj = _residual(&A[0, 0], &b[0], &g[0], K, I, ws.r)
    for t in range(T):
        acc = yc[t]
        for i in range(I):
            acc -= Yc[t, i] * g[i]
        ss += acc * acc
    return sqrt(ss / T), g, obj


def hhi_max_enumerate(int K, int win_points, int draw_points, int loss_points):
    """Largest points-share HHI over every result of a K-team double round robin."""
    cdef int n = K * (K - 1), c, i, j, t
    cdef long long total, sq
    cdef double h, best = 0.0
    cdef int* home = <int*> malloc(n * sizeof(int))
    cdef int* away = <int*> malloc(n * sizeof(int))
    cdef int* code = <int*> malloc(n * sizeof(int))
    cdef long long* pts = <long long*> malloc(K * sizeof(long long))
    cdef long long gh[3]
    cdef long long ga[3]
    gh[0] = win_points; gh[1] = draw_points; gh[2] = loss_points
    ga[0] = loss_points; ga[1] = draw_points; ga[2] = win_points
    c = 0
    for i in range(K):
        for j in range(K):
            if i != j:
                home[c] = i
                away[c] = j
                c += 1
    for t in range(K):
        pts[t] = 0
    for c in range(n):
        code[c] = 0
        pts[home[c]] += gh[0]
        pts[away[c]] += ga[0]
    # base-3 odometer; each tick changes one digit incrementally
    while True:
        total = 0
        sq = 0
        for t in range(K):
            total += pts[t]
            sq += pts[t] * pts[t]
        h = <double> sq / (<double> total * <double> total)
        if h > best:
            best = h
        c = 0
        while c < n and code[c] == 2:
            pts[home[c]] += gh[0] - gh[2]
            pts[away[c]] += ga[0] - ga[2]
            code[c] = 0
            c += 1
        if c == n:
            break
        pts[home[c]] += gh[code[c] + 1] - gh[code[c]]
        pts[away[c]] += ga[code[c] + 1] - ga[code[c]]
        code[c] += 1
    free(home); free(away); free(code); free(pts)
    return best
