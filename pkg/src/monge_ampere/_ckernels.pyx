# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay interchangeable with ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def hessian_stencils(double[:, ::1] full, double dx):
    cdef Py_ssize_t m = full.shape[0]
    cdef Py_ssize_t n = m - 2
    cdef Py_ssize_t j, k, p
    cdef double inv = 1.0 / (dx * dx)
    cdef double inv4 = 0.25 * inv
    cdef double c
    uxx_a = np.empty(n * n)
    uyy_a = np.empty(n * n)
    uxy_a = np.empty(n * n)
    cdef double[::1] uxx = uxx_a
    cdef double[::1] uyy = uyy_a
    cdef double[::1] uxy = uxy_a
    for k in range(1, n + 1):
        for j in range(1, n + 1):
            p = (k - 1) * n + (j - 1)
            c = 2.0 * full[k, j]
            uxx[p] = (full[k, j - 1] - c + full[k, j + 1]) * inv
            uyy[p] = (full[k - 1, j] - c + full[k + 1, j]) * inv
            uxy[p] = (full[k - 1, j - 1] - full[k + 1, j - 1]
                      - full[k - 1, j + 1] + full[k + 1, j + 1]) * inv4
    return uxx_a, uyy_a, uxy_a


def ilu0_factor(int[::1] indptr, int[::1] indices, double[::1] data):
    """In-place-style ILU(0) on a CSR pattern with sorted column indices.

    Returns ``(lu, diag)``: the combined factor values (unit-lower L strictly
    below the diagonal, U on and above) and each row's diagonal position.
    """
    cdef Py_ssize_t nrow = indptr.shape[0] - 1
    cdef Py_ssize_t i, p, q, k, col
    cdef double piv, lik
    lu_a = np.array(data, dtype=np.float64, copy=True)
    diag_a = np.full(nrow, -1, dtype=np.intc)
    iw_a = np.full(nrow, -1, dtype=np.intp)
    cdef double[::1] lu = lu_a
    cdef int[::1] diag = diag_a
    cdef Py_ssize_t[::1] iw = iw_a

    for i in range(nrow):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = <int>p
        if diag[i] < 0:
            raise ZeroDivisionError(f"ILU(0): row {i} has no diagonal entry")

    for i in range(nrow):
        for p in range(indptr[i], indptr[i + 1]):
            iw[indices[p]] = p
        for p in range(indptr[i], diag[i]):
            k = indices[p]
            piv = lu[diag[k]]
            lik = lu[p] / piv
            lu[p] = lik
            for q in range(diag[k] + 1, indptr[k + 1]):
                col = indices[q]
                if iw[col] >= 0:
                    lu[iw[col]] -= lik * lu[q]
        for p in range(indptr[i], indptr[i + 1]):
            iw[indices[p]] = -1
        if lu[diag[i]] == 0.0:
            raise ZeroDivisionError(f"ILU(0): zero pivot in row {i}")
    return lu_a, diag_a


def ilu0_solve(int[::1] indptr, int[::1] indices, double[::1] lu, int[::1] diag,
               double[::1] b):
    cdef Py_ssize_t nrow = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef double s
    x_a = np.empty(nrow)
    cdef double[::1] x = x_a
    for i in range(nrow):
        s = b[i]
        for p in range(indptr[i], diag[i]):
            s -= lu[p] * x[indices[p]]
        x[i] = s
    for i in range(nrow - 1, -1, -1):
        s = x[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            s -= lu[p] * x[indices[p]]
        x[i] = s / lu[diag[i]]
    return x_a
