# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled Hessian assembly for the log-det barrier.

Each real coordinate k of the block-diagonal variable is a Hermitian basis
matrix E_k = coef[k,0] e_{rows[k,0]} e_{cols[k,0]}^H + coef[k,1] (...),
so Re Tr(W E_k W E_l) needs only four products of entries of W.
"""
import numpy as np

from libc.stdint cimport int64_t


def hessian(Ws, coef, rows, cols):
    """H[k, l] = sum_i Re Tr(W_i E_k W_i E_l) for a stack Ws of shape (K, N, N)."""
    Ws = np.asarray(Ws)
    # (N, N, K) so the sum over constraints walks contiguous memory, plus
    # transposed copies: for fixed k every load then comes from two rows
    cdef double[:, :, ::1] wr = np.ascontiguousarray(np.moveaxis(Ws.real, 0, -1))
    cdef double[:, :, ::1] wi = np.ascontiguousarray(np.moveaxis(Ws.imag, 0, -1))
    cdef double[:, :, ::1] tr = np.ascontiguousarray(np.moveaxis(Ws.real, 0, -1).transpose(1, 0, 2))
    cdef double[:, :, ::1] ti = np.ascontiguousarray(np.moveaxis(Ws.imag, 0, -1).transpose(1, 0, 2))
    coef = np.asarray(coef)
    cdef double[:, ::1] cr = np.ascontiguousarray(coef.real)
    cdef double[:, ::1] ci = np.ascontiguousarray(coef.imag)
    cdef const int64_t[:, ::1] rw = rows
    cdef const int64_t[:, ::1] cl_ = cols
    cdef int[::1] nterms = np.where(coef[:, 1] == 0, 1, 2).astype(np.intc)

    cdef Py_ssize_t K = wr.shape[2]
    cdef Py_ssize_t N = wr.shape[0]
    cdef Py_ssize_t d = cr.shape[0]
    cdef Py_ssize_t i, k, l, oa, ob
    cdef int s, u, nk, nl
    cdef double pr, pi_, zr, zi, ar, ai, br, bi, acc
    cdef double *war[2]
    cdef double *wai[2]
    cdef double *wbr[2]
    cdef double *wbi[2]
    out = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] H = out
    if d == 0:
        return out
    with nogil:
        for k in range(d):
            nk = nterms[k]
            for s in range(nk):
                # row cols[k,s] of W and row rows[k,s] of W^T
                war[s] = &wr[cl_[k, s], 0, 0]
                wai[s] = &wi[cl_[k, s], 0, 0]
                wbr[s] = &tr[rw[k, s], 0, 0]
                wbi[s] = &ti[rw[k, s], 0, 0]
            for l in range(k, d):
                nl = nterms[l]
                acc = 0.0
                for s in range(nk):
                    for u in range(nl):
                        oa = rw[l, u] * K
                        ob = cl_[l, u] * K
                        zr = 0.0
                        zi = 0.0
                        for i in range(K):
                            ar = war[s][oa + i]
                            ai = wai[s][oa + i]
                            br = wbr[s][ob + i]
                            bi = wbi[s][ob + i]
                            zr = zr + ar * br - ai * bi
                            zi = zi + ar * bi + ai * br
                        pr = cr[k, s] * cr[l, u] - ci[k, s] * ci[l, u]
                        pi_ = cr[k, s] * ci[l, u] + ci[k, s] * cr[l, u]
                        acc = acc + pr * zr - pi_ * zi
                H[k, l] = acc
    out += np.triu(out, 1).T
    return out
