"""Hessian assembly backends.

The compiled extension ``symdisc._kernels`` is used when it was built and
``SYMDISC_PURE_PYTHON`` is unset; otherwise the numpy version below runs.
Both return ``H[k, l] = sum_i Re Tr(W_i E_k W_i E_l)`` over the Hermitian
basis produced by :class:`symdisc.sdp.HermitianBasis`.
"""
import os

import numpy as np

#: Bound on the complex temporaries of the numpy path, in elements.
_CHUNK_ELEMS = 1 << 22


def hessian_numpy(Ws, coef, rows, cols):
    d = coef.shape[0]
    H = np.zeros((d, d))
    chunk = max(1, _CHUNK_ELEMS // max(d, 1))
    for W in Ws:
        for a in range(0, d, chunk):
            b = min(d, a + chunk)
            acc = np.zeros((b - a, d), dtype=np.complex128)
            for s in (0, 1):
                ck = cols[a:b, s][:, None]
                rk = rows[a:b, s][:, None]
                cks = coef[a:b, s][:, None]
                for u in (0, 1):
                    acc += (cks * coef[None, :, u]) * W[ck, rows[None, :, u]] * W[cols[None, :, u], rk]
            H[a:b] += acc.real
    return H


hessian_compiled = None
if not os.environ.get("SYMDISC_PURE_PYTHON"):
    try:
        from ._kernels import hessian as hessian_compiled
    except ImportError:
        hessian_compiled = None

BACKEND = "cython" if hessian_compiled is not None else "numpy"


def hessian(Ws, coef, rows, cols, backend=None):
    """Barrier Hessian for the slack inverses ``Ws`` (sequence of N x N)."""
    backend = backend or BACKEND
    if backend == "cython":
        if hessian_compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return hessian_compiled(np.stack(Ws).astype(np.complex128, copy=False), coef, rows, cols)
    if backend != "numpy":
        raise ValueError(f"unknown backend {backend!r}")
    return hessian_numpy(Ws, coef, rows, cols)
