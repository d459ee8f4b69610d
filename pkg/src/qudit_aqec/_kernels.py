"""Hot inner loops: site-wise application of tensor-product operators.

Two implementations share one signature.  The numba path is used when numba
imports cleanly and ``QUDIT_AQEC_NUMBA`` is not set to ``0``; otherwise the
pure-numpy path is used.  Both are importable directly for benchmarking.
"""
import os

import numpy as np

JIT_OPTIONS = {
    "nogil": True,
    "cache": True,
}


def _numba_requested():
    flag = os.environ.get("QUDIT_AQEC_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAS_NUMBA = False


def apply_factored_numpy(factors, psi):
    """Apply ``factors[0] ⊗ ... ⊗ factors[n-1]`` to the columns of ``psi``.

    ``factors`` has shape (n, d, d); ``psi`` has shape (d**n, k).  Site 0 is the
    most significant base-d digit.
    """
    n, d, _ = factors.shape
    k = psi.shape[1]
    out = psi
    for site in range(n):
        f = factors[site]
        # identity factors are common in Kraus products (A_0 at gamma=0, I in stabilizers)
        if _is_identity(f):
            continue
        left = d**site
        right = d ** (n - site - 1) * k
        t = out.reshape(left, d, right)
        out = np.einsum("rc,acb->arb", f, t, optimize=False).reshape(d**n, k)
    if out is psi:
        out = psi.copy()
    return out


def _is_identity(f):
    d = f.shape[0]
    return np.array_equal(f, np.eye(d, dtype=f.dtype))


if HAS_NUMBA:

    @njit(**JIT_OPTIONS)
    def _apply_site_nb(f, src, dst, d, left, right):
        for a in range(left):
            for r in range(d):
                base_out = (a * d + r) * right
                for b in range(right):
                    dst[base_out + b] = 0.0
            for c in range(d):
                base_in = (a * d + c) * right
                for r in range(d):
                    coeff = f[r, c]
                    if coeff.real == 0.0 and coeff.imag == 0.0:
                        continue
                    base_out = (a * d + r) * right
                    for b in range(right):
                        dst[base_out + b] += coeff * src[base_in + b]

    @njit(**JIT_OPTIONS)
    def _apply_factored_nb(factors, flat, k):
        n = factors.shape[0]
        d = factors.shape[1]
        size = flat.shape[0]
        src = flat.copy()
        dst = np.empty(size, dtype=np.complex128)
        for site in range(n):
            left = d**site
            right = d ** (n - site - 1) * k
            _apply_site_nb(factors[site], src, dst, d, left, right)
            src, dst = dst, src
        return src

    def apply_factored_numba(factors, psi):
        factors = np.ascontiguousarray(factors, dtype=np.complex128)
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        out = _apply_factored_nb(factors, psi.reshape(-1), psi.shape[1])
        return out.reshape(psi.shape)

else:  # pragma: no cover
    apply_factored_numba = None


def backend_name():
    return "numba" if (HAS_NUMBA and _numba_requested()) else "numpy"


def apply_factored_kernel(factors, psi):
    if HAS_NUMBA and _numba_requested():
        return apply_factored_numba(factors, psi)
    return apply_factored_numpy(
        np.asarray(factors, dtype=np.complex128), np.asarray(psi, dtype=np.complex128)
    )
