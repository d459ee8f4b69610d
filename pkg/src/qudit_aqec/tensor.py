"""Dense complex linear-algebra primitives shared by every other module.

Basis ordering is row-major: site 0 is the most significant base-d digit, so
``|x0 x1 ... x_{n-1}>`` sits at index ``sum(x_s * d**(n-1-s))``.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from ._kernels import apply_factored_kernel

DEFAULT_REL_TOL = 1e-12


class DimensionError(ValueError):
    pass


def kron(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(mats):
    return reduce(np.kron, [np.asarray(m) for m in mats])


@dataclass(frozen=True, eq=False)
class FactoredOperator:
    """A tensor product of single-qudit matrices.

    ``weight`` is the total damping order carried by the operator; for an
    amplitude-damping Kraus product ``A_i ⊗ A_j ⊗ ...`` it is ``i + j + ...``.
    ``index`` keeps the per-site labels when the operator comes from a Kraus
    enumeration (empty otherwise).
    """

    factors: np.ndarray
    weight: int = 0
    index: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=np.complex128)
        if f.ndim != 3 or f.shape[1] != f.shape[2]:
            raise DimensionError(f"factors must have shape (n, d, d), got {f.shape}")
        if self.weight < 0:
            raise ValueError("weight must be non-negative")
        f.setflags(write=False)
        object.__setattr__(self, "factors", f)

    @property
    def local_dim(self):
        return self.factors.shape[1]

    @property
    def num_sites(self):
        return self.factors.shape[0]

    @property
    def dim(self):
        return self.local_dim**self.num_sites

    @property
    def label(self):
        if self.index:
            return "A_" + "".join(str(i) for i in self.index)
        return "op"

    def expand(self):
        return kron_all(self.factors)

    def adjoint(self):
        return FactoredOperator(
            np.conj(np.transpose(self.factors, (0, 2, 1))), self.weight, self.index
        )

    def __matmul__(self, other):
        if isinstance(other, FactoredOperator):
            if other.factors.shape != self.factors.shape:
                raise DimensionError("factor shapes differ")
            return FactoredOperator(
                np.einsum("sij,sjk->sik", self.factors, other.factors),
                self.weight + other.weight,
            )
        return apply_factored(self, other)


def apply_factored(op, psi):
    """Apply a :class:`FactoredOperator` to a state vector or a stack of columns.

    ``psi`` may be 1-D (length d**n) or 2-D (d**n, k).  The result matches
    ``op.expand() @ psi`` without forming the full matrix.
    """
    psi = np.asarray(psi)
    vec = psi.ndim == 1
    cols = psi.reshape(-1, 1) if vec else psi
    if cols.shape[0] != op.dim:
        raise DimensionError(
            f"state has {cols.shape[0]} amplitudes, operator acts on {op.dim}"
        )
    out = apply_factored_kernel(op.factors, cols)
    return out.reshape(-1) if vec else out


def apply_local(state, gate, sites, dims):
    """Apply ``gate`` to the listed ``sites`` of a state over mixed local ``dims``.

    ``gate`` acts on ``sites`` in the order given (first listed site is the most
    significant digit of the gate's own index).
    """
    dims = tuple(dims)
    sites = list(sites)
    if len(set(sites)) != len(sites) or any(s < 0 or s >= len(dims) for s in sites):
        raise DimensionError(f"invalid sites {sites} for {len(dims)} wires")
    sub = [dims[s] for s in sites]
    gdim = int(np.prod(sub))
    gate = np.asarray(gate)
    if gate.shape != (gdim, gdim):
        raise DimensionError(f"gate shape {gate.shape} does not match sites {sub}")
    t = np.asarray(state).reshape(dims)
    t = np.moveaxis(t, sites, range(len(sites)))
    rest = t.shape[len(sites):]
    t = (gate @ t.reshape(gdim, -1)).reshape(tuple(sub) + rest)
    t = np.moveaxis(t, range(len(sites)), sites)
    return t.reshape(-1)


def is_hermitian(m, atol=1e-10):
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=atol, rtol=0)


def eigh_desc(m):
    """Hermitian eigendecomposition with eigenvalues in descending order."""
    w, v = np.linalg.eigh(m)
    return w[::-1], v[:, ::-1]


def psd_inv_sqrt(m, rel_tol=DEFAULT_REL_TOL, herm_tol=1e-10):
    """Pseudo-inverse square root of a Hermitian PSD matrix.

    Eigenvalues above ``rel_tol * lambda_max`` map to ``lambda**-0.5``; the rest
    (the kernel) map to zero.
    """
    m = np.asarray(m, dtype=np.complex128)
    scale = max(np.abs(m).max(), 1.0)
    if not is_hermitian(m, atol=herm_tol * scale):
        raise ValueError("psd_inv_sqrt: input is not Hermitian")
    w, v = eigh_desc((m + m.conj().T) / 2)
    lmax = w[0] if w.size else 0.0
    if w.size and w[-1] < -herm_tol * max(lmax, 1.0):
        raise ValueError(f"psd_inv_sqrt: negative eigenvalue {w[-1]:.3e}")
    if lmax <= 0:
        return np.zeros_like(m)
    keep = w > rel_tol * lmax
    f = np.zeros_like(w)
    f[keep] = 1.0 / np.sqrt(w[keep])
    out = (v * f) @ v.conj().T
    return (out + out.conj().T) / 2


def psd_sqrt(m, clip_tol=1e-10):
    """Square root of a Hermitian PSD matrix; small negative eigenvalues are clipped."""
    m = np.asarray(m, dtype=np.complex128)
    w, v = eigh_desc((m + m.conj().T) / 2)
    if w.size and w[-1] < -clip_tol * max(w[0], 1.0):
        raise ValueError(f"psd_sqrt: negative eigenvalue {w[-1]:.3e}")
    w = np.clip(w, 0.0, None)
    out = (v * np.sqrt(w)) @ v.conj().T
    return (out + out.conj().T) / 2


def support_projector(m, rel_tol=DEFAULT_REL_TOL):
    w, v = eigh_desc((m + m.conj().T) / 2)
    if not w.size or w[0] <= 0:
        return np.zeros_like(m)
    vk = v[:, w > rel_tol * w[0]]
    return vk @ vk.conj().T


def polar_isometry(k, rel_tol=DEFAULT_REL_TOL):
    """Partial isometry from the polar decomposition of a tall matrix.

    Returns ``(W @ Vh restricted to retained singular values, rank)``.  An
    all-zero input gives rank 0 and a zero isometry.
    """
    k = np.asarray(k, dtype=np.complex128)
    w, s, vh = np.linalg.svd(k, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return np.zeros_like(k), 0
    keep = s > rel_tol * s[0]
    rank = int(keep.sum())
    return w[:, keep] @ vh[keep], rank


def polar_parts(k, rel_tol=DEFAULT_REL_TOL):
    """Return ``(isometry, positive_part, rank)`` with ``k ≈ isometry @ positive_part``."""
    k = np.asarray(k, dtype=np.complex128)
    w, s, vh = np.linalg.svd(k, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return np.zeros_like(k), np.zeros((k.shape[1], k.shape[1]), complex), 0
    keep = s > rel_tol * s[0]
    iso = w[:, keep] @ vh[keep]
    pos = (vh[keep].conj().T * s[keep]) @ vh[keep]
    return iso, pos, int(keep.sum())
