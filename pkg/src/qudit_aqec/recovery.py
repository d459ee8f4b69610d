"""Recovery channels onto a codespace: Petz, Leung (polar) and Cafaro (normalized projection).

Every recovery here maps into the codespace, so each Kraus operator is stored
in the compact form ``R_j = C r_j`` with ``C`` the (D, K) codeword matrix and
``r_j`` a (K, D) "logical Kraus" block.  Dense operators are formed on demand.
"""
from dataclasses import dataclass, field

import numpy as np

from .tensor import DEFAULT_REL_TOL, apply_factored, polar_isometry, psd_sqrt

TAGS = ("Petz", "Leung", "Cafaro", "SyndromeLookup")


class PreconditionError(ValueError):
    pass


@dataclass(eq=False)
class RecoveryChannel:
    code: object
    logical_kraus: np.ndarray
    construction_tag: str
    labels: list = field(default_factory=list)
    noise: object = field(default=None, repr=False)
    _completion: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.construction_tag not in TAGS:
            raise ValueError(f"unknown construction tag {self.construction_tag!r}")
        r = np.asarray(self.logical_kraus, dtype=np.complex128)
        if r.ndim == 2:
            r = r[None]
        if r.size == 0:
            r = np.zeros((0, self.code.logical_dim, self.code.dim), dtype=np.complex128)
        if r.shape[1:] != (self.code.logical_dim, self.code.dim):
            raise ValueError(f"logical Kraus blocks have shape {r.shape[1:]}")
        self.logical_kraus = r
        if not self.labels:
            self.labels = [f"R{j}" for j in range(len(r))]

    def __len__(self):
        return len(self.logical_kraus)

    @property
    def kraus(self):
        """Dense Kraus operators ``C r_j`` (without the completion)."""
        c = self.code.codewords
        return [c @ r for r in self.logical_kraus]

    def effect(self):
        """``sum_j R_j^dag R_j``, which equals ``sum_j r_j^dag r_j``."""
        r = self.logical_kraus
        if len(r) == 0:
            return np.zeros((self.code.dim, self.code.dim), dtype=np.complex128)
        flat = r.reshape(-1, self.code.dim)
        return flat.conj().T @ flat

    @property
    def completion(self):
        """``sqrt(I - sum R^dag R)``; raises if the set is not trace non-increasing."""
        if self._completion is None:
            eff = self.effect()
            self._completion = psd_sqrt(np.eye(eff.shape[0]) - eff, clip_tol=1e-9)
        return self._completion

    def max_effect_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.effect())[-1]) if len(self) else 0.0

    def completeness_error(self):
        comp = self.completion
        total = self.effect() + comp.conj().T @ comp
        return float(np.abs(total - np.eye(total.shape[0])).max())

    def all_kraus(self):
        return self.kraus + [self.completion]

    def apply(self, rho):
        """Apply the recovery, completion included, to a density matrix."""
        out = np.zeros_like(rho, dtype=np.complex128)
        for r in self.all_kraus():
            out += r @ rho @ r.conj().T
        return out


def _images(code, errors):
    return [apply_factored(e, code.codewords) for e in errors]


def _labels(errors):
    return [getattr(e, "label", f"E{j}") for j, e in enumerate(errors)]


def petz_recovery(code, ks, rel_tol=DEFAULT_REL_TOL):
    """Transpose-channel recovery ``R_k = P E_k^dag E(P)^(-1/2)``.

    ``E(P) = Y Y^dag`` with ``Y`` the horizontal stack of the error images
    ``E_k C``; its inverse square root on the support comes from the SVD of
    ``Y``, so ``E(P)`` is never formed and is PSD by construction.
    """
    errors = list(ks)
    imgs = _images(code, errors)
    y = np.hstack(imgs)
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("noise channel annihilates the codespace")
    keep = s > np.sqrt(rel_tol) * s[0]
    u, s = u[:, keep], s[keep]
    inv_sqrt_u = u / s  # E(P)^(-1/2) = U diag(1/s) U^dag
    blocks = np.stack([(img.conj().T @ inv_sqrt_u) @ u.conj().T for img in imgs])
    return RecoveryChannel(code, blocks, "Petz", _labels(errors), noise=ks)


def _check_orthogonal(code, errors, imgs, tol):
    for a in range(len(imgs)):
        for b in range(a + 1, len(imgs)):
            val = float(np.abs(imgs[a].conj().T @ imgs[b]).max())
            if val > tol:
                raise PreconditionError(
                    f"errors {errors[a].label} and {errors[b].label} do not map the code "
                    f"to orthogonal subspaces (overlap {val:.3e})"
                )


def leung_recovery(code, errors, tol=1e-10, rel_tol=DEFAULT_REL_TOL):
    """Polar-decomposition recovery ``R_k = C U_k^dag`` with ``E_k C = U_k |E_k C|``.

    Rank-deficient images give partial isometries, so such errors are only
    partly undone.
    """
    errors = list(errors)
    imgs = _images(code, errors)
    _check_orthogonal(code, errors, imgs, tol)
    blocks, labels = [], []
    for e, img in zip(errors, imgs):
        iso, rank = polar_isometry(img, rel_tol)
        if rank == 0:
            continue
        blocks.append(iso.conj().T)
        labels.append(e.label)
    return RecoveryChannel(code, np.array(blocks), "Leung", labels)


def cafaro_recovery(code, errors, tol=1e-10, rel_tol=DEFAULT_REL_TOL):
    """Normalized-projection recovery ``R_k = sum_i |i_L><i_L| E_k^dag / sqrt(<i_L|E_k^dag E_k|i_L>)``.

    Requires ``<i_L|E_k^dag E_l|j_L>`` to vanish unless ``k = l`` and ``i = j``.
    Terms whose norm falls below ``rel_tol`` times the largest norm are dropped.
    """
    errors = list(errors)
    imgs = _images(code, errors)
    for a, ia in enumerate(imgs):
        for b, ib in enumerate(imgs):
            m = ia.conj().T @ ib
            if a == b:
                m = m - np.diag(np.diag(m))
            bad = np.argwhere(np.abs(m) > tol)
            if bad.size:
                i, j = bad[0]
                raise PreconditionError(
                    f"<{i}_L|E_k^dag E_l|{j}_L> = {m[i, j]:.3e} for k={errors[a].label}, "
                    f"l={errors[b].label}"
                )
    scale = max(float(np.linalg.norm(img, axis=0).max()) for img in imgs)
    blocks, labels = [], []
    for e, img in zip(errors, imgs):
        norms = np.linalg.norm(img, axis=0)
        live = norms > rel_tol * scale
        if not live.any():
            continue
        r = np.zeros((code.logical_dim, code.dim), dtype=np.complex128)
        r[live] = (img[:, live] / norms[live]).conj().T
        blocks.append(r)
        labels.append(e.label)
    return RecoveryChannel(code, np.array(blocks), "Cafaro", labels)


@dataclass
class EquivalenceResult:
    equal: bool
    max_deviation: float
    per_operator: dict


def leung_cafaro_check(code, errors, tol=1e-10):
    """Compare the Leung and Cafaro Kraus sets operator by operator up to a global phase."""
    leung = leung_recovery(code, errors)
    cafaro = cafaro_recovery(code, errors)
    lk = dict(zip(leung.labels, leung.logical_kraus))
    ck = dict(zip(cafaro.labels, cafaro.logical_kraus))
    dev = {}
    for lab in sorted(set(lk) | set(ck)):
        if lab not in lk or lab not in ck:
            other = lk.get(lab, ck.get(lab))
            dev[lab] = float(np.abs(other).max())
            continue
        a, b = lk[lab], ck[lab]
        ov = np.vdot(b, a)
        phase = ov / abs(ov) if abs(ov) > 0 else 1.0
        dev[lab] = float(np.abs(a - phase * b).max())
    worst = max(dev.values()) if dev else 0.0
    return EquivalenceResult(worst <= tol, worst, dev)
