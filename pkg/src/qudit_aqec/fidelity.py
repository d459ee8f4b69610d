"""Fidelity metrics for recovery-after-damping and the fidelity-loss coefficient chi.

All recoveries built in this package map into the codespace, so the composite
``R_j E_k`` restricted to the codespace is a K x K block
``T_jk = r_j (E_k C)``.  The completion contributes ``C^dag S E_k C`` with
``S`` the completion operator.  Every fidelity below is a function of these
blocks only:

* entanglement fidelity ``(1/K^2) sum |Tr T|^2``;
* pure-state fidelity ``sum |phi^dag T phi|^2 = w^dag Q w`` with
  ``w = conj(phi) ⊗ phi`` and ``Q = sum conj(vec T) vec(T)^T`` (K^2 x K^2).
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channel import amplitude_damping, kraus_operator
from .codes import four_qudit_code
from .kl import correctable_set
from .recovery import cafaro_recovery, leung_recovery, petz_recovery
from .syndromes import syndrome_decoder
from .tensor import DimensionError, apply_factored

DEFAULT_SEED = 0xC0DE
CHI_WINDOW = (1e-3, 3e-2)
CHI_POINTS = 12
RECOVERIES = ("petz", "syndrome", "leung", "cafaro")


def pure_state_fidelity(psi, rho):
    """``<psi| rho |psi>``."""
    psi = np.asarray(psi)
    rho = np.asarray(rho)
    if rho.shape != (psi.size, psi.size):
        raise DimensionError(f"state of length {psi.size} vs rho of shape {rho.shape}")
    return float(np.vdot(psi, rho @ psi).real)


def transfer_blocks(code, ks, rec, include_completion=None):
    """Stack of K x K blocks of ``R_j E_k`` on the codespace, shape (N, K, K).

    The completion is skipped for a Petz recovery built from the same Kraus
    set: its Kraus operators then span exactly the range of the noise, so the
    completion block vanishes identically.
    """
    kdim = code.logical_dim
    imgs = np.stack([apply_factored(op, code.codewords) for op in ks])  # (N, D, K)
    y = np.concatenate(list(imgs), axis=1)  # (D, N*K)
    r = rec.logical_kraus.reshape(-1, code.dim)  # (J*K, D)
    if len(r):
        t = (r @ y).reshape(len(rec), kdim, len(imgs), kdim).transpose(0, 2, 1, 3)
        blocks = t.reshape(-1, kdim, kdim)
    else:
        blocks = np.zeros((0, kdim, kdim), dtype=np.complex128)
    if include_completion is None:
        include_completion = not (rec.construction_tag == "Petz" and getattr(rec, "noise", None) is ks)
    if include_completion:
        s = rec.completion
        comp = code.codewords.conj().T @ (s @ y)  # (K, N*K)
        comp = comp.reshape(kdim, len(imgs), kdim).transpose(1, 0, 2)
        blocks = np.concatenate([blocks, comp])
    return blocks


def q_matrix(blocks):
    """``Q = sum_t conj(vec T_t) vec(T_t)^T`` in row-major vec ordering."""
    flat = blocks.reshape(len(blocks), -1)
    return flat.conj().T @ flat


def _w(phi):
    phi = phi / np.linalg.norm(phi)
    return np.kron(phi.conj(), phi)


def fidelity_from_q(q, phi):
    w = _w(np.asarray(phi, dtype=np.complex128))
    return float(np.vdot(w, q @ w).real)


def entanglement_fidelity(code, ks, rec, blocks=None):
    """Entanglement fidelity of ``rec ∘ noise`` on the maximally mixed logical state."""
    blocks = transfer_blocks(code, ks, rec) if blocks is None else blocks
    tr = np.trace(blocks, axis1=1, axis2=2)
    return float((np.abs(tr) ** 2).sum() / code.logical_dim**2)


@dataclass
class FidelityResult:
    value: float
    gamma: float
    recovery_tag: str
    argmin_state: np.ndarray | None = field(default=None, repr=False)
    argmin_logical: np.ndarray | None = field(default=None, repr=False)
    converged: bool = True


def _starts(k, n_starts, rng):
    starts = []
    for m in range(k):
        v = np.zeros(k, dtype=np.complex128)
        v[m] = 1
        starts.append(v)
    starts.append(np.ones(k, dtype=np.complex128))
    starts.append(np.exp(2j * np.pi * np.arange(k) / k))
    while len(starts) < n_starts:
        starts.append(rng.normal(size=k) + 1j * rng.normal(size=k))
    return starts[:n_starts]


def worst_case_fidelity(code, ks, rec, n_starts=50, seed=DEFAULT_SEED, gamma=float("nan"), maxiter=4000,
                        blocks=None):
    """Minimum of ``F(psi)`` over pure codespace states via multi-start Nelder-Mead.

    States are parametrized by 2K reals (real and imaginary parts, normalized
    inside the objective).  Starts: every basis codeword, the uniform and the
    Fourier superpositions, then seeded Gaussian draws.
    """
    k = code.logical_dim
    blocks = transfer_blocks(code, ks, rec) if blocks is None else blocks
    q = q_matrix(blocks)

    def f(x):
        phi = x[:k] + 1j * x[k:]
        nrm = np.linalg.norm(phi)
        if nrm < 1e-12:
            return 1.0
        w = np.kron(phi.conj(), phi) / nrm**2
        return float(np.vdot(w, q @ w).real)

    rng = np.random.default_rng(seed)
    best, best_x, all_conv = math.inf, None, True
    for s in _starts(k, n_starts, rng):
        x0 = np.concatenate([s.real, s.imag])
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": maxiter, "adaptive": True})
        if res.fun < best:
            best, best_x = float(res.fun), res.x
            all_conv = bool(res.success)
    phi = best_x[:k] + 1j * best_x[k:]
    phi = phi / np.linalg.norm(phi)
    return FidelityResult(best, gamma, rec.construction_tag, code.codewords @ phi, phi, all_conv)


def qutrit_state(theta1, theta2, phi1=0.0, phi2=0.0):
    """Logical qutrit amplitudes on the two-sphere-angle parametrization."""
    return np.array([
        np.cos(theta1) * np.cos(theta2),
        np.exp(1j * phi1) * np.cos(theta1) * np.sin(theta2),
        np.exp(1j * phi2) * np.sin(theta1),
    ])


def logical_state_sweep(code, ks, rec, theta_grid, phi1=0.0, phi2=0.0, blocks=None):
    """Fidelity surface ``F[i, j]`` at ``(theta_grid[i], theta_grid[j])`` for a qutrit code."""
    if code.logical_dim != 3:
        raise ValueError("the angle parametrization is defined for a three-level logical space")
    blocks = transfer_blocks(code, ks, rec) if blocks is None else blocks
    q = q_matrix(blocks)
    th = np.asarray(theta_grid, dtype=float)
    t1, t2 = np.meshgrid(th, th, indexing="ij")
    phis = np.stack([
        np.cos(t1) * np.cos(t2),
        np.exp(1j * phi1) * np.cos(t1) * np.sin(t2),
        np.exp(1j * phi2) * np.sin(t1) + 0 * t2,
    ], axis=-1).reshape(-1, 3)
    w = (phis.conj()[:, :, None] * phis[:, None, :]).reshape(len(phis), 9)
    vals = np.einsum("ni,ij,nj->n", w.conj(), q, w).real
    return vals.reshape(t1.shape)


def grid_minimum(code, ks, rec, n_theta=60, n_phase=8, blocks=None):
    """Minimum fidelity over a dense (theta1, theta2, phi1, phi2) grid of qutrit states."""
    th = np.linspace(0, np.pi / 2, n_theta)
    ph = np.linspace(0, 2 * np.pi, n_phase, endpoint=False)
    blocks = transfer_blocks(code, ks, rec) if blocks is None else blocks
    return min(
        float(logical_state_sweep(code, ks, rec, th, p1, p2, blocks=blocks).min())
        for p1 in ph for p2 in ph
    )


# --- chi extraction ---------------------------------------------------------------------

@dataclass
class ChiFit:
    d: int
    recovery_tag: str
    chi: float
    c3: float
    fit_residual: float
    gamma_window: tuple
    flagged: bool = False


def chi_extract(curve, d=0, recovery_tag=""):
    """Fit ``(1 - F) / gamma^2 = chi + c3 gamma`` by least squares; returns the intercept."""
    g = np.array([c[0] for c in curve], dtype=float)
    f = np.array([c[1] for c in curve], dtype=float)
    if g.size < 2:
        raise ValueError("need at least two points")
    y = (1 - f) / g**2
    a = np.vstack([np.ones_like(g), g]).T
    (chi, c3), *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.sqrt(np.mean((a @ np.array([chi, c3]) - y) ** 2)))
    return ChiFit(d, recovery_tag, float(chi), float(c3), resid, (float(g.min()), float(g.max())), bool(chi <= 0))


def default_cutoff(d):
    return None if d <= 4 else 3


def noise(d, gamma, cutoff="auto"):
    """Amplitude-damping Kraus set on four qudits; exact for d <= 4, weight <= 3 above by default."""
    if cutoff == "auto":
        cutoff = default_cutoff(d)
    return amplitude_damping(d, gamma, 4, cutoff)


def build_recovery(name, d, gamma, ks, code=None):
    code = four_qudit_code(d) if code is None else code
    if name == "petz":
        return petz_recovery(code, ks)
    if name == "syndrome":
        return syndrome_decoder(d, gamma)
    _, a1, a2 = correctable_set(d)
    errs = [kraus_operator(d, gamma, e) for e in a1 + a2]
    if name == "leung":
        return leung_recovery(code, errs)
    if name == "cafaro":
        return cafaro_recovery(code, errs)
    raise ValueError(f"unknown recovery {name!r}")


def entanglement_curve(d, recovery, gammas, cutoff="auto", jobs=1):
    """``[(gamma, F_ent)]`` for the four-qudit code under the named recovery."""
    code = four_qudit_code(d)

    def one(g):
        ks = noise(d, g, cutoff)
        return float(g), entanglement_fidelity(code, ks, build_recovery(recovery, d, g, ks, code))

    gammas = sorted(float(g) for g in gammas)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(one, gammas))
    return [one(g) for g in gammas]


def chi_for(d, recovery="petz", window=CHI_WINDOW, points=CHI_POINTS, cutoff="auto", jobs=1):
    gammas = np.logspace(np.log10(window[0]), np.log10(window[1]), points)
    return chi_extract(entanglement_curve(d, recovery, gammas, cutoff, jobs), d, recovery)


def chi_scan(ds=range(2, 7), recovery="petz", **kw):
    return [chi_for(d, recovery, **kw) for d in ds]


@dataclass
class QuadraticFit:
    a: float
    b: float
    c: float
    quadratic_share: float
    r2: float


def quadratic_growth(ds, chis):
    """Fit ``chi = a d^2 + b d + c`` and measure how much variance the ``d^2`` term explains.

    ``quadratic_share`` is the R^2 of the single-regressor model ``a' d^2 + c'``:
    the fraction of the variance of chi captured by a pure quadratic term.
    """
    ds = np.asarray(ds, dtype=float)
    chis = np.asarray(chis, dtype=float)
    a, b, c = np.polyfit(ds, chis, 2)
    full = np.polyval([a, b, c], ds)
    ss_tot = float(((chis - chis.mean()) ** 2).sum())
    r2 = 1 - float(((chis - full) ** 2).sum()) / ss_tot
    a2, c2 = np.polyfit(ds**2, chis, 1)
    share = 1 - float(((chis - (a2 * ds**2 + c2)) ** 2).sum()) / ss_tot
    return QuadraticFit(float(a), float(b), float(c), share, r2)


# --- comparison dataset ----------------------------------------------------------------

def compare_recoveries(d, gammas, recoveries=("petz", "syndrome"), metrics=("worst_case", "entanglement"),
                       n_starts=50, seed=DEFAULT_SEED, cutoff="auto", jobs=1):
    """Long-format rows ``{d, gamma, metric, recovery, value}`` sorted by gamma, metric, recovery."""
    code = four_qudit_code(d)

    def one(g):
        ks = noise(d, g, cutoff)
        rows = []
        for name in recoveries:
            rec = build_recovery(name, d, g, ks, code)
            blocks = transfer_blocks(code, ks, rec)
            for metric in metrics:
                flags = ""
                if metric == "entanglement":
                    val, extra = entanglement_fidelity(code, ks, rec, blocks), None
                elif metric == "worst_case":
                    res = worst_case_fidelity(code, ks, rec, n_starts, seed, g, blocks=blocks)
                    val, extra = res.value, res.argmin_logical
                    flags = "" if res.converged else "optimizer_nonconverged"
                else:
                    raise ValueError(f"unknown metric {metric!r}")
                row = {"d": d, "gamma": float(g), "metric": metric, "recovery": name, "value": val,
                       "flags": flags}
                if extra is not None:
                    row["argmin_params"] = [complex(z) for z in extra]
                rows.append(row)
        return rows

    gammas = sorted(float(g) for g in gammas)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            parts = list(ex.map(one, gammas))
    else:
        parts = [one(g) for g in gammas]
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: (r["gamma"], r["metric"], r["recovery"]))
    return rows
