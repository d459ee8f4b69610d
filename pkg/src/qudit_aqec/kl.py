"""Knill-Laflamme matrices, their deviation from exact correctability, and order fits."""
import itertools
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .channel import kraus_operator
from .codes import four_qudit_code
from .tensor import DimensionError, apply_factored

ORDER_GRID = np.logspace(-4, -2, 8)
AQEC_THRESHOLD = 2.0 - 0.15


def image(code, op):
    """Columns ``E |i_L>`` for every codeword, shape (d**n, K)."""
    if op.dim != code.dim:
        raise DimensionError(f"operator acts on dim {op.dim}, code lives in {code.dim}")
    return apply_factored(op, code.codewords)


def kl_matrix(code, ek, el):
    """``M_ij = <i_L| E_k^dag E_l |j_L>``."""
    return image(code, ek).conj().T @ image(code, el)


def deviation_split(m):
    """Split ``m`` into its trace part ``c I`` and the traceless remainder ``B``."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError("deviation_split needs a square matrix")
    c = np.trace(m) / m.shape[0]
    return c, m - c * np.eye(m.shape[0])


@dataclass
class KLReport:
    error_pair: tuple
    matrix: np.ndarray = field(repr=False)
    c_kl: complex
    deviation_B: np.ndarray = field(repr=False)
    offdiag_norm: float
    diag_spread: float


def kl_report(code, ek, el):
    m = kl_matrix(code, ek, el)
    c, b = deviation_split(m)
    off = b - np.diag(np.diag(b))
    return KLReport(
        (ek.index or ek.label, el.index or el.label),
        m,
        complex(c),
        b,
        float(np.abs(off).max()) if off.size else 0.0,
        float(np.abs(np.diag(b)).max()),
    )


# --- order estimation -----------------------------------------------------------

@dataclass
class OrderFit:
    quantity_label: str
    gammas: list
    values: list
    fitted_exponent: float
    fitted_coefficient: float
    residual: float

    @property
    def rounded_exponent(self):
        if math.isinf(self.fitted_exponent):
            return self.fitted_exponent
        return round(self.fitted_exponent * 2) / 2


def order_estimate(quantity, gammas=None, label="", zero_floor=1e-300, rel_zero=1e-13):
    """Least-squares slope of ``log|f|`` against ``log gamma``.

    ``quantity`` is either a callable of gamma or a sequence of values on
    ``gammas``.  Samples at or below ``max(zero_floor, rel_zero)`` are treated
    as numerically zero (quantities here are matrix elements of O(1)
    operators, so ``rel_zero`` is relative to unit scale).  If every sample is
    zero the exponent is ``+inf``.
    """
    gammas = np.asarray(ORDER_GRID if gammas is None else gammas, dtype=float)
    if gammas.size < 4 or np.any(gammas <= 0):
        raise ValueError("order_estimate needs at least 4 positive gamma samples")
    if callable(quantity):
        values = np.array([quantity(g) for g in gammas], dtype=float)
    else:
        values = np.asarray(quantity, dtype=float)
    if values.shape != gammas.shape:
        raise ValueError("values and gammas differ in length")
    if np.any(values < 0):
        raise ValueError("order_estimate expects non-negative magnitudes")
    floor = max(zero_floor, rel_zero)
    if np.all(values <= floor):
        return OrderFit(label, gammas.tolist(), values.tolist(), math.inf, 0.0, 0.0)
    keep = values > floor
    if keep.sum() < 2:
        # a lone nonzero sample is rounding noise on an otherwise vanishing quantity
        return OrderFit(label, gammas.tolist(), values.tolist(), math.inf, 0.0, 0.0)
    x, y = np.log(gammas[keep]), np.log(values[keep])
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.sqrt(np.mean((a @ np.array([slope, icpt]) - y) ** 2)))
    return OrderFit(label, gammas.tolist(), values.tolist(), float(slope), float(np.exp(icpt)), resid)


def richardson_limit(g, h0=1e-2, levels=6):
    """Extrapolate ``g(h)`` to ``h -> 0`` assuming an integer power series in ``h``.

    Uses step halving and a Neville table; returns ``(limit, error_estimate)``.
    """
    hs = [h0 / 2**k for k in range(levels)]
    table = [[g(h)] for h in hs]
    for k in range(1, levels):
        for j in range(k, levels):
            fac = 2.0**k
            table[j].append((fac * table[j][k - 1] - table[j - 1][k - 1]) / (fac - 1))
    best = table[-1][-1]
    err = abs(best - table[-2][-1])
    return best, err


def leading_coefficient(f, p, h0=1e-2, levels=6):
    """Coefficient of ``gamma^p`` in ``f`` when ``f = O(gamma^p)``."""
    return richardson_limit(lambda h: f(h) / h**p, h0, levels)


# --- error sets -------------------------------------------------------------------

def _single(site, x, n=4):
    idx = [0] * n
    idx[site] = x
    return tuple(idx)


TWO_SITE_CORRECTABLE = ((1, 0, 1, 0), (0, 1, 0, 1), (0, 1, 1, 0), (1, 0, 0, 1))


def correctable_set(d):
    """Return ``(A_corr, A1, A2)`` as lists of index tuples.

    ``A_corr``: identity, every single-site damping ``x = 1..d-1`` and the four
    two-site single dampings that hit one qudit of each pair.  ``A1``:
    identity and the single-site errors with ``x <= 2``.  ``A2``: the four
    two-site errors.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    a_corr = [(0, 0, 0, 0)]
    a_corr += [_single(s, x) for x in range(1, d) for s in range(4)]
    a_corr += list(TWO_SITE_CORRECTABLE)
    a1 = [(0, 0, 0, 0)] + [_single(s, x) for x in range(1, min(d - 1, 2) + 1) for s in range(4)]
    a2 = [(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)]
    return a_corr, a1, a2


# --- coefficient checks ---------------------------------------------------------

@dataclass
class CheckEntry:
    name: str
    expected: float
    observed: float
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self):
        out = asdict(self)
        for k in ("expected", "observed"):
            if isinstance(out[k], float) and math.isinf(out[k]):
                out[k] = "inf" if out[k] > 0 else "-inf"
        return out


@dataclass
class VerificationReport:
    d: int
    entries: list

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    @property
    def failures(self):
        return [e for e in self.entries if not e.passed]

    def to_dict(self):
        return {"d": self.d, "passed": self.passed, "checks": [e.to_dict() for e in self.entries]}


def _check(name, expected, observed, tol, note=""):
    ok = abs(observed - expected) <= tol
    return CheckEntry(name, float(expected), float(observed), float(tol), bool(ok), note)


def _diag_entry(d, idx, m):
    code = four_qudit_code(d)

    def f(g):
        op = kraus_operator(d, g, idx)
        col = image(code, op)[:, m]
        return float(np.vdot(col, col).real)

    return f


def verify_kl_structure(d, gammas=None, ortho_gamma=0.1, ortho_tol=1e-13):
    """Numerically check the KL structure of the four-qudit code, term by term.

    Checks: cross-site and same-site orthogonality of the damping images, the
    O(1), O(gamma) and O(gamma^2) coefficients of the diagonal KL entries for
    no, single and double damping (including the codeword-dependent second
    order terms), the two-site error diagonal, and the order of x >= 3 errors.
    """
    if not 2 <= d <= 7:
        raise ValueError("verify_kl_structure supports 2 <= d <= 7")
    gammas = ORDER_GRID if gammas is None else np.asarray(gammas)
    code = four_qudit_code(d)
    entries = []
    a_corr, _, _ = correctable_set(d)

    # (i), (ii): orthogonality of distinct errors, and diagonal structure of each block
    ops = {idx: kraus_operator(d, ortho_gamma, idx) for idx in a_corr}
    imgs = {idx: image(code, op) for idx, op in ops.items()}
    cross, same, offd = 0.0, 0.0, 0.0
    for a, b in itertools.product(a_corr, repeat=2):
        m = imgs[a].conj().T @ imgs[b]
        if a == b:
            offd = max(offd, float(np.abs(m - np.diag(np.diag(m))).max()))
            continue
        sa = [s for s in range(4) if a[s]]
        sb = [s for s in range(4) if b[s]]
        val = float(np.abs(m).max())
        if len(sa) == 1 and len(sb) == 1 and sa == sb:
            same = max(same, val)
        else:
            cross = max(cross, val)
    entries.append(_check("cross_error_orthogonality", 0.0, cross, ortho_tol))
    entries.append(_check("same_site_orthogonality", 0.0, same, ortho_tol))
    entries.append(_check("codeword_offdiagonal", 0.0, offd, ortho_tol))

    for m in range(d):
        js = [(i + m) % d for i in range(d)]
        # (iii) no damping: 1 - 2(d-1) g + c2(m) g^2
        f0 = _diag_entry(d, (0, 0, 0, 0), m)
        lin, _ = leading_coefficient(lambda g: 1 - f0(g), 1)
        entries.append(_check(f"no_damping_linear[m={m}]", 2 * (d - 1), lin, 1e-5))
        c2_expected = sum((i + j) * (2 * i + 2 * j - 1) for i, j in zip(range(d), js)) / d
        c2, _ = leading_coefficient(lambda g: f0(g) - 1 + 2 * (d - 1) * g, 2)
        entries.append(_check(f"no_damping_quadratic[m={m}]", c2_expected, c2, 1e-4))

        # (iv) single damping on each site
        for s in range(4):
            f1 = _diag_entry(d, _single(s, 1), m)
            lead, _ = leading_coefficient(f1, 1)
            entries.append(_check(f"single_damping_linear[site={s},m={m}]", (d - 1) / 2, lead, 1e-4))
        for s in (0, 2):
            f1 = _diag_entry(d, _single(s, 1), m)
            own = range(d) if s == 0 else js
            q_expected = sum(a * (1 - 2 * i - 2 * j) for a, i, j in zip(own, range(d), js)) / d
            q, _ = leading_coefficient(lambda g: f1(g) - (d - 1) / 2 * g, 2)
            entries.append(_check(f"single_damping_quadratic[site={s},m={m}]", q_expected, q, 1e-4))

        # (v) double damping
        if d >= 3:
            for s in range(4):
                f2 = _diag_entry(d, _single(s, 2), m)
                lead, _ = leading_coefficient(f2, 2)
                entries.append(
                    _check(f"two_damping_leading[site={s},m={m}]", (d - 1) * (d - 2) / 6, lead, 1e-4)
                )

        # (vi) two-site errors: (1/d) sum_i i (i+m)_d
        expected = sum(i * j for i, j in zip(range(d), js)) / d
        for idx in TWO_SITE_CORRECTABLE:
            f = _diag_entry(d, idx, m)
            lead, _ = leading_coefficient(f, 2)
            entries.append(_check(f"two_site_leading[{''.join(map(str, idx))},m={m}]", expected, lead, 1e-4))

    # (vii) higher single-site damping is at least third order
    for x in range(3, d):
        for s in range(4):
            fx = _diag_entry(d, _single(s, x), 0)
            fit = order_estimate(lambda g: abs(fx(g)), gammas, label=f"A_{x} site {s}", rel_zero=0.0)
            ok = fit.fitted_exponent >= 3 - 0.1
            entries.append(
                CheckEntry(f"high_damping_order[x={x},site={s}]", float(x), fit.fitted_exponent, 0.1, bool(ok))
            )
    return VerificationReport(d, entries)


# --- classification ---------------------------------------------------------------

@dataclass
class ClassificationReport:
    label: str
    exponents: dict
    worst_pair: tuple
    worst_exponent: float
    threshold: float

    @property
    def satisfies(self):
        return self.worst_exponent >= self.threshold

    def to_dict(self):
        return {
            "label": self.label,
            "satisfies": self.satisfies,
            "worst_pair": ["".join(map(str, p)) for p in self.worst_pair],
            "worst_exponent": self.worst_exponent if math.isfinite(self.worst_exponent) else "inf",
            "threshold": self.threshold,
        }


def deviation_magnitude(code, a, b, gamma):
    d = code.local_dim
    m = kl_matrix(code, kraus_operator(d, gamma, a), kraus_operator(d, gamma, b))
    _, dev = deviation_split(m)
    return float(np.abs(dev).max())


def classify_code(code, errors=None, gammas=None, threshold=AQEC_THRESHOLD, label=None):
    """Fit the gamma-order of ``max |B|`` for every ordered error pair.

    The code corrects the error set to first order when every exponent is at
    least ``threshold``.  Exact zeros count as infinite order.
    """
    d = code.local_dim
    errors = correctable_set(d)[0] if errors is None else errors
    gammas = ORDER_GRID if gammas is None else np.asarray(gammas)
    # images at every gamma, computed once
    per_gamma = []
    for g in gammas:
        per_gamma.append({e: image(code, kraus_operator(d, g, e)) for e in errors})
    exps = {}
    for a, b in itertools.product(errors, repeat=2):
        vals = []
        for imgs in per_gamma:
            _, dev = deviation_split(imgs[a].conj().T @ imgs[b])
            vals.append(float(np.abs(dev).max()))
        exps[(a, b)] = order_estimate(vals, gammas, label=f"{a},{b}").fitted_exponent
    worst = min(exps, key=exps.get)
    return ClassificationReport(label or code.label, exps, worst, exps[worst], threshold)
