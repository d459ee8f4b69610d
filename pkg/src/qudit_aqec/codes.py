"""Codeword constructors for the damping-adapted qudit codes and their stabilizers."""
import itertools
import json
from dataclasses import dataclass
from math import gcd

import numpy as np
import scipy.linalg

from .gates import pauli_x, pauli_z
from .tensor import kron_all

MAX_AMPLITUDES = 10**7


class ResourceError(MemoryError):
    pass


@dataclass(frozen=True, eq=False)
class CodeSpace:
    local_dim: int
    num_sites: int
    codewords: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.codewords, dtype=np.complex128)
        if c.ndim != 2 or c.shape[0] != self.local_dim**self.num_sites:
            raise ValueError(
                f"codeword matrix must have {self.local_dim**self.num_sites} rows, got {c.shape}"
            )
        gram = c.conj().T @ c
        if not np.allclose(gram, np.eye(c.shape[1]), atol=1e-12, rtol=0):
            raise ValueError("codewords are not orthonormal")
        c.setflags(write=False)
        object.__setattr__(self, "codewords", c)

    @property
    def logical_dim(self):
        return self.codewords.shape[1]

    @property
    def dim(self):
        return self.codewords.shape[0]

    def projector(self):
        return self.codewords @ self.codewords.conj().T

    def encode(self, logical):
        """Map logical amplitudes (length K) to the physical state."""
        logical = np.asarray(logical, dtype=np.complex128)
        if logical.shape != (self.logical_dim,):
            raise ValueError(f"expected {self.logical_dim} logical amplitudes")
        return self.codewords @ logical

    def to_dict(self, tol=1e-15):
        rows, cols = np.nonzero(np.abs(self.codewords) > tol)
        amps = [
            [int(r), int(c), float(self.codewords[r, c].real), float(self.codewords[r, c].imag)]
            for r, c in zip(rows, cols)
        ]
        return {
            "d": self.local_dim,
            "n": self.num_sites,
            "K": self.logical_dim,
            "label": self.label,
            "amplitudes": amps,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc):
        d, n, k = int(doc["d"]), int(doc["n"]), int(doc["K"])
        c = np.zeros((d**n, k), dtype=np.complex128)
        for r, col, re, im in doc["amplitudes"]:
            c[r, col] = re + 1j * im
        return cls(d, n, c, doc.get("label", ""))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _index(d, digits):
    idx = 0
    for x in digits:
        idx = idx * d + int(x)
    return idx


def _guard(d, n, max_amplitudes):
    if d**n > max_amplitudes:
        raise ResourceError(
            f"d**n = {d}**{n} = {d**n} amplitudes exceeds the bound {max_amplitudes}"
        )


def general_code(d, M, max_amplitudes=MAX_AMPLITUDES):
    """The ``[2M+2, M]_d`` code: logical digit ``m_j`` shifts the pair at sites 2j+2, 2j+3.

    Column ``(m_1, ..., m_M)`` is placed at index ``sum m_j d**(M-j)`` (first
    logical digit most significant).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if M < 1:
        raise ValueError("M must be >= 1")
    n = 2 * M + 2
    _guard(d, n, max_amplitudes)
    k = d**M
    c = np.zeros((d**n, k), dtype=np.complex128)
    amp = 1 / np.sqrt(d)
    for col, ms in enumerate(itertools.product(range(d), repeat=M)):
        for i in range(d):
            digits = [i, i]
            for m in ms:
                digits += [(i + m) % d] * 2
            c[_index(d, digits), col] = amp
    label = "[4,1]_%d" % d if M == 1 else "[%d,%d]_%d" % (n, M, d)
    return CodeSpace(d, n, c, label)


def four_qudit_code(d):
    return general_code(d, 1)


@dataclass(frozen=True, eq=False)
class StabilizerGen:
    """Tensor product of powers of ``X_d`` or ``Z_d`` (identity where the power is 0)."""

    local_dim: int
    powers: tuple
    type_tag: str

    def __post_init__(self):
        if self.type_tag not in ("X", "Z"):
            raise ValueError("type_tag must be 'X' or 'Z'")
        object.__setattr__(self, "powers", tuple(int(p) % self.local_dim for p in self.powers))

    @property
    def factors(self):
        base = pauli_x(self.local_dim) if self.type_tag == "X" else pauli_z(self.local_dim)
        return [np.linalg.matrix_power(base, p) for p in self.powers]

    def expand(self):
        return kron_all(self.factors)

    def apply(self, psi):
        """Apply to a vector or to the columns of a matrix without forming the operator.

        Both generator types act as a permutation or a diagonal in the
        computational basis, so this stays cheap for large n.
        """
        d, n = self.local_dim, len(self.powers)
        psi = np.asarray(psi)
        digits = np.array(list(itertools.product(range(d), repeat=n)), dtype=np.int64)
        pw = np.array(self.powers)
        weights = d ** np.arange(n - 1, -1, -1)
        if self.type_tag == "X":
            src = ((digits - pw) % d) @ weights
            return psi[src]
        phase = np.exp(2j * np.pi * ((digits * pw).sum(axis=1) % d) / d)
        return phase.reshape((-1,) + (1,) * (psi.ndim - 1)) * psi

    @property
    def label(self):
        parts = []
        for p in self.powers:
            if p == 0:
                parts.append("I")
            elif p == 1:
                parts.append(self.type_tag)
            else:
                parts.append(f"{self.type_tag}^{p}")
        return " ".join(parts)


def stabilizer_generators(d, M=1, s=1):
    """One X-type generator on all sites plus ``Z^s Z^(d-s)`` on each adjacent pair.

    The pair generators act on sites (2b, 2b+1) for b = 0..M.
    """
    if d < 2 or M < 1:
        raise ValueError("need d >= 2 and M >= 1")
    if gcd(s, d) != 1:
        raise ValueError(f"s={s} is not co-prime with d={d}")
    n = 2 * M + 2
    gens = [StabilizerGen(d, (1,) * n, "X")]
    for b in range(M + 1):
        p = [0] * n
        p[2 * b], p[2 * b + 1] = s, d - s
        gens.append(StabilizerGen(d, tuple(p), "Z"))
    return gens


def _variant_generators(d, variant):
    m = d - 1  # exponent for the inverse
    table = {
        "a": [((1, 1, 1, 1), "X"), ((1, m, 0, 0), "Z"), ((0, 0, 1, m), "Z")],
        "b": [((1, m, 1, m), "X"), ((1, 1, 0, 0), "Z"), ((0, 0, 1, 1), "Z")],
        "c": [((1, 1, 1, 1), "Z"), ((1, m, 0, 0), "X"), ((0, 0, 1, m), "X")],
        "d": [((1, m, 1, m), "Z"), ((1, 1, 0, 0), "X"), ((0, 0, 1, 1), "X")],
    }
    if variant not in table:
        raise ValueError(f"unknown surface variant {variant!r}")
    return [StabilizerGen(d, p, t) for p, t in table[variant]]


def joint_eigenspace(gens, tol=1e-10):
    """Orthonormal basis of the common +1 eigenspace of commuting generators.

    Each generator of order d contributes the projector ``(1/d) sum_k G^k``;
    the projectors are multiplied and a column-pivoted QR picks a basis.
    """
    d = gens[0].local_dim
    dim = d ** len(gens[0].powers)
    proj = np.eye(dim, dtype=np.complex128)
    for g in gens:
        acc = np.zeros_like(proj)
        cur = proj
        for _ in range(d):
            acc += cur
            cur = g.apply(cur)
        proj = acc / d
    q, r, _ = scipy.linalg.qr(proj, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int((diag > tol * max(diag[0], 1.0)).sum())
    basis = q[:, :rank]
    # fix column phases so the largest-magnitude entry of each column is real positive
    for j in range(rank):
        k = np.argmax(np.abs(basis[:, j]))
        basis[:, j] *= np.conj(basis[k, j]) / abs(basis[k, j])
    return basis


def surface_variant_code(d, variant):
    """Codespace and generators for the distance-2 surface-code stabilizer variants a..d.

    Variants a and b use closed-form codewords; c and d come from the joint
    eigenspace solver.  Raises if the solver's eigenspace is not d-dimensional.
    """
    gens = _variant_generators(d, variant)
    if variant == "a":
        code = four_qudit_code(d)
        return CodeSpace(d, 4, code.codewords, "S_a"), gens
    if variant == "b":
        c = np.zeros((d**4, d), dtype=np.complex128)
        for m in range(d):
            for i in range(d):
                j = (i + m) % d
                c[_index(d, (i, (d - 1) * i % d, j, (d - 1) * j % d)), m] = 1 / np.sqrt(d)
        return CodeSpace(d, 4, c, "S_b"), gens
    basis = joint_eigenspace(gens)
    if basis.shape[1] != d:
        raise ValueError(
            f"variant {variant}: joint eigenspace has dimension {basis.shape[1]}, expected {d}"
        )
    return CodeSpace(d, 4, basis, "S_" + variant), gens


def singleton_check(n, k, D):
    """True when an ``[[n, k, D]]`` code is allowed by the quantum Singleton bound.

    The bound requires ``n - k >= 2 (D - 1)``; a distance-3 code for one
    logical qudit therefore needs at least five physical qudits.
    """
    if not (n >= k >= 0) or D < 1:
        raise ValueError("need n >= k >= 0 and D >= 1")
    return n - k >= 2 * (D - 1)
