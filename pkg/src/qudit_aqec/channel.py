"""Qudit amplitude-damping channels and their multi-site Kraus sets."""
import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .tensor import DimensionError, FactoredOperator, apply_factored


@dataclass(frozen=True)
class ADChannelSpec:
    local_dim: int
    gamma: float
    num_sites: int = 1
    weight_cutoff: int | None = None

    def __post_init__(self):
        if self.local_dim < 2:
            raise ValueError("local_dim must be >= 2")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.num_sites < 1:
            raise ValueError("num_sites must be >= 1")
        if self.weight_cutoff is not None:
            if self.weight_cutoff < 0:
                raise ValueError("weight_cutoff must be non-negative")
            if self.weight_cutoff > self.num_sites * (self.local_dim - 1):
                raise ValueError("weight_cutoff exceeds the largest possible weight")


@dataclass(frozen=True, eq=False)
class KrausSet:
    operators: tuple
    exact: bool
    spec: ADChannelSpec | None = None

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def by_index(self):
        return {op.index: op for op in self.operators}

    def completeness_deficit(self):
        """Return ``I - sum K^dag K`` as a dense matrix."""
        dim = self.operators[0].dim
        acc = np.zeros((dim, dim), dtype=np.complex128)
        for op in self.operators:
            k = op.expand()
            acc += k.conj().T @ k
        return np.eye(dim) - acc


def single_qudit_kraus(d, gamma):
    """Kraus operators ``A_0 .. A_{d-1}`` of the d-level damping channel.

    ``A_k`` lowers ``|r>`` to ``|r-k>`` with amplitude
    ``sqrt(C(r, k) (1-gamma)^(r-k) gamma^k)``.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    ops = []
    for k in range(d):
        a = np.zeros((d, d), dtype=np.complex128)
        for r in range(k, d):
            # integer binomial, converted once
            a[r - k, r] = np.sqrt(float(comb(r, k)) * (1 - gamma) ** (r - k) * gamma**k)
        ops.append(a)
    return ops


def kraus_operator(d, gamma, index):
    """The factored operator ``A_{index[0]} ⊗ A_{index[1]} ⊗ ...``."""
    singles = single_qudit_kraus(d, gamma)
    index = tuple(int(i) for i in index)
    if any(i < 0 or i >= d for i in index):
        raise ValueError(f"Kraus index {index} out of range for d={d}")
    return FactoredOperator(np.stack([singles[i] for i in index]), sum(index), index)


def enumerate_kraus(spec):
    """All factored Kraus operators with total weight within the cutoff.

    Ordering is lexicographic in the index tuple.
    """
    d, n = spec.local_dim, spec.num_sites
    singles = np.stack(single_qudit_kraus(d, spec.gamma))
    ops = []
    for idx in itertools.product(range(d), repeat=n):
        w = sum(idx)
        if spec.weight_cutoff is not None and w > spec.weight_cutoff:
            continue
        ops.append(FactoredOperator(singles[list(idx)], w, idx))
    return KrausSet(tuple(ops), exact=spec.weight_cutoff is None, spec=spec)


def amplitude_damping(d, gamma, n=4, cutoff=None):
    return enumerate_kraus(ADChannelSpec(d, gamma, n, cutoff))


def apply_channel(ks, rho):
    """``sum_k K rho K^dag`` for a Kraus set of factored operators."""
    rho = np.asarray(rho, dtype=np.complex128)
    dim = ks.operators[0].dim
    if rho.shape != (dim, dim):
        raise DimensionError(f"rho has shape {rho.shape}, channel acts on dim {dim}")
    out = np.zeros_like(rho)
    for op in ks:
        left = apply_factored(op, rho)
        out += apply_factored(op, left.conj().T).conj().T
    return out
