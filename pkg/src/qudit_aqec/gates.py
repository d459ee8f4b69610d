"""Qudit gates, the encoding circuit and the syndrome-extraction circuit."""
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .tensor import DimensionError, apply_local


def _check_dim(d):
    if int(d) != d or d < 2:
        raise ValueError(f"local dimension must be an integer >= 2, got {d}")


def pauli_x(d):
    """Cyclic shift ``|k> -> |k+1 mod d>``."""
    _check_dim(d)
    return np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)


def pauli_z(d):
    """Clock operator ``diag(omega^k)`` with ``omega = exp(2 pi i / d)``."""
    _check_dim(d)
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def controlled_x(d):
    """Block-diagonal ``X_d^c`` on the target for control value ``c``."""
    x = pauli_x(d)
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for c in range(d):
        out[c * d:(c + 1) * d, c * d:(c + 1) * d] = np.linalg.matrix_power(x, c)
    return out


def w3():
    return np.diag([1.0, -1.0, 1.0]).astype(np.complex128)


def w4():
    return np.diag([1.0, 1.0, -1.0, -1.0]).astype(np.complex128)


def c3():
    """Qutrit control, qutrit target: shift the target when control is ``|1>``."""
    out = np.eye(9, dtype=np.complex128)
    out[3:6, 3:6] = pauli_x(3)
    return out


def c4():
    """Ququad control, qubit target: flip the target when control is ``|2>`` or ``|3>``."""
    out = np.eye(8, dtype=np.complex128)
    out[4:6, 4:6] = pauli_x(2)
    out[6:8, 6:8] = pauli_x(2)
    return out


_GATE_BUILDERS = {
    "PauliX": lambda dims: pauli_x(dims[0]),
    "PauliZ": lambda dims: pauli_z(dims[0]),
    "ControlledX": lambda dims: controlled_x(dims[0]),
    "W3": lambda dims: w3(),
    "C3": lambda dims: c3(),
    "W4": lambda dims: w4(),
    "C4": lambda dims: c4(),
}

_GATE_DIMS = {
    "W3": (3,),
    "C3": (3, 3),
    "W4": (4,),
    "C4": (4, 2),
}


@dataclass(frozen=True)
class GateSpec:
    name: str
    local_dims: tuple
    sites: tuple = ()

    def __post_init__(self):
        if self.name not in _GATE_BUILDERS:
            raise ValueError(f"unknown gate {self.name!r}")
        if self.name in _GATE_DIMS and tuple(self.local_dims) != _GATE_DIMS[self.name]:
            raise ValueError(f"{self.name} acts on dims {_GATE_DIMS[self.name]}")
        if self.sites and len(set(self.sites)) != len(self.sites):
            raise ValueError("gate sites must be distinct")

    @property
    def matrix(self):
        return _GATE_BUILDERS[self.name](tuple(self.local_dims))


def special_gates(d):
    """Secondary-measurement operators for the small local dimensions.

    d=2 uses the qubit Z; d=3 the phase flip W3 on ``|1>`` and its controlled
    counter C3; d=4 the block sign W4 and the qubit-target C4.
    """
    if d == 2:
        return [GateSpec("PauliZ", (2,))]
    if d == 3:
        return [GateSpec("W3", (3,)), GateSpec("C3", (3, 3))]
    if d == 4:
        return [GateSpec("W4", (4,)), GateSpec("C4", (4, 2))]
    raise ValueError(f"no secondary-measurement gates defined for d={d}")


def plus_state(d):
    return np.full(d, 1 / np.sqrt(d), dtype=np.complex128)


def basis_state(d, k):
    v = np.zeros(d, dtype=np.complex128)
    v[k] = 1.0
    return v


def encode(d, logical):
    """Run the four-qudit encoding circuit on a single-qudit logical state.

    Wire 0 starts in ``|+_d>``, wire 2 carries the logical input, wires 1 and 3
    start in ``|0>``; then CX(0->1), CX(0->2), CX(2->3).
    """
    logical = np.asarray(logical, dtype=np.complex128)
    if logical.shape != (d,):
        raise DimensionError(f"logical state must have length {d}")
    if abs(np.linalg.norm(logical) - 1) > 1e-10:
        raise ValueError("logical state must be normalized")
    zero = basis_state(d, 0)
    state = np.kron(np.kron(plus_state(d), zero), np.kron(logical, zero))
    cx = controlled_x(d)
    dims = (d,) * 4
    for ctrl, tgt in ((0, 1), (0, 2), (2, 3)):
        state = apply_local(state, cx, (ctrl, tgt), dims)
    return state


# --- syndrome extraction ------------------------------------------------------

def _digits(d, n):
    return np.array(list(itertools.product(range(d), repeat=n)), dtype=np.int64)


def primary_labels(d, n=4):
    """Outcome labels of the Z-type pair stabilizers on every basis state.

    Block b covers sites (2b, 2b+1); ``Z ⊗ Z^{d-1}`` has eigenvalue
    ``omega^(x0 - x1)`` so the label is ``(x0 - x1) mod d``.  Returns an int
    array of shape (d**n, n // 2).
    """
    dg = _digits(d, n)
    return np.stack([(dg[:, 2 * b] - dg[:, 2 * b + 1]) % d for b in range(n // 2)], axis=1)


def secondary_eigen_labels(d, n=4):
    """Eigenvalue labels (0 for +1, 1 for -1) of the per-block W-type measurement.

    d=2: Z on the first site of the block; d=3: W3 ⊗ W3 on the block;
    d=4: W4 on the first site of the block.  None for other d.
    """
    dg = _digits(d, n)
    cols = []
    for b in range(n // 2):
        x, y = dg[:, 2 * b], dg[:, 2 * b + 1]
        if d == 2:
            cols.append(x)
        elif d == 3:
            cols.append(((x == 1).astype(np.int64) + (y == 1)) % 2)
        elif d == 4:
            cols.append((x >= 2).astype(np.int64))
        else:
            return None
    return np.stack(cols, axis=1)


def _secondary_circuit(d):
    """(ancilla dim, list of (gate, data site, ancilla index)) for the readout circuit."""
    if d == 2:
        return 2, [(controlled_x(2), 0, 0), (controlled_x(2), 2, 1)]
    if d == 3:
        g = c3()
        return 3, [(g, 0, 0), (g, 1, 0), (g, 2, 1), (g, 3, 1)]
    if d == 4:
        g = c4()
        return 2, [(g, 0, 0), (g, 2, 1)]
    return None, []


@dataclass
class MeasurementRecord:
    outcome: tuple
    probability: float
    post_state: np.ndarray = field(repr=False)

    @property
    def outcome_label(self):
        """Single integer encoding of the outcome tuple (mixed radix, base 8)."""
        code = 0
        for v in self.outcome:
            code = code * 8 + (0 if v is None else int(v) + 1)
        return code


def run_syndrome_circuit(d, noisy, secondary=True, tol=1e-14):
    """Full outcome distribution of the syndrome-extraction circuit.

    Primary syndromes come from projecting onto the ``omega^p`` eigenspaces of
    the two Z-type stabilizers.  For d in {2, 3, 4} the secondary syndromes are
    read from explicit ancillas (qudit-controlled gates, then a computational
    basis measurement).  Returns a list of :class:`MeasurementRecord` sorted by
    outcome; probabilities sum to one.
    """
    noisy = np.asarray(noisy, dtype=np.complex128)
    if noisy.shape != (d**4,):
        raise DimensionError(f"expected a 4-qudit state of length {d**4}")
    norm2 = float(np.vdot(noisy, noisy).real)
    if norm2 == 0:
        raise ValueError("cannot measure the zero vector")
    if abs(norm2 - 1) > 1e-10:
        warnings.warn("input state not normalized; probabilities rescaled", stacklevel=2)
        noisy = noisy / np.sqrt(norm2)

    prim = primary_labels(d)
    anc_dim, gates = _secondary_circuit(d) if secondary else (None, [])
    records = []
    for p in sorted(set(tuple(int(v) for v in row) for row in prim)):
        mask = np.all(prim == p, axis=1)
        branch = np.where(mask, noisy, 0)
        pb = float(np.vdot(branch, branch).real)
        if pb <= tol:
            continue
        if anc_dim is None:
            records.append(MeasurementRecord((p[0], p[1], None, None), pb, branch / np.sqrt(pb)))
            continue
        dims = (d,) * 4 + (anc_dim, anc_dim)
        joint = np.kron(branch, np.kron(basis_state(anc_dim, 0), basis_state(anc_dim, 0)))
        for g, site, anc in gates:
            joint = apply_local(joint, g, (site, 4 + anc), dims)
        joint = joint.reshape(d**4, anc_dim, anc_dim)
        for s1 in range(anc_dim):
            for s2 in range(anc_dim):
                post = joint[:, s1, s2]
                ps = float(np.vdot(post, post).real)
                if ps <= tol:
                    continue
                records.append(
                    MeasurementRecord((p[0], p[1], s1, s2), ps, post / np.sqrt(ps))
                )
    return records
