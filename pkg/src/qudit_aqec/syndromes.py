"""Syndrome tables for the four-qudit code and the syndrome-lookup decoder."""
import csv
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .channel import kraus_operator
from .codes import four_qudit_code
from .gates import primary_labels, run_syndrome_circuit, secondary_eigen_labels
from .kl import correctable_set
from .recovery import RecoveryChannel
from .tensor import DEFAULT_REL_TOL, apply_factored, polar_isometry

# row order of the reference syndrome tables
TABLE_ORDER = [
    (1, 0, 0, 0), (0, 1, 0, 0), (2, 0, 0, 0), (0, 2, 0, 0),
    (0, 0, 1, 0), (0, 0, 0, 1), (0, 0, 2, 0), (0, 0, 0, 2),
    (1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 0, 1), (0, 1, 1, 0),
]
SECONDARY_DIMS = (2, 3, 4)
NOT_NEEDED = "x"


def label(idx):
    return "A_" + "".join(map(str, idx))


def _table_errors(d):
    return [idx for idx in TABLE_ORDER if max(idx) <= d - 1]


def primary_syndrome(d, idx, gamma=0.1, tol=1e-12):
    """``(p1, p2)`` of the error image, read from the stabilizer eigenspaces.

    Raises if the image is spread over more than one eigenspace.
    """
    code = four_qudit_code(d)
    img = apply_factored(kraus_operator(d, gamma, idx), code.codewords)
    weight = (np.abs(img) ** 2).sum(axis=1)
    labs = primary_labels(d)[weight > tol * weight.max()]
    found = {tuple(int(v) for v in row) for row in labs}
    if len(found) != 1:
        raise RuntimeError(f"{label(idx)} has non-deterministic primary syndrome {sorted(found)}")
    return found.pop()


def secondary_outcomes(d, idx, gamma=0.1, tol=1e-12):
    """Per-block sets of ancilla readouts over all logical basis inputs."""
    code = four_qudit_code(d)
    img = apply_factored(kraus_operator(d, gamma, idx), code.codewords)
    sets = (set(), set())
    for m in range(code.logical_dim):
        col = img[:, m]
        nrm = np.linalg.norm(col)
        if nrm <= tol:
            continue
        for rec in run_syndrome_circuit(d, col / nrm):
            if rec.probability > tol:
                sets[0].add(rec.outcome[2])
                sets[1].add(rec.outcome[3])
    return sets


@dataclass
class SyndromeRow:
    error: tuple
    primary: tuple
    secondary: tuple | None  # (set for s1, set for s2) or None when not needed

    def cells(self):
        out = [label(self.error), str(self.primary[0]), str(self.primary[1])]
        if self.secondary is None:
            out += [NOT_NEEDED, NOT_NEEDED]
        else:
            out += ["|".join(str(v) for v in sorted(s)) for s in self.secondary]
        return out


@dataclass
class SyndromeTable:
    local_dim: int
    rows: list

    header = ("error", "p1", "p2", "s1", "s2")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow(row.cells())
        return buf.getvalue()

    def primary_map(self):
        return {r.error: r.primary for r in self.rows}

    def collisions(self):
        seen = {}
        for r in self.rows:
            seen.setdefault(r.primary, []).append(r.error)
        return [tuple(v) for v in seen.values() if len(v) > 1]


def build_syndrome_table(d):
    """Compute primary syndromes of every listed error and, where they collide, the secondary readouts.

    Secondary readouts are only listed for single-site errors whose primary
    syndrome is shared with another row and only for d in {2, 3, 4}.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    errors = _table_errors(d)
    prim = {e: primary_syndrome(d, e) for e in errors}
    counts = {}
    for p in prim.values():
        counts[p] = counts.get(p, 0) + 1
    rows = []
    for e in errors:
        single = sum(1 for v in e if v) == 1
        sec = None
        if d in SECONDARY_DIMS and single and counts[prim[e]] > 1:
            sec = secondary_outcomes(d, e)
        rows.append(SyndromeRow(e, prim[e], sec))
    return SyndromeTable(d, rows)


def primary_overview(ds=(3, 4, 5, 7)):
    """Primary syndromes of the listed errors across several local dimensions, as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["error"] + [f"{k}_d{d}" for d in ds for k in ("p1", "p2")])
    for e in TABLE_ORDER:
        row = [label(e)]
        for d in ds:
            row += list(map(str, primary_syndrome(d, e)))
        w.writerow(row)
    return buf.getvalue()


def golden(name):
    """Text of a bundled golden table."""
    return resources.files("qudit_aqec").joinpath("goldens", name).read_text()


# --- decoder -----------------------------------------------------------------------

def _outcome_keys(d, img, prim, measured, sec_labels, tol):
    """Split the support of an error image into measurement outcomes.

    Returns ``{key: mask}`` with ``key = (p1, p2, s1, s2)``; unmeasured
    secondary coordinates are None.
    """
    weight = (np.abs(img) ** 2).sum(axis=1)
    live = weight > tol * weight.max()
    keys = {}
    for row in np.flatnonzero(live):
        p = tuple(int(v) for v in prim[row])
        s = [None, None]
        for b in measured(p):
            s[b] = int(sec_labels[row, b])
        keys.setdefault(p + tuple(s), None)
    out = {}
    for key in keys:
        mask = np.all(prim == key[:2], axis=1)
        for b in range(2):
            if key[2 + b] is not None:
                mask &= sec_labels[:, b] == key[2 + b]
        out[key] = mask
    return out


@dataclass
class DecoderAssignment:
    key: tuple
    error: tuple
    rank: int
    corrected: bool


def syndrome_decoder(d, gamma, rel_tol=DEFAULT_REL_TOL, tol=1e-14, return_assignments=False):
    """Lookup decoder: measure, identify the error, undo it with a partial isometry.

    Primary syndromes are measured on both blocks.  When a primary outcome is
    shared by two correctable errors (only for d in {2, 3, 4}) the W-type
    observable is measured on each block whose primary label is nonzero; the
    undamaged block is left alone so the logical state is not dephased.

    For each outcome key reached by an error of ``A1 ∪ A2`` the recovery is
    ``C V^dag`` with ``V`` the polar isometry of the error image restricted to
    that outcome.  Errors whose image has rank below K cannot be undone on
    every logical state; they are detected but not corrected and, like every
    unassigned outcome, are absorbed by the completion.
    """
    code = four_qudit_code(d)
    k = code.logical_dim
    _, a1, a2 = correctable_set(d)
    errors = a1 + a2
    prim = primary_labels(d)
    sec_labels = secondary_eigen_labels(d) if d in SECONDARY_DIMS else None
    imgs = {e: apply_factored(kraus_operator(d, gamma, e), code.codewords) for e in errors}
    if gamma == 0:
        imgs = {e: v for e, v in imgs.items() if np.abs(v).max() > 0}

    # which primary outcomes need a secondary measurement
    correctable = {e for e, img in imgs.items() if polar_isometry(img, rel_tol)[1] == k}
    prim_of = {e: primary_syndrome(d, e, gamma=gamma if gamma > 0 else 0.1) for e in errors}
    shared = {}
    for e in correctable:
        shared.setdefault(prim_of[e], []).append(e)
    ambiguous = {p for p, es in shared.items() if len(es) > 1}
    if ambiguous and sec_labels is None:
        raise RuntimeError(f"primary syndromes {sorted(ambiguous)} are ambiguous and d={d} has no secondary measurement")

    def measured(p):
        if p not in ambiguous:
            return ()
        return tuple(b for b in range(2) if p[b] != 0)

    owner, blocks, labels, assignments = {}, [], [], []
    for e in errors:
        if e not in imgs:
            continue
        img = imgs[e]
        if e not in correctable:
            assignments.append(DecoderAssignment(None, e, polar_isometry(img, rel_tol)[1], False))
            continue
        for key, mask in sorted(
            _outcome_keys(d, img, prim, measured, sec_labels, tol).items(),
            key=lambda kv: tuple(-1 if v is None else v for v in kv[0]),
        ):
            if key in owner:
                raise RuntimeError(
                    f"outcome {key} claimed by both {label(owner[key])} and {label(e)}"
                )
            owner[key] = e
            part = np.where(mask[:, None], img, 0)
            iso, rank = polar_isometry(part, rel_tol)
            blocks.append(iso.conj().T)
            labels.append(f"{label(e)}@{key}")
            assignments.append(DecoderAssignment(key, e, rank, True))
    rec = RecoveryChannel(code, np.array(blocks), "SyndromeLookup", labels)
    if return_assignments:
        return rec, assignments
    return rec
