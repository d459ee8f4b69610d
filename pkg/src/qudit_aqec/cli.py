"""Command-line entry point: ``qudit-aqec {kraus,code,syndromes,verify,sweep}``.

Exit codes: 0 success, 1 verification failure or golden mismatch, 2 invalid
configuration.  Output goes to ``--output``, else to ``$QUDIT_AQEC_OUTPUT_DIR``
when set, else to stdout.
"""
import argparse
import csv
import difflib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import backend_name

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
OUTPUT_ENV = "QUDIT_AQEC_OUTPUT_DIR"

DEFAULTS = {
    "d": "3",
    "m": 1,
    "n": 1,
    "gamma": 0.1,
    "gammas": None,
    "cutoff": None,
    "seed": 0xC0DE,
    "format": "csv",
    "metric": "both",
    "recovery": "petz,syndrome",
    "starts": 50,
    "jobs": 1,
    "output": None,
    "variant": None,
    "ortho_tol": 1e-13,
    "equiv_tol": 1e-10,
}

TOLERANCES = ("ortho_tol", "equiv_tol")


class ConfigError(ValueError):
    pass


# --- parsing helpers -------------------------------------------------------------

def parse_d_range(text):
    """``"3"``, ``"2..5"`` or ``"2,3,5"`` -> list of ints."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse d range {text!r}") from exc
    if not out or any(d < 2 for d in out):
        raise ConfigError(f"d values must be >= 2, got {text!r}")
    return out


def parse_gammas(text):
    """``log:a:b:n``, ``lin:a:b:n`` or a comma list."""
    text = str(text).strip()
    try:
        if text.startswith(("log:", "lin:")):
            kind, a, b, n = text.split(":")
            a, b, n = float(a), float(b), int(n)
            if kind == "log":
                if a <= 0 or b <= 0:
                    raise ConfigError("log grid bounds must be positive")
                vals = np.logspace(np.log10(a), np.log10(b), n)
            else:
                vals = np.linspace(a, b, n)
        else:
            vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse gamma grid {text!r}") from exc
    vals = [float(v) for v in vals]
    for g in vals:
        check_gamma(g)
    return vals


def check_gamma(g):
    if not 0.0 <= g < 1.0:
        raise ConfigError(f"gamma must lie in [0, 1), got {g}")


def read_config_file(path):
    """Flat ``key = value`` text; ``#`` starts a comment; keys use underscores."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = val
    return out


def _coerce(key, val):
    if val is None:
        return None
    default = DEFAULTS[key]
    if key == "seed":
        return int(str(val), 0)
    if key in ("m", "n", "starts", "jobs"):
        return int(val)
    if key == "cutoff":
        return None if str(val).lower() in ("none", "") else int(val)
    if key in ("gamma",) + TOLERANCES:
        return float(val)
    if isinstance(default, float):
        return float(val)
    return val


def resolve_config(args):
    """Merge defaults, config file, and explicit flags (in increasing priority)."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    check_gamma(cfg["gamma"])
    if cfg["jobs"] < 1 or cfg["starts"] < 1:
        raise ConfigError("jobs and starts must be positive")
    return cfg


# --- output ----------------------------------------------------------------------

def header_lines(command, cfg, extra=None):
    lines = [
        f"qudit_aqec version {__version__}",
        f"command {command}",
        f"kernel_backend {backend_name()}",
    ]
    for key in sorted(cfg):
        lines.append(f"config {key}={cfg[key]}")
    for key in TOLERANCES:
        lines.append(f"tolerance {key}={cfg[key]}")
    for line in extra or ():
        lines.append(line)
    return lines


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+.17g}j"
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return "" if v is None else str(v)


def render(command, cfg, rows, columns, summary=None, extra_header=None):
    head = header_lines(command, cfg, extra_header)
    if cfg["format"] == "json":
        doc = {
            "header": {
                "version": __version__,
                "command": command,
                "config": {k: cfg[k] for k in sorted(cfg)},
                "tolerances": {k: cfg[k] for k in TOLERANCES},
                "notes": list(extra_header or ()),
            },
            "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows],
        }
        if summary is not None:
            doc["summary"] = summary
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for line in head:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    if summary:
        buf.write("# summary\n")
        for s in summary:
            buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in s.items()) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def emit(text, cfg, default_name):
    path = cfg.get("output")
    if path is None and os.environ.get(OUTPUT_ENV):
        path = str(Path(os.environ[OUTPUT_ENV]) / f"{default_name}.{cfg['format']}")
    if path is None:
        sys.stdout.write(text)
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- commands --------------------------------------------------------------------

def cmd_kraus(cfg):
    from .channel import ADChannelSpec, enumerate_kraus

    ds = parse_d_range(cfg["d"])
    if len(ds) != 1:
        raise ConfigError("kraus takes a single d")
    d = ds[0]
    try:
        spec = ADChannelSpec(d, cfg["gamma"], cfg["n"], cfg["cutoff"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ks = enumerate_kraus(spec)
    rows = []
    for op in ks:
        dense = op.expand()
        for r, c in zip(*np.nonzero(np.abs(dense) > 0)):
            rows.append({"operator": op.label, "weight": op.weight, "row": int(r), "col": int(c),
                         "re": float(dense[r, c].real), "im": float(dense[r, c].imag)})
    deficit = float(np.linalg.norm(ks.completeness_deficit())) if spec.local_dim**spec.num_sites <= 4096 else float("nan")
    extra = [f"operators {len(ks)}", f"exact {ks.exact}", f"completeness_deficit_fro {deficit!r}"]
    text = render("kraus", cfg, rows, ["operator", "weight", "row", "col", "re", "im"], extra_header=extra)
    emit(text, cfg, f"kraus_d{d}")
    return EXIT_OK


def cmd_code(cfg):
    from .codes import general_code, surface_variant_code, stabilizer_generators

    ds = parse_d_range(cfg["d"])
    if len(ds) != 1:
        raise ConfigError("code takes a single d")
    d = ds[0]
    if cfg["variant"]:
        code, gens = surface_variant_code(d, cfg["variant"])
    else:
        code, gens = general_code(d, cfg["m"]), stabilizer_generators(d, cfg["m"])
    doc = code.to_dict()
    rows = [{"codeword": c, "index": r, "re": re, "im": im} for r, c, re, im in doc["amplitudes"]]
    extra = [f"n {doc['n']}", f"K {doc['K']}", f"label {doc['label']}"]
    extra += [f"stabilizer {g.type_tag}: {g.label}" for g in gens]
    text = render("code", cfg, rows, ["codeword", "index", "re", "im"], extra_header=extra)
    emit(text, cfg, f"code_d{d}")
    return EXIT_OK


def cmd_syndromes(cfg, overview=False):
    from .syndromes import build_syndrome_table, golden, primary_overview

    if overview:
        computed, name, tag = primary_overview(), "primary_overview.csv", "overview"
    else:
        ds = parse_d_range(cfg["d"])
        if len(ds) != 1:
            raise ConfigError("syndromes takes a single d")
        d = ds[0]
        computed = build_syndrome_table(d).to_csv()
        name = f"syndromes_d{d}.csv" if d in (3, 4, 5) else None
        tag = f"d{d}"
    status = EXIT_OK
    if name is not None:
        expected = golden(name)
        if computed != expected:
            status = EXIT_FAIL
            diff = difflib.unified_diff(
                expected.splitlines(True), computed.splitlines(True), f"golden/{name}", "computed"
            )
            sys.stderr.write("".join(diff))
    if cfg["format"] == "json":
        rows = list(csv.DictReader(io.StringIO(computed)))
        text = render("syndromes", cfg, rows, list(rows[0].keys()),
                      extra_header=[f"golden_match {status == EXIT_OK}"])
    else:
        head = "".join(f"# {line}\n" for line in header_lines("syndromes", cfg, [f"golden_match {status == EXIT_OK}"]))
        text = head + computed
    emit(text, cfg, f"syndromes_{tag}")
    return status


def cmd_verify(cfg, surface=False, equivalence=False):
    from .channel import kraus_operator
    from .codes import four_qudit_code, singleton_check, surface_variant_code
    from .kl import classify_code, correctable_set, verify_kl_structure

    ds = parse_d_range(cfg["d"])
    if any(d > 7 for d in ds):
        raise ConfigError("verify supports 2 <= d <= 7")
    rows = []
    if surface:
        for d in ds:
            for v in "abcd":
                rep = classify_code(surface_variant_code(d, v)[0])
                expect = v in "ab"
                rows.append({"suite": "surface", "d": d, "check": f"S_{v}",
                             "expected": expect, "observed": rep.worst_exponent,
                             "tolerance": rep.threshold, "passed": rep.satisfies == expect,
                             "note": "worst pair " + ",".join("".join(map(str, p)) for p in rep.worst_pair)})
    elif equivalence:
        from .recovery import leung_cafaro_check

        for d in ds:
            _, a1, a2 = correctable_set(d)
            errs = [kraus_operator(d, cfg["gamma"], e) for e in a1 + a2]
            res = leung_cafaro_check(four_qudit_code(d), errs, cfg["equiv_tol"])
            rows.append({"suite": "equivalence", "d": d, "check": f"leung_vs_cafaro[gamma={cfg['gamma']}]",
                         "expected": 0.0, "observed": res.max_deviation, "tolerance": cfg["equiv_tol"],
                         "passed": res.equal, "note": ""})
    else:
        for d in ds:
            rep = verify_kl_structure(d, ortho_tol=cfg["ortho_tol"])
            for e in rep.entries:
                rows.append({"suite": "kl_structure", "d": d, "check": e.name, "expected": e.expected,
                             "observed": e.observed, "tolerance": e.tolerance, "passed": e.passed,
                             "note": e.note})
        for n, expect in ((4, False), (5, True)):
            ok = singleton_check(n, 1, 3)
            rows.append({"suite": "singleton", "d": "", "check": f"[[{n},1,3]] allowed by the Singleton bound",
                         "expected": expect, "observed": ok, "tolerance": "", "passed": ok == expect, "note": ""})
    cfg = dict(cfg, format="json") if cfg["format"] == "json" else cfg
    failed = [r for r in rows if not r["passed"]]
    summary = [{"checks": len(rows), "failed": len(failed)}]
    text = render("verify", cfg, rows, ["suite", "d", "check", "expected", "observed", "tolerance", "passed", "note"],
                  summary=summary)
    emit(text, cfg, "verify")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_sweep(cfg, chi_scan=False, state_grid=False):
    from . import fidelity as fl
    from .codes import four_qudit_code

    ds = parse_d_range(cfg["d"])
    recs = [r.strip() for r in cfg["recovery"].split(",") if r.strip()]
    for r in recs:
        if r not in fl.RECOVERIES:
            raise ConfigError(f"unknown recovery {r!r}")
    cutoff = "auto" if cfg["cutoff"] is None else cfg["cutoff"]
    if chi_scan:
        rows = []
        gammas = parse_gammas(cfg["gammas"]) if cfg["gammas"] else None
        for d in ds:
            for r in recs:
                if gammas is None:
                    fit = fl.chi_for(d, r, cutoff=cutoff, jobs=cfg["jobs"])
                else:
                    fit = fl.chi_extract(fl.entanglement_curve(d, r, gammas, cutoff, cfg["jobs"]), d, r)
                rows.append({"d": d, "recovery": r, "chi": fit.chi, "c3": fit.c3,
                             "fit_residual": fit.fit_residual, "gamma_min": fit.gamma_window[0],
                             "gamma_max": fit.gamma_window[1], "flags": "negative_chi" if fit.flagged else ""})
        summary = None
        if len(ds) >= 3:
            for r in recs:
                sel = [x for x in rows if x["recovery"] == r]
                q = fl.quadratic_growth([x["d"] for x in sel], [x["chi"] for x in sel])
                summary = (summary or []) + [{"recovery": r, "a": q.a, "b": q.b, "c": q.c,
                                              "quadratic_share": q.quadratic_share}]
        text = render("sweep", cfg, rows, ["d", "recovery", "chi", "c3", "fit_residual", "gamma_min",
                                           "gamma_max", "flags"], summary=summary)
        emit(text, cfg, "chi_scan")
        return EXIT_OK
    if state_grid:
        if ds != [3]:
            raise ConfigError("--state-grid needs --d 3")
        code = four_qudit_code(3)
        ks = fl.noise(3, cfg["gamma"], cutoff)
        theta = np.linspace(0, np.pi / 2, 31)
        rows = []
        for r in recs:
            surf = fl.logical_state_sweep(code, ks, fl.build_recovery(r, 3, cfg["gamma"], ks, code), theta)
            for i, t1 in enumerate(theta):
                for j, t2 in enumerate(theta):
                    rows.append({"recovery": r, "theta1": float(t1), "theta2": float(t2),
                                 "gamma": cfg["gamma"], "value": float(surf[i, j])})
        text = render("sweep", cfg, rows, ["recovery", "theta1", "theta2", "gamma", "value"])
        emit(text, cfg, "state_grid")
        return EXIT_OK
    gammas = parse_gammas(cfg["gammas"]) if cfg["gammas"] else [cfg["gamma"]]
    metric_map = {"ent": ("entanglement",), "wc": ("worst_case",), "both": ("worst_case", "entanglement")}
    if cfg["metric"] not in metric_map:
        raise ConfigError("metric must be ent, wc or both")
    rows = []
    for d in ds:
        rows += fl.compare_recoveries(d, gammas, recs, metric_map[cfg["metric"]], cfg["starts"], cfg["seed"],
                                      cutoff, cfg["jobs"])
    summary = []
    for d in ds:
        for r in recs:
            curve = [(x["gamma"], x["value"]) for x in rows
                     if x["d"] == d and x["recovery"] == r and x["metric"] == "entanglement" and x["gamma"] > 0]
            if len(curve) >= 2:
                fit = fl.chi_extract(curve, d, r)
                summary.append({"d": d, "recovery": r, "chi": fit.chi, "fit_residual": fit.fit_residual})
    text = render("sweep", cfg, rows, ["d", "gamma", "metric", "recovery", "value", "flags", "argmin_params"],
                  summary=summary or None)
    emit(text, cfg, "sweep")
    return EXIT_OK


# --- argument parser -------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="qudit-aqec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--d", help="local dimension, range 2..5 or list 2,3")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--output", help="output file (default: stdout)")
        sp.add_argument("--seed", help="RNG seed (accepts 0x prefix)")
        sp.add_argument("--jobs", type=int)

    k = sub.add_parser("kraus", help="list amplitude-damping Kraus operators")
    common(k)
    k.add_argument("--gamma", type=float)
    k.add_argument("--n", type=int, help="number of sites (default 1)")
    k.add_argument("--cutoff", help="maximum total damping weight")

    c = sub.add_parser("code", help="emit codewords")
    common(c)
    c.add_argument("--m", "--M", dest="m", type=int, help="number of logical qudits")
    c.add_argument("--variant", choices=("a", "b", "c", "d"), help="surface-code stabilizer variant")

    s = sub.add_parser("syndromes", help="regenerate syndrome tables and compare with goldens")
    common(s)
    s.add_argument("--overview", action="store_true", help="primary syndromes across d = 3, 4, 5, 7")

    v = sub.add_parser("verify", help="run the KL-structure, surface or Leung/Cafaro checks")
    common(v)
    v.add_argument("--surface", action="store_true")
    v.add_argument("--equivalence", action="store_true")
    v.add_argument("--gamma", type=float)
    v.add_argument("--ortho-tol", dest="ortho_tol", type=float)
    v.add_argument("--equiv-tol", dest="equiv_tol", type=float)

    w = sub.add_parser("sweep", help="fidelity datasets and chi fits")
    common(w)
    w.add_argument("--gamma", type=float)
    w.add_argument("--gammas", help="log:a:b:n, lin:a:b:n or comma list")
    w.add_argument("--metric", choices=("ent", "wc", "both"))
    w.add_argument("--recovery", help="comma list from petz,syndrome,leung,cafaro")
    w.add_argument("--starts", type=int, help="worst-case optimizer restarts")
    w.add_argument("--cutoff", help="Kraus weight cutoff (default: exact for d <= 4, 3 above)")
    w.add_argument("--chi-scan", dest="chi_scan", action="store_true")
    w.add_argument("--state-grid", dest="state_grid", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "kraus":
            return cmd_kraus(cfg)
        if args.command == "code":
            return cmd_code(cfg)
        if args.command == "syndromes":
            return cmd_syndromes(cfg, overview=args.overview)
        if args.command == "verify":
            if args.surface and args.equivalence:
                raise ConfigError("choose at most one of --surface and --equivalence")
            return cmd_verify(cfg, surface=args.surface, equivalence=args.equivalence)
        if args.command == "sweep":
            if args.chi_scan and args.state_grid:
                raise ConfigError("choose at most one of --chi-scan and --state-grid")
            return cmd_sweep(cfg, chi_scan=args.chi_scan, state_grid=args.state_grid)
    except ConfigError as exc:
        sys.stderr.write(f"qudit-aqec: configuration error: {exc}\n")
        return EXIT_CONFIG
    except ValueError as exc:
        sys.stderr.write(f"qudit-aqec: invalid input: {exc}\n")
        return EXIT_CONFIG
    parser.error("unknown command")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
