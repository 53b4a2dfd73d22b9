"""hardyforge command line: verify | pair | sharpness | catalog.

Exit codes: 0 everything passed, 1 a mathematical check failed, 2 bad usage
or configuration.  Reports are JSON (sorted keys, "schema": "1") or CSV.

Defaults
--------
    tol       1e-8
    dims      3,4,5,8
    eps       1e-6 * R        (pair shooting start)
    R         1.0             (pair interval)
    kmax      64              (sharpness)
    variant   gradient
    ell       0
    format    json for verify and pair, csv for sharpness, human for catalog

A config file (--config) holds key = value lines under [verify], [pair],
[sharpness] or [catalog]; keys are the long flag names.  Flags win.

Expression syntax for --V, --W: numbers, r, parameters N R b lambda alpha,
pi, + - * / ^ (right associative), parentheses and the functions
sqrt exp ln sin cos sinh cosh tanh coth abs sign besselj(alpha, x).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import besselpair, exprlang, identities, sharpness
from .geometry import ModelManifold

SCHEMA = "1"

DEFAULTS = {
    "tol": 1e-8,
    "dims": "3,4,5,8",
    "eps": None,
    "R": 1.0,
    "kmax": 64,
    "variant": "gradient",
    "ell": "0",
    "verify.format": "json",
    "pair.format": "json",
    "sharpness.format": "csv",
    "catalog.format": "human",
}


class UsageError(Exception):
    pass


# -- helpers ----------------------------------------------------------------

def _int_list(text: str, what: str) -> list[int]:
    try:
        out = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of integers, got {text!r}") from None
    if not out:
        raise UsageError(f"{what} is empty")
    return out


def _threads() -> int:
    raw = os.environ.get("HARDYFORGE_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"HARDYFORGE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"HARDYFORGE_THREADS must be a positive integer, got {raw!r}")
    return n


def _apply_config(args: argparse.Namespace, section: str) -> None:
    """Fill unset flags from the config file, then from DEFAULTS."""
    cfg = {}
    if getattr(args, "config", None):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(args.config, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except configparser.Error as exc:
            raise UsageError(f"bad config file: {exc}") from None
        if parser.has_section(section):
            cfg = {k.replace("-", "_"): v for k, v in parser.items(section)}
        unknown = set(cfg) - set(vars(args))
        if unknown:
            raise UsageError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    for key in vars(args):
        if getattr(args, key) is None:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif f"{section}.{key}" in DEFAULTS:
                setattr(args, key, DEFAULTS[f"{section}.{key}"])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])


def _float(v, what: str) -> float | None:
    if v is None:
        return None
    try:
        return float(v)
    except (TypeError, ValueError):
        raise UsageError(f"{what} must be a number, got {v!r}") from None


def _emit(text: str, output: str | None) -> None:
    if output and output != "-":
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# -- verify -----------------------------------------------------------------

CASE_FLAGS = {"b": "b", "lambda": "lam", "alpha": "alpha", "R": "R", "pair": "pair", "b_cmp": "b_cmp"}


def _verify_cells(args) -> list[tuple]:
    ids = identities.CASE_IDS if args.case == "all" else [c.strip() for c in args.case.split(",") if c.strip()]
    for cid in ids:
        if cid not in identities.CASES:
            raise UsageError(f"unknown case id {cid!r}; see 'hardyforge catalog'")
    dims = _int_list(args.dims, "--dims")
    ells = _int_list(args.ell, "--ell")
    variants = ["gradient", "radial"] if args.variant == "both" else [args.variant]
    for v in variants:
        if v not in ("gradient", "radial"):
            raise UsageError(f"--variant must be gradient, radial or both, got {v!r}")
    explicit = args.case != "all"
    cells = []
    for cid in ids:
        info = identities.CASES[cid]
        for N in dims:
            params = {"N": N}
            for key, attr in CASE_FLAGS.items():
                val = getattr(args, attr)
                if val is None or key not in info.params:
                    continue
                if key == "b" and info.b_rule == "pinned":
                    if explicit and float(val) != float(info.params["b"]):
                        raise UsageError(f"case {cid} requires b = {info.params['b']}")
                    continue
                params[key] = val if key == "pair" else _float(val, f"--{key}")
            for variant in variants:
                try:
                    case = identities.build_case(cid, dict(params, variant=variant))
                except identities.CaseError as exc:
                    raise UsageError(f"{cid}, N={N}: {exc}") from None
                for ell in ells if variant == "gradient" else [0]:
                    if args.profile:
                        try:
                            profs = [identities.parse_profile(p, ell) for p in args.profile]
                        except identities.CaseError as exc:
                            raise UsageError(str(exc)) from None
                        if case.shifted:
                            R = float(case.params["R"])
                            profs = [p if p.flat_at is not None else
                                     identities.TestProfile(p.kind, p.c, p.w, p.ell, p.amp, R, 0.0) for p in profs]
                    else:
                        profs = identities.default_profiles(case, ell)
                    for i, prof in enumerate(profs):
                        try:
                            identities.check_profile(case, prof)
                        except identities.CaseError as exc:
                            raise UsageError(f"{cid}, N={N}: {exc}") from None
                        cells.append(((cid, N, variant, ell, i), case, prof))
    return cells


def _run_cell(cell, tol):
    key, case, prof = cell
    try:
        rep = identities.verify(case, None, prof, tol)
        d = rep.to_dict()
    except identities.TermQuadratureError as exc:
        d = {"meta": {"case": case.id, "N": case.N, "b": case.b, "params": dict(case.params),
                      "profile": prof.to_dict(), "tol": tol, "variant": case.variant},
             "error": str(exc), "pass": False}
    return key, d


def _csv_rows(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema", "case", "N", "b", "variant", "ell", "profile", "lhs", "rhs",
                "abs_residual", "rel_residual", "pass"])
    for d in results:
        m = d["meta"]
        prof = m["profile"]
        label = f"{prof['kind']}:c={prof['c']!r},w={prof['w']!r}"
        w.writerow([SCHEMA, m["case"], m["N"], repr(m["b"]), m["variant"], prof["ell"], label,
                    repr(d.get("lhs", "")), repr(d.get("rhs", "")), repr(d.get("abs_residual", "")),
                    repr(d.get("rel_residual", "")), int(d["pass"])])
    return buf.getvalue()


def cmd_verify(args) -> int:
    _apply_config(args, "verify")
    tol = _float(args.tol, "--tol")
    if not (tol and tol > 0):
        raise UsageError("--tol must be > 0")
    cells = _verify_cells(args)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        done = dict(pool.map(lambda c: _run_cell(c, tol), cells))
    results = [done[k] for k in sorted(done)]
    ok = all(d["pass"] for d in results)
    if args.format == "json":
        text = _dumps({"schema": SCHEMA, "command": "verify", "pass": ok, "results": results})
    elif args.format == "csv":
        text = _csv_rows(results)
    elif args.format == "human":
        lines = []
        for d in results:
            m = d["meta"]
            flag = "PASS" if d["pass"] else "FAIL"
            rel = d.get("rel_residual")
            detail = f"rel_residual={rel:.3e}" if rel is not None else d.get("error", "")
            lines.append(f"{flag} {m['case']} N={m['N']} {m['variant']} ell={m['profile']['ell']} "
                         f"{m['profile']['kind']} {detail}")
        lines.append(f"{sum(d['pass'] for d in results)}/{len(results)} passed")
        text = "\n".join(lines) + "\n"
    else:
        raise UsageError(f"unknown format {args.format!r}")
    _emit(text, args.output)
    return 0 if ok else 1


# -- pair -------------------------------------------------------------------

def _expr_error(which: str, src: str, exc: exprlang.ExprError) -> str:
    msg = f"{which}: {exc}"
    if isinstance(exc, exprlang.ParseError):
        msg += f"\n  {src}\n  {' ' * exc.offset}^"
    return msg


def cmd_pair(args) -> int:
    _apply_config(args, "pair")
    exprs = {}
    for which in ("V", "W"):
        src = getattr(args, which)
        if src is None:
            raise UsageError(f"--{which} is required")
        try:
            exprs[which] = exprlang.parse(src)
        except exprlang.ExprError as exc:
            raise UsageError(_expr_error(f"--{which}", src, exc)) from None
    if args.N is None:
        raise UsageError("--N is required")
    try:
        N = int(args.N)
    except ValueError:
        raise UsageError(f"--N must be an integer, got {args.N!r}") from None
    R = _float(args.R, "--R")
    eps = _float(args.eps, "--eps")
    bindings = {k: _float(getattr(args, a), f"--{k}") for k, a in (("b", "b"), ("lambda", "lam"), ("alpha", "alpha"))
                if getattr(args, a) is not None}
    try:
        verdict = besselpair.check_pair(exprs["V"], exprs["W"], R, N, eps, bindings)
    except exprlang.ExprError as exc:
        raise UsageError(str(exc)) from None
    except besselpair.StepUnderflowError as exc:
        print(f"shooting failed: {exc} near r={exc.last_r!r}", file=sys.stderr)
        return 1
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    d = verdict.to_dict()
    d["V"] = exprlang.to_source(exprs["V"])
    d["W"] = exprlang.to_source(exprs["W"])
    if args.format == "json":
        text = _dumps({"schema": SCHEMA, "command": "pair", "verdict": d})
    else:
        z = "none" if verdict.first_zero is None else repr(verdict.first_zero)
        text = f"is_pair={verdict.is_pair} first_zero={z} steps={verdict.steps} N={N} R={R!r}\n"
    _emit(text, args.output)
    if args.phi_csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "phi", "flux"])
        for r, phi, p in verdict.samples:
            w.writerow([repr(r), repr(phi), repr(p)])
        _emit(buf.getvalue(), args.phi_csv)
    return 0 if verdict.is_pair else 1


# -- sharpness --------------------------------------------------------------

def cmd_sharpness(args) -> int:
    _apply_config(args, "sharpness")
    if args.target is None:
        raise UsageError("--target is required")
    if args.N is None:
        raise UsageError("--N is required")
    try:
        N = int(args.N)
        kmax = int(args.kmax)
    except ValueError:
        raise UsageError("--N and --kmax must be integers") from None
    kw = {}
    if args.lam is not None and args.target.startswith("hardy"):
        kw["lam"] = _float(args.lam, "--lambda")
    if args.target == "bv-ball":
        kw["R"] = _float(args.R, "--R")
        if args.lam is not None:
            kw["lam"] = _float(args.lam, "--lambda")
    try:
        fam = sharpness.family(args.target, N, **kw)
        res = sharpness.sharpness_scan(fam, ModelManifold(N, fam.b), kmax)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    below = any(q < fam.target_constant * (1.0 - 1e-8) for _, q in res.series)
    if args.format == "json":
        d = res.to_dict()
        d["params"] = {k: v for k, v in fam.params.items()}
        text = _dumps({"schema": SCHEMA, "command": "sharpness", "scan": d})
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "quotient", "ratio"])
        for k, q in res.series:
            w.writerow([k, repr(q), repr(q / fam.target_constant)])
        text = buf.getvalue()
    else:
        raise UsageError(f"unknown format {args.format!r}")
    _emit(text, args.output)
    print(f"{fam.name} N={N}: min quotient {res.min_quotient:.6f}, target {fam.target_constant:.6f}, "
          f"ratio {res.ratio:.5f}", file=sys.stderr)
    return 1 if below else 0


# -- catalog ----------------------------------------------------------------

def cmd_catalog(args) -> int:
    _apply_config(args, "catalog")
    cases = []
    for cid, info in identities.CASES.items():
        cases.append({"id": cid, "summary": info.summary, "curvature": info.b_rule,
                      "defaults": {k: v for k, v in info.params.items() if v is not None},
                      "ranges": info.ranges, "inequality": info.inequality})
    pairs = [{"id": pid, "params": list(besselpair.CATALOG_PARAMS[pid]), "ranges": besselpair.CATALOG_RANGES[pid]}
             for pid in besselpair.CATALOG_IDS]
    if args.format == "json":
        text = _dumps({"schema": SCHEMA, "command": "catalog", "cases": cases, "pairs": pairs})
    else:
        lines = ["cases:"]
        for c in cases:
            defaults = " ".join(f"{k}={v}" for k, v in sorted(c["defaults"].items()))
            lines.append(f"  {c['id']:<14} [{c['curvature']} b] {c['summary']}")
            lines.append(f"  {'':<14} defaults: {defaults}; ranges: {c['ranges']}")
        lines.append("pairs:")
        for p in pairs:
            lines.append(f"  {p['id']:<22} params: {','.join(p['params']) or '-'}; ranges: {p['ranges']}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return 0


# -- entry point ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hardyforge", description=__doc__.split("\n\n")[0],
                epilog="Run 'hardyforge <command> -h' for the flags of each command.",
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, formats):
        sp.add_argument("--config", help="key = value file with a section per command")
        sp.add_argument("--format", choices=formats)
        sp.add_argument("--output", "-o", help="output file (default stdout)")

    v = sub.add_parser("verify", help="verify identity cases over a grid")
    v.add_argument("--case", default="all", help="comma-separated case ids or 'all'")
    v.add_argument("--dims", help="comma-separated dimensions (default 3,4,5,8)")
    v.add_argument("--b", help="curvature parameter for cases with free b")
    v.add_argument("--lambda", dest="lam")
    v.add_argument("--alpha")
    v.add_argument("--R")
    v.add_argument("--pair", help="pair id for T1-generic, CT1-ineq, H1-generic")
    v.add_argument("--b-cmp", dest="b_cmp", help="comparison curvature for CT1-ineq")
    v.add_argument("--variant", help="gradient, radial or both")
    v.add_argument("--ell", help="comma-separated angular modes for gradient variants")
    v.add_argument("--profile", action="append",
                   help="profile spec such as bump:c=1.5,w=1.0 (repeatable; default three per case)")
    v.add_argument("--tol")
    common(v, ["json", "csv", "human"])
    v.set_defaults(func=cmd_verify)

    pr = sub.add_parser("pair", help="check whether (V, W) is a Bessel pair on (0, R)",
                        description=__doc__.split("\n\n")[-1], formatter_class=argparse.RawDescriptionHelpFormatter)
    pr.add_argument("--V")
    pr.add_argument("--W")
    pr.add_argument("--N")
    pr.add_argument("--R")
    pr.add_argument("--eps", help="shooting start (default 1e-6 R)")
    pr.add_argument("--b")
    pr.add_argument("--lambda", dest="lam")
    pr.add_argument("--alpha")
    pr.add_argument("--phi-csv", dest="phi_csv", help="write the shot phi and flux samples here")
    common(pr, ["json", "human"])
    pr.set_defaults(func=cmd_pair)

    s = sub.add_parser("sharpness", help="Rayleigh quotient scan along a trial family")
    s.add_argument("--target", help=", ".join(sharpness.TARGETS))
    s.add_argument("--N")
    s.add_argument("--kmax")
    s.add_argument("--R", help="ball radius for bv-ball")
    s.add_argument("--lambda", dest="lam")
    common(s, ["csv", "json"])
    s.set_defaults(func=cmd_sharpness)

    c = sub.add_parser("catalog", help="list identity cases and Bessel pairs")
    common(c, ["human", "json"])
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        return args.func(args)
    except UsageError as exc:
        print(f"hardyforge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
