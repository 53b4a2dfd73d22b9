"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line in ACCEPTANCE; conftest.py prints the
collected lines at the end of the session.
"""

import itertools
import json
import math
import time

import numpy as np

from hardyforge import besselpair as bp
from hardyforge import exprlang as el
from hardyforge import identities as idn
from hardyforge import sharpness as sh
from hardyforge import specfun
from hardyforge.cli import main
from hardyforge.geometry import ModelManifold, comparison_D

ACCEPTANCE = []


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def test_1_identity_grid():
    t0 = time.perf_counter()
    worst, cells, failed = 0.0, 0, []
    for cid, N, ell in itertools.product(idn.CASE_IDS, (3, 4, 5, 8), (0, 1, 2)):
        case = idn.build_case(cid, {"N": N})
        for f in idn.default_profiles(case, ell=ell):
            rep = idn.verify(case, f=f, tol=1e-8)
            cells += 1
            worst = max(worst, rep.rel_residual)
            if rep.rel_residual > 1e-8:
                failed.append((cid, N, ell, f.label()))
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed <= 60.0
    assert record(1, ok, f"{cells} cells, worst rel residual {worst:.2e}, {elapsed:.1f} s"), failed[:5]


def test_2_catalog_ode_residuals():
    worst, checked, skipped, bad = 0.0, 0, 0, []
    for pid, N in itertools.product(bp.CATALOG_IDS, (3, 4, 5, 8)):
        names = bp.CATALOG_PARAMS[pid]
        grid = {
            "lambda": (0.0, 1.0, (N - 2) / 2),
            "alpha": (0.0, 1.0, (N - 2) / 2),
            "R": (1.0, 2.0),
        }
        for values in itertools.product(*(grid[k] for k in names)):
            try:
                p = bp.catalog(pid, {"N": N, **dict(zip(names, values))})
            except bp.PairError:
                skipped += 1  # alpha above (N - lambda - 2)/2 has no pair
                continue
            R = p.R
            pts = np.geomspace(0.01 * R, 0.9 * R, 50) if math.isfinite(R) else np.geomspace(0.01, 10.0, 50)
            for r in pts:
                res, scale = abs(bp.ode_residual(p, r)), bp.residual_scale(p, r)
                # scale is 0 only for the trivial pair phi = 1, W = 0
                if res > 1e-6 * scale:
                    bad.append((pid, N, values, r))
                if scale > 0:
                    worst = max(worst, res / scale)
            checked += 1
    ok = not bad and checked > 0
    assert record(2, ok, f"{checked} pairs x 50 points, worst scaled residual {worst:.2e}, {skipped} infeasible skipped")


def test_3_bessel_zeros():
    z0 = specfun.bessel_first_zero(0.0)
    zh = specfun.bessel_first_zero(0.5)
    ok = f"{z0:.5g}" == "2.4048" and abs(zh - math.pi) <= 1e-10
    assert record(3, ok, f"z_0 = {z0:.10f}, |z_1/2 - pi| = {abs(zh - math.pi):.1e}")


def test_4_ball_chart_oracle():
    worst, bad = 0.0, []
    for cid, N in itertools.product(("T6-ballmodel", "V2-hyperbolic"), (3, 5)):
        case = idn.build_case(cid, {"N": N})
        for ell in (0, 1, 2):
            for f in idn.default_profiles(case, ell=ell):
                rep = idn.verify_ballmodel_oracle(case, f)
                d = rep.extra["chart_rel_diff_max"]
                worst = max(worst, d)
                if d > 1e-9 or not rep.passed:
                    bad.append((cid, N, f.label()))
    assert record(4, not bad, f"worst chart relative difference {worst:.2e}"), bad


def _decreasing_phi_remainders(case):
    """Values of the log-derivative remainders of case where phi is decreasing."""
    out = []
    for f in idn.default_profiles(case, ell=1):
        lo, hi = f.support
        r = np.linspace(lo, hi, 64)[1:-1]
        for t_ in case.terms:
            if t_.functional != idn.LOGDERIV_SQ or t_.side == "aux":
                continue
            with np.errstate(invalid="ignore", divide="ignore"):
                dl = t_.dlogphi(r)
            if np.any(dl > 0):
                continue  # phi not decreasing here
            out.append(idn.verify(case, f=f).term(t_.name).value)
    return out


def test_5_nonnegative_remainders():
    t = np.geomspace(1e-6, 50.0, 4000)
    d_min = min(float(np.min(comparison_D(ModelManifold(4, b), t))) for b in (0.0, 0.5, 1.0, 4.0))
    values = []
    for cid, N in itertools.product(idn.CASE_IDS, (3, 5)):
        bs = (None, 0.5, 1.0, 4.0) if idn.CASES[cid].b_rule == "free" else (None,)
        for b in bs:
            params = {"N": N} if b is None else {"N": N, "b": b}
            values += _decreasing_phi_remainders(idn.build_case(cid, params))
    positive = sum(v > 0 for v in values)
    ok = d_min >= 0.0 and positive > 0 and min(values) >= 0.0
    assert record(5, ok, f"min D_b {d_min:.2e}; {len(values)} log-derivative remainders "
                         f"({positive} > 0), min {min(values):.2e}")


def test_6_sharpness_scans():
    runs = [
        ("hardy-hyperbolic", 5, {}, 1.02),
        ("poincare", 4, {}, 1.05),
        ("bv-ball", 3, {"R": 1.0}, 1.05),
    ]
    parts, ok = [], True
    for target, N, kw, bound in runs:
        res = sh.sharpness_scan(sh.family(target, N, **kw), k_max=64)
        qs = [q for _, q in res.series]
        good = res.ratio <= bound and min(qs) >= res.target * (1 - 1e-8)
        ok &= good
        parts.append(f"{target} N={N} ratio {res.ratio:.5f}")
    assert record(6, ok, "; ".join(parts))


def test_7_rejections(capsys):
    v = bp.check_pair(el.parse("1"), el.parse("1.5*((N-2)/2)^2 / r^2"), 1.0, 4)
    code = main(["verify", "--case", "T3.3", "--alpha", "3", "--dims", "4"])
    capsys.readouterr()
    ok = (not v.is_pair) and code == 2
    assert record(7, ok, f"1.5x weight is_pair={v.is_pair} first_zero={v.first_zero:.3g}; T3.3 alpha=3 exit {code}")


def test_8_shifted_identities():
    worst, bad = 0.0, []
    for cid, R, N in itertools.product(("T2-shifted", "C3-global"), (1.0, 2.0), (3, 5)):
        case = idn.build_case(cid, {"N": N, "R": R})
        for ell in (0, 1, 2):
            for f in idn.default_profiles(case, ell=ell):
                rep = idn.verify(case, f=f, tol=1e-7)
                worst = max(worst, rep.rel_residual)
                if rep.rel_residual > 1e-7:
                    bad.append((cid, R, N, f.label()))
    assert record(8, not bad, f"worst rel residual {worst:.2e}"), bad


def test_9_deterministic_json(capsys, monkeypatch):
    args = ["verify", "--dims", "3,5", "--ell", "0,1", "--format", "json"]
    outs = []
    for threads in ("1", "1", "4"):
        monkeypatch.setenv("HARDYFORGE_THREADS", threads)
        code = main(args)
        outs.append(capsys.readouterr().out)
        assert code == 0
    ok = len(set(outs)) == 1 and json.loads(outs[0])["schema"] == "1"
    assert record(9, ok, f"3 runs, {len(outs[0])} bytes each, identical={len(set(outs)) == 1}")
