"""Acceptance criteria; each test prints one PASS/FAIL line and asserts it."""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from bvkit import builtins
from bvkit.approx import jackson_approx, mollifier_bound_check, mollify, modulus
from bvkit.atoms import check_pairing_inequality, duality_gap
from bvkit.dyadic import random_packing
from bvkit.grid import GridFunction, lq_norm, project_monomial
from bvkit.oracles import dp_vs_enumeration, random_chain
from bvkit.params import INF, Kappa, classify, smoothness
from bvkit.polyapprox import PolyBasis, local_approx_error
from bvkit.variation import (LocalTerms, bmo_gamma, gamma, interval_packing_sup, little_v_profile,
                             v_seminorm, var_1d)

QUARTER = Fraction(1, 4)


def _report(capsys, number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def _pairing_grid():
    for k, d, lam, p, q in itertools.product((1, 2), (1, 2), (0, QUARTER), (1, 2, INF), (2, INF)):
        yield Kappa(k, d, lam, p, q)


def _rand(rng, d, m):
    return GridFunction(rng.normal(size=(1 << m,) * d))


def test_c1_dp_exactness(capsys):
    rng = np.random.default_rng(101)
    kappas = {1: [Kappa(1, 1, 0, 1, INF), Kappa(2, 1, QUARTER, 2, 2), Kappa(1, 1, 0.5, INF, 2),
                  Kappa(2, 1, 0, 1, 1), Kappa(3, 1, QUARTER, 2, 3)],
              2: [Kappa(1, 2, 0, 1, INF), Kappa(2, 2, QUARTER, 2, 2), Kappa(1, 2, 0, INF, 2),
                  Kappa(2, 2, 0, 1, 1), Kappa(1, 2, QUARTER, 2, 3)]}
    start = time.perf_counter()
    results = [dp_vs_enumeration(d, L, kappas[d], 10, rng, m=L + 1) for d, L in ((1, 4), (2, 2))]
    elapsed = time.perf_counter() - start
    bad = sum(len(r.mismatches) for r in results)
    checked = sum(r.checked for r in results)
    ok = bad == 0 and elapsed < 30 and all(r.checked == 50 for r in results)
    _report(capsys, 1, ok, f"{checked} functions, {bad} mismatches, {elapsed:.1f} s")


def test_c2_isometry(capsys):
    rng = np.random.default_rng(102)
    worst = 0.0
    for q, k, d in itertools.product((1, 2, INF), (1, 2), (1, 2)):
        kap = Kappa(k, d, 0, q, q)
        m = 5 if d == 1 else 4
        for _ in range(50):
            f = _rand(rng, d, m)
            diff = abs(v_seminorm(f, kap).value - local_approx_error(f, None, k, q).error)
            worst = max(worst, diff)
    _report(capsys, 2, worst <= 1e-9, f"max |v - E| = {worst:.2e} over 600 functions")


def test_c3_null_space(capsys):
    worst = 0.0
    count = 0
    for k, d in itertools.product((1, 2, 3), (1, 2)):
        for lam, p, q in itertools.product((0, QUARTER), (1, 2, INF), (1, 2, INF)):
            kap = Kappa(k, d, lam, p, q)
            for alpha in PolyBasis(d, k).exponents:
                worst = max(worst, v_seminorm(project_monomial(d, 4, alpha), kap).value)
                count += 1
    _report(capsys, 3, worst <= 1e-9, f"max seminorm {worst:.2e} over {count} (monomial, kappa) pairs")


def test_c4_factor_two(capsys):
    rng = np.random.default_rng(104)
    m = 10
    funcs = [GridFunction(rng.normal(size=1 << j)).refine(m - j) for j in (2, 3, 4, 5, 6) * 2]
    funcs += [builtins.smooth(1, m, seed) for seed in range(10)]
    worst = 0.0
    for f in funcs:
        for p in (1, 2):
            for lam in {0.0, 0.5 * (1 - 1 / p)}:
                lhs = var_1d(f, 1, lam, p)
                rhs = 2 * interval_packing_sup(f, lam, p)
                worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    tol = 4 * 2.0**-m
    _report(capsys, 4, worst <= tol, f"max relative error {worst:.2e} (tolerance {tol:.2e})")


def test_c5_pairing_inequality(capsys):
    rng = np.random.default_rng(105)
    kappas = list(_pairing_grid())
    violations = checked = 0
    worst = 0.0
    while checked < 1000:
        kap = kappas[checked % len(kappas)]
        m = 4 if kap.d == 1 else 3
        f = _rand(rng, kap.d, m)
        lhs, rhs, _ = check_pairing_inequality(f, random_chain(kap.d, m, kap, rng), kap)
        if lhs > rhs * (1 + 1e-9) + 1e-12:
            violations += 1
        if rhs > 0:
            worst = max(worst, lhs / rhs)
        checked += 1
    _report(capsys, 5, violations == 0,
            f"{checked} pairs over {len(kappas)} kappas, {violations} violations, max ratio {worst:.6f}")


def test_c6_duality_gap(capsys):
    rng = np.random.default_rng(106)
    kap = Kappa(1, 1, 0, 2, 2)
    start = time.perf_counter()
    gaps = []
    for _ in range(20):
        v = rng.normal(size=4)
        g = GridFunction(v - v.mean())
        gaps.append(duality_gap(g, kap, exact=True)[2])
    elapsed = time.perf_counter() - start
    ok = max(gaps) <= 0.05 and min(gaps) >= -1e-6 and elapsed < 120
    _report(capsys, 6, ok, f"max relative gap {max(gaps):.2e}, {elapsed:.1f} s")


MOLLIFY_FUNCS = ("linear", "monomial", "sine", "smooth")
RIPPLE_TOL = 1e-4


def test_c7_mollifier(capsys):
    m = 7
    bound_fail, ripple_fail, checks = [], [], 0
    ratios = {}
    for d in (1, 2):
        for name in MOLLIFY_FUNCS:
            f = builtins.make(name, d, m)
            scale = lq_norm(f, INF)
            for kap in (k for k in _pairing_grid() if k.d == d):
                terms = LocalTerms(f, kap)
                null = v_seminorm(f, kap, terms=terms).value <= 1e-12 * scale
                for n in (2, 4, 8):
                    lhs, rhs, ok = mollifier_bound_check(f, kap, n, terms=terms)
                    checks += 1
                    # f is a polynomial annihilated by kappa; only the smoothing ripple remains
                    if null and lhs > RIPPLE_TOL * scale:
                        ripple_fail.append((name, d, str(kap), n, lhs))
                    elif not null and not ok:
                        bound_fail.append((name, d, str(kap), n, lhs / rhs))
            err = [lq_norm(f - mollify(f, n), 2) for n in (2, 16)]
            ratios[(name, d)] = err[0] / err[1]
    low = {key: r for key, r in ratios.items() if r < 4}
    ok = not bound_fail and not ripple_fail and not low
    detail = (f"{checks} bound checks, {len(bound_fail)} failures, {len(ripple_fail)} ripple failures; "
              f"error ratio n=2->16 min {min(ratios.values()):.2f}")
    if low:
        detail += " below 4 for " + ", ".join(f"{n} d={d} ({r:.2f})" for (n, d), r in sorted(low.items()))
    _report(capsys, 7, ok, detail)


def test_c8_little_space(capsys):
    short = []
    count = 0
    for d, m, levels in ((1, 10, [2, 3, 4, 5, 6]), (2, 8, [3, 4, 5, 6])):
        f = builtins.smooth(d, m, 0)
        for kap in (k for k in _pairing_grid() if k.d == d):
            s = float(smoothness(kap))
            if s >= kap.k:
                continue
            slope = little_v_profile(f, kap, levels).slope
            count += 1
            if not slope >= (kap.k - s) / d - 0.2:
                short.append((str(kap), slope))
    step_slopes = [little_v_profile(builtins.step(d, m), Kappa(1, d, 0, 1, INF), levels).slope
                   for d, m, levels in ((1, 10, [2, 3, 4, 5, 6]), (2, 6, [1, 2, 3, 4]))]
    ok = not short and all(abs(s) <= 0.05 for s in step_slopes)
    _report(capsys, 8, ok, f"{count} smooth kappas, {len(short)} below (k-s)/d - 0.2; "
            f"step slopes {', '.join(f'{s:.1e}' for s in step_slopes)}")


def test_c9_degeneracy(capsys):
    cases = [(12, Kappa(1, 1, Fraction(1, 2), 1, INF)), (12, Kappa(2, 1, Fraction(3, 2), 1, INF)),
             (8, Kappa(1, 2, QUARTER, 2, INF)), (8, Kappa(1, 2, 0, 1, 4))]
    parts, ok = [], True
    for m, kap in cases:
        assert smoothness(kap) == kap.k + Fraction(1, 2) and classify(kap).degenerate
        f = builtins.sine(kap.d, m)
        terms = LocalTerms(f, kap)
        vals = [v_seminorm(f, kap, level, terms).value for level in range(2, 7)]
        increasing = all(b > a for a, b in zip(vals, vals[1:]))
        ratio = vals[-1] / vals[0]
        ok &= increasing and ratio >= 4
        parts.append(f"({kap}) ratio {ratio:.3f}{'' if increasing else ' not increasing'}")
    _report(capsys, 9, ok, "; ".join(parts))


def test_c10_bmo_sandwich(capsys):
    rng = np.random.default_rng(110)
    violations = 0
    for i in range(200):
        d = 1 + i % 2
        p = (2, INF)[(i // 2) % 2]
        m = 5 if d == 1 else 3
        f = _rand(rng, d, m)
        pi = random_packing(d, m, rng)
        kap = Kappa(1, d, 1 - (0 if p is INF else Fraction(1, p)), p, 1)
        gv, gb = gamma(f, pi, kap), bmo_gamma(f, pi, p)
        if not (gv <= gb * (1 + 1e-12) and gb <= 2 * gv * (1 + 1e-12)):
            violations += 1
    _report(capsys, 10, violations == 0, f"200 (f, packing) pairs, {violations} violations")


def test_c11_jackson(capsys):
    worst = 0.0
    commute = 0.0
    for d in (1, 2):
        for seed in range(20):
            f = builtins.smooth(d, 6, seed)
            for n in (4, 8, 16):
                err = lq_norm(f - jackson_approx(f, n), INF)
                worst = max(worst, err / (d * modulus(f, 1, INF, 1 / n)))
                if d == 2:
                    a = jackson_approx(f, n, order=(0, 1))
                    b = jackson_approx(f, n, order=(1, 0))
                    commute = max(commute, lq_norm(a - b, INF))
    ok = worst <= 1 + 1e-12 and commute <= 1e-12
    _report(capsys, 11, ok, f"max err / (d omega) = {worst:.4f}, commutation {commute:.1e}")
