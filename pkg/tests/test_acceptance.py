"""Acceptance criteria 1-10, one test each.

Each test records a PASS/FAIL line (printed in the terminal summary and to
stdout) and then asserts the criterion at its stated tolerance.  Where a
criterion leaves the coupling strength open the verdict uses J = 1, the
convention of the shipped models; weaker couplings are printed as
diagnostics only.
"""

import itertools
import math
import time

import numpy as np
import pytest

from gibbs1d.cli import main
from gibbs1d.coupling import (
    aux_chain_p0_sequence,
    lemma_bound_check,
    maximal_coupling_sample,
    mismatch_vs_bound,
    model_chain,
    origin_max_diff,
    run_rng,
)
from gibbs1d.errors import FitDegenerateError, UnsupportedConstraintError
from gibbs1d.gibbs import dlr_check, tv_distance
from gibbs1d.kozlov import decay_scan, fit_decay
from gibbs1d.lattice import Interval, SpinConfig, ising_alphabet
from gibbs1d.model import shipped_model_path
from gibbs1d.potential import (
    exponential_ising,
    long_range_ising,
    nearest_neighbor_ising,
    potts,
    truncation,
)
from gibbs1d.transform import (
    conditional_table_bruteforce,
    constrained_consistency_check,
    flip_kernel,
    fuzzy_potts_map,
    transformed_conditional_firstlayer_deterministic,
    transformed_conditional_firstlayer_stochastic,
)

from conftest import ACCEPTANCE, constant_boundary

A = ising_alphabet()


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def test_criterion_01_stochastic_first_layer():
    t0 = time.perf_counter()
    worst = 0.0
    for J, eps, n, tail in itertools.product((0.2, 0.4, 0.8), (0.1, 0.3), (2, 3, 4), "+-"):
        pot = nearest_neighbor_ising(J)
        tr = truncation(pot, 1)
        k = flip_kernel(A, eps)
        bnd = constant_boundary(A, tail)
        table = conditional_table_bruteforce(pot, k, n, bnd, tr)
        for idx in itertools.product(range(2), repeat=2 * n + 1):
            xi = SpinConfig(A, Interval(-n, n), idx)
            v = transformed_conditional_firstlayer_stochastic(pot, k, n, xi, bnd, tr)
            worst = max(worst, abs(v - table[idx]))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-10 and secs < 60
    record(1, ok, f"max |first-layer - brute force| = {worst:.2e} (tol 1e-10), {secs:.1f} s (limit 60 s)")
    assert ok


def _flags(fn):
    try:
        return fn(), False
    except UnsupportedConstraintError:
        return None, True


def test_criterion_02_deterministic_first_layer():
    t0 = time.perf_counter()
    P = potts(3, 0.0).alphabet
    m = fuzzy_potts_map()
    worst, checked, mismatched_flags = 0.0, 0, 0
    for J, n, tail in itertools.product((0.2, 0.4), (2, 3), ("1", "3")):
        pot = potts(3, J)
        tr = truncation(pot, 1)
        bnd = constant_boundary(P, tail)
        table = conditional_table_bruteforce(pot, m, n, bnd, tr)
        for idx in itertools.product(range(2), repeat=2 * n + 1):
            eta = SpinConfig(m.target, Interval(-n, n), idx)
            v, flagged = _flags(lambda: transformed_conditional_firstlayer_deterministic(pot, m, n, eta, bnd, tr))
            brute_flagged = bool(np.isnan(table[idx]))
            if flagged != brute_flagged:
                mismatched_flags += 1
                continue
            if not flagged:
                worst = max(worst, abs(v - table[idx]))
                checked += 1
    secs = time.perf_counter() - t0
    ok = worst <= 1e-10 and mismatched_flags == 0 and secs < 120
    record(2, ok, f"max diff {worst:.2e} over {checked} windows, flag disagreements {mismatched_flags}, "
                  f"{secs:.1f} s (limit 120 s)")
    assert ok


def test_criterion_03_dlr_consistency():
    P = potts(3, 0.0).alphabet
    models = [
        ("ising J=0.4", nearest_neighbor_ising(0.4), A),
        ("ising J=0.8 h=0.3", nearest_neighbor_ising(0.8, 0.3), A),
        ("potts q=3 J=0.3", potts(3, 0.3), P),
    ]
    vols = [Interval(-1, 1), Interval(-2, 2), Interval(-3, 3)]
    worst = 0.0
    for _, pot, alpha in models:
        tr = truncation(pot, 1)
        for tail in alpha.symbols:
            bnd = constant_boundary(alpha, tail)
            for inner, outer in itertools.combinations(vols, 2):
                worst = max(worst, dlr_check(pot, inner, outer, bnd, tr))
    m = fuzzy_potts_map()
    eta = SpinConfig.from_symbols(m.target, Interval(-3, 3), "abaabba")
    pot = potts(3, 0.3)
    cons = 0.0
    for inner, outer in itertools.combinations(vols, 2):
        cons = max(cons, constrained_consistency_check(pot, m, inner, outer, constant_boundary(P), eta,
                                                       truncation(pot, 1)))
    ok = worst <= 1e-12 and cons <= 1e-12
    record(3, ok, f"DLR deviation {worst:.2e}, eta-dependent consistency {cons:.2e} (tol 1e-12)")
    assert ok


def test_criterion_04_lemma_bound():
    t0 = time.perf_counter()
    rows = []
    for lam, n1, m in itertools.product((0.7, 1.0), (1, 2), (1, 2, 3)):
        pot = exponential_ising(1.0, lam)
        c = lemma_bound_check(pot, n1, m, truncation(pot, 30))
        rows.append(c)
    secs = time.perf_counter() - t0
    ok = all(c.holds for c in rows) and secs < 300
    slack = min(c.bound - c.measured_sup for c in rows)
    record(4, ok, f"{sum(c.holds for c in rows)}/{len(rows)} instances hold, smallest slack {slack:.3g}, "
                  f"{secs:.1f} s (limit 300 s)")
    assert ok


def test_criterion_05_domination_chain():
    details = []
    ok = True
    for J in (1.0, 0.05):
        pot = exponential_ising(J, 1.0)
        tr = truncation(pot, 30)
        p0 = aux_chain_p0_sequence(model_chain(pot, 6, tr))
        for l in range(2, 7):
            diff = max(origin_max_diff(pot, l, constant_boundary(A, a), constant_boundary(A, b), tr)
                       for a, b in (("+", "-"), ("-", "+")))
            holds = diff <= p0[l]
            if J == 1.0:
                ok &= holds
            details.append((J, l, diff, p0[l], holds))
    worst = max((d for d in details if d[0] == 1.0), key=lambda d: d[2] / d[3])
    weak_ok = all(d[4] for d in details if d[0] == 0.05)
    record(5, ok, f"J=1: all l=2..6 hold (tightest l={worst[1]}: {worst[2]:.3g} <= {worst[3]:.4g}); "
                  f"J=0.05 diagnostic holds: {weak_ok}")
    assert ok


def test_criterion_06_coupling_statistics():
    rng = np.random.default_rng(2024)
    n = 100_000
    bad = []
    for t in range(20):
        size = int(rng.integers(2, 7))
        p = rng.dirichlet(np.ones(size))
        q = rng.dirichlet(np.ones(size))
        tv = tv_distance(p, q)
        x, y = maximal_coupling_sample(p, q, run_rng(6, t), size=n)
        sigma = math.sqrt(tv * (1 - tv) / n)
        if abs(np.mean(x != y) - tv) > 4 * sigma:
            bad.append(t)
    pot = exponential_ising(1.0, 1.0)
    tr = truncation(pot, 30)
    pairs = [("+/-", constant_boundary(A, "+"), constant_boundary(A, "-")),
             ("-/+", constant_boundary(A, "-"), constant_boundary(A, "+"))]
    recs = mismatch_vs_bound(pot, 4, pairs, 10_000, 0, tr)
    chain_ok = all(r["z0_below_s0"] for r in recs)
    ok = not bad and chain_ok
    r = recs[0]
    record(6, ok, f"{20 - len(bad)}/20 table pairs within 4 sigma; l=4: P(Z=0) = {r['p_z0_empirical']:.4f} "
                  f"<= P(S=0) = {r['p_s0_exact']:.4f} + 3 sigma: {chain_ok}")
    assert ok


def test_criterion_07_exponential_decay():
    pot = exponential_ising(1.0, 1.0)
    scan = decay_scan(pot, flip_kernel(A, 0.1), 6, 6, truncation(pot, 30))
    sups = [p.sup_abs_U for p in scan]
    decreasing = all(b < a for a, b in zip(sups[1:], sups[2:]))
    try:
        fit = fit_decay(scan, "exponential")
        ok = fit.rate > 0 and fit.residual < 0.5 and decreasing
        detail = f"lambda_hat = {fit.rate:.4f}, residual {fit.residual:.4f}, d=2..6 strictly decreasing: {decreasing}"
    except FitDegenerateError as e:
        ok, detail = False, f"fit degenerate: {e}"
    record(7, ok, detail)
    assert ok


def _power_fit(J, eps=0.1):
    pot = long_range_ising(4.0, J)
    scan = decay_scan(pot, flip_kernel(A, eps), 6, 6, truncation(pot, 60))
    unfiltered = fit_decay(scan, "power-law", max_rel_delta=math.inf)
    try:
        return fit_decay(scan, "power-law"), unfiltered, scan
    except FitDegenerateError:
        return None, unfiltered, scan


def test_criterion_08_power_law_decay():
    fit, raw, scan = _power_fit(1.0)
    worst_rel = min(p.window_delta / p.sup_abs_U for p in scan if p.diameter >= 2)
    diag, _, _ = _power_fit(0.8)
    diag_txt = f"J=0.8 diagnostic p_hat = {diag.rate:.3f}" if diag else "J=0.8 diagnostic degenerate"
    if fit is None:
        ok = False
        detail = (f"J=1: no scan point with window delta below 10% (smallest {worst_rel:.1%}); "
                  f"without that filter p_hat = {raw.rate:.3f}; {diag_txt}")
    else:
        ok = 1.0 <= fit.rate <= 4.0
        detail = f"J=1: p_hat = {fit.rate:.3f} (accept [1, 4]), residual {fit.residual:.3f}; {diag_txt}"
    record(8, ok, detail)
    assert ok


def test_criterion_09_bound_tables():
    t0 = time.perf_counter()

    def table(pot, L):
        return aux_chain_p0_sequence(model_chain(pot, L))

    def nonincreasing_from(p):
        for l0 in range(0, 9):
            if np.all(np.diff(p[l0:]) <= 1e-15):
                return l0
        return None

    exp_ok = {}
    for J in (1.0, 0.05):
        pe = table(exponential_ising(J, 1.0), 64)
        pp = table(long_range_ising(4.0, J), 256)
        l0 = nonincreasing_from(pe)
        exp_ok[J] = (l0 is not None and pe[64] < 1e-3, pp[256] < 1e-1, l0, pe[64], pp[256])
    secs = time.perf_counter() - t0
    e_ok, p_ok, l0, pe64, pp256 = exp_ok[1.0]
    ok = e_ok and p_ok and secs < 10
    w = exp_ok[0.05]
    record(9, ok, f"J=1: exponential P(S_64=0) = {pe64:.4g} (need < 1e-3, l0 = {l0}), power-law P(S_256=0) = "
                  f"{pp256:.4g} (need < 0.1); J=0.05 diagnostic {w[3]:.3g} / {w[4]:.3g}; {secs:.2f} s")
    assert ok


def _cli_outputs(tmp, tag):
    cases = {
        "conditional.csv": ["conditional", "--model", str(shipped_model_path("ising_nn")), "--n", "3"],
        "kozlov.csv": ["kozlov-scan", "--model", str(shipped_model_path("exponential")), "--diameters", "5",
                       "--n", "5"],
        "coupling.json": ["coupling", "--model", str(shipped_model_path("exponential")), "--n", "3",
                          "--runs", "2000", "--seed", "17", "--dump-trajectories"],
        "bounds.csv": ["bounds", "--model", str(shipped_model_path("power_law")), "--horizon", "64"],
        "lemma.json": ["lemma-check", "--model", str(shipped_model_path("exponential")), "--n", "1", "--m", "2"],
    }
    d = tmp / tag
    d.mkdir()
    for name, argv in cases.items():
        assert main(argv + ["--out", str(d / name)]) == 0
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_criterion_10_cli_determinism(tmp_path):
    a = _cli_outputs(tmp_path, "a")
    b = _cli_outputs(tmp_path, "b")
    differing = [k for k in a if a[k] != b.get(k)]
    ok = set(a) == set(b) and not differing and len(a) == 7
    record(10, ok, f"{len(a)} output files from 5 commands, byte-identical across two runs: {not differing}")
    assert ok
