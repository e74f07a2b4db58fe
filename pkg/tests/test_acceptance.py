"""Acceptance checks, one test per criterion.

Each test prints a line ``acceptance N: PASS|FAIL | details`` to the
terminal (bypassing capture) before asserting. Rows for the default Haar
ordering (``haar``) are printed as information only; the checks use
``haar1``.
"""

import math

import numpy as np
import pytest
from scipy import stats

from funkmean import (
    BasisSpec,
    BootstrapConfig,
    DiscretizedCurve,
    GroupedScores,
    bootstrap_test,
    project_curve,
    projection_pair,
    t_flrt,
)
from funkmean.diagnostics import multi_basis_diagnostic, reorder_diagnostic
from funkmean.flrt import flrt_core, moments
from funkmean.simulate import (
    TABLE2_C,
    MaternParams,
    bessel_k,
    matern_kernel,
    run_power_experiment,
    run_size_experiment,
    simulate_dataset,
    table1_config,
    table2_config,
    table3_config,
)

from helpers import random_spd

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {n}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok

    return emit


@pytest.fixture
def info(capsys):
    def emit(text):
        with capsys.disabled():
            print(f"  info: {text}")

    return emit


def rate(table, basis, p, x):
    (row,) = [r for r in table.rows if r["basis"] == basis and r["p"] == p and math.isclose(r["nu_or_c"], x)]
    return row["reject_rate"]


# 1 -------------------------------------------------------------------------


def test_chisq_calibration(report):
    rng = np.random.default_rng(101)
    p, n, reps = 3, 200, 2000
    covs = [np.diag([1.0, 2.0, 3.0]), random_spd(rng, p, 3.0)]
    roots = [np.linalg.cholesky(S) for S in covs]
    data = np.stack([rng.standard_normal((reps, n, p)) @ L.T for L in roots], axis=1)
    means, cov = moments(data)
    T, ok, _, _ = flrt_core(means, cov, [n, n])
    assert ok.all()
    reject = float(np.mean(T > stats.chi2.ppf(0.95, p)))
    ks = stats.kstest(T, stats.chi2(p).cdf).statistic
    ok = 0.040 <= reject <= 0.060 and ks < 0.035
    assert report(1, ok, f"rejection {reject:.4f} in [0.040, 0.060], KS distance {ks:.4f} < 0.035")


# 2 -------------------------------------------------------------------------


def test_table1_size(report, info):
    cfg = table1_config(nu_values=(5.0,), R=1000, B=500, bases=("haar1", "fourier", "haar"), include_hotelling=False)
    table = run_size_experiment(cfg)
    h, f = rate(table, "haar1", 2, 5.0), rate(table, "fourier", 2, 5.0)
    ok = abs(h - 0.05) <= 0.02 and abs(f - 0.05) <= 0.02
    report(2, ok, f"size at nu=5: haar {h:.4f}, fourier {f:.4f} (target 0.05 +- 0.02)")
    info(f"default Haar ordering size {rate(table, 'haar', 2, 5.0):.4f}")
    assert ok


# 3 -------------------------------------------------------------------------


def test_table3_high_frequency_power(report, info):
    cfg = table3_config(c_values=(0.2,), p_list=(4, 11), R=200, B=500, bases=("haar1", "fourier", "haar"))
    table = run_power_experiment(cfg)
    h4, f4, f11 = rate(table, "haar1", 4, 0.2), rate(table, "fourier", 4, 0.2), rate(table, "fourier", 11, 0.2)
    ok = h4 >= 0.99 and f4 <= 0.10 and f11 >= 0.99
    report(3, ok, f"c=0.2: haar p=4 {h4:.3f} >= 0.99, fourier p=4 {f4:.3f} <= 0.10, fourier p=11 {f11:.3f} >= 0.99")
    info(f"default Haar ordering p=4 power {rate(table, 'haar', 4, 0.2):.3f}")
    assert ok


# 4 -------------------------------------------------------------------------


def test_table2_power_ordering(report, info):
    cs = (TABLE2_C[3], TABLE2_C[6], TABLE2_C[9])
    targets = (0.338, 0.926, 1.0)
    cfg = table2_config(c_values=cs, p_list=(3,), R=300, B=500, bases=("haar1", "fourier", "haar"), include_hotelling=False)
    table = run_power_experiment(cfg)
    got = [rate(table, "haar1", 3, c) for c in cs]
    close = all(abs(g - t) <= 0.06 for g, t in zip(got, targets))
    monotone = all(a <= b for a, b in zip(got, got[1:]))
    detail = ", ".join(f"c={c:.3f}: {g:.3f} (target {t})" for c, g, t in zip(cs, got, targets))
    report(4, close and monotone, f"haar p=3 {detail}; monotone={monotone}")
    info("default Haar ordering " + ", ".join(f"{rate(table, 'haar', 3, c):.3f}" for c in cs))
    info("fourier " + ", ".join(f"{rate(table, 'fourier', 3, c):.3f}" for c in cs))
    assert close and monotone


# 5 -------------------------------------------------------------------------


def test_diagnostic_jumps_and_spike(report, info):
    data = simulate_dataset(table3_config(), c=0.4, seed=11)
    specs = [BasisSpec.from_label(b, 1) for b in ("haar1", "fourier", "haar")]
    haar, fourier, haar0 = multi_basis_diagnostic(data, specs, 12)
    r_h = haar.at(4) / haar.at(3)
    r_f = fourier.at(11) / fourier.at(10)
    arg = reorder_diagnostic(data, BasisSpec("fourier", 1), 100).argmax
    ok = r_h >= 10 and r_f >= 10 and arg == 11
    report(5, ok, f"haar p4/p3 {r_h:.3g} >= 10, fourier p11/p10 {r_f:.3g} >= 10, reorder argmax l={arg}")
    info(f"default Haar ordering p4/p3 {haar0.at(4) / haar0.at(3):.3g}")
    assert ok


# 6 -------------------------------------------------------------------------


def brute_t(groups):
    ns = [len(y) for y in groups]
    means = [sum(y) / len(y) for y in groups]
    invs = [np.linalg.inv(np.atleast_2d(sum(np.outer(r - m, r - m) for r in y) / len(y))) for y, m in zip(groups, means)]
    A = sum(n * Si for n, Si in zip(ns, invs))
    mu = np.linalg.solve(A, sum(n * Si @ m for n, Si, m in zip(ns, invs, means)))
    return float(sum(n * (m - mu) @ Si @ (m - mu) for n, Si, m in zip(ns, invs, means)))


def test_linear_algebra_invariants(report):
    rng = np.random.default_rng(606)
    worst = dict(idem=0.0, trace=0.0, affine=0.0, zero=0.0)
    for _ in range(200):
        p, k = int(rng.integers(1, 21)), int(rng.integers(2, 6))
        covs = [random_spd(rng, p) for _ in range(k)]
        sizes = rng.integers(3 * p + 5, 3 * p + 60, size=k)
        pp = projection_pair(covs, sizes)
        worst["idem"] = max(worst["idem"], np.abs(pp.P @ pp.P - pp.P).max())
        worst["trace"] = max(worst["trace"], abs(np.trace(pp.Q) - p * (k - 1)))

        groups = [rng.standard_normal((n, p)) @ np.linalg.cholesky(S).T + rng.standard_normal(p) for n, S in zip(sizes, covs)]
        U, _ = np.linalg.qr(rng.standard_normal((p, p)))
        A = U * rng.uniform(0.5, 2.0, size=p)
        b = rng.standard_normal(p) * 3
        T0 = t_flrt(GroupedScores(groups)).t_flrt
        T1 = t_flrt(GroupedScores([g @ A.T + b for g in groups])).t_flrt
        worst["affine"] = max(worst["affine"], abs(T1 - T0) / max(abs(T0), 1.0))

        centred = [g - g.mean(axis=0) for g in groups]
        worst["zero"] = max(worst["zero"], abs(t_flrt(GroupedScores(centred)).t_flrt))

    toy = [np.array([[1.0], [2.0], [3.0]]), np.array([[2.0], [3.0], [4.0]])]
    t_toy = t_flrt(GroupedScores(toy)).t_flrt
    toy_err = max(abs(t_toy - 2.25), abs(t_toy - brute_t(toy)))
    ok = worst["idem"] <= 1e-9 and worst["trace"] <= 1e-9 and worst["affine"] <= 1e-8 and worst["zero"] <= 1e-9 and toy_err <= 1e-12
    detail = (
        f"max |P^2-P| {worst['idem']:.2e}, max |tr Q - p(k-1)| {worst['trace']:.2e}, "
        f"affine rel {worst['affine']:.2e}, equal-means T {worst['zero']:.2e}, toy T={t_toy!r}"
    )
    assert report(6, ok, detail)


# 7 -------------------------------------------------------------------------


def test_bootstrap_validity(report):
    rng = np.random.default_rng(707)
    covs = [np.eye(3), np.diag([4.0, 1.0, 0.25])]
    pvals = []
    for r in range(500):
        groups = [rng.standard_normal((100, 3)) @ np.sqrt(S) for S in covs]
        pvals.append(bootstrap_test(GroupedScores(groups), BootstrapConfig(B=500, seed=r)).p_boot)
    ks_p = stats.kstest(pvals, "uniform").pvalue

    scores = GroupedScores([rng.standard_normal((100, 3)) for _ in range(2)])
    a = bootstrap_test(scores, BootstrapConfig(B=500, seed=42))
    b = bootstrap_test(scores, BootstrapConfig(B=500, seed=42))
    identical = a.p_boot == b.p_boot and a.w_star.tobytes() == b.w_star.tobytes()
    ok = ks_p > 0.01 and identical
    assert report(7, ok, f"KS uniformity p-value {ks_p:.3f} > 0.01, bit-identical rerun={identical}")


# 8 -------------------------------------------------------------------------


def closed_form(nu, d, s2, ell):
    if nu == 0.5:
        return s2 * np.exp(-d / ell)
    r = math.sqrt(2 * nu) * d / ell
    poly = 1 + r if nu == 1.5 else 1 + r + r**2 / 3
    return s2 * poly * np.exp(-r)


def sine_score_error(m):
    t = np.linspace(0, 1, m)
    got = project_curve(DiscretizedCurve(t, np.exp(t)), BasisSpec("fourier", 3))[2]
    a = 2 * np.pi
    return abs(got - math.sqrt(2) * a * (1 - math.e) / (1 + a**2))


def test_numerical_kernels(report):
    d = np.linspace(1e-6, 4.0, 500)
    matern = max(
        np.max(np.abs(matern_kernel(d, MaternParams(2.0, 0.7, nu)) / closed_form(nu, d, 2.0, 0.7) - 1))
        for nu in (0.5, 1.5, 2.5)
    )
    rec = 0.0
    for nu in (0.7, 1.0, 2.5, 6.0, 15.0, 40.0):
        for x in (1e-3, 0.05, 0.8, 3.0, 12.0, 45.0):
            rhs = bessel_k(nu - 1, x) + 2 * nu / x * bessel_k(nu, x)
            rec = max(rec, abs(bessel_k(nu + 1, x) / rhs - 1))
    ratios = [sine_score_error(m) / sine_score_error(2 * m - 1) for m in (33, 65, 129, 257)]
    ok = matern <= 1e-10 and rec <= 1e-9 and all(3 <= r <= 5 for r in ratios)
    detail = f"matern rel {matern:.2e}, recurrence rel {rec:.2e}, halving ratios {', '.join(f'{r:.3f}' for r in ratios)}"
    assert report(8, ok, detail)
