"""Acceptance suite: one test per primary criterion, at its stated tolerance.

Each test prints a single PASS/FAIL line.  The heavy chains run at the
dimensions and step counts the criteria name, with fixed seeds; total
runtime is dominated by the diffusion-limit replicas.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from mala_lab import (
    CovarianceSpectrum,
    KernelParams,
    RecordingPolicy,
    SpectralField,
    TargetModel,
    acf_rate_fit,
    coord_path,
    esjd,
    euler_spde,
    limiting_alpha,
    limiting_alpha_mc,
    log_accept_ratio,
    martingale_cov_trace,
    run_chain,
    sample_q_values,
    speed_and_optimum,
    stationary_start,
    trace_sobolev,
)
from mala_lab.config import parse_config
from mala_lab.experiments import run_experiment


def check(cid, condition, detail):
    print(f"\n[criterion {cid}] {'PASS' if condition else 'FAIL'}: {detail}")
    assert condition, f"criterion {cid}: {detail}"


def zero_model(n, kappa=1.0):
    return TargetModel(CovarianceSpectrum(kappa, n), psi_kind="zero")


def test_criterion_01_optimal_acceptance_probability():
    t0 = time.perf_counter()
    curve = speed_and_optimum(np.linspace(0.05, 4.0, 200))
    elapsed = time.perf_counter() - t0
    check(1, round(curve.alpha_star, 3) == 0.574 and elapsed < 1.0,
          f"alpha_star={curve.alpha_star:.6f} at ell_star={curve.ell_star:.4f} "
          f"({elapsed*1e3:.0f} ms)")


def test_criterion_02_limiting_acceptance_law():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    details = []
    for ell in (0.5, 1.0, 2.0):
        est, se = limiting_alpha_mc(ell, 10_000_000, rng)
        z = abs(est - limiting_alpha(ell)) / se
        worst = max(worst, z)
        details.append(f"ell={ell}: |mc-closed|/se={z:.2f}")
    elapsed = time.perf_counter() - t0
    check(2, worst < 3.0 and elapsed < 10.0,
          "; ".join(details) + f" ({elapsed:.1f} s)")


def test_criterion_03_critical_scaling_acceptance():
    n = 2**13
    model = zero_model(n)
    p = KernelParams(ell=1.0, gamma=1 / 3, n_dim=n)
    rng = np.random.default_rng(313)
    x0 = stationary_start(model, p, rng)
    trace = run_chain(x0, model, p, 100_000, rng,
                      record=RecordingPolicy(states_stride=0, thin=1000))
    gap = abs(trace.acceptance_rate - limiting_alpha(1.0))
    check(3, gap <= 0.02,
          f"N=2^13 empirical acceptance {trace.acceptance_rate:.4f} vs "
          f"alpha(1)={limiting_alpha(1.0):.4f} (gap {gap:.4f})")


def test_criterion_04_scaling_regimes():
    dims = (2**8, 2**10, 2**12, 2**13)
    acc = {}
    for gamma in (0.2, 1 / 3, 0.45):
        acc[gamma] = []
        for n in dims:
            model = zero_model(n)
            p = KernelParams(ell=1.0, gamma=gamma, n_dim=n)
            rng = np.random.default_rng(10_000 + n)
            x0 = stationary_start(model, p, rng)
            trace = run_chain(x0, model, p, 20_000, rng,
                              record=RecordingPolicy(states_stride=0, thin=1000))
            acc[gamma].append(trace.acceptance_rate)
    sub = acc[0.2]
    sup = acc[0.45]
    crit = acc[1 / 3]
    alpha1 = limiting_alpha(1.0)
    ok = (
        all(a > b for a, b in zip(sub, sub[1:])) and sub[-1] < 0.05
        and all(a < b for a, b in zip(sup, sup[1:])) and sup[-1] > 0.9
        and all(abs(a - alpha1) <= 0.03 for a in crit[-2:])
    )
    check(4, ok,
          f"gamma=0.2 {np.round(sub, 4)}, gamma=0.45 {np.round(sup, 4)}, "
          f"gamma=1/3 {np.round(crit, 4)} vs alpha(1)={alpha1:.4f}")


def test_criterion_05_gaussian_approximation_of_q():
    n = 2**13
    model = zero_model(n)
    p = KernelParams(ell=1.0, gamma=1 / 3, n_dim=n)
    study = sample_q_values(model, p, 10_000, np.random.default_rng(55))
    q_mean = study.q.mean()
    q_var = study.q.var(ddof=1)

    rng = np.random.default_rng(56)
    logs_n, logs_i = [], []
    for k in range(8, 15):
        m = 2**k
        st = sample_q_values(zero_model(m), KernelParams(ell=1.0, gamma=1 / 3, n_dim=m),
                             10_000, rng)
        logs_n.append(math.log(m))
        logs_i.append(math.log(np.abs(st.i_term).mean()))
    slope = float(np.polyfit(logs_n, logs_i, 1)[0])
    ok = (abs(q_mean + 0.25) <= 0.02 and abs(q_var - 0.5) <= 0.05
          and abs(slope + 1 / 6) <= 0.08)
    check(5, ok,
          f"Q mean {q_mean:+.4f} (target -0.25+-0.02), var {q_var:.4f} "
          f"(target 0.5+-0.05), log E|i| slope {slope:.4f} (target -1/6+-0.08)")


def test_criterion_06_invariance_of_truncated_target():
    n = 8
    steps = 1_000_000
    # pure Gaussian target
    model = zero_model(n)
    p = KernelParams(ell=1.0, gamma=1 / 3, n_dim=n)
    rng = np.random.default_rng(606)
    x0 = stationary_start(model, p, rng)
    trace = run_chain(x0, model, p, steps, rng,
                      record=RecordingPolicy(states_stride=0, thin=50, coord=0))
    rel = np.abs(trace.state_var / model.spectrum.lam_sq(n) - 1.0)
    ks = stats.kstest(trace.coord_trace[1:], "norm", args=(0.0, 1.0))

    # Gaussian target with modified spectrum
    quad = TargetModel(CovarianceSpectrum(1.0, n), psi_kind="quadratic", s=0.0, a=1.0)
    rng = np.random.default_rng(607)
    x0 = stationary_start(quad, p, rng)
    tr2 = run_chain(x0, quad, p, steps, rng,
                    record=RecordingPolicy(states_stride=0, thin=50))
    target_var = 1.0 / (quad.spectrum.inv_lam_sq(n) + 1.0)
    rel2 = np.abs(tr2.state_var / target_var - 1.0)

    ok = rel.max() < 0.05 and ks.pvalue > 0.01 and rel2.max() < 0.05
    check(6, ok,
          f"zero-kind max var err {rel.max():.3%}, KS p={ks.pvalue:.3f}; "
          f"quadratic-kind max var err {rel2.max():.3%}")


def test_criterion_07_diffusion_limit_acf_rates():
    n = 2**12
    curve = speed_and_optimum(np.linspace(0.5, 3.0, 60))
    ell, h = curve.ell_star, curve.h_star
    model = zero_model(n)
    p = KernelParams(ell=ell, gamma=1 / 3, n_dim=n)
    T = 2000.0
    steps = int(round(T / p.dt))
    chain_rates, spde_rates = [], []
    for rep in range(20):
        rng = np.random.default_rng(700 + rep)
        x0 = stationary_start(model, p, rng)
        trace = run_chain(x0, model, p, steps, rng,
                          record=RecordingPolicy(states_stride=0, thin=1))
        chain_rates.append(acf_rate_fit(coord_path(trace, p), 0, max_lag=2.5 / h))
        z0 = stationary_start(model, p, rng)
        path = euler_spde(z0, model, h_speed=h, T=T, dt_integrator=p.dt / 4.0,
                          rng=rng, coords=(0,))
        spde_rates.append(acf_rate_fit(path, 0, max_lag=2.5 / h))
    mc = float(np.median(chain_rates))
    ms = float(np.median(spde_rates))
    ok = abs(mc - h) <= 0.15 * h and abs(mc - ms) <= 0.10 * ms
    check(7, ok,
          f"median chain rate {mc:.4f} vs h(ell*)={h:.4f} ({(mc-h)/h:+.1%}); "
          f"median spde rate {ms:.4f}, chain-vs-spde {(mc-ms)/ms:+.1%}")


def test_criterion_08_martingale_covariance_trace():
    # The fixed-x trace tracks the local acceptance, which still fluctuates
    # by ~10% across stationary states at this dimension (an O(N^{-1/6})
    # effect), so the 1e4-sample budget is spread over stationary draws to
    # estimate the stationary average the limit statement concerns.
    n = 2**12
    curve = speed_and_optimum(np.linspace(0.5, 3.0, 60))
    model = zero_model(n)
    p = KernelParams(ell=curve.ell_star, gamma=1 / 3, n_dim=n)
    rng = np.random.default_rng(808)
    estimates = []
    for _ in range(20):
        x = model.sample_exact(n, rng)
        estimates.append(martingale_cov_trace(x, model, p, 500, rng))
    est = float(np.mean(estimates))
    target = trace_sobolev(model.spectrum, 0.0, n)
    rel = abs(est - target) / target
    check(8, rel < 0.10,
          f"tr estimate {est:.4f} (20 stationary draws x 500 samples) vs "
          f"weighted trace {target:.4f} (rel err {rel:.2%})")


def test_criterion_09_rwm_baseline_optimum():
    n = 1024
    model = zero_model(n)
    ells = np.arange(2.0, 3.61, 0.2)
    esjds, accs = [], []
    for i, ell in enumerate(ells):
        p = KernelParams(ell=float(ell), gamma=1.0, n_dim=n)
        tot_e, tot_a = 0.0, 0.0
        for rep in range(3):
            rng = np.random.default_rng(9_000 + 17 * i + rep)
            x0 = stationary_start(model, p, rng)
            tr = run_chain(x0, model, p, 100_000, rng, kernel="rwm",
                           record=RecordingPolicy(states_stride=0, thin=1000))
            tot_e += esjd(tr, 0.0)
            tot_a += tr.acceptance_rate
        esjds.append(tot_e / 3)
        accs.append(tot_a / 3)
    i_best = int(np.argmax(esjds))
    acc_best = accs[i_best]
    check(9, abs(acc_best - 0.234) <= 0.03,
          f"ESJD argmax at ell={ells[i_best]:.2f}, acceptance {acc_best:.4f} "
          f"(target 0.234+-0.03); sweep acc {np.round(accs, 3)}")


def test_criterion_10_property_bundle(tmp_path):
    # Q antisymmetry at 1e-10
    n = 12
    model = TargetModel(CovarianceSpectrum(1.1, n), psi_kind="smooth", s=0.3)
    p = KernelParams(ell=1.3, gamma=1 / 3, n_dim=n)
    rng = np.random.default_rng(101)
    anti = 0.0
    for _ in range(100):
        x = SpectralField(rng.standard_normal(n))
        y = SpectralField(rng.standard_normal(n))
        anti = max(anti, abs(log_accept_ratio(x, y, model, p)
                             + log_accept_ratio(y, x, model, p)))

    # detailed balance on the dimension-2 grid at 1e-10
    m2 = zero_model(2)
    p2 = KernelParams(ell=0.8, gamma=1 / 3, n_dim=2)
    w2k = m2.spectrum.inv_lam_sq(2)

    def log_t(a, b):
        t = b.coeffs - a.coeffs - p2.delta * m2.drift_of(np.array(a.coeffs))
        return -float((w2k * t) @ t) / (4 * p2.delta)

    db = 0.0
    grid = np.linspace(-1.5, 1.5, 4)
    for x1 in grid:
        for x2 in grid:
            for y1 in grid:
                for y2 in grid:
                    x = SpectralField([x1, x2])
                    y = SpectralField([y1, y2])
                    lhs = m2.log_density(x) + log_t(x, y) + min(0.0, log_accept_ratio(x, y, m2, p2))
                    rhs = m2.log_density(y) + log_t(y, x) + min(0.0, log_accept_ratio(y, x, m2, p2))
                    db = max(db, abs(lhs - rhs))

    # gradient finite differences at 1e-4 relative
    grad_rel = 0.0
    for kind, s in (("quadratic", 0.3), ("smooth", 0.25)):
        mk = TargetModel(CovarianceSpectrum(1.2, 16), psi_kind=kind, s=s)
        for _ in range(100):
            xx = rng.standard_normal(16)
            v = rng.standard_normal(16)
            v /= np.linalg.norm(v)
            fd = (mk.psi_of(xx + 1e-5 * v) - mk.psi_of(xx - 1e-5 * v)) / 2e-5
            pairing = float(mk.grad_psi_of(xx) @ v)
            if abs(fd) > 1e-8:
                grad_rel = max(grad_rel, abs(fd - pairing) / abs(fd))

    # determinism: byte-identical CSVs
    cfg = parse_config("""
experiment: acceptance-sweep
n_grid: [32]
gamma_grid: ["1/3"]
ell_grid: [1.0]
n_steps: 500
replicas: 2
master_seed: 12
""")
    a = run_experiment(cfg.with_overrides(output_dir=str(tmp_path / "a")))
    b = run_experiment(cfg.with_overrides(output_dir=str(tmp_path / "b")))
    identical = a.csv_path.read_bytes() == b.csv_path.read_bytes()

    # trace-class flag agrees with the exponent test
    flags_ok = True
    for kappa, r in ((1.0, 0.0), (1.0, 0.49), (1.0, 0.5), (1.0, 0.7), (0.9, 0.39), (0.9, 0.41)):
        spec = CovarianceSpectrum(kappa, 4)
        flags_ok = flags_ok and spec.is_trace_class(r) == (r < kappa - 0.5)

    ok = anti < 1e-10 and db < 1e-10 and grad_rel < 1e-4 and identical and flags_ok
    check(10, ok,
          f"antisymmetry {anti:.2e}, detailed balance {db:.2e}, grad FD rel "
          f"{grad_rel:.2e}, deterministic CSVs {identical}, trace-class flags {flags_ok}")
