"""End-to-end acceptance suite.

Each test prints exactly one PASS/FAIL line for its criterion.  Criteria 8,
9 and 10 share three long self-play runs through a session fixture.
"""

import math
import time

import numpy as np
import pytest

from phiregret import analytics, games, harness, kernel, meta
from phiregret.analytics import ExpertTrace, best_external, best_swap, cumulative_matrix
from phiregret.bm import bm_init, bm_propose, bm_update
from phiregret.priors import (
    complexity,
    enumerate_binary,
    log_induced_mass,
    log_prior_mass,
    make_prior_family,
    transform_matrix,
)
from phiregret.simplex import outer_product, stationary_distribution

GAME_T = 20_000
GAME_SEEDS = {3: 0, 5: 11, 10: 24}


def _report(num: int, label: str, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] criterion {num:2d} ({label}): {detail}")
    assert ok, f"criterion {num} ({label}): {detail}"


@pytest.fixture(scope="session")
def game_runs():
    """Shared self-play traces for the three game criteria."""
    out = {}
    for d, seed in GAME_SEEDS.items():
        game = games.make_zero_sum(d, seed=seed)
        trace = games.run_self_play(game, GAME_T)
        ext = {}
        for t in (GAME_T // 4, GAME_T // 2, GAME_T):
            ext[t] = max(
                best_external(
                    cumulative_matrix(ExpertTrace(p=trace.p[:t, n], losses=trace.losses[:t, n]))
                )[0]
                for n in range(2)
            )
        gaps_quarter = analytics.equilibrium_gaps(
            trace.p[: GAME_T // 4], trace.losses[: GAME_T // 4]
        )
        gaps_full = analytics.equilibrium_gaps(trace.p, trace.losses)
        out[d] = {
            "trace": trace,
            "external": ext,
            "gaps_quarter": gaps_quarter,
            "gaps_full": gaps_full,
        }
    return out


def _run_meta(alg_cls, d, T, losses):
    alg = alg_cls(d, T)
    p_hist = np.empty((T, d))
    for t in range(T):
        p_hist[t] = alg.propose()
        alg.feed(losses[t])
    return ExpertTrace(p=p_hist, losses=losses)


def test_criterion_01_kernel_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for d in (2, 3, 4):
        rng = np.random.default_rng(d)
        fam = make_prior_family(d)
        ns = kernel.naive_init(d, 0.1, fam)
        ks = kernel.kernelized_init(d, 0.1, fam)
        for _ in range(50):
            M = outer_product(rng.dirichlet(np.ones(d)), rng.uniform(size=d))
            phi_n, ns = kernel.naive_step(ns, M)
            phi_k, ks = kernel.kernelized_step(ks, M)
            worst = max(worst, float(np.abs(phi_n - phi_k).max()))
    elapsed = time.perf_counter() - t0
    _report(
        1, "kernel equivalence", worst <= 1e-9 and elapsed < 10,
        f"max |delta| = {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_02_fast_equivalence_and_scaling():
    t0 = time.perf_counter()
    worst = 0.0
    for d in range(3, 9):
        rng = np.random.default_rng(d)
        ks = kernel.kernelized_init(d, 0.1)
        fs = kernel.fast_init(d, 0.1)
        for _ in range(50):
            M = outer_product(rng.dirichlet(np.ones(d)), rng.uniform(size=d))
            phi_k, ks = kernel.kernelized_step(ks, M)
            phi_f, fs = kernel.fast_step(fs, M)
            worst = max(worst, float(np.abs(phi_k - phi_f).max()))

    def per_round(d, reps=200):
        rng = np.random.default_rng(0)
        Ms = [outer_product(rng.dirichlet(np.ones(d)), rng.uniform(size=d)) for _ in range(reps)]
        best = float("inf")
        for _ in range(5):
            st = kernel.fast_init(d, 0.05)
            tic = time.perf_counter()
            for M in Ms:
                _, st = kernel.fast_step(st, M)
            best = min(best, (time.perf_counter() - tic) / reps)
        return best

    t32, t64 = per_round(32), per_round(64)
    ratio = t64 / t32
    elapsed = time.perf_counter() - t0
    _report(
        2, "fast-kernel equivalence + quadratic scaling",
        worst <= 1e-9 and 3.0 <= ratio <= 6.0 and elapsed < 30,
        f"max |delta| = {worst:.2e}, t32 = {t32 * 1e6:.0f}us, t64 = {t64 * 1e6:.0f}us, "
        f"ratio = {ratio:.2f} (required [3, 6]), {elapsed:.1f}s",
    )


def test_criterion_03_prior_complexity_bound():
    t0 = time.perf_counter()
    worst = -math.inf
    violations = 0
    for d in (3, 4, 5):
        fam = make_prior_family(d)
        for m in enumerate_binary(d):
            slack = -log_prior_mass(fam, m) - (2 + 2 * complexity(m).c * math.log(d))
            worst = max(worst, slack)
            if slack > 1e-9:
                violations += 1
    elapsed = time.perf_counter() - t0
    _report(
        3, "prior-complexity bound", violations == 0 and elapsed < 5,
        f"violations = {violations}, max slack = {worst:.3f}, {elapsed:.1f}s",
    )


def test_criterion_04_mwu_inequality():
    t0 = time.perf_counter()
    check = harness._verify_mwu_inequality(100)
    elapsed = time.perf_counter() - t0
    _report(
        4, "per-run MWU inequality", check["passed"] and elapsed < 10,
        f"max excess = {check['max_slack']:.2e} over 100 runs, {elapsed:.1f}s",
    )


def test_criterion_05_omwu_inequality():
    t0 = time.perf_counter()
    check = harness._verify_omwu_inequality(100)
    elapsed = time.perf_counter() - t0
    _report(
        5, "per-run optimistic inequality", check["passed"] and elapsed < 10,
        f"max excess = {check['max_slack']:.2e} over 100 runs, {elapsed:.1f}s",
    )


def test_criterion_06_bm_reduction_bound():
    t0 = time.perf_counter()
    d, T = 3, 100
    fam = make_prior_family(d)
    rng = np.random.default_rng(42)
    worst = -math.inf
    violations = 0
    for k in range(d + 1):
        for eta in (0.05, 0.2):
            for _ in range(20):
                st = bm_init(fam.psi[k], eta)
                R = np.zeros((d, d))
                for _ in range(T):
                    phi = bm_propose(st)
                    p = stationary_distribution(phi)
                    M = outer_product(p, rng.uniform(size=d))
                    R += M
                    st = bm_update(st, M)
                for m in enumerate_binary(d):
                    reg = analytics.regret_against(R, transform_matrix(m))
                    bound = -log_induced_mass(fam.psi[k], m) / eta + eta * T
                    slack = reg - bound
                    worst = max(worst, slack)
                    if slack > 1e-9:
                        violations += 1
    elapsed = time.perf_counter() - t0
    _report(
        6, "prior-seeded reduction bound", violations == 0 and elapsed < 10,
        f"violations = {violations}, max excess = {worst:.3f}, {elapsed:.1f}s",
    )


def test_criterion_07_adaptive_regret_bounds():
    t0 = time.perf_counter()
    d, T = 3, 4096
    losses = harness.gen_adversarial_swap_probe(harness.split_rng(7, "probe"), T, d, {})
    fam = make_prior_family(d)
    details = []
    ok = True
    for alg_name, alg_cls in (("meta1", meta.MetaKernelMwu), ("meta2", meta.MetaBmMwu)):
        trace = _run_meta(alg_cls, d, T, losses)
        R = cumulative_matrix(trace)
        min_slack = math.inf
        violations = 0
        for m in enumerate_binary(d):
            reg = analytics.regret_against(R, transform_matrix(m))
            bound = harness.adaptive_bound(alg_name, T, d, -log_prior_mass(fam, m))
            min_slack = min(min_slack, bound - reg)
            if reg > bound + 1e-9:
                violations += 1
        ok = ok and violations == 0
        details.append(f"{alg_name}: violations = {violations}, min slack = {min_slack:.1f}")
    elapsed = time.perf_counter() - t0
    _report(
        7, "comparator-adaptive regret realized", ok and elapsed < 120,
        "; ".join(details) + f", {elapsed:.1f}s",
    )


def test_criterion_08_path_length_flatness(game_runs):
    details = []
    ok = True
    for d, run in game_runs.items():
        pl = run["trace"].path_length
        half, full = pl[GAME_T // 2 - 1], pl[-1]
        budget = 200 * 2 * math.log(d)
        growth = full / max(half, 1e-15) - 1
        this_ok = growth < 0.05 and full < budget and half < budget
        ok = ok and this_ok
        details.append(f"d={d}: growth = {growth * 100:.1f}% (need < 5%), total = {full:.4f} < {budget:.0f}")
    _report(8, "path-length flatness", ok, "; ".join(details))


def test_criterion_09_accelerated_gap_decay(game_runs):
    details = []
    ok = True
    for d, run in game_runs.items():
        ext_half, ext_full = run["external"][GAME_T // 2], run["external"][GAME_T]
        ext_ok = abs(ext_full / ext_half - 1) <= 0.10
        cce_q, cce_f = run["gaps_quarter"]["cce_gap"], run["gaps_full"]["cce_gap"]
        cce_ok = cce_f <= cce_q / 2 * 1.25
        ce_q, ce_f = run["gaps_quarter"]["ce_gap"], run["gaps_full"]["ce_gap"]
        ce_ok = ce_q / max(ce_f, 1e-15) >= 2.0
        this_ok = ext_ok and cce_ok and ce_ok
        ok = ok and this_ok
        details.append(
            f"d={d}: ext {ext_half:.1f}->{ext_full:.1f} ({'ok' if ext_ok else 'BAD'}), "
            f"cce {cce_q:.4f}->{cce_f:.4f} ({'ok' if cce_ok else 'BAD'}), "
            f"ce decay {ce_q / max(ce_f, 1e-15):.1f}x ({'ok' if ce_ok else 'BAD'})"
        )
    _report(9, "accelerated equilibrium convergence", ok, "; ".join(details))


def test_criterion_10_trace_level_invariants(game_runs):
    details = []
    ok = True
    for d, run in game_runs.items():
        smooth = harness.check_loss_smoothness(run["trace"], 2)
        stable = harness.check_meta_stability(run["trace"])
        ok = ok and smooth == 0 and stable == 0
        details.append(f"d={d}: loss-smoothness = {smooth}, weight-stability = {stable}")
    _report(10, "round-level game invariants", ok, "; ".join(details))


def test_criterion_11_quantile_regret():
    t0 = time.perf_counter()
    d, T = 16, 4096
    losses = harness.gen_adversarial_swap_probe(harness.split_rng(11, "probe"), T, d, {})
    trace = _run_meta(meta.MetaKernelMwu, d, T, losses)
    M = meta.rate_grid_size(d)
    ok = True
    details = []
    for eps in (1 / 16, 1 / 4, 1 / 2):
        reg = analytics.quantile_regret(trace, eps)
        k = math.ceil(eps * d)
        bound = (
            3 * math.sqrt(T * math.log(8 * d / k))
            + 2 * math.sqrt(2 * T)
            + 2 * math.sqrt(T * math.log(M))
        )
        this_ok = reg <= bound + 1e-9
        ok = ok and this_ok
        details.append(f"eps={eps:.3f}: reg = {reg:.1f} <= {bound:.1f}")
    elapsed = time.perf_counter() - t0
    _report(11, "quantile regret", ok and elapsed < 60, "; ".join(details) + f", {elapsed:.1f}s")


def test_criterion_12_swap_oracle_and_gap_identity():
    import itertools

    exact = True
    for d in (2, 3, 4):
        for seed in range(50):
            rng = np.random.default_rng(seed * 10 + d)
            tr = ExpertTrace(
                p=rng.dirichlet(np.ones(d), size=20), losses=rng.uniform(size=(20, d))
            )
            R = cumulative_matrix(tr)
            brute = max(
                float(np.trace(R) - sum(R[i, m[i]] for i in range(d)))
                for m in itertools.product(range(d), repeat=d)
            )
            if best_swap(R)[0] != brute:
                exact = False
    worst_gap = 0.0
    for seed in range(20):
        game = games.make_zero_sum(2, seed=seed)
        trace = games.run_self_play(game, 50)
        a = analytics.equilibrium_gaps(trace.p, trace.losses)
        b = analytics.equilibrium_gaps_direct(game, trace.p)
        worst_gap = max(
            worst_gap, abs(a["cce_gap"] - b["cce_gap"]), abs(a["ce_gap"] - b["ce_gap"])
        )
    _report(
        12, "swap oracle + gap identity", exact and worst_gap <= 1e-9,
        f"brute-force match = {exact}, max gap identity error = {worst_gap:.2e}",
    )
