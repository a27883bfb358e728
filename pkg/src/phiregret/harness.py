"""Experiment orchestration: configs, loss generators, runs, verification.

Every run is deterministic per (config, seed): randomness flows through a
counter-based 64-bit generator (Philox) whose key is derived by hashing the
master seed together with string labels, so sub-streams for different
purposes or players never collide.
"""

import hashlib
import json
import math
import os

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import jsonschema
import numpy as np

from . import analytics, games, kernel, meta
from .analytics import ExpertTrace
from .bm import bm_init, bm_propose, bm_update
from .learners import mwu_current, mwu_init, mwu_update, omwu_init, omwu_predict, omwu_update
from .priors import (
    complexity,
    enumerate_binary,
    log_induced_mass,
    log_prior_mass,
    make_prior_family,
    transform_matrix,
)
from .simplex import outer_product

DEFAULT_QUANTILES = (0.25, 0.5)

EXPERT_ALGS = ("meta1", "meta2", "kernel_mwu_fixed_eta", "bm_fixed_eta")
GENERATORS = (
    "iid_uniform",
    "bernoulli_gap",
    "drifting_best",
    "piecewise_stationary",
    "adversarial_swap_probe",
)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "expert"  # expert | game | verify
    alg: str = "meta1"
    d: int = 4
    T: int = 1024
    N: int = 2
    seed: int = 0
    gen: str = "iid_uniform"
    out: str = "."
    eta: float | None = None
    eta_meta: float | None = None
    lam: float | None = None
    verify_level: str = "fast"
    game_file: str | None = None
    gen_params: dict = field(default_factory=dict)
    quantiles: tuple = DEFAULT_QUANTILES

    def __post_init__(self):
        if self.mode not in ("expert", "game", "verify"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "expert" and self.alg not in EXPERT_ALGS:
            raise ValueError(f"unknown algorithm {self.alg!r}; choose from {EXPERT_ALGS}")
        if self.gen not in GENERATORS and not self.gen.startswith("game:"):
            raise ValueError(f"unknown generator {self.gen!r}")
        if self.d < 2 or self.T < 1 or self.N < 2:
            raise ValueError("need d >= 2, T >= 1, N >= 2")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")


def load_config(path: str) -> ExperimentConfig:
    """TOML key-value file; keys mirror the CLI flag names."""
    with open(path, "rb") as f:
        obj = tomllib.load(f)
    if "lambda" in obj:
        obj["lam"] = obj.pop("lambda")
    if "quantiles" in obj:
        obj["quantiles"] = tuple(obj["quantiles"])
    return ExperimentConfig(**obj)


def split_rng(seed: int, *labels) -> np.random.Generator:
    """Independent Philox stream keyed by hashing the seed with labels."""
    h = hashlib.sha256()
    h.update(int(seed).to_bytes(8, "little"))
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    key = int.from_bytes(h.digest()[:8], "little")
    return np.random.Generator(np.random.Philox(key=np.uint64(key)))


# ---------------------------------------------------------------------------
# loss generators: (rng, T, d, params) -> (T, d) array in [0, 1]


def gen_iid_uniform(rng, T, d, params):
    return rng.uniform(size=(T, d))


def gen_bernoulli_gap(rng, T, d, params):
    gap = params.get("gap", 0.25)
    best = int(params.get("best", 0))
    means = np.full(d, 0.5)
    means[best] = 0.5 - gap
    return (rng.uniform(size=(T, d)) < means).astype(np.float64)


def gen_drifting_best(rng, T, d, params):
    period = int(params.get("period", max(1, T // d)))
    gap = params.get("gap", 0.3)
    means = np.full((T, d), 0.5)
    for t in range(T):
        means[t, (t // period) % d] = 0.5 - gap
    return (rng.uniform(size=(T, d)) < means).astype(np.float64)


def gen_piecewise_stationary(rng, T, d, params):
    n_seg = int(params.get("segments", 4))
    bounds = np.linspace(0, T, n_seg + 1).astype(int)
    out = np.empty((T, d))
    for s in range(n_seg):
        means = rng.uniform(size=d)
        lo, hi = bounds[s], bounds[s + 1]
        out[lo:hi] = (rng.uniform(size=(hi - lo, d)) < means).astype(np.float64)
    return out


def gen_adversarial_swap_probe(rng, T, d, params):
    """Phase-locked Bernoulli means that force the best response to rotate.

    In phase k (length T/d rounds) expert (k mod d) is clearly best and
    expert ((k+1) mod d) clearly worst, so any fixed expert and any single
    reroute accumulate regret while the full swap comparator stays strong.
    """
    gap = params.get("gap", 0.4)
    period = int(params.get("period", max(1, T // (2 * d))))
    means = np.full((T, d), 0.5)
    for t in range(T):
        k = (t // period) % d
        means[t, k] = 0.5 - gap
        means[t, (k + 1) % d] = 0.5 + gap
    return (rng.uniform(size=(T, d)) < means).astype(np.float64)


GEN_FUNCS = {
    "iid_uniform": gen_iid_uniform,
    "bernoulli_gap": gen_bernoulli_gap,
    "drifting_best": gen_drifting_best,
    "piecewise_stationary": gen_piecewise_stationary,
    "adversarial_swap_probe": gen_adversarial_swap_probe,
}


def generate_losses(cfg: ExperimentConfig) -> np.ndarray:
    rng = split_rng(cfg.seed, "losses", cfg.gen)
    return GEN_FUNCS[cfg.gen](rng, cfg.T, cfg.d, cfg.gen_params)


# ---------------------------------------------------------------------------
# expert mode


def make_expert_algorithm(cfg: ExperimentConfig):
    d, T = cfg.d, cfg.T
    if cfg.alg == "meta1":
        return meta.MetaKernelMwu(d, T)
    if cfg.alg == "meta2":
        return meta.MetaBmMwu(d, T)
    eta = cfg.eta if cfg.eta is not None else math.sqrt(math.log(d) / max(T, 2))
    if cfg.alg == "kernel_mwu_fixed_eta":
        return _FixedSwap(kernel.SwapMwu(d, eta))
    if cfg.alg == "bm_fixed_eta":
        return _FixedBm(make_prior_family(d).psi[d], eta)
    raise ValueError(cfg.alg)


class _FixedSwap:
    """Adapter giving the fixed-rate kernel engine the propose/feed protocol."""

    def __init__(self, engine):
        self.engine = engine
        self._p = None

    def propose(self):
        from .simplex import stationary_distribution

        phi = self.engine.propose()
        self._p = stationary_distribution(phi)
        return self._p

    def feed(self, loss):
        self.engine.update(outer_product(self._p, np.asarray(loss, dtype=np.float64)))


class _FixedBm:
    def __init__(self, psi, eta):
        self.state = bm_init(psi, eta)
        self._p = None

    def propose(self):
        from .simplex import stationary_distribution

        phi = bm_propose(self.state)
        self._p = stationary_distribution(phi)
        return self._p

    def feed(self, loss):
        self.state = bm_update(self.state, outer_product(self._p, np.asarray(loss, dtype=np.float64)))


def adaptive_bound(alg: str, T: int, d: int, log_inv_prior: float) -> float:
    """Proof-constant comparator-adaptive regret bound for the two aggregators."""
    M = meta.rate_grid_size(d)
    if alg == "meta1":
        return 3 * math.sqrt(T * log_inv_prior) + 2 * math.sqrt(2 * T) + 2 * math.sqrt(T * math.log(M))
    if alg == "meta2":
        return 3 * math.sqrt(T * log_inv_prior) + 2 * math.sqrt(T) + 4 * math.sqrt(T * math.log(d))
    raise ValueError(f"no adaptive bound for algorithm {alg!r}")


def run_expert_experiment(cfg: ExperimentConfig) -> dict:
    """Run one online algorithm against a generated loss sequence.

    Writes <out>/trace.csv and <out>/summary.json; returns the summary dict.
    """
    if cfg.mode != "expert":
        raise ValueError("config mode must be 'expert'")
    losses = generate_losses(cfg)
    alg = make_expert_algorithm(cfg)
    p_hist = np.empty((cfg.T, cfg.d))
    for t in range(cfg.T):
        p_hist[t] = alg.propose()
        alg.feed(losses[t])
    trace = ExpertTrace(p=p_hist, losses=losses)
    R = analytics.cumulative_matrix(trace)
    swap, targets = analytics.best_swap(R)
    summary = {
        "mode": "expert",
        "alg": cfg.alg,
        "d": cfg.d,
        "T": cfg.T,
        "seed": cfg.seed,
        "gen": cfg.gen,
        "learner_loss": analytics.learner_loss(R),
        "external": analytics.best_external(R)[0],
        "internal": analytics.best_internal(R)[0],
        "swap": swap,
        "swap_comparator": [int(x) for x in targets],
        "quantile": {
            str(eps): analytics.quantile_regret(trace, eps)
            for eps in cfg.quantiles
            if eps >= 1.0 / cfg.d
        },
    }
    if cfg.d <= 4:
        family = make_prior_family(cfg.d)
        sweep = analytics.per_transform_regrets(trace, family)
        summary["per_phi"] = sweep
        if cfg.alg in ("meta1", "meta2"):
            slacks = [
                adaptive_bound(cfg.alg, cfg.T, cfg.d, row["log_inv_prior"]) - row["regret"]
                for row in sweep
            ]
            summary["bound_slack_min"] = float(min(slacks))
            summary["bound_violations"] = int(sum(s < -1e-9 for s in slacks))
    os.makedirs(cfg.out, exist_ok=True)
    trace.save_csv(os.path.join(cfg.out, "trace.csv"))
    _write_summary(summary, os.path.join(cfg.out, "summary.json"))
    return summary


# ---------------------------------------------------------------------------
# game mode


def _load_game(cfg: ExperimentConfig) -> games.GameSpec:
    if cfg.game_file:
        return games.GameSpec.load(cfg.game_file)
    if cfg.gen == "game:polymatrix":
        return games.make_constant_sum_polymatrix(cfg.N, cfg.d, cfg.seed)
    if cfg.gen == "game:pennies":
        return games.matching_pennies()
    # default: random two-player zero-sum
    return games.make_zero_sum(cfg.d, cfg.seed)


def check_loss_smoothness(trace: games.JointTrace, n_players: int, tol: float = 1e-9) -> int:
    """Rounds violating the opponents'-movement bound on loss differences.

    For every player n and round t >= 2 the squared sup-norm change of its
    loss vector must be at most (N-1) * sum_{j != n} ||p_t^j - p_{t-1}^j||_1^2.
    """
    dl = np.abs(np.diff(trace.losses, axis=0)).max(axis=2) ** 2  # (T-1, N)
    dp = np.abs(np.diff(trace.p, axis=0)).sum(axis=2) ** 2  # (T-1, N)
    bound = (n_players - 1) * (dp.sum(axis=1, keepdims=True) - dp)
    return int((dl > bound + tol).sum())


def check_meta_stability(trace: games.JointTrace, tol: float = 1e-12) -> int:
    """Rounds where any meta weight leaves [w_prev / 2, 2 w_prev]."""
    w0, w1 = trace.w[:-1], trace.w[1:]
    bad = (w1 < 0.5 * w0 - tol) | (w1 > 2.0 * w0 + tol)
    return int(bad.any(axis=(1, 2)).sum())


def run_game_experiment(cfg: ExperimentConfig) -> dict:
    """Self-play on one game; writes per-player traces and a summary."""
    if cfg.mode != "game":
        raise ValueError("config mode must be 'game'")
    game = _load_game(cfg)
    T = cfg.T
    trace = games.run_self_play(game, T, eta_m=cfg.eta_meta, lam=cfg.lam, eta=cfg.eta)
    checkpoints = sorted({max(1, T // 4), max(1, T // 2), T})
    gaps = {
        str(t): analytics.equilibrium_gaps(trace.p[:t], trace.losses[:t]) for t in checkpoints
    }
    summary = {
        "mode": "game",
        "d": game.d,
        "N": game.n_players,
        "T": T,
        "seed": cfg.seed,
        "tags": list(game.tags),
        "gaps": gaps,
        "path_length_checkpoints": {str(t): float(trace.path_length[t - 1]) for t in checkpoints},
        "loss_smoothness_violations": check_loss_smoothness(trace, game.n_players),
        "meta_stability_violations": check_meta_stability(trace),
        "max_stationary_residual": float(trace.stationary_residuals.max()),
    }
    os.makedirs(cfg.out, exist_ok=True)
    for n in range(game.n_players):
        ExpertTrace(p=trace.p[:, n], losses=trace.losses[:, n]).save_csv(
            os.path.join(cfg.out, f"player_{n + 1}.csv")
        )
    np.savetxt(
        os.path.join(cfg.out, "path_length.csv"),
        np.column_stack([np.arange(1, T + 1), trace.path_length]),
        delimiter=",",
        header="t,path_length",
        comments="",
    )
    _write_summary(summary, os.path.join(cfg.out, "summary.json"))
    return summary


# ---------------------------------------------------------------------------
# verification suites


def _check(name, max_slack, tol):
    return {"name": name, "max_slack": float(max_slack), "passed": bool(max_slack <= tol)}


def _verify_kernel_equivalence() -> dict:
    """Naive enumeration, kernelized, and fast engines agree entrywise."""
    worst = 0.0
    rng = split_rng(0, "verify", "kernel")
    for d in (2, 3, 4):
        family = make_prior_family(d)
        ns = kernel.naive_init(d, 0.1, family)
        ks = kernel.kernelized_init(d, 0.1, family)
        fs = kernel.fast_init(d, 0.1) if d >= 3 else None
        for _ in range(20):
            p = rng.dirichlet(np.ones(d))
            M = outer_product(p, rng.uniform(size=d))
            phi_n, ns = kernel.naive_step(ns, M)
            phi_k, ks = kernel.kernelized_step(ks, M)
            worst = max(worst, float(np.abs(phi_n - phi_k).max()))
            if fs is not None:
                phi_f, fs = kernel.fast_step(fs, M)
                worst = max(worst, float(np.abs(phi_k - phi_f).max()))
    return _check("kernel_equivalence", worst, 1e-9)


def _verify_prior_complexity() -> dict:
    """ln(1/pi(phi)) <= 2 + 2 c_phi ln d over every binary transform."""
    worst = -np.inf
    for d in (3, 4):
        family = make_prior_family(d)
        for m in enumerate_binary(d):
            lhs = -log_prior_mass(family, m)
            rhs = 2 + 2 * complexity(m).c * math.log(d)
            worst = max(worst, lhs - rhs)
    return _check("prior_complexity_bound", worst, 1e-9)


def _verify_mwu_inequality(n_runs=100) -> dict:
    """Per-run regret <= KL(q, x1)/eta + eta * sum ||loss_t||_inf^2."""
    rng = split_rng(0, "verify", "mwu")
    worst = -np.inf
    for r in range(n_runs):
        d = int(rng.integers(2, 11))
        T = int(rng.integers(10, 501))
        eta = float(rng.uniform(0.01, 1.0))
        prior = rng.dirichlet(np.ones(d)) * 0.99 + 0.01 / d
        st = mwu_init(prior, eta)
        cum = np.zeros(d)
        learner = 0.0
        norm2 = 0.0
        for _ in range(T):
            p = mwu_current(st)
            l = rng.uniform(size=d)
            learner += float(p @ l)
            cum += l
            norm2 += float(l.max()) ** 2
            st = mwu_update(st, l)
        for i in range(d):
            reg = learner - cum[i]
            bound = -math.log(prior[i]) / eta + eta * norm2
            worst = max(worst, reg - bound)
    return _check("mwu_regret_inequality", worst, 1e-9)


def _verify_omwu_inequality(n_runs=100) -> dict:
    """Optimistic variant including the negative movement term."""
    rng = split_rng(0, "verify", "omwu")
    worst = -np.inf
    for r in range(n_runs):
        d = int(rng.integers(2, 11))
        T = int(rng.integers(10, 301))
        eta = float(rng.uniform(0.01, 0.5))
        prior = rng.dirichlet(np.ones(d)) * 0.99 + 0.01 / d
        st = omwu_init(prior, eta)
        learner = 0.0
        cum = np.zeros(d)
        pred_sq = 0.0
        move_sq = 0.0
        prev_l = np.zeros(d)
        prev_p = None
        for t in range(T):
            p = omwu_predict(st)
            l = rng.uniform(size=d)
            learner += float(p @ l)
            cum += l
            if t >= 1:
                pred_sq += float(np.abs(l - prev_l).max()) ** 2
                move_sq += float(np.abs(p - prev_p).sum()) ** 2
            st = omwu_update(st, l)
            prev_l, prev_p = l, p
        for i in range(d):
            reg = learner - cum[i]
            bound = -math.log(prior[i]) / eta + eta * pred_sq - move_sq / (8 * eta)
            worst = max(worst, reg - bound)
    return _check("omwu_rvu_inequality", worst, 1e-9)


def _verify_bm_bound() -> dict:
    """Swap regret of the prior-seeded reduction vs log(1/psi-mass)/eta + eta*T."""
    rng = split_rng(0, "verify", "bm")
    d, T = 3, 100
    family = make_prior_family(d)
    worst = -np.inf
    for k in range(d + 1):
        for eta in (0.05, 0.2):
            for run in range(20):
                st = bm_init(family.psi[k], eta)
                R = np.zeros((d, d))
                for _ in range(T):
                    phi = bm_propose(st)
                    from .simplex import stationary_distribution

                    p = stationary_distribution(phi)
                    l = rng.uniform(size=d)
                    M = outer_product(p, l)
                    R += M
                    st = bm_update(st, M)
                for m in enumerate_binary(d):
                    reg = analytics.regret_against(R, transform_matrix(m))
                    bound = -log_induced_mass(family.psi[k], m) / eta + eta * T
                    worst = max(worst, reg - bound)
    return _check("bm_reduction_bound", worst, 1e-9)


def run_verification_suite(level: str = "fast") -> dict:
    """Oracle-equivalence and inequality checks; full adds the slow batches."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    checks = [_verify_kernel_equivalence(), _verify_prior_complexity()]
    if level == "full":
        checks += [_verify_mwu_inequality(), _verify_omwu_inequality(), _verify_bm_bound()]
    return {
        "mode": "verify",
        "level": level,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


# ---------------------------------------------------------------------------
# seed sweeps


def _run_one(cfg: ExperimentConfig) -> dict:
    if cfg.mode == "expert":
        return run_expert_experiment(cfg)
    if cfg.mode == "game":
        return run_game_experiment(cfg)
    raise ValueError(cfg.mode)


def worker_pool_size(n_tasks: int) -> int:
    cap = os.environ.get("PHIREGRET_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def run_sweep(cfg: ExperimentConfig, seeds) -> list[dict]:
    """One run per seed, in parallel; each writes under <out>/seed_<s>/."""
    cfgs = [replace(cfg, seed=s, out=os.path.join(cfg.out, f"seed_{s}")) for s in seeds]
    workers = worker_pool_size(len(cfgs))
    if workers == 1:
        results = [_run_one(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, cfgs))
    os.makedirs(cfg.out, exist_ok=True)
    _write_summary(
        {"mode": cfg.mode, "sweep": True, "seeds": [int(s) for s in seeds], "runs": results},
        os.path.join(cfg.out, "sweep.json"),
        validate=False,
    )
    return results


# ---------------------------------------------------------------------------
# summary persistence

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["mode"],
    "properties": {"mode": {"enum": ["expert", "game", "verify"]}},
    "allOf": [
        {
            "if": {"properties": {"mode": {"const": "expert"}}},
            "then": {
                "required": ["alg", "d", "T", "seed", "external", "internal", "swap", "quantile"],
                "properties": {
                    "external": {"type": "number"},
                    "internal": {"type": "number"},
                    "swap": {"type": "number"},
                    "quantile": {"type": "object"},
                },
            },
        },
        {
            "if": {"properties": {"mode": {"const": "game"}}},
            "then": {
                "required": [
                    "d",
                    "N",
                    "T",
                    "seed",
                    "gaps",
                    "path_length_checkpoints",
                    "loss_smoothness_violations",
                    "meta_stability_violations",
                ]
            },
        },
        {
            "if": {"properties": {"mode": {"const": "verify"}}},
            "then": {"required": ["level", "checks", "passed"]},
        },
    ],
}


def _write_summary(summary: dict, path: str, validate: bool = True) -> None:
    if validate:
        jsonschema.validate(summary, SUMMARY_SCHEMA)
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
