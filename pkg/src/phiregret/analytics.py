"""Regret and equilibrium-gap accounting over recorded traces.

Everything flows through the cumulative loss matrix R = sum_t p_t loss_t^T,
accumulated entrywise with compensated summation: learner loss is its trace,
and every comparator regret is a linear functional of R.  Ties in argmins
break toward the lowest index throughout.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .priors import PriorFamily, enumerate_binary, transform_matrix

DIRECT_GAP_BUDGET = 10**4


@dataclass(frozen=True)
class ExpertTrace:
    """Played distributions and observed losses for one online run."""

    p: np.ndarray  # (T, d)
    losses: np.ndarray  # (T, d)

    def __post_init__(self):
        if self.p.shape != self.losses.shape or self.p.ndim != 2:
            raise ValueError("p and losses must share shape (T, d)")

    @property
    def T(self) -> int:
        return self.p.shape[0]

    @property
    def d(self) -> int:
        return self.p.shape[1]

    def save_csv(self, path) -> None:
        d = self.d
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["t"] + [f"p_{i + 1}" for i in range(d)] + [f"loss_{i + 1}" for i in range(d)])
            for t in range(self.T):
                w.writerow(
                    [t + 1]
                    + [repr(float(x)) for x in self.p[t]]
                    + [repr(float(x)) for x in self.losses[t]]
                )

    @classmethod
    def load_csv(cls, path) -> "ExpertTrace":
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        header = rows[0]
        d = sum(1 for h in header if h.startswith("p_"))
        body = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        return cls(p=body[:, :d], losses=body[:, d : 2 * d])


def cumulative_matrix(trace: ExpertTrace) -> np.ndarray:
    """R_ij = sum_t p_{t,i} loss_{t,j}, each entry via compensated summation."""
    prods = trace.p[:, :, None] * trace.losses[:, None, :]  # (T, d, d)
    d = trace.d
    R = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            R[i, j] = math.fsum(prods[:, i, j])
    return R


def learner_loss(R: np.ndarray) -> float:
    return float(np.trace(R))


def regret_against(R: np.ndarray, phi: np.ndarray) -> float:
    """Regret versus one fixed transformation: <I - phi, R>."""
    phi = np.asarray(phi, dtype=np.float64)
    return float(np.trace(R) - (phi * R).sum())


def best_swap(R: np.ndarray) -> tuple[float, np.ndarray]:
    """Max regret over all transformations; rows decouple into argmins."""
    targets = np.argmin(R, axis=1)  # lowest index on ties
    reg = float(np.trace(R) - R[np.arange(R.shape[0]), targets].sum())
    return reg, targets


def best_external(R: np.ndarray) -> tuple[float, int]:
    col = R.sum(axis=0)
    j = int(np.argmin(col))
    return float(np.trace(R) - col[j]), j


def best_internal(R: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Max over single-deviation transforms: route action i's mass to j."""
    d = R.shape[0]
    gains = np.diag(R)[:, None] - R  # gains[i, j] = regret of i -> j
    np.fill_diagonal(gains, -np.inf)
    flat = int(np.argmax(gains))
    i, j = divmod(flat, d)
    return float(gains[i, j]), (i, j)


def per_action_swap_regrets(R: np.ndarray) -> np.ndarray:
    return np.diag(R) - R.min(axis=1)


def quantile_regret(trace: ExpertTrace, eps: float) -> float:
    """Learner loss minus the ceil(eps*d)-th smallest cumulative expert loss.

    Sort ties break toward the lower index (stable sort on the index).
    """
    d = trace.d
    if not (1.0 / d <= eps <= 1.0):
        raise ValueError("eps must lie in [1/d, 1]")
    totals = np.array([math.fsum(trace.losses[:, i]) for i in range(d)])
    order = np.argsort(totals, kind="stable")
    k = math.ceil(eps * d)
    learner = math.fsum(
        math.fsum(trace.p[t] * trace.losses[t]) for t in range(trace.T)
    )
    return float(learner - totals[order[k - 1]])


@dataclass(frozen=True)
class RegretReport:
    learner_loss: float
    external: float
    internal: float
    swap: float
    swap_targets: tuple


def regret_report(trace: ExpertTrace) -> RegretReport:
    R = cumulative_matrix(trace)
    sw, tg = best_swap(R)
    return RegretReport(
        learner_loss=learner_loss(R),
        external=best_external(R)[0],
        internal=best_internal(R)[0],
        swap=sw,
        swap_targets=tuple(int(x) for x in tg),
    )


def per_transform_regrets(trace: ExpertTrace, family: PriorFamily) -> list[dict]:
    """Regret and prior complexity for every binary transform (small d)."""
    from .priors import complexity, log_prior_mass

    R = cumulative_matrix(trace)
    out = []
    for m in enumerate_binary(family.d):
        phi = transform_matrix(m)
        rep = complexity(m)
        out.append(
            {
                "map": [int(x) for x in m],
                "regret": regret_against(R, phi),
                "c": rep.c,
                "log_inv_prior": -log_prior_mass(family, m),
            }
        )
    return out


def equilibrium_gaps(p: np.ndarray, losses: np.ndarray) -> dict:
    """Per-player external and swap gaps of the empirical play distribution.

    Inputs are the (T, N, d) self-play arrays; the coarse gap is the max over
    players of external regret / T and the fine gap the max of swap regret / T
    against the realized loss sequences.
    """
    T, N, d = p.shape
    ext = np.empty(N)
    sw = np.empty(N)
    for n in range(N):
        R = cumulative_matrix(ExpertTrace(p=p[:, n], losses=losses[:, n]))
        ext[n] = best_external(R)[0]
        sw[n] = best_swap(R)[0]
    return {
        "cce_gap": float(ext.max() / T),
        "ce_gap": float(sw.max() / T),
        "external_per_player": (ext / T).tolist(),
        "swap_per_player": (sw / T).tolist(),
    }


def equilibrium_gaps_direct(game, p: np.ndarray, budget: int = DIRECT_GAP_BUDGET) -> dict:
    """Gap of the empirical joint distribution by explicit enumeration.

    Builds the empirical product-joint distribution round by round and
    measures each player's best fixed deviation (coarse) and best swap
    deviation (fine) against the true loss tensors.  Cross-checks the
    trace-based gaps; only feasible for tiny games.
    """
    T, N, d = p.shape
    if d**N > budget:
        raise ValueError("joint action space exceeds the enumeration budget")
    joint = np.zeros((d,) * N)
    for t in range(T):
        block = p[t, 0]
        for n in range(1, N):
            block = np.multiply.outer(block, p[t, n])
        joint += block
    joint /= T
    cce, ce = 0.0, 0.0
    for n in range(N):
        # marginal-conditional losses: expected loss of each own action given
        # the joint distribution's conditional on that action
        own_axis = n
        other_axes = tuple(a for a in range(N) if a != n)
        mass = joint.sum(axis=other_axes)  # own marginal
        cond_loss = np.empty((d, d))  # cond_loss[i, j]: E[loss_n(j, a_{-n}) ; a_n = i]
        for i in range(d):
            sl = [slice(None)] * N
            sl[n] = i
            slice_mass = joint[tuple(sl)]
            for j in range(d):
                sj = [slice(None)] * N
                sj[n] = j
                cond_loss[i, j] = float((slice_mass * game.losses[n][tuple(sj)]).sum())
        base = float(np.trace(cond_loss))
        cce = max(cce, base - cond_loss.sum(axis=0).min())
        ce = max(ce, base - cond_loss.min(axis=1).sum())
    return {"cce_gap": cce, "ce_gap": ce}
