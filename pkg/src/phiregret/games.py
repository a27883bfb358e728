"""N-player normal-form self-play with the accelerated adaptive meta learner.

Each player runs d+2 optimistic base learners (d+1 prior-aware reductions
with optimistic subroutines plus one plain optimistic MWU minimizing external
regret) under an optimistic meta update with a stability correction that
penalizes bases whose induced distributions move between rounds.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .priors import make_prior_family
from .simplex import outer_product, stationary_distribution

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class GameSpec:
    """Loss tensors for an N-player game with d actions per player."""

    n_players: int
    d: int
    losses: tuple  # one (d,)*N float array per player, entries in [0,1]
    tags: tuple = ()

    def __post_init__(self):
        shape = (self.d,) * self.n_players
        if len(self.losses) != self.n_players:
            raise ValueError("need one loss tensor per player")
        for ell in self.losses:
            if ell.shape != shape:
                raise ValueError(f"loss tensor shape {ell.shape} != {shape}")
            if np.any(ell < -1e-12) or np.any(ell > 1 + 1e-12):
                raise ValueError("loss entries must lie in [0, 1]")
        if "zero_sum" in self.tags or "constant_sum" in self.tags:
            total = sum(self.losses)
            if np.abs(total - total.flat[0]).max() > 1e-9:
                raise ValueError("tagged constant-sum but player losses do not sum to a constant")

    def to_dict(self) -> dict:
        # flat arrays are row-major over the joint action (a_1, ..., a_N)
        return {
            "N": self.n_players,
            "d": self.d,
            "losses": [ell.ravel(order="C").tolist() for ell in self.losses],
            "tags": list(self.tags),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GameSpec":
        n, d = int(obj["N"]), int(obj["d"])
        losses = tuple(
            np.asarray(flat, dtype=np.float64).reshape((d,) * n, order="C")
            for flat in obj["losses"]
        )
        return cls(n_players=n, d=d, losses=losses, tags=tuple(obj.get("tags", ())))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> "GameSpec":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def make_zero_sum(d: int, seed: int) -> GameSpec:
    """Two-player game with loss_2 = 1 - loss_1, loss_1 i.i.d. uniform."""
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    l1 = rng.uniform(size=(d, d))
    return GameSpec(n_players=2, d=d, losses=(l1, 1.0 - l1), tags=("zero_sum",))


def make_constant_sum_polymatrix(n_players: int, d: int, seed: int) -> GameSpec:
    """Pairwise constant-sum game; player losses averaged over opponents."""
    if n_players < 2 or d < 2:
        raise ValueError("need n_players >= 2 and d >= 2")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    pair = {}
    for m in range(n_players):
        for n in range(m + 1, n_players):
            a = rng.uniform(size=(d, d))
            pair[(m, n)] = a
            pair[(n, m)] = 1.0 - a.T
    shape = (d,) * n_players
    losses = []
    for n in range(n_players):
        ell = np.zeros(shape)
        for m in range(n_players):
            if m == n:
                continue
            # pair[(n, m)][i, j]: loss to n when n plays i and m plays j;
            # broadcast over the remaining players' axes
            view = pair[(n, m)] if n < m else pair[(n, m)].T
            expand = [np.newaxis] * n_players
            expand[n] = slice(None)
            expand[m] = slice(None)
            ell = ell + view[tuple(expand)]
        losses.append(ell / (n_players - 1))
    return GameSpec(n_players=n_players, d=d, losses=tuple(losses), tags=("constant_sum",))


def matching_pennies() -> GameSpec:
    """Fixed 2x2 matching game: player 1 loses on a match, player 2 on a miss."""
    l1 = np.array([[1.0, 0.0], [0.0, 1.0]])
    return GameSpec(n_players=2, d=2, losses=(l1, 1.0 - l1), tags=("zero_sum",))


def expected_loss_vector(game: GameSpec, player: int, profile, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Expected loss of each own action against the opponents' mixed profile."""
    if game.d**game.n_players > budget:
        raise ValueError("joint action space exceeds the enumeration budget")
    t = game.losses[player]
    # contract every axis except the player's own
    for j in range(game.n_players - 1, -1, -1):
        if j == player:
            continue
        t = np.tensordot(t, np.asarray(profile[j], dtype=np.float64), axes=([j], [0]))
    return t


class GamePlayer:
    """One player's round logic for the accelerated adaptive dynamic.

    Bases 0..d are prior-aware reductions with optimistic subroutines (the
    whole bank is one (d+1, d, d) log-weight stack sharing the previous loss
    matrix); base d+1 is optimistic MWU with uniform prior whose transform is
    the rank-one matrix 1 p~^T.  Meta weights follow the optimistic update
    with the predictive loss and the stability correction.
    """

    def __init__(self, d: int, n_players: int, eta_m: float | None = None,
                 lam: float | None = None, eta: float | None = None, family=None):
        self.d = d
        self.n_players = n_players
        self.eta_m = eta_m if eta_m is not None else 1.0 / (64 * n_players)
        self.lam = lam if lam is not None else float(n_players)
        self.eta = eta if eta is not None else 1.0 / (16 * n_players)
        family = family or make_prior_family(d)
        self.H = np.log(family.psi)  # (d+1, d, d) log weights of the BM subs
        self.last_M = np.zeros((d, d))  # previous loss matrix, shared by all BM subs
        self.hat = np.log(np.full(d, 1.0 / d))  # lagged OMWU weights (base d+1)
        self.last_l = np.zeros(d)
        w1 = np.concatenate([np.full(d, 1.0 / (2 * d)), [0.25, 0.25]])
        self.log_hat_w = np.log(w1)
        self.t = 0
        self.p_prev = None
        self.l_prev = None
        self.ptilde_prev = None  # (d+2, d) at t-1
        self.ptilde_prev2 = None  # (d+2, d) at t-2
        self._pending = None
        # per-round diagnostics, appended by propose/update
        self.w_history = []
        self.correction_history = []

    def _base_transforms(self) -> np.ndarray:
        phis = np.empty((self.d + 2, self.d, self.d))
        logits = self.H - self.eta * self.last_M[None]
        z = np.exp(logits - logits.max(axis=2, keepdims=True))
        phis[: self.d + 1] = z / z.sum(axis=2, keepdims=True)
        pt = np.exp(self.hat - self.eta * self.last_l)
        pt /= pt.sum()
        phis[self.d + 1] = np.broadcast_to(pt, (self.d, self.d))
        return phis

    def propose(self) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("propose called twice without an update")
        phis = self._base_transforms()
        if self.t >= 2:
            diff = np.abs(self.ptilde_prev - self.ptilde_prev2).sum(axis=1)
            c = self.lam * diff**2
        else:
            c = np.zeros(self.d + 2)
        if self.t >= 1:
            m = np.einsum("kij,i,j->k", phis, self.p_prev, self.l_prev)
        else:
            m = np.zeros(self.d + 2)
        logw = self.log_hat_w - self.eta_m * (m + c)
        w = np.exp(logw - logw.max())
        w /= w.sum()
        phi = np.einsum("k,kij->ij", w, phis)
        p = stationary_distribution(phi)
        self._pending = (phis, w, c, p, phi)
        self.w_history.append(w)
        self.correction_history.append(c)
        return p

    def update(self, loss: np.ndarray) -> None:
        if self._pending is None:
            raise RuntimeError("update called before propose")
        loss = np.asarray(loss, dtype=np.float64)
        phis, w, c, p, _ = self._pending
        lw = np.einsum("kij,i,j->k", phis, p, loss)
        self.log_hat_w = self.log_hat_w - self.eta_m * (lw + c)
        self.log_hat_w -= self.log_hat_w.max()
        M = outer_product(p, loss)
        self.H = self.H - self.eta * M[None]
        self.H -= self.H.max(axis=2, keepdims=True)
        self.last_M = M
        self.hat = self.hat - self.eta * loss
        self.hat -= self.hat.max()
        self.last_l = loss
        ptilde = np.einsum("kij,i->kj", phis, p)
        self.ptilde_prev2 = self.ptilde_prev
        self.ptilde_prev = ptilde
        self.p_prev = p
        self.l_prev = loss
        self.t += 1
        self._pending = None


@dataclass
class JointTrace:
    """Synchronous self-play record consumed by the analytics layer."""

    p: np.ndarray  # (T, N, d)
    losses: np.ndarray  # (T, N, d)
    w: np.ndarray  # (T, N, d+2) meta weights
    corrections: np.ndarray  # (T, N, d+2)
    stationary_residuals: np.ndarray  # (T, N) L1 residual of p vs phi(p)
    path_length: np.ndarray = field(init=False)  # (T,) cumulative sum over players

    def __post_init__(self):
        diffs = np.abs(np.diff(self.p, axis=0)).sum(axis=2) ** 2  # (T-1, N)
        per_round = np.concatenate([[0.0], diffs.sum(axis=1)])
        self.path_length = np.cumsum(per_round)


def run_self_play(game: GameSpec, T: int, eta_m=None, lam=None, eta=None,
                  budget: int = DEFAULT_BUDGET) -> JointTrace:
    """All players run the accelerated dynamic for T synchronous rounds."""
    N, d = game.n_players, game.d
    players = [GamePlayer(d, N, eta_m=eta_m, lam=lam, eta=eta) for _ in range(N)]
    p_hist = np.empty((T, N, d))
    l_hist = np.empty((T, N, d))
    resid = np.empty((T, N))
    for t in range(T):
        profile = [pl.propose() for pl in players]
        for n, pl in enumerate(players):
            p_hist[t, n] = profile[n]
            phi = pl._pending[4]
            resid[t, n] = np.abs(profile[n] - phi.T @ profile[n]).sum()
        for n, pl in enumerate(players):
            ell = expected_loss_vector(game, n, profile, budget=budget)
            l_hist[t, n] = ell
            pl.update(ell)
    w = np.stack([np.stack(pl.w_history) for pl in players], axis=1)
    c = np.stack([np.stack(pl.correction_history) for pl in players], axis=1)
    return JointTrace(p=p_hist, losses=l_hist, w=w, corrections=c, stationary_residuals=resid)
