"""Exponential weights over all binary transformations, three ways.

The naive engine enumerates all d^d transforms (test oracle, small d only).
The kernelized engine simulates the same update through closed-form kernel
evaluations on a d x d sufficient statistic.  The fast engine reuses
intermediate row statistics to get the identical mean transform in O(d^2)
arithmetic per round.  All three emit the same mean transformation.
"""

from dataclasses import dataclass, replace

import numpy as np

from .priors import PriorFamily, enumerate_binary, make_prior_family

NAIVE_CAP = 5


def kernel_eval(B: np.ndarray, A: np.ndarray, family: PriorFamily) -> float:
    """Prior-weighted kernel sum over all binary transforms, in closed form.

    Exploits the mixture structure: each mixture component contributes a
    product over rows of an affine function of the row sums of B*A, so one
    evaluation costs O(d^2).  Per-row maxima are factored out to keep the
    d-fold products from underflowing.  May still return 0.0 if the true
    value is below float range.
    """
    d = family.d
    B = np.asarray(B, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if B.shape != (d, d) or A.shape != (d, d):
        raise ValueError("kernel arguments must be d x d")
    if np.any(B < 0) or np.any(A < 0):
        raise ValueError("kernel arguments must be nonnegative")
    a = (d - 2) / (d - 1)
    b = 1.0 / (d * (d - 1))
    G = B * A
    rs = G.sum(axis=1)  # (d,)
    rows = a * G + b * rs[:, None]  # rows[i, k] = sum_j psi^k_ij G_ij
    diag = a * np.diag(G) + b * rs  # component d+1
    scale = np.maximum(rows.max(axis=1), diag)  # per-row factor
    if np.any(scale <= 0.0):
        return 0.0
    col_prods = np.prod(rows / scale[:, None], axis=0)  # (d,)
    diag_prod = np.prod(diag / scale)
    inner = col_prods.sum() / (2 * d) + diag_prod / 2.0
    log_scale = np.log(scale).sum()
    return float(np.exp(log_scale + np.log(inner))) if inner > 0 else 0.0


@dataclass(frozen=True)
class NaiveEnumState:
    """Explicit distribution over all d^d transforms (oracle only)."""

    log_q: np.ndarray  # (d^d,)
    maps: np.ndarray  # (d^d, d)
    onehot: np.ndarray  # (d^d, d, d)
    eta: float
    d: int


@dataclass(frozen=True)
class KernelState:
    B: np.ndarray  # entrywise exp(-eta * cumulative loss matrix)
    eta: float
    family: PriorFamily


@dataclass(frozen=True)
class FastKernelState:
    L: np.ndarray  # cumulative loss matrix
    eta: float
    d: int


def naive_init(d: int, eta: float, family: PriorFamily | None = None) -> NaiveEnumState:
    if d > NAIVE_CAP:
        raise ValueError(f"naive enumeration capped at d={NAIVE_CAP}")
    family = family or make_prior_family(d)
    maps = np.array(list(enumerate_binary(d)))
    idx = np.arange(d)
    # prior mass of each transform under the mixture, in the log domain
    comp_mass = np.stack(
        [np.log(family.psi[k][idx[None, :], maps]).sum(axis=1) for k in range(d + 1)]
    )  # (d+1, n)
    weighted = comp_mass + np.log(family.mixture_weights)[:, None]
    hi = weighted.max(axis=0)
    log_pi = hi + np.log(np.exp(weighted - hi).sum(axis=0))
    onehot = np.zeros((maps.shape[0], d, d))
    onehot[np.arange(maps.shape[0])[:, None], idx[None, :], maps] = 1.0
    return NaiveEnumState(log_q=log_pi, maps=maps, onehot=onehot, eta=eta, d=d)


def naive_mean(state: NaiveEnumState) -> np.ndarray:
    q = np.exp(state.log_q - state.log_q.max())
    q /= q.sum()
    return np.einsum("n,nij->ij", q, state.onehot)


def naive_step(state: NaiveEnumState, M: np.ndarray) -> tuple[np.ndarray, NaiveEnumState]:
    """Propose the mean transform, then apply the exponential update."""
    phi = naive_mean(state)
    losses = M[np.arange(state.d)[None, :], state.maps].sum(axis=1)  # <phi, M> per transform
    log_q = state.log_q - state.eta * losses
    return phi, replace(state, log_q=log_q - log_q.max())


def kernelized_init(d: int, eta: float, family: PriorFamily | None = None) -> KernelState:
    family = family or make_prior_family(d)
    return KernelState(B=np.ones((d, d)), eta=eta, family=family)


def kernelized_step(state: KernelState, M: np.ndarray) -> tuple[np.ndarray, KernelState]:
    """Mean transform via 2d^2 + 1 kernel evaluations, then entrywise update."""
    d = state.family.d
    # row rescaling cancels in the kernel ratios; it only prevents underflow
    Bn = state.B / state.B.max(axis=1, keepdims=True)
    ones = np.ones((d, d))
    kj = kernel_eval(Bn, ones, state.family)
    if kj <= 0.0:
        raise FloatingPointError("kernel normalizer underflowed; reduce eta or horizon")
    phi = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            A = ones.copy()
            A[i, j] = 0.0
            phi[i, j] = 1.0 - kernel_eval(Bn, A, state.family) / kj
    newB = state.B * np.exp(-state.eta * M)
    return phi, replace(state, B=newB)


def fast_init(d: int, eta: float) -> FastKernelState:
    if d < 3:
        raise ValueError("fast kernel path needs d >= 3 (1/(d(d-2)) terms); use kernelized_step")
    return FastKernelState(L=np.zeros((d, d)), eta=eta, d=d)


UNDERFLOW_FACTOR = 1e-100


def fast_step(state: FastKernelState, M: np.ndarray) -> tuple[np.ndarray, FastKernelState]:
    """O(d^2)-per-round mean transform from leave-one-out row statistics.

    Leave-one-out column products are formed as full product divided by the
    left-out factor whenever every factor is comfortably above underflow;
    otherwise they are recomputed as sums of logs.  Both branches cost
    O(d^2) arithmetic and agree to rounding error.
    """
    d = state.d
    cc = 1.0 / (d * (d - 2))
    Z = -state.eta * state.L
    Z -= Z.max(axis=1, keepdims=True)
    V = np.exp(Z)
    V /= V.sum(axis=1, keepdims=True)
    f = V + cc
    if f.min() > UNDERFLOW_FACTOR:
        phi = _assemble_by_division(V, f, d, cc)
        if phi is not None:
            return phi, replace(state, L=state.L + M)
    phi = _assemble_log_domain(V, d, cc)
    return phi, replace(state, L=state.L + M)


def _assemble_by_division(V, f, d, cc):
    """Division-based leave-one-out; returns None if products underflow."""
    P = np.prod(f, axis=0)  # (d,) full column products
    fd = np.diag(f)
    Pd = float(np.prod(fd))
    c_t = P.sum() / d + Pd
    if c_t <= 0.0 or P.min() <= 0.0 or Pd <= 0.0:
        return None
    C = P[None, :] / f  # leave-one-out column products
    S = C.sum(axis=1)
    Cd = Pd / fd
    phi = (
        V * C / (c_t * d)
        + V * (S / (c_t * d * d * (d - 2)))[:, None]
        + (cc + np.eye(d)) * V * (Cd / c_t)[:, None]
    )
    if not np.all(np.isfinite(phi)):
        return None
    return phi


def _assemble_log_domain(V, d, cc):
    """Same quantities with products carried as sums of logs."""
    lf = np.log(V + cc)  # (d, d)
    col = lf.sum(axis=0)  # log prod_i (V_ik + cc) per k
    lC = col[None, :] - lf  # leave-one-out, k in [d]
    lfd = np.log(np.diag(V) + cc)
    dsum = lfd.sum()
    lCd1 = dsum - lfd  # leave-one-out diagonal products
    # log c_t = log( (1/d) sum_k exp(col_k) + exp(dsum) )
    hi = max(col.max(), dsum)
    lc = hi + np.log(np.exp(col - hi).sum() / d + np.exp(dsum - hi))
    hiS = lC.max(axis=1, keepdims=True)
    lS = hiS[:, 0] + np.log(np.exp(lC - hiS).sum(axis=1))
    term1 = V * np.exp(lC - lc) / d
    term2 = V * np.exp(lS - lc)[:, None] / (d * d * (d - 2))
    coef = cc + np.eye(d)
    term3 = coef * V * np.exp(lCd1 - lc)[:, None]
    return term1 + term2 + term3


class SwapMwu:
    """Unified per-round engine: kernelized at d=2, fast path otherwise.

    Supports the split propose/update protocol: the proposal depends only on
    losses committed so far, so a meta learner can collect proposals before
    the round's loss is known.
    """

    def __init__(self, d: int, eta: float, family: PriorFamily | None = None):
        self.d = d
        if d == 2:
            self._state = kernelized_init(d, eta, family)
            self._step = kernelized_step
        else:
            self._state = fast_init(d, eta)
            self._step = fast_step

    def propose(self) -> np.ndarray:
        phi, _ = self._step(self._state, np.zeros((self.d, self.d)))
        return phi

    def update(self, M: np.ndarray) -> None:
        _, self._state = self._step(self._state, M)

    def step(self, M: np.ndarray) -> np.ndarray:
        phi, self._state = self._step(self._state, M)
        return phi
