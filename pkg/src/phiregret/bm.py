"""Prior-aware reduction of swap-regret minimization to d per-row learners.

Row i of the proposed transform is the play of subroutine i, which is seeded
with row i of the prior matrix and fed the scaled loss p_{t,i} * loss_t (row i
of the round's loss matrix).  Subroutines are plain or optimistic MWU; the
whole bank is vectorized as one d x d log-weight matrix.
"""

from dataclasses import dataclass, replace

import numpy as np

from .simplex import as_stochastic_matrix


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class BmState:
    log_w: np.ndarray  # (d, d); row i = log weights of subroutine i
    last: np.ndarray  # (d, d); previous loss matrix (optimistic subs only)
    prior_matrix: np.ndarray
    eta: float
    optimistic: bool


def bm_init(prior_matrix, eta: float, optimistic: bool = False) -> BmState:
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    psi = as_stochastic_matrix(prior_matrix)
    if np.any(psi == 0):
        raise ValueError("prior matrix must be strictly positive")
    return BmState(
        log_w=np.log(psi),
        last=np.zeros_like(psi),
        prior_matrix=psi,
        eta=eta,
        optimistic=optimistic,
    )


def bm_propose(state: BmState) -> np.ndarray:
    """Row-stochastic proposal; optimistic subs tilt by the previous loss row."""
    logits = state.log_w
    if state.optimistic:
        logits = logits - state.eta * state.last
    return _row_softmax(logits)


def bm_update(state: BmState, M: np.ndarray) -> BmState:
    M = np.asarray(M, dtype=np.float64)
    if M.shape != state.log_w.shape:
        raise ValueError("loss matrix dimension mismatch")
    if not np.all(np.isfinite(M)):
        raise ValueError("loss matrix contains NaN/Inf")
    lw = state.log_w - state.eta * M
    lw = lw - lw.max(axis=1, keepdims=True)
    return replace(state, log_w=lw, last=M)
