"""Multiplicative weights and its optimistic variant over a finite action set.

Weights live in the log domain with max-shift normalization so that runs of
millions of rounds never underflow.  Updates are functional: each call
returns a new state.
"""

from dataclasses import dataclass, replace

import numpy as np

from .simplex import as_loss_vector, as_prob_vector


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


@dataclass(frozen=True)
class MwuState:
    log_w: np.ndarray
    prior: np.ndarray
    eta: float
    max_loss: float = 1.0


@dataclass(frozen=True)
class OmwuState:
    log_hat: np.ndarray  # log weights of the lagged iterate
    last_loss: np.ndarray  # previous round's loss, zero before round 1
    prior: np.ndarray
    eta: float
    max_loss: float = 1.0


def mwu_init(prior, eta: float, max_loss: float = 1.0) -> MwuState:
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    p = as_prob_vector(prior)
    if np.any(p == 0):
        raise ValueError("prior must be strictly positive")
    return MwuState(log_w=np.log(p), prior=p, eta=eta, max_loss=max_loss)


def mwu_current(state: MwuState) -> np.ndarray:
    return _softmax(state.log_w)


def mwu_update(state: MwuState, loss) -> MwuState:
    loss = as_loss_vector(loss, state.max_loss)
    if loss.shape != state.log_w.shape:
        raise ValueError("loss dimension mismatch")
    lw = state.log_w - state.eta * loss
    return replace(state, log_w=lw - lw.max())


def omwu_init(prior, eta: float, max_loss: float = 1.0) -> OmwuState:
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    p = as_prob_vector(prior)
    if np.any(p == 0):
        raise ValueError("prior must be strictly positive")
    return OmwuState(
        log_hat=np.log(p), last_loss=np.zeros_like(p), prior=p, eta=eta, max_loss=max_loss
    )


def omwu_predict(state: OmwuState) -> np.ndarray:
    """Current play: lagged weights tilted by the previous loss."""
    return _softmax(state.log_hat - state.eta * state.last_loss)


def omwu_update(state: OmwuState, loss) -> OmwuState:
    loss = as_loss_vector(loss, state.max_loss)
    if loss.shape != state.log_hat.shape:
        raise ValueError("loss dimension mismatch")
    lh = state.log_hat - state.eta * loss
    return replace(state, log_hat=lh - lh.max(), last_loss=loss)
