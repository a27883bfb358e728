"""Meta aggregation over base learners at geometric learning rates.

Two adversarial-setting aggregators share the round protocol: propose a
transform as the meta-weighted average of the base transforms, play its
stationary distribution, and after seeing the loss update the meta weights
with each base's counterfactual loss <phi^base, p loss^T> and broadcast the
loss matrix to every base.

MetaKernelMwu aggregates kernel engines over learning rates; MetaBmMwu
aggregates prior-aware reductions over a (prior, learning rate) grid.
"""

import math

import numpy as np

from .bm import bm_init, bm_propose, bm_update
from .kernel import SwapMwu
from .learners import mwu_current, mwu_init, mwu_update
from .priors import make_prior_family
from .simplex import as_loss_vector, outer_product, stationary_distribution


def rate_grid_size(d: int) -> int:
    return 2 * math.ceil(math.log2(d))


def base_rates(d: int, T: int) -> np.ndarray:
    M = rate_grid_size(d)
    return np.sqrt(2.0 ** np.arange(1, M + 1) / T)


class ProtocolError(RuntimeError):
    """Propose/feed called out of order, or horizon exceeded."""


class _TwoPhase:
    """Enforces the propose-then-feed round protocol."""

    def __init__(self, T: int):
        self.T = T
        self.t = 0
        self._awaiting_loss = False

    def _begin_round(self):
        if self._awaiting_loss:
            raise ProtocolError("propose called twice without feeding a loss")
        if self.t >= self.T:
            raise ProtocolError("horizon exceeded")
        self._awaiting_loss = True

    def _end_round(self):
        if not self._awaiting_loss:
            raise ProtocolError("loss fed before a proposal")
        self._awaiting_loss = False
        self.t += 1


class MetaKernelMwu(_TwoPhase):
    """Meta MWU over kernel-engine base learners at geometric rates.

    The meta rate is sqrt(ln M / T) with M = 2*ceil(log2 d) base learners,
    which is the divergence to a vertex of the uniform meta prior.
    """

    def __init__(self, d: int, T: int, family=None):
        super().__init__(T)
        self.d = d
        family = family or make_prior_family(d)
        self.family = family
        etas = base_rates(d, T)
        self.bases = [SwapMwu(d, eta, family) for eta in etas]
        self.M = len(self.bases)
        self.meta = mwu_init(np.full(self.M, 1.0 / self.M), math.sqrt(math.log(self.M) / T))
        self._pending = None

    def propose(self) -> np.ndarray:
        self._begin_round()
        w = mwu_current(self.meta)
        phis = np.stack([b.propose() for b in self.bases])
        phi = np.einsum("h,hij->ij", w, phis)
        p = stationary_distribution(phi)
        self._pending = (phis, phi, p)
        return p

    def feed(self, loss) -> None:
        if self._pending is None:
            raise ProtocolError("loss fed before a proposal")
        loss = as_loss_vector(loss)
        phis, phi, p = self._pending
        M = outer_product(p, loss)
        lw = np.einsum("hij,ij->h", phis, M)
        self.meta = mwu_update(self.meta, lw)
        for b in self.bases:
            b.update(M)
        self._pending = None
        self._end_round()


class MetaBmMwu(_TwoPhase):
    """Meta MWU over (d+1) x M prior-aware reductions.

    Base (k, h) uses the k-th prior matrix and the h-th geometric rate; the
    meta rate is sqrt(ln((d+1)M) / T).
    """

    def __init__(self, d: int, T: int, family=None):
        super().__init__(T)
        self.d = d
        family = family or make_prior_family(d)
        self.family = family
        etas = base_rates(d, T)
        self.bases = [
            bm_init(family.psi[k], eta) for k in range(d + 1) for eta in etas
        ]
        n = len(self.bases)
        self.meta = mwu_init(np.full(n, 1.0 / n), math.sqrt(math.log(n) / T))
        self._pending = None

    def propose(self) -> np.ndarray:
        self._begin_round()
        w = mwu_current(self.meta)
        phis = np.stack([bm_propose(b) for b in self.bases])
        phi = np.einsum("h,hij->ij", w, phis)
        p = stationary_distribution(phi)
        self._pending = (phis, p)
        return p

    def feed(self, loss) -> None:
        if self._pending is None:
            raise ProtocolError("loss fed before a proposal")
        loss = as_loss_vector(loss)
        phis, p = self._pending
        M = outer_product(p, loss)
        lw = np.einsum("hij,ij->h", phis, M)
        self.meta = mwu_update(self.meta, lw)
        self.bases = [bm_update(b, M) for b in self.bases]
        self._pending = None
        self._end_round()
