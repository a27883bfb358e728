import math

import numpy as np
import pytest

from phiregret.analytics import ExpertTrace, regret_report
from phiregret.meta import (
    MetaBmMwu,
    MetaKernelMwu,
    ProtocolError,
    base_rates,
    rate_grid_size,
)


class TestRateGrid:
    def test_size(self):
        assert rate_grid_size(2) == 2
        assert rate_grid_size(3) == 4
        assert rate_grid_size(4) == 4
        assert rate_grid_size(16) == 8

    def test_rates_geometric(self):
        etas = base_rates(8, T=1024)
        assert len(etas) == 6
        np.testing.assert_allclose(etas[1:] / etas[:-1], math.sqrt(2), atol=1e-12)
        assert abs(etas[0] - math.sqrt(2 / 1024)) < 1e-12


@pytest.mark.parametrize("cls", [MetaKernelMwu, MetaBmMwu])
class TestProtocol:
    def test_double_propose_rejected(self, cls):
        alg = cls(3, T=4)
        alg.propose()
        with pytest.raises(ProtocolError):
            alg.propose()

    def test_feed_before_propose_rejected(self, cls):
        alg = cls(3, T=4)
        with pytest.raises(ProtocolError):
            alg.feed([0.0, 0.0, 0.0])

    def test_horizon_enforced(self, cls):
        alg = cls(3, T=2)
        for _ in range(2):
            alg.propose()
            alg.feed([0.1, 0.2, 0.3])
        with pytest.raises(ProtocolError):
            alg.propose()

    def test_plays_are_distributions(self, cls):
        rng = np.random.default_rng(0)
        alg = cls(4, T=30)
        for _ in range(30):
            p = alg.propose()
            assert p.min() >= 0 and abs(p.sum() - 1) < 1e-9
            alg.feed(rng.uniform(size=4))

    def test_deterministic(self, cls):
        def run():
            rng = np.random.default_rng(9)
            alg = cls(3, T=20)
            out = []
            for _ in range(20):
                out.append(alg.propose())
                alg.feed(rng.uniform(size=3))
            return np.array(out)

        np.testing.assert_array_equal(run(), run())


@pytest.mark.parametrize("cls", [MetaKernelMwu, MetaBmMwu])
class TestRegret:
    def test_tracks_drifting_best_action(self, cls):
        # losses always favor action 2: swap regret stays small and the
        # play concentrates there
        d, T = 3, 300
        alg = cls(d, T)
        loss = np.array([1.0, 0.8, 0.0])
        for _ in range(T):
            p = alg.propose()
            alg.feed(loss)
        assert p[2] > 0.9

    def test_swap_regret_sublinear(self, cls):
        d, T = 3, 400
        rng = np.random.default_rng(3)
        alg = cls(d, T)
        ps, ls = [], []
        for _ in range(T):
            ps.append(alg.propose())
            l = rng.uniform(size=d)
            ls.append(l)
            alg.feed(l)
        rep = regret_report(ExpertTrace(p=np.array(ps), losses=np.array(ls)))
        # generous sanity budget, far below the worst case of T
        assert rep.swap < 8 * math.sqrt(T * math.log(d ** d))
