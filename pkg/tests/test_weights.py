import numpy as np
import pytest

from ranksentinel import (
    DegenerateStatisticsError,
    RankChangeSet,
    ValidationError,
    WeightModel,
    fit_kappa,
    r_squared,
    weight,
)
from ranksentinel.weights import COARSE_GRID_POINTS


def trunc4(v):
    return np.floor(np.asarray(v) * 1e4) / 1e4


def make_changes(orig, loo, m, cases=None):
    orig = np.asarray(orig)
    loo = np.asarray(loo)
    if cases is None:
        cases = np.zeros(orig.size, dtype=int)
    return RankChangeSet(orig, loo, cases, m)


class TestWeightFunction:
    def test_golden_values_at_default_steepness(self):
        model = WeightModel(kappa=0.010, m=200)
        assert trunc4(weight(model, 1)) == 0.0115
        assert trunc4(weight(model, 20)) == 0.0095

    def test_equal_weights_limit_at_tiny_kappa(self):
        model = WeightModel(kappa=1e-8, m=200)
        w = weight(model, np.arange(1, 201))
        assert np.all(np.abs(w * 200 - 1) < 1e-6)

    @pytest.mark.parametrize("kappa", [1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    @pytest.mark.parametrize("m", [10, 200, 10_000])
    def test_weights_sum_to_one(self, kappa, m):
        model = WeightModel(kappa=kappa, m=m)
        total = weight(model, np.arange(1, m + 1)).sum()
        assert abs(total - 1.0) < 1e-12

    def test_strictly_decreasing_and_convex(self):
        for kappa in (1e-3, 1e-2, 0.5):
            model = WeightModel(kappa=kappa, m=300)
            w = weight(model, np.arange(1, 401))  # beyond m as well
            assert np.all(w > 0)
            assert np.all(np.diff(w) < 0)
            assert np.all(np.diff(w, 2) > 0)

    def test_extended_precision_survives_steep_curves(self):
        # kappa*x up to 10^4 underflows float64; longdouble input keeps the
        # curve strictly positive, decreasing, and convex
        model = WeightModel(kappa=1.0, m=10_000)
        w = weight(model, np.arange(1, 10_001, dtype=np.longdouble))
        assert w.dtype == np.longdouble
        assert np.all(w > 0)
        assert np.all(np.diff(w) < 0)
        assert np.all(np.diff(w, 2) > 0)

    def test_steeper_curve_gives_more_top_weight(self):
        tops = [weight(WeightModel(kappa=k, m=200), 1) for k in (0.001, 0.01, 0.1, 1.0)]
        assert np.all(np.diff(tops) > 0)

    def test_longer_list_gives_less_top_weight(self):
        tops = [weight(WeightModel(kappa=0.01, m=m), 1) for m in (10, 50, 200, 1000)]
        assert np.all(np.diff(tops) < 0)

    def test_positive_beyond_list_length(self):
        model = WeightModel(kappa=0.05, m=100)
        assert 0 < weight(model, 5000) < weight(model, 100)

    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            WeightModel(kappa=0.0, m=10)
        with pytest.raises(ValidationError):
            WeightModel(kappa=-1.0, m=10)
        with pytest.raises(ValidationError):
            WeightModel(kappa=0.1, m=0)
        with pytest.raises(ValidationError):
            weight(WeightModel(kappa=0.1, m=10), 0)


class TestRankChangeSet:
    def test_rejects_equal_pairs(self):
        with pytest.raises(ValidationError, match="differ"):
            make_changes([1, 2], [1, 5], m=10)

    def test_rejects_out_of_window_original(self):
        with pytest.raises(ValidationError, match="1..m"):
            make_changes([11], [3], m=10)

    def test_loo_rank_may_exceed_window(self):
        cs = make_changes([5], [200], m=10)
        assert cs.loo_ranks[0] == 200

    def test_canonical_order(self):
        a = make_changes([3, 1, 2], [5, 4, 6], m=10, cases=[1, 0, 0])
        b = make_changes([2, 3, 1], [6, 5, 4], m=10, cases=[0, 1, 0])
        assert np.array_equal(a.original_ranks, b.original_ranks)
        assert np.array_equal(a.loo_ranks, b.loo_ranks)
        assert np.array_equal(a.case_indices, b.case_indices)


class TestRSquared:
    def test_two_pair_swap_matches_hand_computation(self):
        # pairs {(1,2),(2,1)}: a single swap of the top two positions
        cs = make_changes([1, 2], [2, 1], m=200)
        for kappa in (1e-3, 0.01, 0.5):
            model = WeightModel(kappa=kappa, m=200)
            w1, w2 = weight(model, 1), weight(model, 2)
            sse = 2 * (w1 - w2) ** 2
            sst = (w1 - w2) ** 2 / 2.0
            expected = 1.0 - sse / sst  # = -3 exactly, for any kappa
            assert r_squared(cs, kappa) == pytest.approx(expected, rel=1e-12)
            assert r_squared(cs, kappa) == pytest.approx(-3.0, rel=1e-9)

    def test_general_oracle(self):
        rng = np.random.default_rng(9)
        orig = rng.integers(1, 101, size=50)
        loo = orig + rng.integers(1, 30, size=50)
        cs = make_changes(orig, loo, m=100)
        kappa = 0.02
        model = WeightModel(kappa=kappa, m=100)
        obs = np.array([weight(model, int(x)) for x in cs.loo_ranks])
        pred = np.array([weight(model, int(x)) for x in cs.original_ranks])
        expected = 1 - np.sum((pred - obs) ** 2) / np.sum((obs - obs.mean()) ** 2)
        assert r_squared(cs, kappa) == pytest.approx(expected, rel=1e-12)

    def test_empty_set_is_an_error(self):
        cs = RankChangeSet(np.empty(0, int), np.empty(0, int), np.empty(0, int), 10)
        with pytest.raises(DegenerateStatisticsError, match="empty"):
            r_squared(cs, 0.01)

    def test_constant_observed_ranks_is_an_error(self):
        cs = make_changes([1, 2, 3], [7, 7, 7], m=10)
        with pytest.raises(DegenerateStatisticsError, match="all equal"):
            r_squared(cs, 0.01)

    def test_numerically_collapsed_weights_is_an_error(self):
        # distinct deep ranks whose float64 weights all underflow to zero
        cs = make_changes([1, 2, 3], [500, 600, 700], m=10)
        with pytest.raises(DegenerateStatisticsError, match="indistinguishable"):
            r_squared(cs, 9.0)


class TestFitKappa:
    @staticmethod
    def tail_weighted_changes(rng, m=200, n_pairs=500):
        """Displacements that grow toward the tail of the list."""
        orig = rng.integers(1, m + 1, size=n_pairs)
        mag = 1 + (orig / m) ** 2 * 60
        shift = (mag * rng.uniform(0.5, 1.5, n_pairs)).astype(int) + 1
        loo = np.maximum(orig + rng.choice([-1, 1], n_pairs) * shift, 1)
        mask = loo != orig
        return make_changes(orig[mask], loo[mask], m)

    @staticmethod
    def uniform_changes(rng, m=200, n_pairs=500):
        orig = rng.integers(1, m + 1, size=n_pairs)
        shift = rng.integers(1, 8, size=n_pairs) * rng.choice([-1, 1], n_pairs)
        loo = np.maximum(orig + shift, 1)
        mask = loo != orig
        return make_changes(orig[mask], loo[mask], m)

    def test_deterministic_and_order_invariant(self):
        rng = np.random.default_rng(10)
        cs = self.tail_weighted_changes(rng)
        k1 = fit_kappa(cs).kappa
        perm = np.random.default_rng(11).permutation(len(cs))
        shuffled = RankChangeSet(
            cs.original_ranks[perm], cs.loo_ranks[perm], cs.case_indices[perm], cs.m
        )
        assert fit_kappa(shuffled).kappa == k1
        assert fit_kappa(cs).kappa == k1

    def test_tail_concentrated_changes_fit_steeper_than_uniform(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            k_tail = fit_kappa(self.tail_weighted_changes(rng)).kappa
            k_unif = fit_kappa(self.uniform_changes(rng)).kappa
            assert k_tail > k_unif

    def test_matches_dense_grid(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            cs = self.tail_weighted_changes(rng, n_pairs=200)
            fitted = fit_kappa(cs)
            best = fitted.kappa
            grid = np.exp(np.linspace(np.log(1e-6), np.log(10.0), 2000))
            grid_best = max(r_squared(cs, k) for k in grid)
            assert r_squared(cs, best) >= grid_best - 1e-6

    def test_objective_undefined_everywhere_is_an_error(self):
        from ranksentinel import OptimizationError

        cs = make_changes([1, 2, 3], [9, 9, 9], m=10)
        with pytest.raises(OptimizationError, match="undefined"):
            fit_kappa(cs)

    def test_bracket_validation(self):
        cs = make_changes([1, 2], [2, 1], m=10)
        with pytest.raises(ValidationError):
            fit_kappa(cs, lo=0.0, hi=1.0)
        with pytest.raises(ValidationError):
            fit_kappa(cs, lo=1.0, hi=0.5)
        with pytest.raises(ValidationError):
            fit_kappa(cs, tol=0.0)

    def test_empty_change_set_is_an_error(self):
        cs = RankChangeSet(np.empty(0, int), np.empty(0, int), np.empty(0, int), 10)
        with pytest.raises(DegenerateStatisticsError):
            fit_kappa(cs)

    def test_grid_size_unchanged(self):
        # the coarse scan is part of the documented fit contract
        assert COARSE_GRID_POINTS == 50
