import math

import numpy as np
import pytest

from emolink.errors import ConfigError, DegenerateStatisticsError
from emolink.stats import (
    Snapshot,
    compare_across,
    compare_within,
    fdr_adjust,
    jaccard,
    link_stability,
    rank_average,
    spearman,
    strength_deltas,
    ttest_two_sample,
)

from oracles import bh_by_hand, jaccard_by_hand, pearson, pooled_t_by_hand, ranks_by_hand


def snapshot(sid, raw, links=(), rescaled=None):
    raw = np.asarray(raw, dtype=float)
    rescaled = raw if rescaled is None else np.asarray(rescaled, dtype=float)
    return Snapshot(sid, raw, rescaled, frozenset(links))


class TestRanks:
    def test_average_ranks_for_ties(self):
        assert list(rank_average([1, 2, 2, 4])) == [1.0, 2.5, 2.5, 4.0]

    def test_ranks_sum_to_triangular_number(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(3, 30))
            values = rng.integers(0, 5, size=n)  # plenty of ties
            ranks = rank_average(values)
            assert ranks.sum() == pytest.approx(n * (n + 1) / 2)
            assert list(ranks) == ranks_by_hand(list(values))


class TestSpearman:
    def test_perfect_anti_rank(self):
        rho, _ = spearman([1, 2, 3], [3, 2, 1])
        assert rho == -1.0

    def test_identity_rho_one_minimal_p(self):
        rho, p = spearman([1.0, 2.5, 3.0, 7.0], [1.0, 2.5, 3.0, 7.0])
        assert rho == 1.0 and p == 0.0

    def test_tie_case_matches_pearson_on_ranks_oracle(self):
        x, y = [1, 2, 2, 4], [1, 3, 2, 4]
        rho, _ = spearman(x, y)
        expected = pearson(ranks_by_hand(x), ranks_by_hand(y))
        assert rho == pytest.approx(expected, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            spearman([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(DegenerateStatisticsError):
            spearman([1, 2], [1, 2])

    def test_constant_vector_is_an_error_not_nan(self):
        with pytest.raises(DegenerateStatisticsError, match="constant"):
            spearman([1, 1, 1], [1, 2, 3])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        rho, p = spearman(x, y)
        rho2, p2 = spearman(np.exp(x), y)
        rho3, p3 = spearman(x, 3.0 * y + 11.0)
        assert rho2 == pytest.approx(rho, abs=1e-12) and p2 == pytest.approx(p, abs=1e-12)
        assert rho3 == pytest.approx(rho, abs=1e-12) and p3 == pytest.approx(p, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=9)
        y = rng.normal(size=9)
        assert spearman(x, y) == spearman(y, x)

    def test_exact_permutation_p_small_n(self):
        # n=3, identical vectors: permutations of ranks give rho in
        # {1, -1, +-0.5}; |rho| >= 1 happens for 2 of 6 permutations
        rho, p = spearman([1, 2, 3], [1, 2, 3], exact=True)
        assert rho == 1.0 and p == pytest.approx(2 / 6)

    def test_exact_rejected_above_n8(self):
        with pytest.raises(ConfigError, match="n <= 8"):
            spearman(list(range(9)), list(range(9)), exact=True)

    def test_p_in_unit_interval(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            x = rng.normal(size=10)
            y = rng.normal(size=10)
            _, p = spearman(x, y)
            assert 0.0 <= p <= 1.0


class TestFdr:
    def test_hand_worked_example(self):
        assert list(fdr_adjust([0.01, 0.02, 0.04])) == pytest.approx([0.03, 0.03, 0.04])
        assert bh_by_hand([0.01, 0.02, 0.04]) == pytest.approx([0.03, 0.03, 0.04])

    def test_capped_at_one(self):
        assert list(fdr_adjust([1.0, 1.0])) == [1.0, 1.0]

    def test_single_p_unchanged(self):
        assert list(fdr_adjust([0.2])) == [0.2]

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            fdr_adjust([0.5, 1.5])
        with pytest.raises(ValueError):
            fdr_adjust([-0.1])

    def test_matches_oracle_on_random_vectors(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            p = rng.random(size=int(rng.integers(1, 12)))
            assert list(fdr_adjust(p)) == pytest.approx(bh_by_hand(list(p)), rel=1e-12)

    def test_adjusted_at_least_raw(self):
        rng = np.random.default_rng(11)
        p = rng.random(30)
        q = fdr_adjust(p)
        assert np.all(q >= p - 1e-15)

    def test_fixed_points(self):
        # constant vectors are exact fixed points of the step-up adjustment
        for c in (0.2, 1.0):
            vec = [c] * 5
            assert list(fdr_adjust(vec)) == pytest.approx(vec)


class TestJaccard:
    def test_basic_count(self):
        assert jaccard({"ab", "bc"}, {"bc", "cd"}) == pytest.approx(1 / 3)

    def test_identical_non_empty(self):
        assert jaccard({"ab"}, {"ab"}) == 1.0

    def test_disjoint(self):
        assert jaccard({"ab"}, {"cd"}) == 0.0

    def test_both_empty_is_one_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            assert jaccard(set(), set()) == 1.0
        assert "empty" in caplog.text

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(12)
        universe = list(range(20))
        for _ in range(30):
            a = set(rng.choice(universe, size=rng.integers(0, 10), replace=False).tolist())
            b = set(rng.choice(universe, size=rng.integers(1, 10), replace=False).tolist())
            v = jaccard(a, b)
            assert v == jaccard(b, a)
            assert 0.0 <= v <= 1.0
            assert v == pytest.approx(jaccard_by_hand(a, b))


class TestTTest:
    def test_identical_samples(self):
        out = ttest_two_sample([1, 2, 3], [1, 2, 3])
        assert out.statistic == 0.0 and out.p_raw == 1.0 and out.cohens_d == 0.0

    def test_textbook_pooled_formula(self):
        out = ttest_two_sample([1, 2, 3], [4, 5, 6])
        t_hand, d_hand = pooled_t_by_hand([1, 2, 3], [4, 5, 6])
        assert out.statistic == pytest.approx(t_hand, rel=1e-12)
        assert out.cohens_d == pytest.approx(d_hand, rel=1e-12)
        assert out.df == 4.0

    def test_swap_negates_t_and_d(self):
        a, b = [1.0, 2.0, 5.0], [2.5, 4.0, 4.5, 8.0]
        fwd = ttest_two_sample(a, b)
        rev = ttest_two_sample(b, a)
        assert fwd.statistic == pytest.approx(-rev.statistic)
        assert fwd.cohens_d == pytest.approx(-rev.cohens_d)
        assert fwd.p_raw == pytest.approx(rev.p_raw)

    def test_location_invariance_of_d(self):
        a = np.array([1.0, 2.0, 3.0, 5.0])
        d1 = ttest_two_sample(a, a + 2.0).cohens_d
        d2 = ttest_two_sample(a + 100.0, a + 102.0).cohens_d
        assert d1 == pytest.approx(d2)

    def test_degenerate_zero_variance_equal_means(self):
        out = ttest_two_sample([2.0, 2.0], [2.0, 2.0])
        assert out.statistic == 0.0 and out.p_raw == 1.0

    def test_zero_variance_unequal_means(self):
        out = ttest_two_sample([3.0, 3.0], [1.0, 1.0])
        assert out.statistic == math.inf and out.p_raw == 0.0

    def test_welch_flag(self):
        a = [1.0, 2.0, 3.0, 4.0]
        b = [10.0, 30.0, 50.0]
        pooled = ttest_two_sample(a, b, pooled=True)
        welch = ttest_two_sample(a, b, pooled=False)
        assert pooled.df == 5.0
        assert welch.df != pooled.df and welch.df < 5.0

    def test_sample_size_floor(self):
        with pytest.raises(DegenerateStatisticsError):
            ttest_two_sample([1.0], [1.0, 2.0])


class TestLinkStability:
    def test_always_significant_tiny_p(self):
        flags = np.ones((1, 4), dtype=bool)
        # each window draws 1% of the possible links
        flags_all = np.vstack([flags, np.zeros((99, 4), dtype=bool)])
        p = link_stability(flags_all, possible_links=10000, resamples=1000, seed=0)
        assert p[0] < 1 / 1000 + 1e-12

    def test_never_significant_p_one(self):
        flags = np.zeros((5, 3), dtype=bool)
        flags[0, :] = True  # something must be drawn each window
        p = link_stability(flags, possible_links=100, resamples=200, seed=1)
        assert np.all(p[1:] == 1.0)

    def test_single_window_rejected(self):
        with pytest.raises(DegenerateStatisticsError, match="2 windows"):
            link_stability(np.ones((3, 1), dtype=bool), possible_links=10)

    def test_low_resamples_rejected(self):
        with pytest.raises(ConfigError, match="resamples"):
            link_stability(np.ones((3, 2), dtype=bool), possible_links=10, resamples=50)

    def test_super_uniform_under_own_null(self):
        # flags drawn by the op's own null (a fixed number of links chosen
        # uniformly per window, matrix covering the whole link universe) keep
        # the p-values super-uniform: P(p <= alpha) within alpha + 3 se
        rng = np.random.default_rng(99)
        alpha = 0.05
        possible, n_windows, draws = 300, 5, 40
        hits, total = 0, 0
        for seed in range(30):
            flags = np.zeros((possible, n_windows), dtype=bool)
            for t in range(n_windows):
                flags[rng.choice(possible, size=draws, replace=False), t] = True
            p = link_stability(flags, possible, resamples=400, seed=seed)
            hits += int((p <= alpha).sum())
            total += possible
        se = math.sqrt(alpha * (1 - alpha) / total)
        assert hits / total <= alpha + 3 * se


class TestCompareWithin:
    def test_identical_snapshots(self):
        raw = np.arange(21, dtype=float)
        snaps = [snapshot("a", raw, {("x", "y")}), snapshot("b", raw, {("x", "y")})]
        for scope in ("all21", "inter15"):
            rep = compare_within(snaps, scope)
            assert rep.rho[0, 1] == 1.0
            assert rep.jaccard[0, 1] == 1.0

    def test_matrix_shapes_and_family_size(self):
        rng = np.random.default_rng(13)
        snaps = [snapshot(f"s{i}", rng.random(21), {(f"w{i}", "x")}) for i in range(10)]
        rep = compare_within(snaps)
        assert rep.rho.shape == (10, 10)
        assert rep.comparisons == 45
        assert np.all(np.diag(rep.rho) == 1.0)
        assert np.allclose(rep.rho, rep.rho.T)
        assert np.all(rep.p_adjusted >= rep.p_raw - 1e-15)

    def test_rank_preserving_perturbation_rho_one(self):
        rng = np.random.default_rng(14)
        base = np.sort(rng.random(21)) + np.arange(21)  # strictly increasing
        # noise small enough to never swap adjacent ranks
        noisy = base + 0.001 * rng.random(21)
        rep = compare_within([snapshot("a", base), snapshot("b", noisy)])
        assert rep.rho[0, 1] == 1.0

    def test_needs_two_snapshots(self):
        with pytest.raises(DegenerateStatisticsError):
            compare_within([snapshot("a", np.arange(21.0))])

    def test_raw_and_rescaled_strengths_give_identical_rho(self):
        # rescaling divides by a positive scalar, so ranks are unchanged and
        # either strength variant yields the same correlation
        rng = np.random.default_rng(21)
        for _ in range(10):
            a_raw, b_raw = rng.random(21), rng.random(21)
            a_scaled = a_raw / np.median(a_raw)
            b_scaled = b_raw / np.median(b_raw)
            rho_raw, p_raw = spearman(a_raw, b_raw)
            rho_scaled, p_scaled = spearman(a_scaled, b_scaled)
            assert rho_raw == pytest.approx(rho_scaled, abs=1e-15)
            assert p_raw == pytest.approx(p_scaled, abs=1e-15)


class TestCompareAcross:
    def test_single_snapshot_datasets_reduce_to_spearman(self):
        rng = np.random.default_rng(15)
        a = rng.random(21)
        b = rng.random(21)
        rep = compare_across([[snapshot("a", a)], [snapshot("b", b)]], ["A", "B"])
        rho, p = spearman(a, b)
        assert rep.rho[0, 1] == pytest.approx(rho)
        assert rep.p_raw[0, 1] == pytest.approx(p)

    def test_self_cell_excludes_identical_pairs(self):
        rng = np.random.default_rng(16)
        snaps = [snapshot(f"s{i}", rng.random(21)) for i in range(3)]
        rep = compare_across([snaps, [snapshot("z", rng.random(21))]], ["A", "Z"])
        within = compare_within(snaps)
        expected = np.mean(within.rho[np.triu_indices(3, k=1)])
        assert rep.rho[0, 0] == pytest.approx(expected)

    def test_same_distribution_high_mean_rho(self):
        rng = np.random.default_rng(17)
        base = np.arange(21, dtype=float)
        ds1 = [snapshot(f"a{i}", base + 0.01 * rng.random(21)) for i in range(3)]
        ds2 = [snapshot(f"b{i}", base + 0.01 * rng.random(21)) for i in range(3)]
        rep = compare_across([ds1, ds2], ["one", "two"])
        assert rep.rho[0, 1] >= 0.9


class TestStrengthDeltas:
    def make_dataset(self, scale_tt=1.0, n=4, seed=0):
        rng = np.random.default_rng(seed)
        snaps = []
        for i in range(n):
            rescaled = np.linspace(0.5, 2.5, 21) + 0.01 * rng.random(21)
            rescaled[0] *= scale_tt  # Tension-Tension is key index 0
            snaps.append(snapshot(f"s{i}", rescaled, rescaled=rescaled))
        return snaps

    def test_identical_datasets_all_zero_t(self):
        ds = self.make_dataset()
        rows = strength_deltas(ds, ds)
        assert len(rows) == 21
        assert all(r.test.statistic == 0.0 for r in rows)
        assert all(r.direction == "none" for r in rows)

    def test_doubled_tension_tension_flagged(self):
        ds_a = self.make_dataset(scale_tt=2.0, seed=1)
        ds_b = self.make_dataset(scale_tt=1.0, seed=2)
        rows = strength_deltas(ds_a, ds_b)
        tt = rows[0]
        assert tt.dim_i.value == "Tension" and tt.dim_j.value == "Tension"
        assert tt.test.statistic > 0 and tt.test.p_raw <= 0.01
        assert tt.direction == "a"
        others = [r for r in rows[1:]]
        assert sum(r.test.p_raw > 0.05 for r in others) >= 0.8 * len(others)

    def test_canonical_key_order(self):
        ds = self.make_dataset()
        rows = strength_deltas(ds, ds)
        assert [(r.dim_i.value, r.dim_j.value) for r in rows][:3] == [
            ("Tension", "Tension"),
            ("Tension", "Depression"),
            ("Tension", "Anger"),
        ]

    def test_needs_two_snapshots_each(self):
        ds = self.make_dataset(n=2)
        with pytest.raises(DegenerateStatisticsError):
            strength_deltas(ds[:1], ds)
