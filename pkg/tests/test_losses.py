import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankopt import losses
from rankopt.losses import LossSpec, evaluate_loss, generate_pairs


def rand_pool(rng, s, d, binary=True):
    if binary:
        return rng.integers(0, 2, size=(s, d)).astype(float)
    return np.abs(rng.normal(size=(s, d)))


class TestMse:
    def test_worked_values(self, toy):
        assert losses.mse(toy["c_hat1"], toy["c"]).value == 45.0
        assert losses.mse(toy["c_hat2"], toy["c"]).value == 45.0

    def test_zero_at_truth(self, toy):
        res = losses.mse(toy["c"], toy["c"])
        assert res.value == 0.0 and (res.gradient == 0).all()

    def test_gradient_formula(self):
        rng = np.random.default_rng(0)
        c, c_hat = rng.normal(size=5), rng.normal(size=5)
        res = losses.mse(c_hat, c)
        assert np.allclose(res.gradient, -2 * (c - c_hat))


class TestPointwise:
    def test_worked_values(self, toy):
        for ch in (toy["c_hat1"], toy["c_hat2"]):
            res = losses.pointwise(ch, toy["c"], toy["pool"])
            assert res.value == pytest.approx(54.0 / 4, abs=1e-12)

    def test_zero_at_truth(self, toy):
        assert losses.pointwise(toy["c"], toy["c"], toy["pool"]).value == 0.0

    def test_empty_pool_rejected(self, toy):
        with pytest.raises(ValueError):
            losses.pointwise(toy["c"], toy["c"], np.zeros((0, 2)))

    def test_weighted_form_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            s, d = int(rng.integers(1, 9)), int(rng.integers(2, 7))
            pool = rand_pool(rng, s, d, binary=bool(rng.integers(0, 2)))
            c, c_hat = rng.normal(size=d) * 3, rng.normal(size=d) * 3
            a = losses.pointwise(c_hat, c, pool).value
            b = losses.pointwise_weighted_form(c_hat, c, pool)
            assert abs(a - b) < 1e-9

    def test_weighted_form_frequency_interpretation(self):
        # for binary pools the diagonal weights are selection frequencies
        pool = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        eps = np.array([1.0, 0.0])  # isolates gamma_0
        got = losses.pointwise_weighted_form(pool[0] * 0 + eps, np.zeros(2), pool)
        assert got == pytest.approx(3 / 4)  # coordinate 0 is 1 in 3 of 4 rows

    def test_zero_pool_row_contributes_nothing(self, toy):
        pool = np.zeros((1, 2))
        assert losses.pointwise(toy["c_hat1"], toy["c"], pool).value == 0.0


class TestGeneratePairs:
    def test_worked_best_versus_rest(self, toy):
        pairs = generate_pairs(toy["pool"], toy["c"])
        assert {tuple(p) for p in pairs.index_pairs} == {(1, 3), (1, 0), (1, 2)}

    def test_all_equal_objectives_empty(self):
        pool = np.array([[1.0, 0.0], [0.0, 1.0]])
        pairs = generate_pairs(pool, np.array([3.0, 3.0]))
        assert len(pairs) == 0

    def test_all_pairs_count(self):
        # 4 distinct objective values -> C(4,2) ordered pairs
        pool = np.eye(4)
        c = np.array([1.0, 2.0, 3.0, 4.0])
        pairs = generate_pairs(pool, c, "all_pairs")
        assert len(pairs) == 6

    def test_all_pairs_respects_strict_order(self):
        rng = np.random.default_rng(2)
        pool = rand_pool(rng, 6, 4)
        c = rng.normal(size=4)
        pairs = generate_pairs(pool, c, "all_pairs")
        obj = pool @ c
        for p, q in pairs.index_pairs:
            assert obj[p] < obj[q]

    def test_maximize_sense_flips_order(self):
        pool = np.array([[1.0, 0.0], [0.0, 1.0]])
        c = np.array([1.0, 5.0])
        lo = generate_pairs(pool, c, sense="minimize")
        hi = generate_pairs(pool, c, sense="maximize")
        assert lo.index_pairs.tolist() == [[0, 1]]
        assert hi.index_pairs.tolist() == [[1, 0]]

    def test_unknown_scheme(self, toy):
        with pytest.raises(ValueError):
            generate_pairs(toy["pool"], toy["c"], "worst_versus_rest")


class TestPairwise:
    def test_worked_values(self, toy):
        pairs = generate_pairs(toy["pool"], toy["c"])
        assert losses.pairwise(toy["c_hat1"], toy["c"], pairs, 0.0).value == \
            pytest.approx(4.0 / 3, abs=1e-12)
        assert losses.pairwise(toy["c_hat2"], toy["c"], pairs, 0.0).value == 0.0

    def test_zero_at_truth_without_margin(self, toy):
        pairs = generate_pairs(toy["pool"], toy["c"])
        res = losses.pairwise(toy["c"], toy["c"], pairs, 0.0)
        assert res.value == 0.0 and (res.gradient == 0).all()

    def test_hinge_at_exactly_zero_is_inactive(self):
        pool = np.array([[1.0, 0.0], [0.0, 1.0]])
        c = np.array([1.0, 2.0])      # pair (0, 1)
        c_hat = np.array([3.0, 3.0])  # difference exactly 0
        pairs = generate_pairs(pool, c)
        res = losses.pairwise(c_hat, c, pairs, 0.0)
        assert res.value == 0.0 and (res.gradient == 0).all()

    def test_margin_activates(self):
        pool = np.array([[1.0, 0.0], [0.0, 1.0]])
        c = np.array([1.0, 2.0])
        c_hat = np.array([3.0, 3.0])
        pairs = generate_pairs(pool, c)
        res = losses.pairwise(c_hat, c, pairs, 0.5)
        assert res.value == pytest.approx(0.5)
        assert np.allclose(res.gradient, pool[0] - pool[1])

    def test_empty_pairs(self, toy):
        pairs = generate_pairs(toy["pool"], np.zeros(2))
        res = losses.pairwise(toy["c_hat1"], toy["c"], pairs, 0.0)
        assert len(pairs) == 0 and res.value == 0.0

    def test_negative_margin_rejected(self, toy):
        pairs = generate_pairs(toy["pool"], toy["c"])
        with pytest.raises(ValueError):
            losses.pairwise(toy["c_hat1"], toy["c"], pairs, -0.1)


class TestNce:
    def test_worked_value(self, toy):
        res = losses.nce(toy["c_hat2"], toy["c"], toy["pool"])
        assert res.value == pytest.approx(-8.0, abs=1e-12)

    def test_single_best_pool(self, toy):
        res = losses.nce(toy["c_hat1"], toy["c"], np.array([[0.0, 1.0]]))
        assert res.value == 0.0

    def test_upper_bounded_by_pairwise(self, toy):
        # dropping the hinge can only decrease each term
        pairs = generate_pairs(toy["pool"], toy["c"])
        for ch in (toy["c_hat1"], toy["c_hat2"]):
            pw = losses.pairwise(ch, toy["c"], pairs, 0.0)
            nv = losses.nce(ch, toy["c"], toy["pool"])
            assert nv.value <= pw.value + 1e-12

    def test_termwise_hinge_relation(self):
        # each best-versus-rest pairwise term equals max(0, nce-style term)
        rng = np.random.default_rng(5)
        for _ in range(50):
            pool = np.unique(rand_pool(rng, 6, 5), axis=0)
            c, c_hat = rng.normal(size=5), rng.normal(size=5)
            obj = pool @ c
            best = np.argmin(obj)
            pred = pool @ c_hat
            pairs = generate_pairs(pool, c)
            if len(pairs) == 0:
                continue
            hinge_terms = [max(0.0, pred[best] - pred[q])
                           for _, q in pairs.index_pairs]
            got = losses.pairwise(c_hat, c, pairs, 0.0).value
            assert got == pytest.approx(np.mean(hinge_terms), abs=1e-12)


class TestPairwiseDiff:
    def test_worked_values(self, toy):
        # per-pair differences under c are (-2, -5, -7); the squared residual
        # terms of the worked example are (2+1)^2, (5+1)^2 and (7+2)^2
        pairs = generate_pairs(toy["pool"], toy["c"])
        d_true = [toy["c"] @ (pairs.items[p] - pairs.items[q])
                  for p, q in pairs.index_pairs]
        assert sorted(d_true) == [-7.0, -5.0, -2.0]
        for ch, diffs in ((toy["c_hat1"], [1.0, 1.0, 2.0]),
                          (toy["c_hat2"], [-5.0, -11.0, -16.0])):
            d_hat = [ch @ (pairs.items[p] - pairs.items[q])
                     for p, q in pairs.index_pairs]
            assert sorted(d_hat) == sorted(diffs)
            res = losses.pairwise_diff(ch, toy["c"], pairs)
            assert res.value == pytest.approx((9.0 + 36.0 + 81.0) / 3, abs=1e-12)

    def test_zero_at_truth(self, toy):
        pairs = generate_pairs(toy["pool"], toy["c"])
        res = losses.pairwise_diff(toy["c"], toy["c"], pairs)
        assert res.value == 0.0 and (res.gradient == 0).all()

    def test_norm_switch(self, toy):
        pairs = generate_pairs(toy["pool"], toy["c"])
        by_pairs = losses.pairwise_diff(toy["c_hat1"], toy["c"], pairs, "pairs")
        by_pool = losses.pairwise_diff(toy["c_hat1"], toy["c"], pairs, "pool")
        assert by_pool.value == pytest.approx(by_pairs.value * 3 / 4)

    def test_weighted_form_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            s, d = int(rng.integers(2, 9)), int(rng.integers(2, 7))
            pool = rand_pool(rng, s, d, binary=bool(rng.integers(0, 2)))
            c, c_hat = rng.normal(size=d) * 2, rng.normal(size=d) * 2
            for norm in ("pairs", "pool"):
                pairs = generate_pairs(pool, c)
                if len(pairs) == 0:
                    continue
                a = losses.pairwise_diff(c_hat, c, pairs, norm).value
                b = losses.pairwise_diff_weighted_form(c_hat, c, pairs, norm)
                assert abs(a - b) < 1e-9

    def test_identical_pair_coordinates_zero_weight(self):
        # coordinates where v_p == v_q on every pair cannot move the loss
        pool = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
        c = np.array([0.0, 1.0, 2.0])
        pairs = generate_pairs(pool, c)
        bump = np.array([5.0, 0.0, 0.0])  # only touches the shared coordinate
        base = losses.pairwise_diff(c, c, pairs).value
        assert losses.pairwise_diff(c + bump, c, pairs).value == base


class TestSoftmaxDistribution:
    def test_uniform_on_equal_objectives(self):
        pool = np.array([[1.0, 0.0], [0.0, 1.0]])
        p = losses.softmax_distribution(np.array([2.0, 2.0]), pool, 1.0)
        assert np.allclose(p, [0.5, 0.5])

    def test_sums_to_one(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            pool = rand_pool(rng, int(rng.integers(1, 12)), 6)
            c = rng.normal(size=6) * 10.0 ** rng.integers(-2, 4)
            p = losses.softmax_distribution(c, pool, float(rng.uniform(0.01, 10)))
            assert abs(p.sum() - 1.0) < 1e-12

    def test_large_temperature_near_uniform(self, toy):
        p = losses.softmax_distribution(toy["c"], toy["pool"], 1e6)
        assert np.abs(p - 0.25).max() < 1e-4

    def test_small_temperature_concentrates(self, toy):
        p = losses.softmax_distribution(toy["c"], toy["pool"], 1e-6)
        assert p[1] >= 1 - 1e-6  # [0,1] is the pool best

    def test_invalid_temperature(self, toy):
        with pytest.raises(ValueError):
            losses.softmax_distribution(toy["c"], toy["pool"], 0.0)

    def test_extreme_objectives_stable(self):
        pool = np.array([[1.0, 0.0], [0.0, 1.0]])
        p = losses.softmax_distribution(np.array([1e6, -1e6]), pool, 1.0)
        assert np.isfinite(p).all() and abs(p.sum() - 1.0) < 1e-12


def direct_listwise(c_hat, c, pool, tau):
    """Independent two-line evaluation of the listwise loss."""
    def soft(v):
        z = np.exp(-(pool @ v) / tau - np.max(-(pool @ v) / tau))
        return z / z.sum()

    p, q = soft(c), soft(c_hat)
    return float(-(p * np.log(q)).sum()) / len(pool)


class TestListwise:
    def test_minimum_at_truth(self, toy):
        res = losses.listwise(toy["c"], toy["c"], toy["pool"], 1.0)
        p = losses.softmax_distribution(toy["c"], toy["pool"], 1.0)
        entropy = -(p * np.log(p)).sum()
        assert res.value == pytest.approx(entropy / 4, abs=1e-12)
        assert np.abs(res.gradient).max() < 1e-6

    def test_against_direct_evaluation(self, toy):
        for ch in (toy["c_hat1"], toy["c_hat2"]):
            got = losses.listwise(ch, toy["c"], toy["pool"], 1.0).value
            assert got == pytest.approx(
                direct_listwise(ch, toy["c"], toy["pool"], 1.0), abs=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.05, 5.0))
    def test_gibbs_inequality(self, seed, tau):
        rng = np.random.default_rng(seed)
        pool = rand_pool(rng, int(rng.integers(2, 10)), 5)
        c = rng.normal(size=5)
        c_hat = rng.normal(size=5)
        base = losses.listwise(c, c, pool, tau).value
        assert losses.listwise(c_hat, c, pool, tau).value >= base - 1e-10

    def test_invalid_temperature(self, toy):
        with pytest.raises(ValueError):
            losses.listwise(toy["c"], toy["c"], toy["pool"], -1.0)


class TestListwiseKl:
    def test_zero_at_truth(self, toy):
        res = losses.listwise_kl(toy["c"], toy["c"], toy["pool"], 0.7)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_gradient_identical_to_listwise(self, toy):
        a = losses.listwise(toy["c_hat1"], toy["c"], toy["pool"], 0.5)
        b = losses.listwise_kl(toy["c_hat1"], toy["c"], toy["pool"], 0.5)
        assert (a.gradient == b.gradient).all()

    def test_value_identity(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            pool = rand_pool(rng, 5, 4)
            c, c_hat = rng.normal(size=4), rng.normal(size=4)
            tau = float(rng.uniform(0.1, 3.0))
            kl = losses.listwise_kl(c_hat, c, pool, tau).value
            ce = losses.listwise(c_hat, c, pool, tau).value
            ce0 = losses.listwise(c, c, pool, tau).value
            assert abs(kl - (ce - ce0)) < 1e-9


class TestCombined:
    def test_alpha_zero_is_mse(self, toy):
        a = losses.combined(toy["c_hat1"], toy["c"], toy["pool"], 1.0, 0.0)
        b = losses.mse(toy["c_hat1"], toy["c"])
        assert a.value == b.value and (a.gradient == b.gradient).all()

    def test_alpha_one_is_listwise(self, toy):
        a = losses.combined(toy["c_hat1"], toy["c"], toy["pool"], 1.0, 1.0)
        b = losses.listwise(toy["c_hat1"], toy["c"], toy["pool"], 1.0)
        assert a.value == b.value and (a.gradient == b.gradient).all()

    def test_midpoint_is_mean(self, toy):
        half = losses.combined(toy["c_hat1"], toy["c"], toy["pool"], 1.0, 0.5)
        m = losses.mse(toy["c_hat1"], toy["c"])
        lw = losses.listwise(toy["c_hat1"], toy["c"], toy["pool"], 1.0)
        assert half.value == pytest.approx((m.value + lw.value) / 2, abs=1e-12)

    def test_invalid_alpha(self, toy):
        with pytest.raises(ValueError):
            losses.combined(toy["c_hat1"], toy["c"], toy["pool"], 1.0, 1.5)


POOL_KINDS = ("pointwise", "pairwise", "pairwise_diff", "listwise",
              "listwise_kl", "nce", "combined")


class TestInvariances:
    def test_pool_order_invariance(self):
        rng = np.random.default_rng(8)
        for kind in POOL_KINDS + ("mse",):
            spec = LossSpec(kind=kind, margin=0.3, temperature=0.7,
                            mix_alpha=0.4)
            for _ in range(20):
                pool = rand_pool(rng, 7, 5)
                c, c_hat = rng.normal(size=5), rng.normal(size=5)
                base = evaluate_loss(spec, c_hat, c, pool)
                perm = rng.permutation(7)
                shuffled = evaluate_loss(spec, c_hat, c, pool[perm])
                assert shuffled.value == pytest.approx(base.value, rel=1e-9,
                                                       abs=1e-12)
                assert np.allclose(shuffled.gradient, base.gradient,
                                   rtol=1e-9, atol=1e-12)

    def test_maximize_sense_via_negation(self):
        # L(c_hat, c | maximize) must equal L(-c_hat, -c | minimize) with the
        # gradient mapped through the chain rule
        rng = np.random.default_rng(9)
        for kind in POOL_KINDS:
            spec = LossSpec(kind=kind, margin=0.2, temperature=0.5,
                            mix_alpha=0.6)
            for _ in range(10):
                pool = rand_pool(rng, 6, 4)
                c, c_hat = rng.normal(size=4), rng.normal(size=4)
                hi = evaluate_loss(spec, c_hat, c, pool, sense="maximize")
                lo = evaluate_loss(spec, -c_hat, -c, pool, sense="minimize")
                assert hi.value == pytest.approx(lo.value, rel=1e-9, abs=1e-12)
                assert np.allclose(hi.gradient, -lo.gradient,
                                   rtol=1e-9, atol=1e-12)

    def test_nonnegative_except_nce(self):
        rng = np.random.default_rng(10)
        for kind in ("mse", "pointwise", "pairwise", "pairwise_diff",
                     "listwise", "combined"):
            spec = LossSpec(kind=kind, margin=0.1, temperature=0.8)
            for _ in range(30):
                pool = rand_pool(rng, 5, 4)
                res = evaluate_loss(spec, rng.normal(size=4),
                                    rng.normal(size=4), pool)
                assert res.value >= -1e-12

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            LossSpec(kind="spo_plus")


def central_difference(fn, c_hat, h=1e-5):
    g = np.zeros_like(c_hat)
    for j in range(len(c_hat)):
        up, dn = c_hat.copy(), c_hat.copy()
        up[j] += h
        dn[j] -= h
        g[j] = (fn(up) - fn(dn)) / (2 * h)
    return g


class TestGradients:
    @pytest.mark.parametrize("kind", POOL_KINDS + ("mse",))
    def test_matches_finite_differences(self, kind):
        # quick version; the acceptance suite runs the full sweep
        rng = np.random.default_rng(hash(kind) % 2**32)
        spec = LossSpec(kind=kind, margin=0.25, temperature=0.6, mix_alpha=0.3)
        checked = 0
        while checked < 15:
            d = int(rng.integers(2, 8))
            pool = rand_pool(rng, int(rng.integers(2, 8)), d)
            c, c_hat = rng.normal(size=d), rng.normal(size=d)
            if kind == "pairwise":
                pairs = generate_pairs(pool, c)
                if len(pairs) == 0:
                    continue
                args = spec.margin + (pool[pairs.index_pairs[:, 0]]
                                      - pool[pairs.index_pairs[:, 1]]) @ c_hat
                if np.abs(args).min() < 1e-4:  # kink-adjacent
                    continue
            res = evaluate_loss(spec, c_hat, c, pool)
            fd = central_difference(
                lambda ch: evaluate_loss(spec, ch, c, pool).value, c_hat)
            denom = max(1.0, float(np.abs(fd).max()))
            assert np.abs(res.gradient - fd).max() / denom < 1e-4
            checked += 1
