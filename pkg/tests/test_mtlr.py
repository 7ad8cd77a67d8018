import numpy as np
import pytest

from isdkit.core import SurvivalDataset
from isdkit.curves import extend_linear, median_survival
from isdkit.mtlr import (
    TimeGrid,
    default_grid_size,
    encode_label,
    fit_mtlr,
    make_grid,
    mtlr_loglik_grad,
    predict_curve_mtlr,
)

from conftest import dataset


class TestMakeGrid:
    def test_quantile_oracle(self):
        times = np.arange(1.0, 101.0)
        d = dataset(times, np.ones(100))
        grid = make_grid(d, 4)
        oracle = np.quantile(times, [0.25, 0.5, 0.75, 1.0], method="inverted_cdf")
        np.testing.assert_array_equal(grid.points, np.unique(oracle))

    def test_degenerate_dedup_falls_back_to_uniform(self):
        d = dataset([7.0] * 10, np.ones(10))
        grid = make_grid(d, 4)
        np.testing.assert_allclose(grid.points, [1.75, 3.5, 5.25, 7.0])

    def test_two_point_set(self):
        grid = make_grid(dataset([1.0, 10.0], [1, 1]), 2)
        np.testing.assert_array_equal(grid.points, [1.0, 10.0])

    def test_m_too_small_rejected(self):
        with pytest.raises(ValueError):
            make_grid(dataset([1.0, 2.0], [1, 1]), 1)

    def test_default_size_rule(self):
        assert default_grid_size(100) == 10
        assert default_grid_size(10000) == 50
        assert default_grid_size(2) == 2


class TestEncodeLabel:
    def grid(self):
        return TimeGrid(np.array([1.0, 2.0, 3.0, 4.0]))

    def test_death_between_grid_points(self):
        lab = encode_label(2.5, True, self.grid())
        np.testing.assert_array_equal(lab.sequence, [0, 0, 1, 1])
        np.testing.assert_array_equal(lab.consistent, [2])

    def test_boundary_sequences(self):
        lab = encode_label(0.5, True, self.grid())
        np.testing.assert_array_equal(lab.sequence, [1, 1, 1, 1])
        lab = encode_label(9.0, True, self.grid())
        np.testing.assert_array_equal(lab.sequence, [0, 0, 0, 0])

    def test_death_exactly_on_a_grid_point(self):
        lab = encode_label(2.0, True, self.grid())
        np.testing.assert_array_equal(lab.sequence, [0, 1, 1, 1])

    def test_censored_after_grid_end_has_single_sequence(self):
        lab = encode_label(9.0, False, self.grid())
        np.testing.assert_array_equal(lab.consistent, [4])

    def test_censored_at_zero_allows_everything(self):
        lab = encode_label(0.0, False, self.grid())
        np.testing.assert_array_equal(lab.consistent, [0, 1, 2, 3, 4])

    def test_censored_mid_grid(self):
        lab = encode_label(2.5, False, self.grid())
        # intervals starting at 3, 4, and beyond remain possible
        np.testing.assert_array_equal(lab.consistent, [3, 4])


class TestObjective:
    def test_zero_theta_uniform_sequences(self):
        grid = TimeGrid(np.array([1.0, 2.0, 3.0]))
        d = dataset([1.5], [1], x=np.array([[0.4, -0.2]]))
        theta = np.zeros((3, 3))
        objective, _ = mtlr_loglik_grad(theta, d, grid, 1.0)
        assert objective == pytest.approx(-np.log(4))

    def test_doubling_c_doubles_the_penalty(self, rng):
        grid = TimeGrid(np.array([1.0, 2.0, 3.0]))
        d = dataset([0.5, 1.5, 2.5], [1, 0, 1], x=rng.standard_normal((3, 2)))
        theta = rng.standard_normal((3, 3))
        obj1, _ = mtlr_loglik_grad(theta, d, grid, 1.0)
        obj2, _ = mtlr_loglik_grad(theta, d, grid, 2.0)
        assert obj1 - obj2 == pytest.approx(0.5 * np.sum(theta**2), rel=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        grid = TimeGrid(np.array([1.0, 3.0, 5.0, 7.0]))
        times = rng.uniform(0.2, 9, size=12)
        events = rng.random(12) < 0.6
        d = dataset(times, events, x=rng.standard_normal((12, 3)))
        theta = rng.standard_normal((4, 4)) * 0.4
        _, grad = mtlr_loglik_grad(theta, d, grid, 0.7)
        h = 1e-6
        for idx in np.ndindex(theta.shape):
            bump = np.zeros_like(theta)
            bump[idx] = h
            up, _ = mtlr_loglik_grad(theta + bump, d, grid, 0.7)
            dn, _ = mtlr_loglik_grad(theta - bump, d, grid, 0.7)
            assert grad[idx] == pytest.approx((up - dn) / (2 * h), rel=1e-5, abs=1e-7)


def two_group(seed, n=120):
    rng = np.random.default_rng(seed)
    x = np.repeat([[1.0], [0.0]], n // 2, axis=0)
    death = np.where(x[:, 0] == 1, rng.exponential(3, n), rng.exponential(12, n))
    return SurvivalDataset.from_arrays(x, death, np.ones(n, dtype=bool))


class TestFitMtlr:
    def test_orders_the_two_groups(self):
        wins = 0
        for seed in range(20):
            d = two_group(seed)
            grid = make_grid(d, 8)
            model = fit_mtlr(d, grid, (1.0,))
            t0 = extend_linear(model.predict_curve(d.instances[0])).zero_time + 1.0
            med_a = median_survival(
                extend_linear(model.predict_curve(d.instances[0]), t0), t0
            )
            med_b = median_survival(
                extend_linear(model.predict_curve(d.instances[-1]), t0), t0
            )
            wins += med_a < med_b
        assert wins >= 19

    def test_noise_prefers_the_largest_c(self):
        prefers = 0
        seeds = range(7)
        for seed in seeds:
            rng = np.random.default_rng(100 + seed)
            d = dataset(rng.exponential(5, 60), np.ones(60),
                        x=rng.standard_normal((60, 3)))
            grid = make_grid(d, 5)
            model = fit_mtlr(d, grid, (0.01, 0.1, 1.0))
            prefers += model.reg_c == 1.0
        assert prefers > len(seeds) / 2

    def test_deterministic_bitwise(self):
        d = two_group(0, n=40)
        grid = make_grid(d, 5)
        a = fit_mtlr(d, grid, (0.5, 2.0))
        b = fit_mtlr(d, grid, (0.5, 2.0))
        np.testing.assert_array_equal(a.theta, b.theta)
        assert a.reg_c == b.reg_c

    def test_empty_c_grid_rejected(self):
        d = two_group(0, n=20)
        with pytest.raises(ValueError):
            fit_mtlr(d, make_grid(d, 4), ())


class TestPredictMtlr:
    def test_zero_theta_staircase(self):
        from isdkit.mtlr import MtlrModel

        grid = TimeGrid(np.array([1.0, 2.0, 3.0]))
        model = MtlrModel(np.zeros((3, 2)), grid, 1.0)
        curve = predict_curve_mtlr(model, np.array([5.0]))
        np.testing.assert_allclose(curve.times, [0, 1, 2, 3])
        np.testing.assert_allclose(curve.probs, [1.0, 3 / 4, 2 / 4, 1 / 4])

    def test_interval_masses_nonnegative(self, rng):
        d = two_group(3, n=60)
        grid = make_grid(d, 6)
        model = fit_mtlr(d, grid, (1.0,))
        for _ in range(10):
            curve = predict_curve_mtlr(model, rng.standard_normal(1))
            assert curve.probs[0] == 1.0
            assert np.all(np.diff(curve.probs) <= 1e-12)

    def test_curves_can_cross(self):
        # unlike the proportional-hazards families, MTLR curves may cross
        rng = np.random.default_rng(11)
        n = 200
        x = rng.standard_normal((n, 1))
        shape = np.where(x[:, 0] > 0, 4.0, 0.7)
        death = 8.0 * rng.weibull(shape)
        d = SurvivalDataset.from_arrays(x, death, np.ones(n, dtype=bool))
        grid = make_grid(d, 10)
        model = fit_mtlr(d, grid, (0.1,))
        ca = predict_curve_mtlr(model, np.array([1.5])).probs
        cb = predict_curve_mtlr(model, np.array([-1.5])).probs
        diff = ca - cb
        assert (diff > 1e-6).any() and (diff < -1e-6).any()
