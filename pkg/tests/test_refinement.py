import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schedule_refinement.errors import DegenerateNormsError, DomainError
from schedule_refinement.refinement import (
    ClampedNormsWarning,
    GradientNormLog,
    RefinementConfig,
    filter_width,
    median_filter,
    optimal_weights,
    per_coordinate_weights,
    refine,
    weighted_objective,
)
from schedule_refinement.schedule_core import fit_poly, weights_to_schedule


def sliding_median_oracle(x, width):
    """Pads by hand (left repeats x[0], right mirrors without the edge) then takes sorted middles."""
    half = width // 2
    n = len(x)
    right = []
    i, step = n - 1, -1
    while len(right) < half:
        if n == 1:
            right.append(x[0])
            continue
        i += step
        if i < 0 or i >= n:
            step = -step
            i += 2 * step
        right.append(x[i])
    padded = [x[0]] * half + list(x) + right
    return [sorted(padded[t:t + width])[half] for t in range(n)]


class TestMedianFilter:
    def test_hand_example(self):
        assert median_filter([1, 2, 100, 2, 1], 3).tolist() == [1, 2, 2, 2, 2]

    @pytest.mark.parametrize("width", [1, 3, 5, 9])
    def test_constant(self, width):
        assert median_filter([4.5] * 4, width).tolist() == [4.5] * 4

    def test_width_one_identity(self):
        x = [3.0, -1.0, 7.0, 2.5]
        assert median_filter(x, 1).tolist() == x

    def test_empty(self):
        with pytest.raises(DomainError):
            median_filter([], 3)

    @pytest.mark.parametrize("width", [0, 2, 4])
    def test_even_width(self, width):
        with pytest.raises(DomainError):
            median_filter([1.0, 2.0, 3.0], width)

    def test_width_limit(self):
        median_filter([1.0, 2.0], 5)
        with pytest.raises(DomainError):
            median_filter([1.0, 2.0], 7)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.integers(0, 30))
    def test_matches_oracle_and_selects_elements(self, x, half):
        width = min(2 * half + 1, 2 * len(x) + 1)
        out = median_filter(x, width)
        assert out.tolist() == sliding_median_oracle(x, width)
        assert set(out.tolist()) <= set(x)


class TestFilterWidth:
    @pytest.mark.parametrize("tau,T,width", [(0.1, 100, 11), (0.05, 8, 1), (0.1, 8, 1), (0.25, 8, 3), (1.0, 6, 7)])
    def test_values(self, tau, T, width):
        assert filter_width(tau, T) == width


class TestRefine:
    def test_constant_norms_linear_decay(self):
        T = 40
        for kind in ("l2", "l1", "adam_weighted"):
            weighting = {"l2": "inv_sq_l2", "l1": "inv_l1", "adam_weighted": "inv_adam_weighted"}[kind]
            out = refine(GradientNormLog.from_norms([2.5] * T, kind), RefinementConfig(tau=0.1, weighting=weighting))
            expected = [(T - t) / (T - 1) for t in range(1, T + 1)]
            np.testing.assert_allclose(out.values, expected, rtol=1e-15, atol=1e-15)

    def test_step_in_norms(self):
        norms = [1, 1, 1, 1, 2, 2, 2, 2]
        out = refine(norms, RefinementConfig(tau=0.05))
        w = [Fraction(1)] * 4 + [Fraction(1, 4)] * 4
        eta = [w[t] * sum(w[t + 1:]) for t in range(8)]
        peak = max(eta)
        np.testing.assert_allclose(out.values, [float(e / peak) for e in eta], rtol=1e-15)
        assert out.values[0] == 1.0 and out.values[-1] == 0.0

    @pytest.mark.parametrize("first,last", [(1.3, 1.0), (1.0, 1.3)])
    def test_monotone_norms_set_decay_power(self, first, last):
        # decreasing norms call for p < 1, increasing norms for p > 1
        out = refine(np.linspace(first, last, 1000), RefinementConfig(tau=0.1))
        fit = fit_poly(out)
        assert fit.warmup_fraction == 0.0
        assert (fit.power < 0.9) if first > last else (fit.power > 1.1)

    @given(st.lists(st.floats(0.01, 100), min_size=2, max_size=50), st.floats(1e-3, 1e3))
    def test_invariant_to_norm_scale(self, norms, c):
        a = refine(norms, RefinementConfig(tau=0.2)).values
        b = refine(np.array(norms) * c, RefinementConfig(tau=0.2)).values
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_zero_norms_error(self):
        norms = [1.0] * 10 + [0.0] * 10
        with pytest.raises(DegenerateNormsError, match="linear decay"):
            refine(norms, RefinementConfig(tau=0.1))

    def test_zero_norms_clamp(self):
        norms = [1.0] * 10 + [0.0] * 10
        with pytest.warns(ClampedNormsWarning):
            out = refine(norms, RefinementConfig(tau=0.1, zero_policy="clamp", epsilon_fraction=0.01))
        assert out.notes and "clamped" in out.notes[0]
        assert out.normalized

    def test_isolated_zero_smoothed_away(self):
        norms = [1.0] * 5 + [0.0] + [1.0] * 14
        refine(norms, RefinementConfig(tau=0.1))  # width 3 median removes the zero

    def test_log_validation(self):
        with pytest.raises(DomainError):
            GradientNormLog(np.array([1, 1]), np.array([1.0, 2.0]))
        with pytest.raises(DomainError):
            GradientNormLog(np.array([1, 2]), np.array([1.0, -2.0]))

    def test_config_validation(self):
        with pytest.raises(DomainError):
            RefinementConfig(tau=0.0)
        with pytest.raises(DomainError):
            RefinementConfig(zero_policy="clamp", epsilon_fraction=0.0)


def grid_minimum(g, D, w_star, n=200):
    """Objective minimum over an n x n grid spanning [0.2, 3] x w* for two weights."""
    best = math.inf
    for a in np.linspace(0.2, 3.0, n) * w_star[0]:
        for b in np.linspace(0.2, 3.0, n) * w_star[1]:
            best = min(best, weighted_objective([a, b], g, D))
    return best


class TestOptimalWeights:
    def test_equal_norms(self):
        T, G, D = 9, 2.0, 3.0
        res = optimal_weights([G] * T, D)
        np.testing.assert_allclose(res.weights.weights, D / (G * math.sqrt(T)), rtol=1e-15)
        linear = weights_to_schedule(np.ones(T)).values
        np.testing.assert_allclose(weights_to_schedule(res.weights).values, linear * D / (G * math.sqrt(T)), rtol=1e-14)

    def test_two_norms(self):
        res = optimal_weights([1.0, 2.0], 1.0)
        lam = 1 / math.sqrt(1.25)
        assert res.lam == pytest.approx(lam, rel=1e-15)
        np.testing.assert_allclose(res.weights.weights, [lam, lam / 4], rtol=1e-15)
        assert res.bound_value == pytest.approx(lam, rel=1e-14)
        assert grid_minimum([1.0, 2.0], 1.0, res.weights.weights) >= res.bound_value * (1 - 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.05, 20), min_size=1, max_size=30), st.floats(0.1, 10))
    def test_lambda_identity_and_stationarity(self, g, D):
        res = optimal_weights(g, D)
        g = np.array(g)
        assert res.bound_value == pytest.approx(D / math.sqrt(np.sum(g**-2.0)), rel=1e-12)
        w = res.weights.weights
        for k in range(len(w)):
            h = 1e-6 * w[k]
            up, down = w.copy(), w.copy()
            up[k] += h
            down[k] -= h
            deriv = (math.log(weighted_objective(up, g, D)) - math.log(weighted_objective(down, g, D))) / (2 * h)
            assert abs(deriv) < 1e-5

    def test_zero_norm(self):
        with pytest.raises(DomainError):
            optimal_weights([1.0, 0.0], 1.0)


class TestPerCoordinate:
    def test_scalar_case_identical(self):
        pc = per_coordinate_weights(np.ones((2, 1)), np.array([[1.0], [2.0]]), 1.0)
        assert np.array_equal(pc.weights, optimal_weights([1.0, 2.0], 1.0).weights.weights)

    @given(st.lists(st.floats(0.05, 20), min_size=1, max_size=20), st.floats(0.1, 10))
    def test_scalar_case_identical_property(self, g, R):
        g = np.array(g)
        pc = per_coordinate_weights(np.ones((g.size, 1)), g[:, None], R)
        assert np.array_equal(pc.weights, optimal_weights(g, R).weights.weights)

    def test_two_dims(self):
        pc = per_coordinate_weights(np.ones((2, 2)), np.array([[1.0, 0.0], [0.0, 2.0]]), 3.0)
        np.testing.assert_allclose(pc.weights, 3.0 / math.sqrt(1.25) * np.array([1.0, 0.25]), rtol=1e-15)

    def test_adam_weighted_refine_matches(self):
        rng = np.random.default_rng(3)
        g = rng.standard_normal((3, 2))
        v = rng.uniform(0.5, 2.0, size=(3, 2))
        lr = 1 / np.sqrt(v)
        G = np.sum(g**2 / np.sqrt(v), axis=1)
        via_refine = refine(GradientNormLog.from_norms(G, "adam_weighted"),
                            RefinementConfig(tau=0.1, weighting="inv_adam_weighted"))
        via_weights = weights_to_schedule(per_coordinate_weights(lr, g, 1.0), normalize=True)
        np.testing.assert_allclose(via_refine.values, via_weights.values, rtol=1e-13)

    def test_zero_gradient_step(self):
        with pytest.raises(DomainError, match="step 2"):
            per_coordinate_weights(np.ones((2, 2)), np.array([[1.0, 0.0], [0.0, 0.0]]), 1.0)
