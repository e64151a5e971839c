import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from selfnorm import (
    ConfigurationError,
    ModelError,
    NoiseSpec,
    SRELaw,
    UnsupportedError,
    ar1_model,
    iid_model,
    normalizing_an,
    sample_coupled_paths,
    sample_noise,
    sample_path,
    sre_model,
    stationary_mean,
)
from selfnorm.processes import (
    ar1_recursion,
    model_from_dict,
    model_to_dict,
    pareto_quantile,
    path_to_csv,
    sre_recursion,
    stable_tail_constant,
)


class TestNoise:
    def test_pareto_quantile_identity(self):
        # U = 0.25, alpha = 0.5 -> 0.25^(-2) = 16
        assert pareto_quantile(0.25, 0.5) == pytest.approx(16.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [2.0, 1.0, 0.0, -0.3, 2.5])
    def test_alpha_domain(self, alpha):
        with pytest.raises(ConfigurationError):
            NoiseSpec("pareto", alpha)

    def test_tail_balance_domain(self):
        with pytest.raises(ConfigurationError):
            NoiseSpec("pareto", 0.5, (0.7, 0.7))
        with pytest.raises(ConfigurationError):
            NoiseSpec("pareto", 0.5, (-0.1, 1.1))

    def test_pareto_tail_frozen(self, within_se):
        # P(|Z| > 10) = 10^{-0.5} = 0.31622776601683794, exact sampler CDF
        z = sample_noise(NoiseSpec("pareto", 0.5), 10**6, seed=11)
        p_hat = np.mean(np.abs(z) > 10.0)
        se = math.sqrt(0.31622776601683794 * (1 - 0.31622776601683794) / 10**6)
        within_se(p_hat, 0.31622776601683794, se, k=3)

    def test_pareto_tail_grid(self, within_se):
        spec = NoiseSpec("pareto", 0.8)
        z = np.abs(sample_noise(spec, 10**6, seed=3))
        for zq in (2.0, 5.0, 10.0):
            p = zq**-0.8
            within_se(np.mean(z > zq), p, math.sqrt(p * (1 - p) / 10**6), k=4)

    def test_sign_balance(self, within_se):
        z = sample_noise(NoiseSpec("pareto", 0.5, (0.7, 0.3)), 10**5, seed=4)
        within_se(np.mean(z > 0), 0.7, math.sqrt(0.21 / 10**5), k=4)

    def test_stable_cf_matches(self, within_se):
        # standard symmetric alpha-stable: E cos(uZ) = exp(-|u|^alpha)
        alpha = 1.3
        z = sample_noise(NoiseSpec("symmetric_stable", alpha), 10**6, seed=5)
        for u in (0.5, 1.0):
            emp = np.cos(u * z)
            within_se(emp.mean(), math.exp(-(u**alpha)), emp.std(ddof=1) / 1000.0, k=4)

    def test_stable_tail(self):
        # P(|Z| > z) ~ C_alpha z^{-alpha}; the constant is asymptotic, so test
        # far out and allow a few percent of pre-asymptotic deficit
        alpha = 0.7
        z = np.abs(sample_noise(NoiseSpec("symmetric_stable", alpha), 2 * 10**6, seed=6))
        c = stable_tail_constant(alpha)
        for zq in (100.0, 300.0):
            ratio = np.mean(z > zq) / (c * zq**-alpha)
            assert 0.93 < ratio < 1.05

    def test_deterministic(self):
        spec = NoiseSpec("pareto", 0.5)
        a = sample_noise(spec, 1000, seed=7)
        b = sample_noise(spec, 1000, seed=7)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_noise(spec, 1000, seed=8))


class TestPaths:
    def test_iid_path_equals_noise(self, pareto_pos_half):
        p = sample_path(pareto_pos_half, 50, seed=9)
        z = sample_noise(pareto_pos_half.noise, 50, seed=9)
        assert np.array_equal(p.values, z)

    def test_ar1_recursion_hook(self):
        # z = (1, 1, 1), phi = 0.5, x0 = 0 -> (1, 1.5, 1.75)
        assert np.allclose(ar1_recursion(0.5, np.ones(3)), [1.0, 1.5, 1.75])

    def test_ar1_recursion_with_state(self):
        out = ar1_recursion(0.5, np.array([1.0, 1.0]), x0=2.0)
        assert np.allclose(out, [2.0, 2.0])

    def test_sre_recursion_hook(self):
        a = np.array([0.5, 0.5])
        b = np.array([1.0, 1.0])
        assert np.allclose(sre_recursion(a, b, x0=0.0), [1.0, 1.5])

    def test_sre_zero_a_equals_b(self):
        law = SRELaw(alpha=0.9, kind="constant", a_const=0.0)
        model = sre_model(law, burn_in=0, kesten_check=False)
        p = sample_path(model, 40, seed=10)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=10, spawn_key=(0,))))
        _, b = law.sample_ab(rng, 40)
        assert np.array_equal(p.values, b)

    def test_path_determinism_and_immutability(self, ar1_pos_half):
        p1 = sample_path(ar1_pos_half, 200, seed=12)
        p2 = sample_path(ar1_pos_half, 200, seed=12)
        assert np.array_equal(p1.values, p2.values)
        with pytest.raises(ValueError):
            p1.values[0] = 1.0

    def test_n_domain(self, pareto_pos_half):
        with pytest.raises(ConfigurationError):
            sample_path(pareto_pos_half, 0, seed=1)


class TestCoupled:
    def test_iid_unsupported(self, pareto_pos_half):
        with pytest.raises(UnsupportedError):
            sample_coupled_paths(pareto_pos_half, 10, seed=1)

    def test_ar1_identity(self, ar1_pos_half):
        # X_t - X*_t = phi^t (X_0 - X*_0), exactly per path
        x, xs = sample_coupled_paths(ar1_pos_half, 50, seed=13)
        t = np.arange(1, 51)
        expected = 0.5**t * (x.initial - xs.initial)
        assert np.allclose(x.values - xs.values, expected, rtol=1e-10, atol=1e-12)

    def test_sre_constant_identity(self):
        law = SRELaw(alpha=0.9, kind="constant", a_const=0.25)
        model = sre_model(law, burn_in=50, kesten_check=False)
        x, xs = sample_coupled_paths(model, 30, seed=14)
        t = np.arange(1, 31)
        expected = 0.25**t * (x.initial - xs.initial)
        assert np.allclose(x.values - xs.values, expected, rtol=1e-9, atol=1e-14)

    def test_marginal_distribution_equality(self, ar1_pos_half):
        # KS between the two coupled marginals below the 1% two-sample critical value
        from selfnorm.processes import _coupled_rows

        x, xs, _, _ = _coupled_rows(ar1_pos_half, 1, 21, np.arange(10**4))
        stat = ks_2samp(x[:, 0], xs[:, 0]).statistic
        crit = 1.628 * math.sqrt(2.0 / 10**4)
        assert stat < crit


class TestScaleConstants:
    def test_an_iid_pareto(self, pareto_pos_half):
        assert normalizing_an(pareto_pos_half, 10**4) == pytest.approx(1e8, rel=1e-12)

    def test_an_ar1_formula_and_tail(self, within_se):
        # (n / (1 - 0.5^1.5))^(2/3), cross-checked against the empirical tail
        model = ar1_model(0.5, NoiseSpec("pareto", 1.5))
        n = 10**4
        a_n = normalizing_an(model, n)
        assert a_n == pytest.approx((n / (1 - 0.5**1.5)) ** (2.0 / 3.0), rel=1e-12)
        from selfnorm.processes import _simulate_rows

        sample = np.abs(_simulate_rows(model, 5000, 77, np.arange(400))).ravel()
        count = np.mean(sample > a_n) * n
        within_se(count, 1.0, math.sqrt(n / sample.size), k=4)

    def test_an_sre_self_consistent(self, sre_lognormal):
        n = 10**4
        a_n = normalizing_an(sre_lognormal, n, presample=2 * 10**6, seed=15)
        from selfnorm.processes import _simulate_rows

        held_out = np.abs(_simulate_rows(sre_lognormal, 2500, 99, np.arange(400))).ravel()
        ratio = n * np.mean(held_out > a_n)
        assert 0.8 <= ratio <= 1.2

    def test_mean_symmetric_zero(self, pareto_sym_half):
        model = iid_model(NoiseSpec("pareto", 1.5, (0.5, 0.5)))
        assert stationary_mean(model) == 0.0

    def test_mean_iid_positive(self):
        model = iid_model(NoiseSpec("pareto", 1.5, (1.0, 0.0)))
        assert stationary_mean(model) == pytest.approx(3.0, rel=1e-12)

    def test_mean_ar1(self):
        model = ar1_model(0.5, NoiseSpec("pareto", 1.5, (1.0, 0.0)))
        assert stationary_mean(model) == pytest.approx(6.0, rel=1e-12)

    def test_mean_needs_alpha_above_one(self, pareto_pos_half):
        with pytest.raises(UnsupportedError):
            stationary_mean(pareto_pos_half)

    def test_mean_sre(self, sre_lognormal):
        law = sre_lognormal.sre_law
        expected = law.b_mean / (1.0 - law.mean_a())
        assert stationary_mean(sre_lognormal) == pytest.approx(expected)

    def test_mean_sre_custom_sampler_mc(self):
        # non-analytic (A, B) laws fall back to a Monte-Carlo mean
        def sampler(rng, size):
            a = 0.3 * np.ones(size)
            b = 2.0 + rng.standard_normal(size)
            return a, b

        law = SRELaw(alpha=1.5, kind="custom", sampler=sampler)
        model = sre_model(law, burn_in=100, kesten_check=False)
        assert stationary_mean(model) == pytest.approx(2.0 / 0.7, rel=0.01)


class TestSREChecks:
    def test_kesten_holds_lognormal(self):
        sre_model(SRELaw(alpha=0.8, sigma=0.7))  # no error

    def test_kesten_fails_for_wrong_scale(self):
        law = SRELaw(alpha=0.8, sigma=0.7, kind="custom",
                     sampler=lambda rng, size: (1.5 * np.exp(0.7 * rng.standard_normal(size) - 0.8 * 0.49 / 2), rng.standard_normal(size)))
        with pytest.raises(ModelError):
            sre_model(law)

    def test_non_contractive_rejected(self):
        law = SRELaw(alpha=0.8, kind="constant", a_const=1.5)
        with pytest.raises(ModelError):
            sre_model(law, kesten_check=False)

    def test_constant_zero_allowed_with_check_off(self):
        sre_model(SRELaw(alpha=0.8, kind="constant", a_const=0.0), kesten_check=False)


class TestInterfaces:
    def test_model_round_trip(self, ar1_pos_half, sre_lognormal):
        for model in (ar1_pos_half, sre_lognormal):
            again = model_from_dict(model_to_dict(model))
            assert model_to_dict(again) == model_to_dict(model)

    def test_path_csv(self, tmp_path, pareto_pos_half):
        p = sample_path(pareto_pos_half, 5, seed=1)
        target = tmp_path / "path.csv"
        path_to_csv(p, target)
        lines = target.read_text().strip().split("\n")
        assert lines[0] == "value"
        assert len(lines) == 6
        assert np.allclose([float(v) for v in lines[1:]], p.values)
