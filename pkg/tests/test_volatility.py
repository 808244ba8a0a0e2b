import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import oracles
from loggarch.core import (
    AsLogGarchParams,
    AugmentedEgarchParams,
    AugmentedLogGarchParams,
    EgarchParams,
    FilterOutput,
    InitPolicy,
    transport_init_under_scaling,
    transport_params_under_scaling,
)
from loggarch.exceptions import FilterDivergenceError, InvalidModelError
from loggarch.volatility import (
    egarch_grad_alpha,
    filter_aslog,
    filter_augmented_egarch,
    filter_augmented_log,
    filter_egarch,
    grad_aslog,
    news_impact_curve,
    nu_hat,
)


def theta11(omega=0.1, omega_minus=0.05, alpha_plus=0.2, alpha_minus=0.3, beta=0.5):
    return AsLogGarchParams(
        omega=omega, omega_minus=[omega_minus], alpha_plus=[alpha_plus],
        alpha_minus=[alpha_minus], beta=[beta],
    )


def unit_init(initial_log_sigma2=0.0, negative=False):
    return InitPolicy(
        presample_eps2=1.0,
        presample_sign_negative=negative,
        initial_log_sigma2=initial_log_sigma2,
    )


def sample_eps(n=300, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) * 0.8


class TestFilterAslog:
    def test_all_zero_coefficients(self):
        theta = theta11(omega=0.0, omega_minus=0.0, alpha_plus=0.0, alpha_minus=0.0, beta=0.0)
        eps = sample_eps(50)
        out = filter_aslog(theta, eps)
        assert_allclose(out.log_sigma2, np.zeros(50))
        assert_allclose(out.residuals, eps)
        assert out.r0 == 1

    def test_hand_worked_step(self):
        # choose the seed so the first fitted value lands exactly at zero,
        # then the second one is omega + omega_minus + alpha_minus*ln(4)
        theta = theta11()
        init = unit_init(initial_log_sigma2=-0.2)
        out = filter_aslog(theta, np.array([-2.0, 1.0]), init)
        assert out.log_sigma2[0] == pytest.approx(0.0, abs=1e-15)
        expected = 0.1 + 0.05 + 0.3 * math.log(4.0)
        assert out.log_sigma2[1] == pytest.approx(expected, abs=1e-12)
        assert out.log_sigma2[1] == pytest.approx(0.5658883083, abs=1e-9)

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(3)
        eps = rng.standard_normal(50)
        init = unit_init(initial_log_sigma2=0.3)
        floor = init.zero_return_floor * float(np.std(eps))
        for p, q in [(1, 1), (2, 1), (1, 2), (0, 2), (2, 0)]:
            theta = AsLogGarchParams(
                omega=0.05,
                omega_minus=rng.uniform(-0.1, 0.1, q),
                alpha_plus=rng.uniform(-0.1, 0.1, q),
                alpha_minus=rng.uniform(-0.1, 0.1, q),
                beta=rng.uniform(-0.3, 0.3, p),
            )
            out = filter_aslog(theta, eps, init)
            ref = oracles.aslog_path(
                list(eps), theta.omega, list(theta.omega_minus), list(theta.alpha_plus),
                list(theta.alpha_minus), list(theta.beta),
                math.log(init.presample_eps2), 0.0, init.initial_log_sigma2, floor,
            )
            assert_allclose(out.log_sigma2, ref, atol=1e-10)

    def test_negative_presample_sign(self):
        theta = theta11()
        eps = np.array([1.0, 2.0])
        pos = filter_aslog(theta, eps, unit_init(negative=False))
        negv = filter_aslog(theta, eps, unit_init(negative=True))
        # presample log square is 0, so only the omega_minus term moves
        assert negv.log_sigma2[0] - pos.log_sigma2[0] == pytest.approx(0.05, abs=1e-12)

    def test_scaling_identity(self):
        theta = theta11(omega=0.01, omega_minus=0.02, alpha_plus=0.04, alpha_minus=0.05, beta=0.75)
        eps = sample_eps(400, seed=9)
        init = InitPolicy.from_returns(eps)
        base = filter_aslog(theta, eps, init)
        for c in (10.0, 0.037, 2.5):
            out = filter_aslog(
                transport_params_under_scaling(theta, c),
                c * eps,
                transport_init_under_scaling(init, c),
            )
            assert np.max(np.abs(out.log_sigma2 - base.log_sigma2 - math.log(c * c))) < 1e-10

    def test_residual_reconstruction(self):
        theta = theta11()
        eps = sample_eps(200, seed=4)
        out = filter_aslog(theta, eps)
        assert np.max(np.abs(out.residuals * np.exp(0.5 * out.log_sigma2) - eps)) < 1e-12

    def test_zero_returns_are_floored_and_counted(self):
        theta = theta11()
        eps = np.array([1.0, 0.0, -1.0, 2.0, -0.5])
        out = filter_aslog(theta, eps)
        assert out.floored_count == 1
        # raw return stays in the residual
        assert out.residuals[1] == 0.0
        assert np.all(np.isfinite(out.log_sigma2))

    def test_divergence_names_step(self):
        theta = theta11(beta=2.0)
        eps = sample_eps(1500, seed=5)
        with pytest.raises(FilterDivergenceError) as exc:
            filter_aslog(theta, eps, unit_init(initial_log_sigma2=300.0))
        assert exc.value.t > 0

    def test_huge_negative_log_variance_is_divergence(self):
        theta = theta11(omega=-3000.0, omega_minus=0.0, alpha_plus=0.0, alpha_minus=0.0, beta=0.0)
        with pytest.raises(FilterDivergenceError):
            filter_aslog(theta, sample_eps(10))

    def test_short_series_rejected(self):
        theta = AsLogGarchParams(
            omega=0.0, omega_minus=[0.0] * 2, alpha_plus=[0.0] * 2,
            alpha_minus=[0.0] * 2, beta=[],
        )
        with pytest.raises(ValueError):
            filter_aslog(theta, np.array([1.0, -1.0]))

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError):
            filter_aslog(theta11(), np.zeros(50))

    def test_r0_is_max_lag(self):
        eps = sample_eps(30)
        theta = AsLogGarchParams(
            omega=0.0, omega_minus=[0.0], alpha_plus=[0.0], alpha_minus=[0.0],
            beta=[0.1, 0.1, 0.0],
        )
        assert filter_aslog(theta, eps).r0 == 3


class TestFilterEgarch:
    def test_constant_when_no_feedback(self):
        zeta = EgarchParams(omega=0.7, gamma=0.0, delta=0.0, beta=0.0)
        out = filter_egarch(zeta, sample_eps(40))
        assert_allclose(out.log_sigma2, np.full(40, 0.7))
        assert out.r0 == 1

    def test_hand_worked_step(self):
        zeta = EgarchParams(omega=0.0, gamma=0.0, delta=1.0, beta=0.0)
        init = InitPolicy(presample_eps2=4.0, presample_sign_negative=False, initial_log_sigma2=0.0)
        out = filter_egarch(zeta, np.array([0.3, -0.1]), init)
        assert out.log_sigma2[0] == pytest.approx(2.0, abs=1e-14)

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(11)
        eps = rng.standard_normal(50)
        zeta = EgarchParams(omega=-0.15, gamma=-0.08, delta=0.12, beta=0.95)
        init = InitPolicy.from_returns(eps)
        out = filter_egarch(zeta, eps, init)
        ref = oracles.egarch_path(
            list(eps), zeta.omega, zeta.gamma, zeta.delta, zeta.beta,
            math.sqrt(init.presample_eps2), init.initial_log_sigma2,
        )
        assert_allclose(out.log_sigma2, ref, atol=1e-10)

    def test_residual_overflow_is_divergence(self):
        zeta = EgarchParams(omega=-3000.0, gamma=0.0, delta=0.0, beta=0.0)
        with pytest.raises(FilterDivergenceError):
            filter_egarch(zeta, sample_eps(10))


class TestAugmentedLog:
    def test_bitwise_degenerate_at_zero_gamma(self):
        theta = theta11()
        eps = sample_eps(250, seed=21)
        init = InitPolicy.from_returns(eps)
        base = filter_aslog(theta, eps, init)
        for ell in (1, 3):
            aug = AugmentedLogGarchParams(
                theta=theta, gamma_plus=np.zeros(ell), gamma_minus=np.zeros(ell)
            )
            out = filter_augmented_log(aug, eps, init)
            assert out.log_sigma2.tobytes() == base.log_sigma2.tobytes()
            assert out.r0 == max(1, ell)

    def test_hand_worked_step(self):
        theta = theta11(omega=0.0, omega_minus=0.0, alpha_plus=0.0, alpha_minus=0.0, beta=0.0)
        aug = AugmentedLogGarchParams(theta=theta, gamma_plus=[1.0], gamma_minus=[0.0])
        init = InitPolicy(presample_eps2=9.0, presample_sign_negative=False, initial_log_sigma2=0.0)
        out = filter_augmented_log(aug, np.array([0.5, -0.5]), init)
        assert out.log_sigma2[0] == pytest.approx(3.0, abs=1e-14)
        # negative presample feeds the other arm
        aug2 = AugmentedLogGarchParams(theta=theta, gamma_plus=[1.0], gamma_minus=[2.0])
        init2 = InitPolicy(presample_eps2=9.0, presample_sign_negative=True, initial_log_sigma2=0.0)
        out2 = filter_augmented_log(aug2, np.array([0.5, -0.5]), init2)
        assert out2.log_sigma2[0] == pytest.approx(6.0, abs=1e-14)

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(31)
        eps = rng.standard_normal(50)
        theta = theta11(beta=0.4)
        aug = AugmentedLogGarchParams(theta=theta, gamma_plus=[0.15, -0.05], gamma_minus=[0.1, 0.2])
        init = unit_init(initial_log_sigma2=0.1)
        floor = init.zero_return_floor * float(np.std(eps))
        out = filter_augmented_log(aug, eps, init)
        ref = oracles.augmented_log_path(
            list(eps), theta.omega, list(theta.omega_minus), list(theta.alpha_plus),
            list(theta.alpha_minus), list(theta.beta), [0.15, -0.05], [0.1, 0.2],
            0.0, 0.0, 1.0, 0.1, floor,
        )
        assert_allclose(out.log_sigma2, ref, atol=1e-10)

    def test_small_gamma_continuity(self):
        theta = theta11(beta=0.6)
        eps = sample_eps(500, seed=41)
        init = InitPolicy.from_returns(eps)
        base = filter_aslog(theta, eps, init)
        aug = AugmentedLogGarchParams(theta=theta, gamma_plus=[1e-8], gamma_minus=[1e-8])
        out = filter_augmented_log(aug, eps, init)
        assert np.max(np.abs(out.log_sigma2 - base.log_sigma2)) < 1e-6

    def test_feedback_divergence(self):
        theta = theta11(omega=-50.0, omega_minus=0.0, alpha_plus=0.0, alpha_minus=0.0, beta=0.0)
        aug = AugmentedLogGarchParams(theta=theta, gamma_plus=[-100.0], gamma_minus=[-100.0])
        with pytest.raises(FilterDivergenceError):
            filter_augmented_log(aug, sample_eps(20, seed=2))


class TestAugmentedEgarch:
    def test_bitwise_degenerate_at_zero_alpha(self):
        zeta = EgarchParams(omega=-0.15, gamma=-0.08, delta=0.12, beta=0.95)
        eps = sample_eps(250, seed=51)
        init = InitPolicy.from_returns(eps)
        base = filter_egarch(zeta, eps, init)
        aug = AugmentedEgarchParams(
            zeta=zeta, omega_minus=[0.0], alpha_plus=[0.0], alpha_minus=[0.0]
        )
        out = filter_augmented_egarch(aug, eps, init)
        assert out.log_sigma2.tobytes() == base.log_sigma2.tobytes()

    def test_hand_worked_step(self):
        zeta = EgarchParams(omega=0.0, gamma=0.0, delta=0.0, beta=0.0)
        aug = AugmentedEgarchParams(zeta=zeta, omega_minus=[0.0], alpha_plus=[0.5], alpha_minus=[0.0])
        init = InitPolicy(
            presample_eps2=math.e**2, presample_sign_negative=False, initial_log_sigma2=0.0
        )
        out = filter_augmented_egarch(aug, np.array([1.0, -1.0]), init)
        assert out.log_sigma2[0] == pytest.approx(1.0, abs=1e-14)

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(61)
        eps = rng.standard_normal(50)
        zeta = EgarchParams(omega=-0.1, gamma=0.05, delta=0.2, beta=0.8)
        aug = AugmentedEgarchParams(
            zeta=zeta, omega_minus=[0.03, -0.02], alpha_plus=[0.05, 0.01], alpha_minus=[0.04, -0.03]
        )
        init = unit_init(initial_log_sigma2=-0.2)
        floor = init.zero_return_floor * float(np.std(eps))
        out = filter_augmented_egarch(aug, eps, init)
        ref = oracles.augmented_egarch_path(
            list(eps), zeta.omega, zeta.gamma, zeta.delta, zeta.beta,
            [0.03, -0.02], [0.05, 0.01], [0.04, -0.03],
            1.0, 0.0, 0.0, -0.2, floor,
        )
        assert_allclose(out.log_sigma2, ref, atol=1e-10)
        assert out.r0 == 2

    def test_not_scale_invariant(self):
        # the extra block breaks scale stability: shifted paths differ
        zeta = EgarchParams(omega=-0.1, gamma=0.0, delta=0.1, beta=0.9)
        aug = AugmentedEgarchParams(zeta=zeta, omega_minus=[0.1], alpha_plus=[0.2], alpha_minus=[0.1])
        eps = sample_eps(100, seed=71)
        init = InitPolicy.from_returns(eps)
        a = filter_augmented_egarch(aug, eps, init)
        b = filter_augmented_egarch(aug, 10.0 * eps, transport_init_under_scaling(init, 10.0))
        shift = b.log_sigma2 - a.log_sigma2
        assert np.max(np.abs(shift - shift[0])) > 1e-3


class TestGradAslog:
    def test_zero_beta_gradient_is_regressor(self):
        theta = theta11(beta=0.0)
        eps = sample_eps(60, seed=81)
        init = unit_init()
        g = grad_aslog(theta, eps, init)
        out = filter_aslog(theta, eps, init)
        # at t = 3 (0-based index 2): lag-1 return is eps[1]
        e1 = eps[1]
        nv = 1.0 if e1 < 0 else 0.0
        lv = math.log(e1 * e1)
        assert g[2, 0] == pytest.approx(1.0)
        assert g[2, 1] == pytest.approx(nv)
        assert g[2, 2] == pytest.approx((1 - nv) * lv)
        assert g[2, 3] == pytest.approx(nv * lv)
        assert g[2, 4] == pytest.approx(out.log_sigma2[1])
        # presample row
        assert g[0, 1] == pytest.approx(0.0)
        assert g[0, 2] == pytest.approx(0.0)  # presample log square is 0
        assert g[0, 4] == pytest.approx(0.0)  # initial log variance is 0

    def test_omega_derivative_geometric_limit(self):
        theta = theta11(beta=0.5)
        g = grad_aslog(theta, sample_eps(200, seed=91), unit_init())
        assert g[-1, 0] == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (1, 2), (0, 1), (2, 2)])
    def test_matches_finite_differences(self, p, q):
        rng = np.random.default_rng(100 + 10 * p + q)
        eps = rng.standard_normal(200)
        init = InitPolicy.from_returns(eps)
        theta = AsLogGarchParams(
            omega=0.01 + rng.uniform(-0.05, 0.05),
            omega_minus=rng.uniform(-0.05, 0.05, q),
            alpha_plus=0.04 + rng.uniform(-0.02, 0.02, q),
            alpha_minus=0.05 + rng.uniform(-0.02, 0.02, q),
            beta=rng.uniform(-0.3, 0.3, p) if p != 1 else np.array([0.9]),
        )
        order = theta.order

        def path(vec):
            th = AsLogGarchParams.from_vector(np.asarray(vec), order)
            return list(filter_aslog(th, eps, init).log_sigma2)

        fd = np.asarray(oracles.path_jacobian(path, list(theta.to_vector())))
        g = grad_aslog(theta, eps, init)
        rel = np.max(np.abs(g - fd) / (1.0 + np.abs(fd)))
        assert rel < 1e-6


class TestEgarchGradAlpha:
    def base(self, q=1, zeta=None, n=200, seed=7):
        zeta = zeta or EgarchParams(omega=-0.15, gamma=-0.08, delta=0.12, beta=0.95)
        rng = np.random.default_rng(seed)
        eps = rng.standard_normal(n)
        init = InitPolicy.from_returns(eps)
        aug = AugmentedEgarchParams(
            zeta=zeta, omega_minus=np.zeros(q), alpha_plus=np.zeros(q), alpha_minus=np.zeros(q)
        )
        return aug, eps, init

    def test_regressor_when_no_dynamics(self):
        aug, eps, init = self.base(zeta=EgarchParams(omega=0.0, gamma=0.0, delta=0.0, beta=0.0))
        state = egarch_grad_alpha(aug, eps, init)
        e1 = eps[1]
        nv = 1.0 if e1 < 0 else 0.0
        lv = math.log(e1 * e1)
        assert state.d_t[2, 0] == pytest.approx(nv)
        assert state.d_t[2, 1] == pytest.approx((1 - nv) * lv)
        assert state.d_t[2, 2] == pytest.approx(nv * lv)

    def test_u_sequence_definition(self):
        aug, eps, init = self.base()
        state = egarch_grad_alpha(aug, eps, init)
        out = filter_egarch(aug.zeta, eps, init)
        z = out.residuals
        expected = aug.zeta.beta - 0.5 * (aug.zeta.gamma * z + aug.zeta.delta * np.abs(z))
        assert np.max(np.abs(state.u_t - expected)) < 1e-10

    @pytest.mark.parametrize("q", [1, 2])
    def test_matches_finite_differences(self, q):
        aug, eps, init = self.base(q=q)
        zeta = aug.zeta

        def path(alpha_vec):
            v = AugmentedEgarchParams(
                zeta=zeta,
                omega_minus=alpha_vec[:q],
                alpha_plus=alpha_vec[q : 2 * q],
                alpha_minus=alpha_vec[2 * q :],
            )
            return list(filter_augmented_egarch(v, eps, init).log_sigma2)

        fd = np.asarray(oracles.path_jacobian(path, [0.0] * (3 * q)))
        state = egarch_grad_alpha(aug, eps, init)
        rel = np.max(np.abs(state.d_t - fd) / (1.0 + np.abs(fd)))
        assert rel < 1e-6

    def test_nonzero_alpha_rejected(self):
        aug, eps, init = self.base()
        bad = AugmentedEgarchParams(
            zeta=aug.zeta, omega_minus=[0.1], alpha_plus=[0.0], alpha_minus=[0.0]
        )
        with pytest.raises(ValueError):
            egarch_grad_alpha(bad, eps, init)


class TestNuHat:
    @staticmethod
    def from_residuals(res):
        return FilterOutput(log_sigma2=np.zeros(len(res)), residuals=res, r0=1)

    def test_zero_beta_returns_stacked_parts(self):
        res = np.array([1.0, -2.0, 0.5, -0.1])
        nu = nu_hat(self.from_residuals(res), np.array([]), 2)
        assert nu.shape == (4, 4)
        # row for t=3 (index 2): lag1 = -2 -> (0, 2); lag2 = 1 -> (1, 0)
        assert_allclose(nu[2], [0.0, 2.0, 1.0, 0.0])

    def test_hand_worked_recursion(self):
        res = np.array([1.0, -2.0, 0.7])
        nu = nu_hat(self.from_residuals(res), np.array([0.5]), 1)
        assert_allclose(nu[0], [0.0, 0.0])
        assert_allclose(nu[1], [1.0, 0.0])
        assert_allclose(nu[2], [0.5, 2.0])

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(17)
        res = rng.standard_normal(60)
        nu = nu_hat(self.from_residuals(res), np.array([0.3, 0.2]), 3)
        ref = oracles.nu_hat_rows(list(res), [0.3, 0.2], 3)
        assert_allclose(nu, ref, atol=1e-12)

    def test_geometric_decay_after_shocks_stop(self):
        res = np.zeros(30)
        res[:5] = [1.0, -1.0, 2.0, -2.0, 0.5]
        beta = 0.6
        nu = nu_hat(self.from_residuals(res), np.array([beta]), 1)
        base = np.linalg.norm(nu[5])
        for t in range(6, 30):
            assert np.linalg.norm(nu[t]) <= base * beta ** (t - 5) + 1e-12

    def test_unstable_beta_rejected(self):
        res = np.ones(10)
        with pytest.raises(InvalidModelError):
            nu_hat(self.from_residuals(res), np.array([1.01]), 1)
        with pytest.raises(InvalidModelError):
            nu_hat(self.from_residuals(res), np.array([0.7, 0.5]), 1)


class TestNewsImpactCurve:
    def test_hand_worked_power(self):
        theta = AsLogGarchParams(
            omega=0.0, omega_minus=[0.0], alpha_plus=[0.8], alpha_minus=[0.8], beta=[]
        )
        sigma = news_impact_curve(theta, [2.0])
        assert sigma[0] ** 2 == pytest.approx(4.0**0.8, rel=1e-12)
        assert sigma[0] ** 2 == pytest.approx(3.03143, abs=1e-5)

    def test_negative_side_ratio(self):
        theta = AsLogGarchParams(
            omega=0.3, omega_minus=[0.25], alpha_plus=[0.4], alpha_minus=[0.4], beta=[]
        )
        s = news_impact_curve(theta, [-1.7, 1.7])
        assert (s[0] ** 2) / (s[1] ** 2) == pytest.approx(math.exp(0.25), rel=1e-12)

    def test_flat_exponents_give_two_levels(self):
        theta = AsLogGarchParams(
            omega=0.4, omega_minus=[0.6], alpha_plus=[0.0], alpha_minus=[0.0], beta=[]
        )
        s = news_impact_curve(theta, [-3.0, -0.2, 0.1, 5.0])
        assert s[0] == pytest.approx(s[1], rel=1e-14)
        assert s[2] == pytest.approx(s[3], rel=1e-14)
        assert s[2] ** 2 == pytest.approx(math.exp(0.4), rel=1e-12)
        assert s[0] ** 2 == pytest.approx(math.exp(1.0), rel=1e-12)

    def test_zero_grid_rejected(self):
        theta = AsLogGarchParams(
            omega=0.0, omega_minus=[0.0], alpha_plus=[0.1], alpha_minus=[0.1], beta=[]
        )
        with pytest.raises(ValueError):
            news_impact_curve(theta, [-1.0, 0.0, 1.0])

    def test_wrong_order_rejected(self):
        with pytest.raises(ValueError):
            news_impact_curve(theta11(), [1.0])
