from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspace_scaling import theory
from subspace_scaling.linalg import SingularMatrixError
from subspace_scaling.schedules import ConstantStep, DecayingStep
from subspace_scaling.theory import (
    Informative,
    OdeParams,
    OjaGrouse,
    PetrelsFull,
    PetrelsReduced,
    PhasePoint,
    PState,
    Uninformative,
    VectorState,
    integrate,
)
from subspace_scaling.theory.closed_form import p_coefficients


def scalar_params(lam=5.0, sigma=1.0, alpha=0.5, tau=0.5, mu=5.0):
    return OdeParams(lambdas=np.array([lam]), sigma=sigma, alpha=alpha, tau=ConstantStep(tau), mu=mu)


def fig3_params(tau=0.5, mu=5.0, alpha=0.5):
    lam = np.array([5.0, 4.0, 3.0, 2.0]) * math.sqrt(0.5 / alpha)
    return OdeParams(lambdas=lam, sigma=1.0, alpha=alpha, tau=ConstantStep(tau), mu=mu)


def random_spd(rng, d, lo=0.5, hi=5.0):
    V = np.linalg.qr(rng.standard_normal((d, d)))[0]
    M = (V * rng.uniform(lo, hi, d)) @ V.T
    return 0.5 * (M + M.T)


def p_ode_rk4(P0, p, times, h=1e-3):
    states = integrate(theory.p_ode_system(p), PState(P0), float(max(times)), h=h, times=times)
    return {s.t: s.P for s in states}


class TestRhsF:
    @pytest.mark.parametrize("d", [1, 3])
    def test_zero_Q(self, d):
        p = OdeParams(lambdas=np.arange(d, 0, -1.0), sigma=1.3, alpha=0.4)
        G = random_spd(np.random.default_rng(d), d)
        np.testing.assert_array_equal(theory.rhs_F(np.zeros((d, d)), G, p), 0.0)

    def test_zero_G(self):
        p = fig3_params()
        Q = np.random.default_rng(0).standard_normal((4, 4))
        np.testing.assert_array_equal(theory.rhs_F(Q, np.zeros((4, 4)), p), 0.0)

    def test_scalar_oracle(self):
        # [aL Q - (s^4/2) Q G - Q (1 + s^2 G/2) Q aL Q] G with aL = 12.5, Q = G = 0.5, s = 1
        expected = (12.5 * 0.5 - 0.5 * 0.5 * 0.5 - 0.5 * 1.25 * 0.5 * 12.5 * 0.5) * 0.5
        assert expected == 2.0859375
        assert theory.rhs_F(0.5, 0.5, scalar_params())[0, 0] == pytest.approx(2.0859375, abs=1e-15)

    def test_sigma_dependence(self):
        # s = 2 separates s^4/2 from s^2/2 and (1 + s^2 G/2) from (s^2 + G/2)
        p = scalar_params(sigma=2.0)
        q, g, L = 0.5, 0.5, 12.5
        expected = (L * q - 8.0 * q * g - q * (1 + 2.0 * g) * q * L * q) * g
        assert theory.rhs_F(q, g, p)[0, 0] == pytest.approx(expected, abs=1e-14)


class TestRhsH:
    def test_zero_G(self):
        p = fig3_params()
        Q = np.random.default_rng(1).standard_normal((4, 4))
        np.testing.assert_array_equal(theory.rhs_H(Q, np.zeros((4, 4)), p), 0.0)

    @pytest.mark.parametrize("sigma,mu", [(1.0, 6.0), (0.7, 2.0), (1.5, 10.0)])
    def test_zero_Q_root(self, sigma, mu):
        p = scalar_params(sigma=sigma, mu=mu)
        G = (math.sqrt(1 + 4 * mu) - 1) / (2 * sigma**2)
        assert theory.rhs_H(0.0, G, p)[0, 0] == pytest.approx(0.0, abs=1e-12)
        g = 0.8
        assert theory.rhs_H(0.0, g, p)[0, 0] == pytest.approx(g * (mu - g * (sigma**2 * g + 1) * sigma**2), abs=1e-14)

    def test_scalar_oracle(self):
        assert theory.rhs_H(0.5, 0.5, scalar_params())[0, 0] == pytest.approx(0.953125, abs=1e-15)

    def test_needs_mu(self):
        with pytest.raises(ValueError):
            theory.rhs_H(0.5, 0.5, scalar_params(mu=None))


class TestRhsPetrelsFull:
    def test_scalar_oracle(self):
        J1, J2, J3 = theory.rhs_petrels_full(1.0, 0.5, 1.0, scalar_params())
        assert J1[0, 0] == pytest.approx(-0.875, abs=1e-14)
        assert J2[0, 0] == pytest.approx(4.6875, abs=1e-14)
        assert J3[0, 0] == pytest.approx(4.125, abs=1e-14)

    def test_zero_K(self):
        rng = np.random.default_rng(2)
        _, J2, _ = theory.rhs_petrels_full(random_spd(rng, 4), np.zeros((4, 4)), random_spd(rng, 4), fig3_params())
        np.testing.assert_array_equal(J2, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 4))
    def test_J3_symmetric_psd(self, seed, d):
        rng = np.random.default_rng(seed)
        p = OdeParams(lambdas=np.sort(rng.uniform(0.5, 5, d))[::-1], sigma=rng.uniform(0.2, 2), alpha=0.5, mu=3.0)
        _, _, J3 = theory.rhs_petrels_full(random_spd(rng, d), rng.standard_normal((d, d)), random_spd(rng, d), p)
        assert np.max(np.abs(J3 - J3.T)) <= 1e-10 * max(1.0, np.max(np.abs(J3)))
        assert np.linalg.eigvalsh(0.5 * (J3 + J3.T))[0] >= -1e-10 * max(1.0, np.max(np.abs(J3)))

    @pytest.mark.parametrize("which", ["A", "W"])
    def test_singular_input(self, which):
        mats = {"A": np.eye(2), "K": np.eye(2), "W": np.eye(2)}
        mats[which] = np.diag([1.0, 0.0])
        with pytest.raises(SingularMatrixError):
            theory.rhs_petrels_full(mats["A"], mats["K"], mats["W"], OdeParams(lambdas=[2.0, 1.0], sigma=1, alpha=0.5, mu=1))


class TestIntegrate:
    def test_zero_rhs(self):
        s0 = VectorState(np.array([1.0, -2.0, 3.0]))
        out = integrate(lambda t, s: np.zeros(3), s0, 2.0, h=0.1, sample_dt=0.5)
        assert [s.t for s in out] == [0.0, 0.5, 1.0, 1.5, 2.0]
        for s in out:
            np.testing.assert_array_equal(s.y, s0.y)

    def test_exponential(self):
        out = integrate(lambda t, s: -s.y, VectorState([1.0]), 1.0, h=1e-3)
        assert out[-1].t == 1.0
        assert out[-1].y[0] == pytest.approx(math.exp(-1.0), abs=1e-8)

    def test_final_step_shortened(self):
        out = integrate(lambda t, s: np.ones(1), VectorState([0.0]), 1.05, h=0.1)
        assert out[-1].t == 1.05 and out[-1].y[0] == pytest.approx(1.05, abs=1e-13)

    def test_explicit_times(self):
        out = integrate(lambda t, s: -s.y, VectorState([1.0]), 2.0, h=1e-3, times=[0.3, 1.7])
        assert [s.t for s in out] == [0.3, 1.7, 2.0]
        assert out[1].y[0] == pytest.approx(math.exp(-1.7), abs=1e-10)

    def test_oja_single_direction_vs_closed_form(self):
        p = scalar_params()
        out = integrate(theory.oja_grouse_system(p), OjaGrouse(0.5), 10.0, h=1e-3)
        P = theory.oja_grouse_closed_form(4.0, p, 10.0)
        assert out[-1].Q[0, 0] == pytest.approx(1 / math.sqrt(P[0, 0]), abs=1e-6)

    def test_rk4_order(self):
        p = scalar_params(tau=0.3)
        exact = 1 / math.sqrt(theory.oja_grouse_closed_form(4.0, p, 2.0)[0, 0])
        errs = [abs(integrate(theory.oja_grouse_system(p), OjaGrouse(0.5), 2.0, h=h)[-1].Q[0, 0] - exact)
                for h in (0.04, 0.02)]
        assert errs[0] / errs[1] >= 12

    def test_breakdown_reported(self):
        p = OdeParams(lambdas=[1.0], sigma=0.5, alpha=0.5, mu=1.0)
        with pytest.raises(theory.IntegrationBreakdown) as info:
            integrate(theory.petrels_full_system(p), PetrelsFull(A=[[-1e-3]], K=[[0.5]], W=[[1.0]]), 1.0)
        assert info.value.t > 0 and "A" in info.value.reason

    def test_large_discount_is_not_a_breakdown(self):
        # A decays and W grows exponentially while G = 1/(A W) stays bounded
        p = scalar_params(mu=50.0)
        end = integrate(theory.petrels_full_system(p), PetrelsFull(A=[[1.0]], K=[[0.2]], W=[[1.0]]), 2.0)[-1]
        assert end.A[0, 0] < 1e-20 and end.W[0, 0] > 1e20
        assert 1.0 / (end.A[0, 0] * end.W[0, 0]) == pytest.approx(2.397, abs=1e-3)

    def test_generic_breakdown_on_overflow(self):
        with pytest.raises(theory.IntegrationBreakdown), np.errstate(over="ignore", invalid="ignore"):
            integrate(lambda t, s: s.y**2, VectorState([1.0]), 2.0, h=1e-2)

    @pytest.mark.parametrize("bad", [{"h": 0.0}, {"t_end": -1.0}])
    def test_invalid_arguments(self, bad):
        kw = {"h": 1e-3, "t_end": 1.0, **bad}
        with pytest.raises(ValueError):
            integrate(lambda t, s: s.y, VectorState([1.0]), kw["t_end"], h=kw["h"])

    def test_zero_start_stays_zero(self):
        p = fig3_params()
        out = integrate(theory.oja_grouse_system(p), OjaGrouse(np.zeros((4, 4))), 5.0, sample_dt=1.0)
        for s in out:
            np.testing.assert_array_equal(s.Q, 0.0)
        p1 = scalar_params()
        out = integrate(theory.phase_system(p1), PhasePoint(0.0, 3.0), 5.0, sample_dt=1.0)
        assert all(s.q2 == 0.0 for s in out)


class TestClosedForm:
    def test_time_zero_exact(self):
        P0 = random_spd(np.random.default_rng(0), 4)
        np.testing.assert_array_equal(theory.oja_grouse_closed_form(P0, fig3_params(), 0.0), P0)

    def test_zero_step(self):
        P0 = random_spd(np.random.default_rng(1), 4)
        np.testing.assert_allclose(theory.oja_grouse_closed_form(P0, fig3_params(tau=0.0), 7.0), P0, atol=1e-15)

    def test_long_time_limit(self):
        P = theory.oja_grouse_closed_form(4.0, scalar_params(), 200.0)
        assert 1 / P[0, 0] == pytest.approx(0.784, abs=1e-12)
        P10 = theory.oja_grouse_closed_form(4.0, scalar_params(), 10.0)
        assert P10[0, 0] == pytest.approx(p_ode_rk4(np.array([[4.0]]), scalar_params(), [10.0])[10.0][0, 0], abs=1e-8)

    def test_degenerate_exponent(self):
        # 2 aL = tau s^4 -> b = 0 and z(t) = a t
        p = OdeParams(lambdas=[1.0], sigma=1.0, alpha=0.5, tau=ConstantStep(1.0))
        a, b = p_coefficients(p, 1.0)
        assert b[0] == 0.0
        P = theory.oja_grouse_closed_form(2.0, p, 3.0)
        assert P[0, 0] == pytest.approx(2.0 + a[0] * 3.0, abs=1e-14)
        ref = p_ode_rk4(np.array([[2.0]]), p, [3.0])[3.0]
        assert P[0, 0] == pytest.approx(ref[0, 0], abs=1e-9)

    def test_near_degenerate_continuous(self):
        base = theory.z_diagonal(OdeParams(lambdas=[1.0], sigma=1.0, alpha=0.5, tau=1.0), 1.0, 2.0)
        near = theory.z_diagonal(OdeParams(lambdas=[1.0 + 1e-12], sigma=1.0, alpha=0.5, tau=1.0), 1.0, 2.0)
        assert near[0] == pytest.approx(base[0], rel=1e-9)

    def test_printed_exponent_sign_fails_oracle(self):
        # z with exp(+tau (2 aL - tau s^4) t) grows without bound and misses the P equation
        p = scalar_params()
        tau, L, s2, t = 0.5, 12.5, 1.0, 2.0
        c = tau * (2 * L - tau * s2 * s2)
        coef = (2 + tau * s2) * L / (2 * L - tau * s2 * s2)
        z_printed = coef * (1 - math.exp(c * t))
        z_used = coef * (1 - math.exp(-c * t))
        e = math.exp(-p_coefficients(p, tau)[1][0] * t)
        ref = p_ode_rk4(np.array([[4.0]]), p, [t])[t][0, 0]
        assert e * 4.0 * e + z_used == pytest.approx(ref, abs=1e-8)
        assert abs(e * 4.0 * e + z_printed - ref) > 1e3
        assert theory.z_diagonal(p, tau, t)[0] == pytest.approx(z_used, rel=1e-14)

    @pytest.mark.parametrize("P0", [np.diag([1.0, -1.0, 1.0, 1.0]), np.ones((4, 4)), np.eye(3)])
    def test_rejects_bad_P0(self, P0):
        with pytest.raises(ValueError):
            theory.oja_grouse_closed_form(P0, fig3_params(), 1.0)

    def test_needs_constant_step(self):
        p = OdeParams(lambdas=[5.0], sigma=1.0, alpha=0.5, tau=DecayingStep(0.5, 1.0))
        with pytest.raises(ValueError):
            theory.oja_grouse_closed_form(4.0, p, 1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_spd_vs_rk4(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 5))
        lam = np.sort(rng.uniform(1.0, 5.0, d))[::-1]
        p = OdeParams(lambdas=lam, sigma=rng.uniform(0.5, 1.5), alpha=rng.uniform(0.2, 0.9),
                      tau=ConstantStep(rng.uniform(0.05, 0.9)))
        P0 = random_spd(rng, d)
        times = np.linspace(0.0, 10.0, 21)
        ref = p_ode_rk4(P0, p, times)
        err = max(np.max(np.abs(theory.oja_grouse_closed_form(P0, p, t) - ref[t])) for t in times)
        assert err <= 1e-6


class TestClosedFormGeneral:
    def test_constant_step_matches(self):
        P0 = random_spd(np.random.default_rng(3), 4)
        for t in (0.5, 3.0):
            np.testing.assert_allclose(theory.oja_grouse_closed_form_general(P0, fig3_params(), t),
                                       theory.oja_grouse_closed_form(P0, fig3_params(), t), atol=1e-8)

    def test_zero_step(self):
        P0 = random_spd(np.random.default_rng(4), 2)
        p = OdeParams(lambdas=[2.0, 1.0], sigma=1.0, alpha=0.5, tau=DecayingStep(0.0, 1.0))
        np.testing.assert_allclose(theory.oja_grouse_closed_form_general(P0, p, 4.0), P0, atol=1e-15)

    def test_decaying_step_vs_rk4(self):
        p = OdeParams(lambdas=[5.0], sigma=1.0, alpha=0.5, tau=DecayingStep(0.5, 1.0))
        ref = p_ode_rk4(np.array([[4.0]]), p, [2.0])[2.0]
        got = theory.oja_grouse_closed_form_general(4.0, p, 2.0)
        assert got[0, 0] == pytest.approx(ref[0, 0], abs=1e-5)


class TestSteadyState:
    def test_zero_step_limit(self):
        assert theory.steady_state_cos2(5.0, scalar_params(tau=0.0)) == 1.0

    def test_value(self):
        assert theory.steady_state_cos2(5.0, scalar_params()) == pytest.approx(0.784, abs=1e-15)

    def test_below_threshold(self):
        assert theory.steady_state_cos2(math.sqrt(0.4), scalar_params(lam=math.sqrt(0.4))) == 0.0

    @pytest.mark.parametrize("tau", [0.3, 1.5])
    def test_integrated_ode_converges(self, tau):
        p = fig3_params(tau=tau)
        Q = integrate(theory.oja_grouse_system(p), OjaGrouse(0.5 * np.eye(4)), 50.0)[-1].Q
        cos2 = np.sort(np.linalg.svd(Q, compute_uv=False) ** 2)[::-1]
        expected = [theory.steady_state_cos2(lam, p) for lam in p.lambdas]
        np.testing.assert_allclose(cos2, expected, atol=1e-3)


class TestCriticalTau:
    def test_fig3(self):
        assert theory.oja_grouse_critical_tau(fig3_params()) == pytest.approx(4.0)

    def test_large_noise(self):
        p = OdeParams(lambdas=[5.0], sigma=math.sqrt(10.0), alpha=0.5)
        assert theory.oja_grouse_critical_tau(p) == pytest.approx(0.25)

    def test_alpha_lambda_product(self):
        a = theory.oja_grouse_critical_tau(OdeParams(lambdas=[3.0, 2.0], sigma=1.2, alpha=0.3))
        b = theory.oja_grouse_critical_tau(OdeParams(lambdas=np.array([3.0, 2.0]) / math.sqrt(2), sigma=1.2, alpha=0.6))
        assert a == pytest.approx(b, rel=1e-14)


class TestCriticalMu:
    @pytest.mark.parametrize("lam,sigma,alpha,expected", [
        (math.sqrt(2.0), 1.0, 0.5, 6.0),
        (0.0, 1.0, 0.5, 0.0),
        (5.0, 1.0, 0.5, 650.0),
    ])
    def test_values(self, lam, sigma, alpha, expected):
        p = OdeParams(lambdas=[lam], sigma=sigma, alpha=alpha, mu=1.0)
        assert theory.petrels_critical_mu(p) == pytest.approx(expected, abs=1e-12)

    def test_only_one_dimension(self):
        with pytest.raises(theory.UnsupportedDimensionError):
            theory.petrels_critical_mu(fig3_params())

    def test_snr_helper(self):
        np.testing.assert_allclose(theory.critical_mu_from_snr(np.array([1.0, 12.5])), [6.0, 650.0])


class TestFixedPoint:
    def test_near_threshold_is_informative_and_small(self):
        crit = theory.petrels_critical_mu(scalar_params())
        fp = theory.petrels_fixed_point(scalar_params(mu=crit - 1e-9))
        assert isinstance(fp, Informative)
        assert 0.0 < fp.q2 < 1e-3

    def test_case_two_root(self):
        fp = theory.petrels_fixed_point(scalar_params(lam=1.0, mu=6.0))
        assert isinstance(fp, Uninformative)
        assert fp.G == pytest.approx(2.0, abs=1e-14) and fp.q2 == 0.0

    def test_case_two_general_sigma(self):
        fp = theory.petrels_fixed_point(scalar_params(lam=1.0, sigma=2.0, mu=20.0))
        s2 = 4.0
        assert s2 * fp.G * (s2 * fp.G + 1) == pytest.approx(20.0, rel=1e-13)

    def test_matches_long_time_integration(self):
        p = scalar_params(mu=5.0)
        fp = theory.petrels_fixed_point(p)
        end = integrate(theory.phase_system(p), PhasePoint(0.5, 10.0), 200.0)[-1]
        assert end.q2 == pytest.approx(fp.q2, abs=1e-4) and end.G == pytest.approx(fp.G, abs=1e-4)

    def test_nullclines_cross_at_fixed_point(self):
        p = scalar_params(lam=2.0, mu=1.0)
        fp = theory.petrels_fixed_point(p)
        assert theory.nullcline_f(fp.G, p) == pytest.approx(theory.nullcline_h(fp.G, p), abs=1e-12)
        assert fp.residual <= 1e-12

    def test_boundary_matches_critical_mu(self):
        for snr in (0.5, 1.0, 3.0):
            lam = math.sqrt(2 * snr)
            crit = theory.critical_mu_from_snr(snr)
            assert isinstance(theory.petrels_fixed_point(scalar_params(lam=lam, mu=0.99 * crit)), Informative)
            assert isinstance(theory.petrels_fixed_point(scalar_params(lam=lam, mu=1.01 * crit)), Uninformative)

    def test_only_one_dimension(self):
        with pytest.raises(theory.UnsupportedDimensionError):
            theory.petrels_fixed_point(fig3_params())

    def test_no_noise_no_uninformative_point(self):
        with pytest.raises(theory.SolverError):
            theory.petrels_fixed_point(scalar_params(lam=0.0, sigma=0.0, mu=1.0))


class TestPredictedCosines:
    def test_identity(self):
        np.testing.assert_array_equal(theory.predicted_cosines(OjaGrouse(np.eye(3))), 1.0)

    def test_zero(self):
        np.testing.assert_array_equal(theory.predicted_cosines(OjaGrouse(np.zeros((3, 3)))), 0.0)

    def test_full_state(self):
        s = PetrelsFull(A=np.eye(2), K=0.5 * np.eye(2), W=np.eye(2))
        np.testing.assert_allclose(theory.predicted_cosines(s), 0.5, atol=1e-15)

    def test_sorted(self):
        c = theory.predicted_cosines(PetrelsReduced(Q=np.diag([0.2, 0.9]), G=np.eye(2)))
        np.testing.assert_allclose(c, [0.9, 0.2])

    def test_reduced_rejects_off_diagonal(self):
        with pytest.raises(ValueError):
            PetrelsReduced(Q=[[0.5, 0.1], [0.0, 0.5]], G=np.eye(2))


class TestAlphaLambdaEquivalence:
    @pytest.mark.parametrize("alpha_hat", [0.25, 0.8])
    def test_rhs_and_formulas(self, alpha_hat):
        a, b = fig3_params(), fig3_params(alpha=alpha_hat)
        rng = np.random.default_rng(5)
        Q, G = rng.standard_normal((4, 4)), random_spd(rng, 4)
        A, W = random_spd(rng, 4), random_spd(rng, 4)
        np.testing.assert_allclose(theory.rhs_F(Q, G, a), theory.rhs_F(Q, G, b), atol=1e-12, rtol=0)
        np.testing.assert_allclose(theory.rhs_H(Q, G, a), theory.rhs_H(Q, G, b), atol=1e-12, rtol=0)
        for x, y in zip(theory.rhs_petrels_full(A, Q, W, a), theory.rhs_petrels_full(A, Q, W, b)):
            np.testing.assert_allclose(x, y, atol=1e-12, rtol=0)
        P0 = random_spd(rng, 4)
        np.testing.assert_allclose(theory.oja_grouse_closed_form(P0, a, 3.0), theory.oja_grouse_closed_form(P0, b, 3.0), atol=1e-12)
        assert theory.oja_grouse_critical_tau(a) == pytest.approx(theory.oja_grouse_critical_tau(b), abs=1e-12)
        for la, lb in zip(a.lambdas, b.lambdas):
            assert theory.steady_state_cos2(la, a) == pytest.approx(theory.steady_state_cos2(lb, b), abs=1e-12)
        sa, sb = scalar_params(mu=5.0), scalar_params(lam=5.0 * math.sqrt(0.5 / alpha_hat), alpha=alpha_hat, mu=5.0)
        assert theory.petrels_critical_mu(sa) == pytest.approx(theory.petrels_critical_mu(sb), abs=1e-9)
        assert theory.petrels_fixed_point(sa).q2 == pytest.approx(theory.petrels_fixed_point(sb).q2, abs=1e-12)


class TestPetrelsRepresentations:
    @pytest.mark.parametrize("q0,delta,mu", [(0.5, 10.0, 5.0), (0.2, 1.0, 50.0)])
    def test_full_and_reduced_agree(self, q0, delta, mu):
        p = scalar_params(mu=mu)
        times = np.linspace(0.0, 10.0, 41)
        # the delta = 10 start has a steep transient; h = 5e-4 keeps RK4 error well below 1e-6
        full = theory.predict_petrels(p, q0, times, delta, method="full", h=5e-4)
        reduced = theory.predict_petrels(p, q0, times, delta, method="reduced", h=5e-4)
        np.testing.assert_allclose(full, reduced, atol=1e-6)

    def test_full_state_invariants(self):
        p = fig3_params()
        s0 = theory.petrels_initial_state(p, 0.5, 10.0, "full")
        for s in integrate(theory.petrels_full_system(p), s0, 5.0, sample_dt=0.25):
            assert np.linalg.eigvalsh(s.A)[0] > 0
            assert np.linalg.eigvalsh(s.W - s0.W)[0] >= -1e-10
            assert np.all(theory.predicted_cosines(s) <= 1 + 1e-8)

    def test_initial_G(self):
        s = theory.petrels_initial_state(fig3_params(), 0.5, 10.0, "reduced")
        np.testing.assert_array_equal(s.G, 10.0 * np.eye(4))


class TestPredict:
    def test_methods_agree(self):
        times = np.arange(0.0, 3.01, 0.25)
        p = fig3_params()
        closed = theory.predict("oja", p, 0.5, times)
        np.testing.assert_allclose(closed, theory.predict("grouse", p, 0.5, times, method="rk4"), atol=1e-6)
        np.testing.assert_allclose(closed, theory.predict("oja", p, 0.5, times, method="general"), atol=1e-8)

    def test_zero_step_constant(self):
        out = theory.predict("oja", fig3_params(tau=0.0), 0.5, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(out, 0.5, atol=1e-15)

    def test_unknown(self):
        with pytest.raises(ValueError):
            theory.predict("sgd", fig3_params(), 0.5, [1.0])
