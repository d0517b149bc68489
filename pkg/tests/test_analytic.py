import math

import numpy as np
import pytest
from scipy import integrate, special

from rislab.analytic import (
    CharFunSample,
    CorrelatedGainModel,
    FrQuadratureSpec,
    GilPelaezPlan,
    char_fun,
    char_fun_batch,
    char_fun_density,
    corr_coeff,
    corr_coeff_limit,
    outage_ar_clt,
    outage_fr_bound,
    outage_fr_siso,
    outage_gil_pelaez,
    outage_pr_siso,
)
from rislab.channel import ChannelDims, SchemeConfig
from rislab.errors import AccuracyError, DomainError, UnsupportedConfigurationError
from rislab.mc import RngSpec, SnrGrid, estimate_outage, sample_slot_mi

LN2 = math.log(2.0)


def exact_siso_outage(q: int, rho: float, rate_r: float = 1.0) -> float:
    """Independent oracle: CDF quadrature of the 1xQx1 product-channel
    gain density 2 lam^((Q-1)/2) K_{Q-1}(2 sqrt(lam)) / Gamma(Q)."""
    thr = (2.0**rate_r - 1.0) / rho
    lg = math.lgamma(q)

    def f(u):  # lam = u^2 substitution
        return math.exp(q * math.log(u) - 2.0 * u - lg + math.log(4.0)) * special.kve(q - 1, 2.0 * u)

    val, _ = integrate.quad(f, 0.0, math.sqrt(thr), epsabs=1e-14, epsrel=1e-13, limit=500)
    return val


class TestCharFun:
    def test_normalisation_at_zero(self):
        s = char_fun(ChannelDims(2, 3, 2), 10.0, 0.0)
        assert s.value == 1.0

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_meijer_path_matches_density_path(self, t):
        d = ChannelDims(1, 4, 1)
        a = char_fun(d, 10.0, t).value
        b = char_fun_density(d, 10.0, t).value
        assert abs(a - b) < 1e-6

    def test_matches_explicit_meijer_composition(self):
        from rislab.specfun import loggamma_cont, meijer_g_3113

        q, rho, t = 4, 10.0, 1.0
        b1 = -1j * t / LN2
        g = meijer_g_3113(b1, float(q), 1.0, 1.0 / rho, None)
        phi = g.value * np.exp(-loggamma_cont(np.array([b1]))[0]) / math.gamma(q)
        assert char_fun(ChannelDims(1, q, 1), rho, t).value == pytest.approx(phi, abs=1e-9)

    def test_mimo_against_empirical_char_fun(self):
        # Monte Carlo oracle at (2,3,2), rho = 10, t = 0.5, 1e7 draws
        dims = ChannelDims(2, 3, 2)
        t, rho, trials = 0.5, 10.0, 10**7
        mi = sample_slot_mi(dims, SchemeConfig.pr(3), rho, trials, RngSpec(31415))
        z = np.exp(1j * t * mi)
        emp = z.mean()
        se = np.sqrt((np.var(z.real) + np.var(z.imag)) / trials)
        th = char_fun(dims, rho, t).value
        assert abs(th - emp) < 3.0 * se

    def test_modulus_bounded_by_one(self):
        ts = np.linspace(0.01, 40.0, 200)
        for dims, rho in [(ChannelDims(2, 3, 2), 10.0), (ChannelDims(1, 60, 1), 100.0), (ChannelDims(2, 60, 2), 31.6)]:
            phi = char_fun_batch(dims, rho, ts)
            assert float(np.abs(phi).max()) <= 1.0 + 1e-6

    def test_conjugate_symmetry(self):
        d = ChannelDims(1, 8, 1)
        phi = char_fun_batch(d, 5.0, np.array([-1.3, 1.3]))
        assert phi[0] == pytest.approx(np.conj(phi[1]), rel=1e-12)

    def test_sample_invariant_rejects_out_of_range(self):
        with pytest.raises(AccuracyError):
            CharFunSample(t=1.0, value=1.2 + 0.1j)

    def test_density_path_needs_single_stream(self):
        with pytest.raises(UnsupportedConfigurationError):
            char_fun_density(ChannelDims(2, 3, 2), 10.0, 1.0)


class TestGilPelaez:
    def test_zero_rate_gives_zero(self):
        v = outage_gil_pelaez(ChannelDims(1, 16, 1), 0.0, 1, 10.0)
        assert 0.0 <= v < 1e-6

    def test_siso_matches_exact_cdf_oracle(self):
        # machinery check against the independent density-CDF quadrature
        for q, rho in [(4, 1.0), (4, 100.0), (16, 10.0), (60, 100.0)]:
            gp = outage_gil_pelaez(ChannelDims(1, q, 1), 1.0, 1, rho)
            assert gp == pytest.approx(exact_siso_outage(q, rho), abs=1e-4, rel=1e-3)

    def test_siso_closed_form_agreement_where_tight(self):
        # the closed form is a CLT approximation; compare only where its
        # true gap is below 1e-3 absolute (large Q and/or deep outage)
        for q, rho in [(16, 100.0), (60, 1.0), (60, 10.0), (60, 100.0)]:
            gp = outage_gil_pelaez(ChannelDims(1, q, 1), 1.0, 1, rho)
            assert abs(gp - outage_pr_siso(1.0, rho, q)) < 1e-3

    def test_mimo_matches_monte_carlo(self):
        dims = ChannelDims(2, 3, 2)
        grid = SnrGrid((10.0,), 1.0)
        est = estimate_outage(dims, SchemeConfig.pr(3), grid, 10**6, RngSpec(2718))[0]
        gp = outage_gil_pelaez(dims, 1.0, 1, 10.0)
        assert est.ci_low * 0.98 <= gp <= est.ci_high * 1.02

    def test_parallel_subslot_matches_activation_mc(self):
        # K = 2 sub-slots of 8 elements vs activation-scheme sampling
        gp = outage_gil_pelaez(ChannelDims(1, 8, 1), 1.0, 2, 10.0)
        grid = SnrGrid((10.0,), 1.0)
        est = estimate_outage(ChannelDims(1, 16, 1), SchemeConfig.ar(16, 2), grid, 10**7, RngSpec(1618))[0]
        assert est.ci_low * 0.98 <= gp <= est.ci_high * 1.02

    def test_monotone_in_snr_and_rate(self):
        dims = ChannelDims(2, 3, 2)
        vals = [outage_gil_pelaez(dims, 1.0, 1, rho) for rho in (2.0, 10.0, 50.0)]
        assert vals[0] > vals[1] > vals[2] >= 0.0
        rates = [outage_gil_pelaez(dims, r, 1, 10.0) for r in (0.5, 1.0, 2.0)]
        assert rates[0] < rates[1] < rates[2] <= 1.0

    def test_accuracy_error_carries_partial(self):
        plan = GilPelaezPlan(t_max=2.0, tail_cut=1e-30, tol_abs=1e-12, tol_rel=1e-12)
        with pytest.raises(AccuracyError) as err:
            outage_gil_pelaez(ChannelDims(1, 4, 1), 1.0, 1, 1.0, plan)
        assert err.value.partial is not None

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            outage_gil_pelaez(ChannelDims(1, 4, 1), 1.0, 1, 0.0)
        with pytest.raises(DomainError):
            outage_gil_pelaez(ChannelDims(1, 4, 1), -1.0, 1, 1.0)
        with pytest.raises(DomainError):
            outage_gil_pelaez(ChannelDims(1, 4, 1), 1.0, 0, 1.0)


class TestClosedForms:
    def test_clt_single_partition_is_closed_form(self):
        for q in (4, 16, 60):
            for rho in (1.0, 10.0, 100.0):
                a = outage_ar_clt(1.0, 1, q, rho)
                b = outage_pr_siso(1.0, rho, q)
                assert a == pytest.approx(b, abs=1e-12)

    def test_clt_matches_activation_mc(self):
        # Q = 60, K = 2 at rho = 10: CLT within 10% of exact-channel MC
        grid = SnrGrid((10.0,), 1.0)
        est = estimate_outage(ChannelDims(1, 60, 1), SchemeConfig.ar(60, 2), grid, 10**8, RngSpec(777))[0]
        clt = outage_ar_clt(1.0, 2, 30, 10.0)
        assert abs(clt - est.p_hat) / est.p_hat < 0.10

    def test_clt_quadratic_decay(self):
        vals = [outage_ar_clt(1.0, 2, 30, rho) * rho**2 for rho in (1e4, 1e5, 1e6)]
        assert vals[0] == pytest.approx(vals[2], rel=2e-2)
        assert vals[1] == pytest.approx(vals[2], rel=2e-3)

    def test_closed_form_values(self):
        assert outage_pr_siso(0.0, 10.0, 60) == 0.0
        assert outage_pr_siso(1.0, 100.0, 60) == pytest.approx(1.6665e-4, abs=5e-9)

    def test_closed_form_halves_with_doubled_elements(self):
        a = outage_pr_siso(1.0, 100.0, 60)
        b = outage_pr_siso(1.0, 100.0, 120)
        assert b * 2 == pytest.approx(a, rel=1e-3)


class TestCorrCoeff:
    def test_known_values(self):
        m36 = corr_coeff(36, 4, 9)
        assert m36.b == 18
        assert m36.zeta == pytest.approx(72.0 / 1368.0, rel=1e-12)
        m4 = corr_coeff(4, 2, 2)
        assert m4.zeta == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_limits(self):
        assert corr_coeff_limit(2) == 0.0
        assert corr_coeff_limit(8) == pytest.approx(0.25, rel=1e-12)
        assert corr_coeff_limit(4) == pytest.approx(0.0, abs=1e-12)

    def test_limit_approached_at_large_q(self):
        for k in (2, 4, 8):
            q = 10**4 - (10**4 % k)
            model = corr_coeff(q, k, q // k)
            assert abs(model.zeta - corr_coeff_limit(k)) < 1e-3

    def test_in_unit_interval_on_grid(self):
        for k in (2, 3, 4, 6, 8):
            for m in (1, 2, 5, 9, 50):
                model = corr_coeff(k * m, k, m)
                assert 0.0 <= model.zeta <= 1.0
                assert model.omega == pytest.approx(k * m * (1 - model.zeta), rel=1e-12)

    def test_invalid_partition(self):
        with pytest.raises(DomainError):
            corr_coeff(10, 3, 3)
        with pytest.raises(DomainError):
            corr_coeff(10, 1, 10)

    def test_model_invariants_enforced(self):
        with pytest.raises(DomainError):
            CorrelatedGainModel(q=4, zeta=1.5, b=2, omega=-2.0, sigma_sq=4.0)


class TestFrQuadrature:
    def test_decouples_to_product_cdf_when_uncorrelated(self):
        for rho in (3.0, 10.0):
            a = outage_fr_siso(1.0, 2, 30, rho, zeta=0.0)
            b = outage_ar_clt(1.0, 2, 60, rho)
            assert a == pytest.approx(b, rel=1e-7)

    def test_matches_surrogate_model_sampling(self):
        # quadrature exactness against direct sampling of the correlated
        # Rayleigh surrogate (K = 2, Q = 60, rho = 10)
        q, k, rho, rate = 60, 2, 10.0, 1.0
        zeta = corr_coeff(q, k, q // k).zeta
        rng = np.random.default_rng(5150)
        n = 4 * 10**6
        x = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) * math.sqrt(0.5)
        h = np.empty_like(x)
        h[:, 0] = math.sqrt(q) * x[:, 0]
        h[:, 1:] = math.sqrt(q) * (
            math.sqrt(1 - zeta) * x[:, 1:] + math.sqrt(zeta) * x[:, :1]
        )
        w = np.abs(h) ** 2
        p_mc = float(np.mean(np.prod(1.0 + rho * w, axis=1) < 2.0 ** (rate * k)))
        se = math.sqrt(p_mc * (1 - p_mc) / n)
        quad = outage_fr_siso(rate, k, q // k, rho)
        assert abs(quad - p_mc) < 3.0 * se

    def test_three_part_quadrature_runs(self):
        v = outage_fr_siso(1.0, 3, 5, 5.0)
        assert 0.0 < v < 1.0

    def test_dimensionality_guard(self):
        with pytest.raises(UnsupportedConfigurationError):
            outage_fr_siso(1.0, 5, 4, 10.0)
        # explicit cap raise is accepted (validation only; not evaluated)
        spec = FrQuadratureSpec(k_cap=6)
        assert spec.k_cap == 6

    def test_limits_and_threshold_helpers(self):
        assert FrQuadratureSpec.upper_limit(1.0, 2, 1.0) == 4.0
        assert FrQuadratureSpec.upper_limit(1.0, 2, 2.0) == 2.0
        assert FrQuadratureSpec.threshold(1.0, 2, 4.0, 10.0, 50.0) == 0.0
        assert FrQuadratureSpec.threshold(1.0, 2, 1.0, 10.0, 50.0) == pytest.approx(3.0 / 500.0)

    def test_monotone_in_rate_and_snr(self):
        vals = [outage_fr_siso(r, 2, 30, 10.0) for r in (0.5, 1.0, 1.5)]
        assert vals[0] < vals[1] < vals[2]
        vals = [outage_fr_siso(1.0, 2, 30, rho) for rho in (3.0, 10.0, 30.0)]
        assert vals[0] > vals[1] > vals[2]


class TestFrBound:
    def test_single_partition_is_pure_reflection(self):
        assert outage_fr_bound(1.0, 1, 60, 10.0) == pytest.approx(
            outage_pr_siso(1.0, 10.0, 60), abs=1e-12
        )

    def test_siso_uses_product_cdf(self):
        assert outage_fr_bound(1.0, 2, 60, 10.0) == pytest.approx(
            outage_ar_clt(1.0, 2, 60, 10.0), rel=1e-12
        )

    def test_mimo_uses_inversion(self):
        dims = ChannelDims(2, 6, 2)
        bound = outage_fr_bound(1.0, 2, 6, 5.0, dims)
        direct = outage_gil_pelaez(ChannelDims(2, 6, 2), 1.0, 2, 5.0)
        assert bound == pytest.approx(direct, rel=1e-9)

    def test_bounds_fr_monte_carlo_from_below(self):
        grid = SnrGrid.from_db([0.0, 5.0, 10.0], 1.0)
        ests = estimate_outage(ChannelDims(1, 60, 1), SchemeConfig.fr(60, 2), grid, 10**6, RngSpec(91))
        for est in ests:
            bound = outage_fr_bound(1.0, 2, 60, est.rho)
            half = 0.5 * (est.ci_high - est.ci_low)
            assert est.p_hat >= bound - 2.0 * half
