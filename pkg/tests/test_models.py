import numpy as np
import pytest

from roughchain import (
    DomainError,
    KernelSpec,
    MarketParams,
    ParameterError,
    chain_scale,
    drift_theta,
    laplace_constants,
    make_model,
    transform_f,
)
from roughchain.presets import model_params

# frozen with 40-digit arithmetic
F_HESTON_004_MARKOV = 0.000065894523945540087676  # 0.04/(Keps(1e-8)*0.8)
G_SABR_10 = 6.6508743832295986712                 # 10**0.3/0.3
G_QSLV_10 = 7.3047863094312184174


class TestMakeModel:
    def test_heston_coefficients(self, heston):
        assert heston.phi(0.04) == pytest.approx(0.2, rel=1e-14)
        assert heston.b(0.04) == pytest.approx(4 * (0.035 - 0.04), rel=1e-12)

    def test_sabr_has_no_variance_drift(self):
        sabr = make_model("rough-sabr", {"sigma": 0.8, "beta": 0.7})
        v = np.linspace(0.01, 0.2, 7)
        assert np.all(sabr.b(v) == 0.0)

    def test_quadratic_discriminant_accepted(self):
        make_model("rough-quadratic-slv", model_params("rough-quadratic-slv"))

    def test_quadratic_discriminant_rejected(self):
        bad = model_params("rough-quadratic-slv") | {"b": 1.0}
        with pytest.raises(ParameterError, match="4ac"):
            make_model("rough-quadratic-slv", bad)

    def test_unknown_name(self):
        with pytest.raises(ParameterError, match="unknown model"):
            make_model("rough-bogus", {})

    def test_missing_and_extra_params(self):
        with pytest.raises(ParameterError, match="missing"):
            make_model("rough-heston", {"r": 0.0})
        with pytest.raises(ParameterError, match="unknown"):
            make_model("rough-sabr", {"sigma": 0.8, "beta": 0.7, "eta": 4.0})

    def test_sabr_beta_domain(self):
        with pytest.raises(ParameterError, match="beta"):
            make_model("rough-sabr", {"sigma": 0.8, "beta": 1.0})


class TestTransforms:
    @pytest.mark.parametrize("name", [
        "rough-heston", "rough-42", "rough-alpha-hyper",
        "rough-sabr", "rough-heston-sabr", "rough-quadratic-slv",
    ])
    def test_g_inverse_roundtrip(self, name, all_models):
        model = all_models[name]
        s = np.linspace(0.5, 35.0, 41)
        back = model.g_inverse(model.g(s))
        assert np.abs(back - s).max() <= 1e-12 * np.abs(s).max()

    @pytest.mark.parametrize("name", [
        "rough-heston", "rough-sabr", "rough-quadratic-slv",
    ])
    def test_g_strictly_increasing(self, name, all_models):
        s = np.linspace(0.1, 40.0, 200)
        g = all_models[name].g(s)
        assert np.all(np.diff(g) > 0)

    def test_sabr_power_transform_value(self, all_models):
        assert all_models["rough-sabr"].g(10.0) == pytest.approx(G_SABR_10, rel=1e-14)

    def test_quadratic_arctan_transform_value(self, all_models):
        assert all_models["rough-quadratic-slv"].g(10.0) == pytest.approx(G_QSLV_10, rel=1e-14)

    def test_heston_f_markov_scale(self, heston, kernel):
        got = transform_f(0.04, heston, kernel, formulation="markov")
        assert got == pytest.approx(F_HESTON_004_MARKOV, rel=1e-13)

    def test_f_numerical_integration_oracle(self, all_models, kernel):
        # f' = phi/(c sigma): compare the closed-form primitive difference
        # against trapezoid integration of the integrand for the 4/2 family
        model = all_models["rough-42"]
        c = chain_scale(kernel, "markov")
        lo, hi = 0.02, 0.09
        u = np.linspace(lo, hi, 20001)
        integrand = model.phi(u) / (c * model.sigma(u))
        quad = np.trapezoid(integrand, u)
        closed = transform_f(hi, model, kernel, "markov") - transform_f(lo, model, kernel, "markov")
        assert closed == pytest.approx(quad, rel=1e-8)

    def test_g_inverse_domain_guard(self, all_models):
        with pytest.raises(DomainError):
            all_models["rough-sabr"].g_inverse(-0.1)
        with pytest.raises(DomainError):
            all_models["rough-quadratic-slv"].g_inverse(12.0)


class TestCoefficientDerivatives:
    @pytest.mark.parametrize("name", [
        "rough-heston", "rough-42", "rough-alpha-hyper",
        "rough-sabr", "rough-heston-sabr", "rough-quadratic-slv",
    ])
    def test_derivatives_match_finite_differences(self, name, all_models):
        model = all_models[name]
        v = np.linspace(0.01, 0.15, 9)
        s = np.linspace(2.0, 30.0, 9)
        dv = 1e-6
        ds = 1e-5
        fd_phi = (model.phi(v + dv) - model.phi(v - dv)) / (2 * dv)
        fd_sig = (model.sigma(v + dv) - model.sigma(v - dv)) / (2 * dv)
        fd_nu = (model.nu(s + ds) - model.nu(s - ds)) / (2 * ds)
        assert np.abs(fd_phi - model.phi_prime(v)).max() <= 1e-6 * max(1.0, np.abs(fd_phi).max())
        assert np.abs(fd_sig - model.sigma_prime(v)).max() <= 1e-6 * max(1.0, np.abs(fd_sig).max())
        assert np.abs(fd_nu - model.nu_prime(s)).max() <= 1e-6 * max(1.0, np.abs(fd_nu).max())


class TestDriftTheta:
    def test_zero_correlation_heston(self, heston, kernel):
        market = MarketParams(s0=10.0, v0=0.04, rho=0.0)
        for v in (0.01, 0.04, 0.12):
            got = drift_theta(np.log(10.0), v, heston, market, kernel)
            assert got == pytest.approx(-v / 2, abs=1e-14)

    @pytest.mark.parametrize("formulation", ["stable", "markov"])
    def test_heston_closed_form_row(self, heston, market, kernel, formulation):
        # r - q - v/2 - rho eta (theta - v)/sigma + rho (v - v0) Rhat/(c sigma)
        c = chain_scale(kernel, formulation)
        _, _, rhat = laplace_constants(kernel)
        x0 = np.log(10.0) - market.rho * transform_f(market.v0, heston, kernel, formulation)
        for v in (0.004, 0.04, 0.1):
            want = (
                -v / 2
                - market.rho * 4 * (0.035 - v) / 0.8
                - market.rho * (v - market.v0) * rhat / (c * 0.8)
            )
            got = drift_theta(x0, v, heston, market, kernel, formulation)
            assert got == pytest.approx(want, abs=1e-10)

    def test_sabr_closed_form_row(self, all_models, kernel):
        # at v = v0 the memory term vanishes and b = 0, leaving only
        # -beta v^2 / (2 (1-beta) (x + rho f(v)))
        sabr = all_models["rough-sabr"]
        market = MarketParams(s0=10.0, v0=0.04, rho=-0.75)
        beta = 0.7
        v0 = market.v0
        f0 = transform_f(v0, sabr, kernel, "markov")
        x = sabr.g(10.0) - market.rho * f0
        want = -beta * v0**2 / (2 * (1 - beta) * (x + market.rho * f0))
        got = drift_theta(x, v0, sabr, market, kernel, "markov")
        assert got == pytest.approx(want, abs=1e-10)

    def test_variants_coincide_when_wronskian_vanishes(self, heston, market, kernel):
        x = np.log(12.0)
        for v in (0.01, 0.08):
            a = drift_theta(x, v, heston, market, kernel, variant="lemma")
            b = drift_theta(x, v, heston, market, kernel, variant="discretized")
            assert a == pytest.approx(b, abs=1e-13)

    def test_variants_differ_for_42(self, all_models, market, kernel):
        mod = all_models["rough-42"]
        x = np.log(10.0)
        a = drift_theta(x, 0.04, mod, market, kernel, variant="lemma")
        b = drift_theta(x, 0.04, mod, market, kernel, variant="discretized")
        assert a != pytest.approx(b, rel=1e-3)


class TestMarketParams:
    def test_rho_domain(self):
        with pytest.raises(ParameterError):
            MarketParams(s0=10.0, v0=0.04, rho=-1.0)

    def test_s0_positive(self):
        with pytest.raises(ParameterError):
            MarketParams(s0=0.0, v0=0.04, rho=0.0)
