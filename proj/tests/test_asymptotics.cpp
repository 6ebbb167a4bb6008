#include <doctest.h>

#include <sstream>

#include "mislab/asymptotics.hpp"

using namespace mislab;

TEST_SUITE("asymptotics") {
  TEST_CASE("Lambert W on known points and across magnitudes") {
    CHECK(lambert_w(Real(0, 128)).is_zero());
    CHECK(abs(lambert_w(const_e(256)) - 1).to_double() < 1e-70);
    for (int k = -3; k <= 15; ++k) {
      const Real y = pow(Real(10, 192), static_cast<long>(k));
      const Real w = lambert_w(y);
      CHECK((abs(w * exp(w) - y) / y).to_double() < 1e-50);
    }
  }

  TEST_CASE("saddle point data is consistent") {
    const ModelParams params = ModelParams::parse("1/2");
    for (double x : {50.0, 1e3, 1e6, 1e12}) {
      const SaddleData s = saddle(Real::from_double(x, 256), params);
      CHECK(abs(saddle_residual(s, params)).to_double() < 1e-70);
      CHECK(s.eta.to_double() <= 0);
      CHECK(s.eta.to_double() > -1);
      CHECK(s.Q.to_double() >= 1);
      CHECK(s.Q.to_double() < 2);
      CHECK(s.r.to_double() < 1);
    }
  }

  TEST_CASE("bilateral sum obeys F(s) = s F(qs) and its derivatives match finite differences") {
    const NumericContext ctx(256);
    for (const char* ps : {"1/3", "1/2", "3/4"}) {
      const ModelParams params = ModelParams::parse(ps);
      const Real q = params.q_real(256);
      for (double sd : {0.2, 1.0, 3.7}) {
        const Real s = Real::from_double(sd, 256);
        const Real F = theta_F(s, 0, params, ctx);
        CHECK((abs(F - s * theta_F(q * s, 0, params, ctx)) / F).to_double() < 1e-70);
        CHECK((abs(theta_bound(s, params, ctx) - s * theta_bound(q * s, params, ctx)) / theta_bound(s, params, ctx)).to_double() <
              1e-70);
        const Real h = Real::from_string("1e-25", 256);
        for (unsigned d = 0; d < 3; ++d) {
          const Real fd = (theta_F(s + h, d, params, ctx) - theta_F(s - h, d, params, ctx)) / (2 * h);
          const Real an = theta_F(s, d + 1, params, ctx);
          CHECK((abs(fd - an) / max(abs(an), Real(1, 256))).to_double() < 1e-35);
        }
      }
    }
  }

  TEST_CASE("periodic amplitude: both expressions agree and the function has period one") {
    const NumericContext ctx(256);
    const ModelParams params = ModelParams::parse("1/2");
    for (double u : {0.0, 0.1, 0.5, 0.93}) {
      const Real ur = Real::from_double(u, 256);
      const PeriodicAmplitude a = periodic_G(ur, params, ctx);
      CHECK(a.discrepancy.to_double() < 1e-70);
      const PeriodicAmplitude b = periodic_G(ur + 3, params, ctx);
      CHECK(abs(a.bilateral_form - b.bilateral_form).to_double() < 1e-70);
      CHECK(a.bilateral_form.sign() > 0);
    }
    CHECK(periodic_G(Real(0, 256), params, ctx).bilateral_form.to_double() == doctest::Approx(1.39634281177).epsilon(1e-10));
  }

  TEST_CASE("Charlier weights and alternative-expansion coefficients") {
    CHECK(tau(0, 10) == 1);
    CHECK(tau(1, 10) == 0);
    CHECK(tau(2, 10) == -10);
    CHECK(tau(3, 10) == 20);
    CHECK(tau(4, 10) == 240);
    CHECK(alt_T(0, 7, AltScale::n_over_x) == 1);
    CHECK(alt_T(1, 7, AltScale::n_over_x) == Rational(1, 8));
    CHECK(alt_T(2, 7, AltScale::n_over_x) == Rational(-5, 72));
    CHECK(alt_T(2, 7, AltScale::n_plus_one_over_x) == Rational(-1, 9));
  }

  TEST_CASE("Charlier corrections improve on the Poisson heuristic") {
    const ModelParams params = ModelParams::parse("1/2");
    const unsigned bits = required_precision(200) + 64;
    PoissonGF gf(params, NumericContext(bits));
    const auto mu = mu_recurrence(200, params, RealField{bits});
    for (long n : {50, 100, 200}) {
      const double plain = abs(gf.eval(Real(n, bits)) / mu[n] - 1).to_double();
      const double two = abs(charlier_correction(n, 2, gf).value / mu[n] - 1).to_double();
      const double four = abs(charlier_correction(n, 4, gf).value / mu[n] - 1).to_double();
      CHECK(two < plain);
      CHECK(four < two);
    }
    CHECK_THROWS_AS(charlier_correction(100, 5, gf), DomainError);
  }

  TEST_CASE("leading estimates are finite and stay near the exact mean at p = 1/2") {
    const ModelParams params = ModelParams::parse("1/2");
    const NumericContext ctx(256);
    const auto mu = mu_recurrence(1000, params, ctx.field());
    std::vector<double> ratios;
    for (long n : {200, 500, 1000}) {
      const AsymptoticEstimate e = mu_leading(Real(n, 256), params, ctx);
      CHECK(abs(log(e.value) - e.log_value).to_double() < 1e-60);
      ratios.push_back((e.value / mu[n]).to_double());
    }
    for (double r : ratios) CHECK((r > 0.5 && r < 2));
    CHECK(improves_toward(ratios, 1.0));
    CHECK_THROWS_AS(mu_leading(Real(10, 256), params, ctx), DomainError);
  }

  TEST_CASE("alternative expansion partial sums approach f~") {
    const ModelParams params = ModelParams::parse("1/2");
    const unsigned bits = required_precision(1000) + 64;
    const NumericContext ctx(bits);
    const Real x(1000, bits);
    const AltExpansion e = alt_expansion(x, 3, params, ctx);
    PoissonGF gf(params, ctx);
    const Real f = gf.eval(x);
    CHECK(e.N == 7);
    const double first = abs(e.partial_sums[1] / f - 1).to_double();
    const double third = abs(e.partial_sums[3] / f - 1).to_double();
    CHECK(third < first);
  }

  TEST_CASE("constant of the uniform-split mean by two routes") {
    const Real quad = z_constant_quadrature(128);
    const Real closed = z_constant_closed(128);
    CHECK(closed.to_double() == doctest::Approx(0.069064619228246605).epsilon(1e-15));
    CHECK(abs(quad - closed).to_double() < 1e-15);
    // The integral taken literally diverges as its lower limit goes to 0.
    CHECK(z_constant_literal(Real::from_string("1e-6", 128)).to_double() < -1);
  }

  TEST_CASE("fitting the uniform-split mean recovers the constant") {
    const std::vector<std::size_t> ns = {2500, 5000, 10000, 20000, 40000};
    const auto nu = nu_recurrence(40000, RealField{256});
    const ZMeanSeries full = fit_z_series(ns, nu);
    CHECK(full.C.to_double() == doctest::Approx(z_constant_closed(128).to_double()).epsilon(1e-8));
    CHECK(full.a.to_double() == doctest::Approx(31.0 / 48).epsilon(1e-4));
    const Real c = fit_z_constant(ns, nu, z_mean_reference(256));
    CHECK(c.to_double() == doctest::Approx(0.0691).epsilon(1e-2));
  }

  TEST_CASE("pantograph series: M' (x) = M(qx)") {
    const ModelParams params = ModelParams::parse("1/3");
    const NumericContext ctx(256);
    const Real q = params.q_real(256);
    for (double x : {0.0, 1.5, 10.0}) {
      const Real xr = Real::from_double(x, 256);
      CHECK(abs(m_series(xr, 1, params, ctx) - m_series(q * xr, 0, params, ctx)).to_double() < 1e-60);
    }
  }

  TEST_CASE("variance prediction uses C_sigma = p/(2q)") {
    const ModelParams params = ModelParams::parse("1/3");
    PoissonGF gf(params, NumericContext(required_precision(300) + 64));
    const VarianceEstimate v = variance_asymptotic(300, gf);
    CHECK(v.c_sigma == Rational(1, 4));
    CHECK(v.sigma2.sign() > 0);
    CHECK(v.toll2.sign() > 0);
  }

  TEST_CASE("trend rule tolerates one reversal") {
    CHECK(improves_toward({3.0, 2.0, 1.5, 1.2}, 1.0));
    CHECK(improves_toward({3.0, 2.0, 2.2, 1.2}, 1.0));
    CHECK_FALSE(improves_toward({3.0, 3.5, 2.2, 2.4}, 1.0));
    CHECK_FALSE(improves_toward({1.2, 1.3}, 1.0));
    CHECK_FALSE(improves_toward({1.2}, 1.0));
  }

  TEST_CASE("grid CSV header") {
    std::ostringstream s;
    write_grid_csv(s, {{"mu", "500", "1/2", "1", "0", "1", "1"}});
    CHECK(s.str() == "formula,n_or_x,p,value,log_value,reference,ratio\nmu,500,1/2,1,0,1,1\n");
  }
}
