#include "mislab/asymptotics.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mislab {

namespace {

Real scaled_down(const Real& x, unsigned shift) {
  Real r = x;
  mpfr_div_2ui(r.raw(), r.raw(), shift, MPFR_RNDN);
  return r;
}

// Sums term(j) over all integers j, walking outward from j0 in both directions
// until three consecutive terms fall below eps relative to the running sum of
// magnitudes. Terms decay like q^{j^2/2}, so both walks terminate.
Real bilateral_sum(long j0, const Real& eps, unsigned bits, const std::function<Real(long)>& term) {
  Real sum(bits), mag(bits);
  auto walk = [&](long start, long step) {
    int quiet = 0;
    for (long j = start, taken = 0; taken < 100000; j += step, ++taken) {
      const Real t = term(j);
      sum += t;
      mag += abs(t);
      if (taken >= 4 && abs(t) <= eps * mag) {
        if (++quiet >= 3) break;
      } else {
        quiet = 0;
      }
    }
  };
  walk(j0, 1);
  walk(j0 - 1, -1);
  return sum;
}

Real frac_part(const Real& u) { return frac(u); }

}  // namespace

Real lambert_w(const Real& y) {
  const unsigned bits = y.precision();
  if (y.sign() < 0) throw DomainError("lambert_w: principal branch needs y >= 0");
  if (y.is_zero()) return Real(bits);
  const unsigned work = bits + 32;
  Real yy = y;
  yy.set_precision(work);
  Real w(work);
  const double yd = y.to_double();
  if (yd <= 0.5) {
    w = yy * (1 - yy);
  } else if (yd <= std::exp(1.0)) {
    w = log1p(yy) * Real::from_double(0.75, work);
  } else {
    const Real l1 = log(yy);
    const Real l2 = log(l1);
    w = l1 - l2 + l2 / l1 + (l2 * l2 - 2 * l2) / (2 * (l1 * l1));
  }
  for (int it = 0; it < 200; ++it) {
    const Real ew = exp(w);
    const Real f = w * ew - yy;
    const Real wp1 = w + 1;
    const Real denom = ew * wp1 - (w + 2) * f / (2 * wp1);
    const Real step = f / denom;
    w -= step;
    if (step.is_zero() || abs(step) <= scaled_down(abs(w), work - 4)) break;
  }
  w.set_precision(bits);
  return w;
}

SaddleData saddle(const Real& x, const ModelParams& params) {
  const unsigned bits = x.precision();
  if (x.sign() <= 0) throw DomainError("saddle: x must be positive");
  const Real lk = params.log_kappa(bits);
  const Real y = x * lk;
  SaddleData s;
  s.x = x;
  s.log_inv_r = lambert_w(y);
  s.r = s.log_inv_r / y;
  s.u = s.log_inv_r / lk;
  const Real fl = floor(s.u);
  s.N = mpfr_get_si(fl.raw(), MPFR_RNDN);
  s.eta = fl - s.u;
  s.Q = exp((s.u - fl) * lk);
  return s;
}

Real saddle_residual(const SaddleData& s, const ModelParams& params) {
  const Real y = s.x * params.log_kappa(s.x.precision());
  return (s.log_inv_r / s.r - y) / y;
}

Real theta_F(const Real& s_in, unsigned deriv, const ModelParams& params, const NumericContext& ctx) {
  if (s_in.sign() <= 0) throw DomainError("theta_F: s must be positive");
  const unsigned bits = ctx.precision_bits();
  Real s = s_in;
  s.set_precision(bits);
  const Real q = params.q_real(bits);
  const Real lk = params.log_kappa(bits);
  const long j0 = mpfr_get_si(floor(log(s) / lk).raw(), MPFR_RNDN);
  const Real eps = scaled_down(ctx.series_epsilon(), 32);

  std::vector<Real> fact(deriv + 1, Real(1, bits));
  for (unsigned i = 1; i <= deriv; ++i) fact[i] = fact[i - 1] * static_cast<long>(i);
  std::vector<long> binom(deriv + 1, 1);
  for (unsigned i = 1; i <= deriv; ++i) binom[i] = binom[i - 1] * static_cast<long>(deriv - i + 1) / static_cast<long>(i);

  return bilateral_sum(j0, eps, bits, [&](long j) {
    const Real c = pow(q, j);
    const Real lead = pow(q, j * (j + 1) / 2);
    const Real one_cs = c * s + 1;
    const long a = j + 1;
    // d^m [s^a (1 + c s)^{-1}] by Leibniz.
    Real acc(bits);
    for (unsigned i = 0; i <= deriv; ++i) {
      long falling = 1;
      for (unsigned t = 0; t < i; ++t) falling *= (a - static_cast<long>(t));
      if (falling == 0) continue;
      const unsigned k = deriv - i;
      Real part = pow(s, a - static_cast<long>(i)) * fact[k] * pow(c, static_cast<long>(k)) / pow(one_cs, static_cast<long>(k + 1));
      part *= falling * binom[i];
      if (k % 2 == 1) part = -part;
      acc += part;
    }
    return lead * acc;
  });
}

Real theta_bound(const Real& x_in, const ModelParams& params, const NumericContext& ctx) {
  if (x_in.sign() <= 0) throw DomainError("theta_bound: x must be positive");
  const unsigned bits = ctx.precision_bits();
  Real x = x_in;
  x.set_precision(bits);
  const Real q = params.q_real(bits);
  const Real lk = params.log_kappa(bits);
  const long j0 = mpfr_get_si(floor(log(x) / lk).raw(), MPFR_RNDN);
  const Real eps = scaled_down(ctx.series_epsilon(), 32);
  return bilateral_sum(j0, eps, bits, [&](long j) { return pow(q, j * (j - 1) / 2) * pow(x, j); });
}

PeriodicAmplitude periodic_G(const Real& u, const ModelParams& params, const NumericContext& ctx) {
  const unsigned bits = ctx.precision_bits();
  Real uu = u;
  uu.set_precision(bits);
  const Real f = frac_part(uu);
  const Real lk = params.log_kappa(bits);
  const Real q = params.q_real(bits);
  PeriodicAmplitude out;
  out.frac_u = f;
  // q^a = exp(-a log kappa).
  out.bilateral_form = exp(-lk * (f * f + f) / 2) * theta_F(exp(f * lk), 0, params, ctx);
  const Real eps = scaled_down(ctx.series_epsilon(), 32);
  const Real series = bilateral_sum(0, eps, bits, [&](long j) {
    const Real jr(j, bits);
    return pow(q, j * (j + 1) / 2) * exp(jr * f * lk) / (exp(-(jr - f) * lk) + 1);
  });
  out.series_form = exp(-lk * (f * f - f) / 2) * series;
  out.discrepancy = abs(out.bilateral_form - out.series_form) / out.bilateral_form;
  return out;
}

Real periodic_G_independent_sets(const Real& u, const ModelParams& params, const NumericContext& ctx) {
  const unsigned bits = ctx.precision_bits();
  Real uu = u;
  uu.set_precision(bits);
  const Real f = frac_part(uu);
  const Real lk = params.log_kappa(bits);
  return exp(-lk * (f * f + f) / 2) * theta_bound(exp(f * lk), params, ctx);
}

std::string to_string(EstimateOrder order) {
  switch (order) {
    case EstimateOrder::leading: return "leading";
    case EstimateOrder::saddle_leading: return "saddle_leading";
    case EstimateOrder::charlier_corrected: return "charlier_corrected";
    case EstimateOrder::alt_expansion: return "alt_expansion";
  }
  return "?";
}

AsymptoticEstimate mu_leading(const Real& n_in, const ModelParams& params, const NumericContext& ctx, Amplitude amplitude) {
  const unsigned bits = ctx.precision_bits();
  Real n = n_in;
  n.set_precision(bits);
  if (n < 16) throw DomainError("mu_leading: n must be >= 16");
  const Real lk = params.log_kappa(bits);
  const Real ln = log(n);
  const Real lkn = ln / lk;
  const Real L1 = ln - log(lkn);
  const Real u = L1 / lk;
  AsymptoticEstimate est;
  est.order = EstimateOrder::leading;
  est.periodic_amplitude = amplitude == Amplitude::mean_cost ? periodic_G(u, params, ctx).bilateral_form
                                                             : periodic_G_independent_sets(u, params, ctx);
  const Real two_pi = 2 * const_pi(bits);
  est.log_value = log(est.periodic_amplitude) - log(two_pi) / 2 + (1 / lk + Real::from_double(0.5, bits)) * ln - log(lkn) +
                  L1 * L1 / (2 * lk);
  est.value = exp(est.log_value);
  return est;
}

Real periodic_P0(const Real& u, const ModelParams& params, const NumericContext& ctx) {
  const unsigned bits = ctx.precision_bits();
  return -log(2 * const_pi(bits)) / 2 - params.log_kappa(bits) + log(periodic_G(u, params, ctx).bilateral_form);
}

AsymptoticEstimate saddle_leading(const Real& x_in, const ModelParams& params, const NumericContext& ctx) {
  const unsigned bits = ctx.precision_bits();
  Real x = x_in;
  x.set_precision(bits);
  const SaddleData sd = saddle(x, params);
  const Real lk = params.log_kappa(bits);
  const Real& L = sd.log_inv_r;
  AsymptoticEstimate est;
  est.order = EstimateOrder::saddle_leading;
  est.periodic_amplitude = periodic_G(sd.u, params, ctx).bilateral_form;
  est.log_value = L * L / (2 * lk) + log(est.periodic_amplitude) + (1 / lk + Real::from_double(0.5, bits)) * L -
                  log(2 * const_pi(bits) * sd.u) / 2;
  est.value = exp(est.log_value);
  return est;
}

Integer tau(unsigned j, long n) {
  Integer total = 0;
  Integer binom = 1;
  for (unsigned l = 0; l <= j; ++l) {
    if (l > 0) binom = binom * static_cast<unsigned long>(j - l + 1) / static_cast<unsigned long>(l);
    Integer falling = 1;
    for (unsigned t = 0; t < j - l; ++t) falling *= (n - static_cast<long>(t));
    Integer npow;
    mpz_pow_ui(npow.get_mpz_t(), Integer(n).get_mpz_t(), l);
    const Integer term = binom * falling * npow;
    if (l % 2 == 0) total += term;
    else total -= term;
  }
  return total;
}

AsymptoticEstimate charlier_correction(long n, unsigned j_terms, PoissonGF& gf) {
  if (j_terms < 2 || j_terms > 4) throw DomainError("charlier_correction: J must be 2, 3 or 4");
  const unsigned bits = gf.context().precision_bits();
  const Real x(n, bits);
  Real value = gf.eval(x, 0);
  Integer fact = 1;
  for (unsigned j = 2; j <= j_terms; ++j) {
    fact *= static_cast<unsigned long>(j);
    value += gf.eval(x, j) * Real(tau(j, n), bits) / Real(fact, bits);
  }
  AsymptoticEstimate est;
  est.order = EstimateOrder::charlier_corrected;
  est.value = value;
  est.log_value = value.sign() > 0 ? log(value) : Real(bits);
  est.terms = j_terms;
  return est;
}

Rational alt_T(unsigned m, long N, AltScale scale) {
  const long rx = scale == AltScale::n_over_x ? N : N + 1;
  Rational total = 0;
  Integer binom = 1;
  Rational ratio = 1;  // N! (rx)^j / (N+j)!
  for (unsigned j = 0; j <= m; ++j) {
    if (j > 0) {
      binom = binom * static_cast<unsigned long>(m - j + 1) / static_cast<unsigned long>(j);
      ratio *= Rational(rx, N + static_cast<long>(j));
    }
    const Rational term = Rational(binom) * ratio;
    if (j % 2 == 0) total += term;
    else total -= term;
  }
  total.canonicalize();
  return total;
}

AltExpansion alt_expansion(const Real& x_in, unsigned m_terms, const ModelParams& params, const NumericContext& ctx,
                           AltScale scale) {
  const unsigned bits = ctx.precision_bits();
  Real x = x_in;
  x.set_precision(bits);
  const SaddleData sd = saddle(x, params);
  const long N = sd.N;
  if (N < 2) throw DomainError("alt_expansion: x too small (N < 2)");
  const long rx = scale == AltScale::n_over_x ? N : N + 1;
  const Real lk = params.log_kappa(bits);
  AltExpansion out;
  out.N = N;
  // Q = q^N / r with r = rx / x.
  out.Q = exp(-lk * N) * x / rx;
  const Real log_pre = -lk * (N * (N - 1) / 2) + log(x) * N - lgamma(Real(N + 1, bits));
  const Real pre = exp(log_pre);
  Real acc(bits);
  Real qpow(1, bits);
  Real mfact(1, bits);
  for (unsigned m = 0; m <= m_terms; ++m) {
    if (m > 0) {
      qpow *= out.Q;
      mfact *= static_cast<long>(m);
    }
    Real term = qpow / mfact * theta_F(out.Q, m, params, ctx) * Real(alt_T(m, N, scale), bits);
    if (m % 2 == 1) term = -term;
    acc += term;
    out.partial_sums.push_back(pre * acc);
  }
  return out;
}

RatioReport ratio_checks(const Real& x_in, PoissonGF& gf) {
  const unsigned bits = gf.context().precision_bits();
  const ModelParams& params = gf.params();
  Real x = x_in;
  x.set_precision(bits);
  const Real lk = params.log_kappa(bits);
  const Real q = params.q_real(bits);
  const Real base = log(x) / lk / x;
  const Real f0 = gf.eval(x, 0);
  RatioReport rep;
  rep.x = x;
  Real basej(1, bits);
  Real qj(1, bits);
  for (unsigned j = 0; j <= 3; ++j) {
    if (j > 0) {
      basej *= base;
      qj *= q;
    }
    rep.derivative_ratio.push_back(gf.eval(x, j) / f0 / basej);
    const long tri = static_cast<long>(j) * (static_cast<long>(j) - 1) / 2;
    rep.shift_ratio.push_back(gf.eval(qj * x, 0) / f0 / (pow(q, -tri) * basej));
  }
  const Real y = sqrt(x);
  rep.sqrt_shift = gf.eval(x + y, 0) / f0;
  rep.sqrt_shift_scale = y * log(x) / x;
  return rep;
}

ZMeanSeries z_mean_reference(unsigned bits) {
  return {z_constant_closed(bits), Real(Rational(9, 16), bits), Real(Rational(11, 1536), bits), Real(bits)};
}

Real z_mean_asymptotic(const Real& n, const ZMeanSeries& s) {
  const Real rt = sqrt(n);
  const Real corr = 1 + s.a / rt + s.b / n + s.c / (n * rt);
  return s.C * exp(2 * rt - log(n) / 4) * corr;
}

Real z_constant_quadrature(unsigned bits) {
  using boost::math::quadrature::gauss_kronrod;
  const auto f = [](long double u) -> long double { return u <= 0 ? 0.0L : std::exp(-1.0L / u); };
  long double error = 0;
  const long double integral = gauss_kronrod<long double, 31>::integrate(f, 0.0L, 1.0L, 15, 1e-18L, &error);
  const Real scale = sqrt(const_e(bits) / const_pi(bits)) / 2;
  return scale * Real::from_double(static_cast<double>(integral), bits);
}

Real z_constant_closed(unsigned bits) {
  const Real one(1, bits);
  const Real scale = sqrt(const_e(bits) / const_pi(bits)) / 2;
  return scale * (exp(-one) - expint_e1(one));
}

Real z_constant_literal(const Real& delta) {
  const unsigned bits = delta.precision();
  if (delta.sign() <= 0 || delta > 1) throw DomainError("z_constant_literal: delta must be in (0, 1]");
  const Real one(1, bits);
  // int_delta^1 e^{-v} dv - int_delta^1 e^{-v}/v dv.
  const Real integral = (exp(-delta) - exp(-one)) - (expint_e1(delta) - expint_e1(one));
  return sqrt(const_e(bits) / const_pi(bits)) / 2 * integral;
}

Real fit_z_constant(const std::vector<std::size_t>& ns, const std::vector<Real>& nu, const ZMeanSeries& reference) {
  if (ns.empty()) throw InsufficientData("fit_z_constant: empty grid");
  const unsigned bits = reference.C.precision();
  ZMeanSeries shape = reference;
  shape.C = Real(1, bits);
  Real num(bits), den(bits);
  for (std::size_t n : ns) {
    const Real t = z_mean_asymptotic(Real(static_cast<long>(n), bits), shape) / nu.at(n);
    num += t;
    den += t * t;
  }
  return num / den;
}

ZMeanSeries fit_z_series(const std::vector<std::size_t>& ns, const std::vector<Real>& nu) {
  if (ns.size() < 4) throw InsufficientData("fit_z_series: need at least 4 grid points");
  const unsigned bits = nu.at(ns.front()).precision();
  constexpr int k = 4;
  std::vector<std::vector<Real>> A(k, std::vector<Real>(k + 1, Real(bits)));
  for (std::size_t n : ns) {
    const Real nr(static_cast<long>(n), bits);
    const Real rt = sqrt(nr);
    const Real y = nu.at(n) * exp(log(nr) / 4 - 2 * rt);
    const Real basis[k] = {Real(1, bits), 1 / rt, 1 / nr, 1 / (nr * rt)};
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) mul_add(A[i][j], basis[i], basis[j]);
      mul_add(A[i][k], basis[i], y);
    }
  }
  // Gaussian elimination with partial pivoting on the normal equations.
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int r = c + 1; r < k; ++r)
      if (abs(A[r][c]) > abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    for (int r = 0; r < k; ++r) {
      if (r == c) continue;
      const Real factor = A[r][c] / A[c][c];
      for (int j = c; j <= k; ++j) A[r][j] -= factor * A[c][j];
    }
  }
  Real beta[k] = {Real(bits), Real(bits), Real(bits), Real(bits)};
  for (int i = 0; i < k; ++i) beta[i] = A[i][k] / A[i][i];
  return {beta[0], beta[1] / beta[0], beta[2] / beta[0], beta[3] / beta[0]};
}

Real m_series(const Real& x_in, unsigned deriv, const ModelParams& params, const NumericContext& ctx) {
  const unsigned bits = ctx.precision_bits();
  if (x_in.sign() < 0) throw DomainError("m_series: x must be >= 0");
  Real x = x_in;
  x.set_precision(bits);
  const Real q = params.q_real(bits);
  const Real eps = scaled_down(ctx.series_epsilon(), 32);
  const long d = deriv;
  Real term = pow(q, d * (d - 1) / 2);  // j = 0
  Real qpow = pow(q, d);                // q^{j+d}
  Real sum(bits);
  int quiet = 0;
  for (long j = 0; j < 1000000; ++j) {
    sum += term;
    const Real ratio = qpow * x / (j + 1);
    if (ratio < Real::from_double(0.5, bits) && term <= eps * sum) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
    term *= ratio;
    qpow *= q;
  }
  return sum;
}

VarianceEstimate variance_asymptotic(long n, PoissonGF& gf) {
  const unsigned bits = gf.context().precision_bits();
  const ModelParams& params = gf.params();
  const Real nr(n, bits);
  const Real f = gf.eval(nr, 0);
  const Real lkn = log(nr) / params.log_kappa(bits);
  VarianceEstimate v;
  v.c_sigma = params.p() / (2 * params.q());
  v.c_sigma.canonicalize();
  const Real f2 = f * f;
  v.sigma2 = Real(v.c_sigma, bits) * pow(lkn, 3L) * f2 / (nr * nr);
  v.toll2 = Real(params.p() / params.q(), bits) * pow(lkn, 4L) * f2 / (nr * nr * nr);
  return v;
}

void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "formula,n_or_x,p,value,log_value,reference,ratio\n";
  for (const auto& r : rows)
    out << r.formula << ',' << r.n_or_x << ',' << r.p << ',' << r.value << ',' << r.log_value << ',' << r.reference << ','
        << r.ratio << '\n';
}

bool improves_toward(const std::vector<double>& values, double target) {
  if (values.size() < 2) return false;
  int reversals = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (std::abs(values[i] - target) > std::abs(values[i - 1] - target)) ++reversals;
  return reversals <= 1 && std::abs(values.back() - target) < std::abs(values.front() - target);
}

}  // namespace mislab
