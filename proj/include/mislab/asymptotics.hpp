#ifndef MISLAB_ASYMPTOTICS_HPP
#define MISLAB_ASYMPTOTICS_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mislab/bignum.hpp"
#include "mislab/exact_engine.hpp"
#include "mislab/model.hpp"

namespace mislab {

/// Principal branch W(y), y >= 0, by Halley iteration.
Real lambert_w(const Real& y);

/// Approximate saddle point of the inverse Laplace integral at x:
/// (1/r) log(1/r) = x log(kappa), i.e. r = W(x log kappa) / (x log kappa).
struct SaddleData {
  Real x;
  Real r;
  Real log_inv_r;  // log(1/r) = W(x log kappa)
  Real u;          // log_kappa(1/r)
  long N = 0;      // floor(u)
  Real eta;        // N - u, in (-1, 0]
  Real Q;          // q^N / r = kappa^{frac(u)}, in [1, kappa)
};
SaddleData saddle(const Real& x, const ModelParams& params);

/// Residual (1/r) log(1/r) - x log(kappa), relative to x log(kappa).
Real saddle_residual(const SaddleData& s, const ModelParams& params);

/// F^{(m)}(s) for F(s) = sum_{j in Z} q^{j(j+1)/2} s^{j+1} / (1 + q^j s), s > 0.
Real theta_F(const Real& s, unsigned deriv, const ModelParams& params, const NumericContext& ctx);

/// theta(x) = sum_{j in Z} q^{j(j-1)/2} x^j, x > 0.
Real theta_bound(const Real& x, const ModelParams& params, const NumericContext& ctx);

/// Two equivalent expressions for the periodic amplitude at u.
struct PeriodicAmplitude {
  Real frac_u;
  Real bilateral_form;  // q^{({u}^2+{u})/2} F(q^{-{u}})
  Real series_form;     // q^{({u}^2-{u})/2} sum_j q^{j(j+1)/2} q^{-j{u}} / (1 + q^{j-{u}})
  Real discrepancy;     // |bilateral - series| / bilateral
};
PeriodicAmplitude periodic_G(const Real& u, const ModelParams& params, const NumericContext& ctx);

/// Amplitude for J_n: q^{({u}^2+{u})/2} theta(q^{-{u}}).
Real periodic_G_independent_sets(const Real& u, const ModelParams& params, const NumericContext& ctx);

enum class EstimateOrder { leading, saddle_leading, charlier_corrected, alt_expansion };
std::string to_string(EstimateOrder order);

struct AsymptoticEstimate {
  Real value;
  Real log_value;
  EstimateOrder order = EstimateOrder::leading;
  Real periodic_amplitude;
  unsigned terms = 0;
};

/// G(log_k(n/log_k n))/sqrt(2 pi) * n^{1/log k + 1/2} / log_k n * exp(log(n/log_k n)^2 / (2 log k)),
/// evaluated in log space. `amplitude` picks the mu_n or the J_n amplitude.
enum class Amplitude { mean_cost, independent_sets };
AsymptoticEstimate mu_leading(const Real& n, const ModelParams& params, const NumericContext& ctx,
                              Amplitude amplitude = Amplitude::mean_cost);
inline AsymptoticEstimate j_leading(const Real& n, const ModelParams& params, const NumericContext& ctx) {
  return mu_leading(n, params, ctx, Amplitude::independent_sets);
}

/// P0(u) = -log(2 pi)/2 - log(kappa) + log G(u).
Real periodic_P0(const Real& u, const ModelParams& params, const NumericContext& ctx);

/// Leading term of the saddle-point expansion of f~(x):
/// e^{log(1/r)^2/(2 log k)} G(log_k(1/r)) / (r^{1/log k + 1/2} sqrt(2 pi log_k(1/r))).
AsymptoticEstimate saddle_leading(const Real& x, const ModelParams& params, const NumericContext& ctx);

/// tau_j(n) = sum_{l<=j} C(j,l) (-1)^l n!/(n-j+l)! n^l (Charlier polynomial of degree floor(j/2)).
Integer tau(unsigned j, long n);

/// f~(n) + sum_{2<=j<=J} f~^{(j)}(n) tau_j(n) / j!.
AsymptoticEstimate charlier_correction(long n, unsigned j_terms, PoissonGF& gf);

/// Scale choice r*x in T_m(N) = sum_j C(m,j) (-1)^j N! (r x)^j / (N+j)!.
enum class AltScale { n_over_x, n_plus_one_over_x };
Rational alt_T(unsigned m, long N, AltScale scale);

/// Partial sums m = 0..M of q^{C(N,2)} x^N/N! sum_m (-1)^m Q^m/m! F^{(m)}(Q) T_m(N),
/// N from the saddle point at x, r = N/x (or (N+1)/x), Q = q^N / r.
struct AltExpansion {
  long N = 0;
  Real Q;
  std::vector<Real> partial_sums;
};
AltExpansion alt_expansion(const Real& x, unsigned m_terms, const ModelParams& params, const NumericContext& ctx,
                           AltScale scale = AltScale::n_over_x);

/// Ratios of both sides of the derivative and shift relations at x.
struct RatioReport {
  Real x;
  std::vector<Real> derivative_ratio;  // [j] = (f^{(j)}/f) / (log_k x / x)^j, j = 0..3
  std::vector<Real> shift_ratio;       // [j] = (f(q^j x)/f) / (q^{-j(j-1)/2} (log_k x/x)^j)
  Real sqrt_shift;                     // f(x + sqrt x) / f(x)
  Real sqrt_shift_scale;               // sqrt(x) log(x) / x
};
RatioReport ratio_checks(const Real& x, PoissonGF& gf);

/// Mean of Z_n: C n^{-1/4} e^{2 sqrt n} (1 + a/sqrt n + b/n).
struct ZMeanSeries {
  Real C;
  Real a;
  Real b;
  Real c;  // optional n^{-3/2} term (0 for the reference series)
};
/// Reference constants: C from the convergent reading, a = 9/16, b = 11/1536.
ZMeanSeries z_mean_reference(unsigned bits);
Real z_mean_asymptotic(const Real& n, const ZMeanSeries& series);

/// C = (1/2) sqrt(e/pi) * integral_0^1 e^{-1/u} du by adaptive Gauss-Kronrod quadrature
/// (the integral equals integral_1^inf e^{-v}/v^2 dv).
Real z_constant_quadrature(unsigned bits);
/// Same constant via e^{-1} - E1(1).
Real z_constant_closed(unsigned bits);
/// (1/2) sqrt(e/pi) * integral_delta^1 (1 - 1/v) e^{-v} dv, which diverges as delta -> 0.
Real z_constant_literal(const Real& delta);

/// Least-squares fit of C alone (reference corrections held fixed) over the given n with exact nu_n.
Real fit_z_constant(const std::vector<std::size_t>& ns, const std::vector<Real>& nu, const ZMeanSeries& reference);
/// Least-squares fit of (C, a, b, c) over the given n.
ZMeanSeries fit_z_series(const std::vector<std::size_t>& ns, const std::vector<Real>& nu);

/// M^{(d)}(x) = sum_j q^{C(j+d,2)} x^j / j!, d >= 0.
Real m_series(const Real& x, unsigned deriv, const ModelParams& params, const NumericContext& ctx);

struct VarianceEstimate {
  Rational c_sigma;  // p / (2q)
  Real sigma2;       // C_sigma n^{-2} (log_k n)^3 f~(n)^2
  Real toll2;        // (p/q) n^{-3} (log_k n)^4 f~(n)^2
};
VarianceEstimate variance_asymptotic(long n, PoissonGF& gf);

/// One row of the grid CSV `formula,n_or_x,p,value,log_value,reference,ratio`.
struct GridRow {
  std::string formula;
  std::string n_or_x;
  std::string p;
  std::string value;
  std::string log_value;
  std::string reference;
  std::string ratio;
};
void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows);

/// |ratio - 1| moves toward 0 with at most one non-monotone step, and the last
/// deviation is below the first.
bool improves_toward(const std::vector<double>& values, double target);

}  // namespace mislab

#endif  // MISLAB_ASYMPTOTICS_HPP
