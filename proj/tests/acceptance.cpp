// End-to-end acceptance run: one PASS/FAIL line per criterion, with the
// tolerances fixed below. `--expect-fail a,b` marks criteria that are known
// to fail (see the decisions ledger); the exit status is nonzero when an
// unlisted criterion fails or a listed one unexpectedly passes.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "mislab/asymptotics.hpp"
#include "mislab/exact_engine.hpp"
#include "mislab/graph.hpp"
#include "mislab/report.hpp"
#include "mislab/rng.hpp"
#include "mislab/search_cost.hpp"
#include "mislab/stats.hpp"

using namespace mislab;

namespace {

// Pinned tolerances and grids.
const std::vector<std::string> kAllP = {"1/4", "1/3", "1/2", "2/3", "3/4"};
constexpr std::size_t kExactMaxN = 150;
constexpr double kCrit1Seconds = 120;
constexpr double kCrit2Seconds = 600;
constexpr double kCrit4Seconds = 60;
constexpr double kCrit5Seconds = 1800;
constexpr double kMcStderrs2 = 3;
constexpr double kMcStderrs3 = 4;
constexpr double kMcStderrs8 = 4;
constexpr unsigned kResidualBits = 256;
constexpr std::size_t kResidualPoints = 10;
constexpr double kBandLow = 0.5, kBandHigh = 2.0;
constexpr double kZRelError = 1e-4;
constexpr int kZDigits = 6;
constexpr double kReferenceC = 0.0690646192;
constexpr unsigned kLambertBits = 128;
constexpr double kLambertResidual = 1e-30;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sci(double v, int digits = 3) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(digits) << v;
  return s.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double rel_residual(const Real& lhs, const Real& rhs) {
  const Real scale = max(Real(1, lhs.precision()), abs(lhs));
  return (abs(lhs - rhs) / scale).to_double();
}

// ---------------------------------------------------------------------------

void criterion1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t checked = 0;
  for (const auto& ps : kAllP) {
    const ModelParams params = ModelParams::parse(ps);
    const auto rec = mu_recurrence(kExactMaxN, params, ExactField{});
    const auto closed = mu_closed_form_table(kExactMaxN, params);
    for (std::size_t n = 0; n <= kExactMaxN; ++n) {
      o.require(rec[n] == closed[n], "closed form at p=" + ps + " n=" + std::to_string(n));
      o.require(rec[n] == mu_positive_form_exact(n, params), "positive form at p=" + ps + " n=" + std::to_string(n));
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  o.require(t < kCrit1Seconds, "runtime");
  o.detail << checked << " (p,n) pairs identical, " << fixed(t, 1) << " s";
}

void criterion2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t n = 1; n <= 20; ++n) {
    o.require(run_exhaustive_mis(GraphInstance::complete(n)).cost == 1, "cost(K_n)");
    o.require(run_exhaustive_mis(GraphInstance::empty(n)).cost == (std::uint64_t{1} << (n - 1)), "cost(E_n)");
  }
  const ModelParams params = ModelParams::parse("1/2");
  const auto mu = mu_recurrence(100, params, RealField{128});
  CampaignConfig c;
  c.kind = CostKind::X;
  c.params = params;
  c.n_grid = {30, 60, 100};
  c.replicates = 1000;
  c.master_seed = kSeed;
  const auto res = run_campaign(c);
  o.detail << "K_n, E_n exact for n<=20;";
  for (const auto& s : res.summaries) {
    const double z = (s.mean - mu[s.n].to_double()) / s.mean_stderr;
    o.require(std::abs(z) <= kMcStderrs2 && !s.partial, "X mean at n=" + std::to_string(s.n));
    o.detail << " n=" << s.n << " z=" << fixed(z, 2);
  }
  const double t = seconds_since(t0);
  o.require(t < kCrit2Seconds, "runtime");
  o.detail << ", " << fixed(t, 1) << " s";
}

void criterion3(Outcome& o) {
  for (const auto& ps : kAllP) {
    const ModelParams params = ModelParams::parse(ps);
    const auto jbar = J_bar_recurrence(kExactMaxN, params, ExactField{});
    for (std::size_t n = 1; n <= kExactMaxN; ++n)
      o.require(J_direct(n, params, ExactField{}) == jbar[n] - 1, "J at p=" + ps + " n=" + std::to_string(n));
  }
  o.detail << "direct = recurrence for n<=150 at 5 p;";
  const ModelParams params = ModelParams::parse("1/2");
  for (std::size_t n : {8, 12, 16}) {
    const std::size_t R = 10000;
    std::vector<double> counts(R);
    for (std::size_t i = 0; i < R; ++i) {
      Xoshiro256 rng = Xoshiro256::stream(kSeed, static_cast<std::uint64_t>(StreamTag::graph) ^ mix64(n), i);
      counts[i] = static_cast<double>(count_independent_sets(sample_gnp(n, params, rng)));
    }
    const SampleMoments m = sample_moments(counts);
    const double se = std::sqrt(m.variance / R);
    const double z = (m.mean - J_direct(n, params, RealField{128}).to_double()) / se;
    o.require(std::abs(z) <= kMcStderrs3, "MC J at n=" + std::to_string(n));
    o.detail << " n=" << n << " z=" << fixed(z, 2);
  }
}

void criterion4(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const double tol = std::ldexp(1.0, -static_cast<int>(kResidualBits / 2));
  const NumericContext ctx(kResidualBits);
  const unsigned bits = kResidualBits;
  double worst[5] = {0, 0, 0, 0, 0};
  for (const auto& ps : {"1/3", "1/2", "2/3"}) {
    const ModelParams params = ModelParams::parse(ps);
    const Real q = params.q_real(bits);
    PoissonGF gf(params, ctx);
    for (std::size_t i = 0; i < kResidualPoints; ++i) {
      Xoshiro256 rng = Xoshiro256::stream(kSeed, static_cast<std::uint64_t>(StreamTag::calibration), i);
      const double u = rng.uniform();
      // Poisson GF: f'(x) = f(qx) + e^{-x}, x in (0.1, 100).
      {
        const Real x = Real::from_double(0.1 + 99.9 * u, bits);
        worst[0] = std::max(worst[0], rel_residual(gf.eval(x, 1), gf.eval(q * x) + exp(-x)));
      }
      // Laplace transform: f*(s) = s f*(qs) + s/(1+s), s in (0.1, 10).
      const Real s = Real::from_double(0.1 + 9.9 * u, bits);
      worst[1] = std::max(worst[1], rel_residual(laplace_star_eval(s, params, ctx),
                                                 s * laplace_star_eval(q * s, params, ctx) + s / (s + 1)));
      // Bilateral sum: F(s) = s F(qs).
      worst[2] = std::max(worst[2], rel_residual(theta_F(s, 0, params, ctx), s * theta_F(q * s, 0, params, ctx)));
      // theta(x) = x theta(qx).
      worst[3] = std::max(worst[3], rel_residual(theta_bound(s, params, ctx), s * theta_bound(q * s, params, ctx)));
      // Pantograph series: M'(x) = M(qx), x in (0, 20).
      const Real x = Real::from_double(20 * u, bits);
      worst[4] = std::max(worst[4], rel_residual(m_series(x, 1, params, ctx), m_series(q * x, 0, params, ctx)));
    }
  }
  const char* names[5] = {"f~", "f*", "F", "theta", "M"};
  for (int k = 0; k < 5; ++k) {
    o.require(worst[k] < tol, names[k]);
    o.detail << names[k] << "=" << sci(worst[k], 1) << " ";
  }
  const double t = seconds_since(t0);
  o.require(t < kCrit4Seconds, "runtime");
  o.detail << "(tol " << sci(tol, 1) << ", " << fixed(t, 1) << " s)";
}

void criterion5(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> ns = {500, 1000, 2000, 5000};
  const NumericContext ctx(256);
  for (const auto& ps : {"1/3", "1/2", "2/3"}) {
    const ModelParams params = ModelParams::parse(ps);
    const auto mu = mu_recurrence(ns.back(), params, ctx.field());
    std::vector<double> ratios;
    for (auto n : ns) ratios.push_back((mu_leading(Real(static_cast<long>(n), 256), params, ctx).value / mu[n]).to_double());
    bool band = true;
    for (double r : ratios) band = band && r >= kBandLow && r <= kBandHigh;
    o.require(improves_toward(ratios, 1.0), std::string("trend at p=") + ps);
    o.require(band, std::string("band at p=") + ps);
    o.detail << "p=" << ps << " ratios";
    for (double r : ratios) o.detail << " " << fixed(r, 4);
    // Diagnostic only: the saddle-point leading term at the largest n.
    const Real x(static_cast<long>(ns.back()), 256);
    o.detail << " (saddle form " << fixed((saddle_leading(x, params, ctx).value / mu[ns.back()]).to_double(), 4) << "); ";
  }
  const ModelParams half = ModelParams::parse("1/2");
  const unsigned bits = required_precision(400) + 64;
  PoissonGF gf(half, NumericContext(bits));
  const auto mu = mu_recurrence(400, half, RealField{bits});
  o.detail << "charlier";
  for (long n : {100, 200, 400}) {
    const double plain = abs(gf.eval(Real(n, bits)) / mu[n] - 1).to_double();
    const double two = abs(charlier_correction(n, 2, gf).value / mu[n] - 1).to_double();
    o.require(two < plain, "charlier at n=" + std::to_string(n));
    o.detail << " n=" << n << " " << sci(plain, 2) << "->" << sci(two, 2);
  }
  const double t = seconds_since(t0);
  o.require(t < kCrit5Seconds, "runtime");
  o.detail << "; " << fixed(t, 1) << " s";
}

void criterion6(Outcome& o) {
  const ModelParams params = ModelParams::parse("1/2");
  const std::vector<long> ns = {500, 1000, 2000};
  const auto table = central_moments(2000, 2, params, RealField{256});
  const unsigned bits = required_precision(2000) + 64;
  PoissonGF gf(params, NumericContext(bits));
  std::vector<double> toll_ratio, var_ratio, mid_ratio;
  const Real p = params.p_real(bits), q = params.q_real(bits);
  for (long n : ns) {
    const VarianceEstimate v = variance_asymptotic(n, gf);
    // Diagnostic only: T_{n,2} against p q n f'(qn)^2, the form before the final simplification.
    const Real fp = gf.eval(q * Real(n, bits), 1);
    mid_ratio.push_back((table.toll[2][n] / (p * q * Real(n, bits) * fp * fp)).to_double());
    toll_ratio.push_back((table.toll[2][n] / v.toll2).to_double());
    var_ratio.push_back((table.central[2][n] / v.sigma2).to_double());
  }
  auto in_band = [](double r) { return r >= kBandLow && r <= kBandHigh; };
  o.require(improves_toward(toll_ratio, 1.0), "T_{n,2} trend");
  o.require(improves_toward(var_ratio, 1.0), "variance trend");
  o.require(in_band(toll_ratio.back()) && in_band(var_ratio.back()), "final band");
  o.detail << "T2 ratios";
  for (double r : toll_ratio) o.detail << " " << fixed(r, 4);
  o.detail << "; var ratios";
  for (double r : var_ratio) o.detail << " " << fixed(r, 4);
  o.detail << "; T2 vs pqn f'(qn)^2";
  for (double r : mid_ratio) o.detail << " " << fixed(r, 4);
}

void criterion7(Outcome& o) {
  const ModelParams params = ModelParams::parse("1/2");
  const std::vector<std::size_t> exact_ns = {250, 500, 750, 1000, 1250, 1500, 1750, 2000};
  const auto table = central_moments(2000, 4, params, RealField{256});
  CampaignConfig c;
  c.kind = CostKind::Y;
  c.params = params;
  c.n_grid = {50, 100, 200};
  c.replicates = 10000;
  c.master_seed = kSeed;
  const auto summaries = run_campaign(c).summaries;
  const KsCalibration cal = calibrate_ks(c.replicates, 1000, kSeed);
  const NormalityReport rep = normality_report(summaries, cal.quantile_99, &table, exact_ns);
  o.require(rep.exact->skew_shrinks, "exact skewness");
  o.require(rep.exact->kurt_to_3, "exact kurtosis");
  o.require(rep.skew_decreasing, "MC skewness");
  o.require(rep.kurtosis_decreasing, "MC kurtosis");
  o.require(rep.ks_pass, "KS");
  o.detail << "exact skew " << fixed(rep.exact->skew.front()) << "->" << fixed(rep.exact->skew.back()) << ", kurt "
           << fixed(rep.exact->kurt.front()) << "->" << fixed(rep.exact->kurt.back()) << "; MC skew";
  for (const auto& s : rep.summaries) o.detail << " " << fixed(s.skewness, 3);
  o.detail << ", ex.kurt";
  for (const auto& s : rep.summaries) o.detail << " " << fixed(s.excess_kurtosis, 3);
  o.detail << "; KS " << fixed(rep.ks_at_largest) << " < " << fixed(rep.ks_threshold);
}

void criterion8(Outcome& o) {
  const auto scaled = nu_factorial_scaled(60);
  bool integral = true;
  for (const auto& v : scaled) integral = integral && v.get_den() == 1;
  o.require(integral, "nu_n n! integral");

  const unsigned bits = 256;
  const std::vector<std::size_t> fit_ns = {2500, 5000, 10000, 20000, 40000};
  const auto nu = nu_recurrence(40000, RealField{bits});
  const ZMeanSeries reference = z_mean_reference(bits);
  ZMeanSeries fitted = reference;
  fitted.C = fit_z_constant(fit_ns, nu, reference);
  const double rel = (z_mean_asymptotic(Real(10000, bits), fitted) / nu[10000] - 1).to_double();
  o.require(std::abs(rel) < kZRelError, "relative error at n=1e4");
  const double c_fit = fitted.C.to_double();
  const int digits = static_cast<int>(std::floor(-std::log10(std::abs(c_fit - kReferenceC) / kReferenceC)));
  o.detail << "nu_n n! integral n<=60; fitted C=" << std::setprecision(10) << c_fit << " vs reference " << kReferenceC << " ("
           << digits << " digits";
  if (digits < kZDigits) o.detail << ", discrepancy reported: closed-form C=" << z_constant_closed(bits).to_string(12);
  o.detail << "); rel.err at 1e4 " << sci(rel, 3);
  // Diagnostic only: all four series coefficients fitted.
  const ZMeanSeries full = fit_z_series(fit_ns, nu);
  o.detail << " (4-coefficient fit: a=" << fixed(full.a.to_double(), 5) << " rel.err "
           << sci((z_mean_asymptotic(Real(10000, bits), full) / nu[10000] - 1).to_double(), 2) << ");";

  CampaignConfig c;
  c.kind = CostKind::Z;
  c.n_grid = {64};
  c.replicates = 10000;
  c.master_seed = kSeed;
  c.keep_samples = true;
  const auto res = run_campaign(c);
  const double nu64 = nu[64].to_double();
  std::vector<double> w2;
  for (const auto& s : res.samples[0]) w2.push_back(std::pow(static_cast<double>(s.cost) / nu64, 2));
  const SampleMoments m = sample_moments(w2);
  const double se = std::sqrt(m.variance / static_cast<double>(w2.size()));
  const double z = (m.mean - 4.0 / 3.0) / se;
  o.require(std::abs(z) <= kMcStderrs8, "second moment at n=64");
  const auto raw = z_raw_moments(64, 2, RealField{bits});
  const double finite = (raw[2][64] / (nu[64] * nu[64])).to_double();
  o.detail << " E(Z/nu)^2 at 64 = " << fixed(m.mean) << " (z=" << fixed(z, 2) << " vs 4/3; exact finite-n value "
           << fixed(finite) << ", z=" << fixed((m.mean - finite) / se, 2) << ");";

  const SeriesIdentity id = zeta_ode_coefficients(8);
  o.require(id.lhs == id.rhs, "zeta series identity");
  o.detail << " zeta identity to order 8 " << (id.lhs == id.rhs ? "exact" : "broken");
}

void criterion9(Outcome& o) {
  double worst = 0, worst_saddle = 0;
  const ModelParams params = ModelParams::parse("1/2");
  for (int k = 0; k <= 12; ++k) {
    const Real y = pow(Real(10, kLambertBits), static_cast<long>(k));
    const Real w = lambert_w(y);
    worst = std::max(worst, (abs(w * exp(w) - y) / y).to_double());
    const SaddleData s = saddle(y * 10, params);
    worst_saddle = std::max(worst_saddle, abs(saddle_residual(s, params)).to_double());
  }
  const double saddle_tol = std::ldexp(1.0, -static_cast<int>(kLambertBits) + 8);
  o.require(worst < kLambertResidual, "W residual");
  o.require(worst_saddle < saddle_tol, "saddle residual");
  o.detail << "max W residual " << sci(worst, 2) << ", max saddle residual " << sci(worst_saddle, 2) << " (tol "
           << sci(saddle_tol, 1) << ")";
}

void criterion10(Outcome& o) {
  const std::vector<std::vector<std::string>> runs = {
      {"simulate", "--kind", "Y", "--p", "1/2", "--n-grid", "50,100", "--R", "2000"},
      {"simulate", "--kind", "X", "--p", "1/3", "--n-grid", "20,40", "--R", "300", "--format", "json"},
      {"simulate", "--kind", "Z", "--n-grid", "16,32", "--R", "2000"},
  };
  std::size_t identical = 0;
  for (const auto& base : runs) {
    std::string reference;
    for (const char* threads : {"1", "4", "8"}) {
      std::vector<std::string> args = {"mislab"};
      args.insert(args.end(), base.begin(), base.end());
      args.insert(args.end(), {"--seed", std::to_string(kSeed), "--threads", threads});
      std::ostringstream out, err;
      const int rc = cli::run(args, out, err);
      o.require(rc == 0, "campaign exit status");
      if (std::string(threads) == "1") reference = out.str();
      else if (out.str() == reference) ++identical;
      else o.require(false, base[2] + " report differs at " + threads + " threads");
    }
  }
  o.detail << identical << "/6 reruns byte-identical to the 1-thread report (X, Y, Z)";
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "--expect-fail" || a == "--only") && i + 1 < argc) {
      for (auto v : parse_grid(argv[++i])) (a == "--only" ? only : expect_fail).insert(static_cast<int>(v));
    } else {
      std::cerr << "usage: mislab_acceptance [--only a,b] [--expect-fail a,b]\n";
      return 1;
    }
  }
  const std::vector<std::function<void(Outcome&)>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                               criterion6, criterion7, criterion8, criterion9, criterion10};
  int unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      criteria[k](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const bool expected = expect_fail.count(id) > 0;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << (expected ? " (expected FAIL)" : "") << " | "
              << o.detail.str() << std::endl;
    if (o.pass == expected) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
