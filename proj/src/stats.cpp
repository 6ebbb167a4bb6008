#include "mislab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mislab/asymptotics.hpp"
#include "mislab/graph.hpp"
#include "mislab/rng.hpp"

namespace mislab {

SampleMoments sample_moments(const std::vector<double>& xs) {
  SampleMoments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  long double sum = 0;
  for (double x : xs) sum += x;
  const long double mean = sum / static_cast<long double>(xs.size());
  long double s2 = 0, s3 = 0, s4 = 0;
  for (double x : xs) {
    const long double d = x - mean;
    const long double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const auto n = static_cast<long double>(xs.size());
  const long double m2 = s2 / n, m3 = s3 / n, m4 = s4 / n;
  m.mean = static_cast<double>(mean);
  m.variance = xs.size() > 1 ? static_cast<double>(s2 / (n - 1)) : 0.0;
  if (m2 > 0) {
    m.skewness = static_cast<double>(m3 / std::pow(m2, 1.5L));
    m.excess_kurtosis = static_cast<double>(m4 / (m2 * m2) - 3);
  }
  m.m4_minus_m2sq = static_cast<double>(m4 - m2 * m2);
  return m;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_distance_normal(std::vector<double> xs) {
  if (xs.size() < 2) return 0;
  const SampleMoments m = sample_moments(xs);
  const double sd = std::sqrt(m.variance);
  if (sd == 0) return 1.0 - normal_cdf(0.0);
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0;
  std::size_t a = 0;
  while (a < xs.size()) {
    std::size_t b = a;
    while (b < xs.size() && xs[b] == xs[a]) ++b;
    const double phi = normal_cdf((xs[a] - m.mean) / sd);
    d = std::max({d, std::abs(static_cast<double>(b) / n - phi), std::abs(static_cast<double>(a) / n - phi)});
    a = b;
  }
  return d;
}

SimulationSummary summarize(CostKind kind, std::size_t n, const std::string& p, std::uint64_t master_seed,
                            const std::vector<CostSample>& samples, std::size_t budget_failures) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(static_cast<double>(s.cost));
  const SampleMoments m = sample_moments(xs);
  SimulationSummary out;
  out.kind = kind;
  out.n = n;
  out.p = kind == CostKind::Z ? std::string() : p;
  out.replicates = xs.size();
  out.mean = m.mean;
  out.variance = m.variance;
  out.skewness = m.skewness;
  out.excess_kurtosis = m.excess_kurtosis;
  out.ks_distance = ks_distance_normal(xs);
  const double R = static_cast<double>(std::max<std::size_t>(xs.size(), 1));
  out.mean_stderr = std::sqrt(m.variance / R);
  out.variance_stderr = std::sqrt(std::max(m.m4_minus_m2sq, 0.0) / R);
  out.skewness_stderr = std::sqrt(6.0 / R);
  out.kurtosis_stderr = std::sqrt(24.0 / R);
  out.ci_low = out.mean - 1.96 * out.mean_stderr;
  out.ci_high = out.mean + 1.96 * out.mean_stderr;
  out.master_seed = master_seed;
  out.budget_failures = budget_failures;
  out.partial = budget_failures > 0;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t kind_tag(CostKind kind) {
  switch (kind) {
    case CostKind::X: return static_cast<std::uint64_t>(StreamTag::graph);
    case CostKind::Y: return static_cast<std::uint64_t>(StreamTag::y_cost);
    case CostKind::Z: return static_cast<std::uint64_t>(StreamTag::z_cost);
  }
  return 0;
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  return mix64(master ^ mix64(tag ^ mix64(index)));
}

// Runs body(i) for i in [0, count) on `threads` workers with a static
// interleaved split; the first exception is rethrown after joining.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::uint64_t campaign_tag(CostKind kind, std::size_t n, const std::string& p) {
  return kind_tag(kind) ^ mix64(static_cast<std::uint64_t>(n) ^ mix64(fnv1a(p)));
}

ReplicateBatch run_replicates(const CampaignConfig& config, std::size_t n) {
  if (config.kind != CostKind::Z && !config.params) throw DomainError("campaign: p is required for X and Y");
  const std::string p = config.kind == CostKind::Z ? std::string() : config.params->p_string();
  const std::uint64_t tag = campaign_tag(config.kind, n, p);
  const std::size_t R = config.replicates;

  std::optional<RecursiveCostSampler> sampler;
  if (config.kind == CostKind::Y) sampler = RecursiveCostSampler::for_y(*config.params, n, config.table_cutoff);
  if (config.kind == CostKind::Z) sampler = RecursiveCostSampler::for_z(n, config.table_cutoff);

  std::vector<CostSample> all(R);
  std::vector<char> failed(R, 0);
  parallel_for(R, config.threads, [&](std::size_t i) {
    const std::uint64_t seed = stream_seed(config.master_seed, tag, i);
    Xoshiro256 rng = Xoshiro256::stream(config.master_seed, tag, i);
    CostSample s;
    s.kind = config.kind;
    s.n = n;
    s.replicate_id = i;
    s.seed = seed;
    try {
      if (config.kind == CostKind::X) {
        const GraphInstance g = sample_gnp(n, *config.params, rng, seed);
        const MisResult r = run_exhaustive_mis(g, config.budget);
        s.cost = r.cost;
        s.alpha = r.alpha;
      } else {
        s.cost = sampler->sample(n, rng, config.budget);
      }
    } catch (const BudgetExceeded&) {
      failed[i] = 1;
    }
    all[i] = std::move(s);
  });

  ReplicateBatch batch;
  batch.samples.reserve(R);
  for (std::size_t i = 0; i < R; ++i) {
    if (failed[i]) ++batch.budget_failures;
    else batch.samples.push_back(std::move(all[i]));
  }
  return batch;
}

CampaignResult run_campaign(const CampaignConfig& config) {
  if (config.replicates < 1) throw DomainError("campaign: R must be >= 1");
  CampaignResult result;
  const std::string p = config.params ? config.params->p_string() : std::string();
  for (std::size_t n : config.n_grid) {
    ReplicateBatch batch = run_replicates(config, n);
    result.summaries.push_back(summarize(config.kind, n, p, config.master_seed, batch.samples, batch.budget_failures));
    if (config.keep_samples) result.samples.push_back(std::move(batch.samples));
  }
  return result;
}

// ---------------------------------------------------------------------------

KsCalibration calibrate_ks(std::size_t sample_size, std::size_t repetitions, std::uint64_t seed, unsigned threads) {
  std::vector<double> stats(repetitions);
  const auto tag = static_cast<std::uint64_t>(StreamTag::calibration) ^ mix64(sample_size);
  parallel_for(repetitions, threads, [&](std::size_t r) {
    Xoshiro256 rng = Xoshiro256::stream(seed, tag, r);
    std::vector<double> xs(sample_size);
    // Box-Muller on (0,1] uniforms.
    for (std::size_t i = 0; i < sample_size; i += 2) {
      const double u1 = 1.0 - rng.uniform();
      const double u2 = rng.uniform();
      const double rad = std::sqrt(-2.0 * std::log(u1));
      xs[i] = rad * std::cos(2 * M_PI * u2);
      if (i + 1 < sample_size) xs[i + 1] = rad * std::sin(2 * M_PI * u2);
    }
    stats[r] = ks_distance_normal(std::move(xs));
  });
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double q) {
    if (stats.empty()) return 0.0;
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(stats.size()))) - 1;
    return stats[std::min(idx, stats.size() - 1)];
  };
  return {sample_size, repetitions, quantile(0.95), quantile(0.99)};
}

MomentTrend exact_moment_trend(const MomentTable<Real>& table, const std::vector<std::size_t>& ns) {
  MomentTrend t;
  t.ns = ns;
  for (std::size_t n : ns) {
    const Real& s2 = table.central.at(2).at(n);
    const Real sd = sqrt(s2);
    auto standardized = [&](std::size_t m) { return (table.central.at(m).at(n) / pow(sd, static_cast<long>(m))).to_double(); };
    t.skew.push_back(standardized(3));
    t.kurt.push_back(standardized(4));
    if (table.m_max >= 5) t.fifth.push_back(standardized(5));
    if (table.m_max >= 6) t.sixth.push_back(standardized(6));
  }
  t.skew_shrinks = improves_toward(t.skew, 0.0);
  t.kurt_to_3 = improves_toward(t.kurt, 3.0);
  if (!t.fifth.empty()) t.fifth_shrinks = improves_toward(t.fifth, 0.0);
  if (!t.sixth.empty()) t.sixth_to_15 = improves_toward(t.sixth, 15.0);
  return t;
}

bool NormalityReport::pass() const {
  bool ok = skew_decreasing && kurtosis_decreasing && ks_pass;
  if (exact) ok = ok && exact->skew_shrinks && exact->kurt_to_3;
  return ok;
}

NormalityReport normality_report(const std::vector<SimulationSummary>& summaries, double ks_threshold,
                                 const MomentTable<Real>* exact_table, const std::vector<std::size_t>& exact_ns) {
  if (summaries.size() < 3) throw InsufficientData("normality_report: need at least 3 grid points");
  NormalityReport rep;
  rep.summaries = summaries;
  std::sort(rep.summaries.begin(), rep.summaries.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  std::vector<double> skew, kurt;
  for (const auto& s : rep.summaries) {
    skew.push_back(s.skewness);
    kurt.push_back(s.excess_kurtosis);
  }
  rep.skew_decreasing = improves_toward(skew, 0.0);
  rep.kurtosis_decreasing = improves_toward(kurt, 0.0);
  rep.ks_threshold = ks_threshold;
  rep.ks_at_largest = rep.summaries.back().ks_distance;
  rep.ks_pass = rep.ks_at_largest < ks_threshold;
  if (exact_table) rep.exact = exact_moment_trend(*exact_table, exact_ns);
  return rep;
}

ZLimitReport z_limit_report(const std::vector<std::size_t>& ns, const std::vector<std::vector<CostSample>>& samples) {
  if (ns.size() < 2 || samples.size() != ns.size()) throw InsufficientData("z_limit_report: need at least 2 grid points");
  constexpr std::size_t kMoments = 4;
  ZLimitReport rep;
  const auto zeta = zeta_moments(kMoments);
  for (const auto& z : zeta) rep.zeta.push_back(z.get_d());
  {
    const Rational var = zeta[2] - 1;
    const Rational m3 = zeta[3] - 3 * zeta[2] + 2;
    const Rational m4 = zeta[4] - 4 * zeta[3] + 6 * zeta[2] - 3;
    rep.zeta_skewness = m3.get_d() / std::pow(var.get_d(), 1.5);
    rep.zeta_excess_kurtosis = Rational(m4 / (var * var)).get_d() - 3;
  }
  const std::size_t max_n = *std::max_element(ns.begin(), ns.end());
  const RealField field{256};
  const auto nu = nu_recurrence(max_n, field);
  const auto raw = z_raw_moments(max_n, kMoments, field);

  for (std::size_t i = 0; i < ns.size(); ++i) {
    const std::size_t n = ns[i];
    ZLimitRow row;
    row.n = n;
    row.replicates = samples[i].size();
    if (row.replicates < 2) throw InsufficientData("z_limit_report: too few samples");
    const double nu_n = nu[n].to_double();
    std::vector<double> w;
    w.reserve(samples[i].size());
    for (const auto& s : samples[i]) w.push_back(static_cast<double>(s.cost) / nu_n);
    for (std::size_t k = 1; k <= kMoments; ++k) {
      std::vector<double> pw(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) pw[j] = std::pow(w[j], static_cast<double>(k));
      const SampleMoments m = sample_moments(pw);
      row.moments.push_back(m.mean);
      row.stderrs.push_back(std::sqrt(m.variance / static_cast<double>(pw.size())));
      row.exact_finite.push_back((raw[k][n] / pow(nu[n], static_cast<long>(k))).to_double());
      row.within.push_back(std::abs(m.mean - rep.zeta[k]) <= 4 * row.stderrs.back());
    }
    const SampleMoments m = sample_moments(w);
    row.skewness = m.skewness;
    row.skewness_stderr = std::sqrt(6.0 / static_cast<double>(w.size()));
    rep.rows.push_back(std::move(row));
  }
  const auto& last = rep.rows.back();
  rep.non_normal = last.skewness > std::max(4 * last.skewness_stderr, 0.5 * rep.zeta_skewness);
  return rep;
}

VarianceRatioReport x_vs_y_variance(const std::vector<std::size_t>& ns, const std::vector<std::vector<CostSample>>& x,
                                    const std::vector<std::vector<CostSample>>& y, std::uint64_t seed,
                                    std::size_t resamples) {
  if (ns.empty() || x.size() != ns.size() || y.size() != ns.size())
    throw InsufficientData("x_vs_y_variance: need paired X and Y campaigns");
  VarianceRatioReport rep;
  auto costs = [](const std::vector<CostSample>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& s : v) out.push_back(static_cast<double>(s.cost));
    return out;
  };
  std::vector<double> log_n, log_r;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto xs = costs(x[i]);
    const auto ys = costs(y[i]);
    if (xs.size() < 2 || ys.size() < 2) throw InsufficientData("x_vs_y_variance: too few samples");
    VarianceRatioRow row;
    row.n = ns[i];
    row.var_x = sample_moments(xs).variance;
    row.var_y = sample_moments(ys).variance;
    row.ratio = row.var_x / row.var_y;
    std::vector<double> boot(resamples);
    const auto tag = static_cast<std::uint64_t>(StreamTag::bootstrap) ^ mix64(ns[i]);
    std::vector<double> bx(xs.size()), by(ys.size());
    for (std::size_t b = 0; b < resamples; ++b) {
      Xoshiro256 rng = Xoshiro256::stream(seed, tag, b);
      for (auto& v : bx) v = xs[rng.below(xs.size())];
      for (auto& v : by) v = ys[rng.below(ys.size())];
      boot[b] = sample_moments(bx).variance / sample_moments(by).variance;
    }
    std::sort(boot.begin(), boot.end());
    if (!boot.empty()) {
      row.ci_low = boot[static_cast<std::size_t>(0.025 * static_cast<double>(resamples))];
      row.ci_high = boot[std::min(resamples - 1, static_cast<std::size_t>(0.975 * static_cast<double>(resamples)))];
    }
    if (row.ratio > 0) {
      log_n.push_back(std::log(static_cast<double>(row.n)));
      log_r.push_back(std::log(row.ratio));
    }
    rep.rows.push_back(row);
  }
  if (log_n.size() >= 2) {
    const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / static_cast<double>(log_n.size());
    const double my = std::accumulate(log_r.begin(), log_r.end(), 0.0) / static_cast<double>(log_r.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      sxy += (log_n[i] - mx) * (log_r[i] - my);
      sxx += (log_n[i] - mx) * (log_n[i] - mx);
    }
    rep.growth_exponent = sxx > 0 ? sxy / sxx : 0;
  }
  return rep;
}

// ---------------------------------------------------------------------------

void write_summary_json(std::ostream& out, const std::vector<SimulationSummary>& summaries) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(s.kind);
    j["n"] = s.n;
    j["p"] = s.p;
    j["R"] = s.replicates;
    j["mean"] = s.mean;
    j["variance"] = s.variance;
    j["skewness"] = s.skewness;
    j["kurtosis"] = s.excess_kurtosis;
    j["ks"] = s.ks_distance;
    j["mean_stderr"] = s.mean_stderr;
    j["variance_stderr"] = s.variance_stderr;
    j["skewness_stderr"] = s.skewness_stderr;
    j["kurtosis_stderr"] = s.kurtosis_stderr;
    j["ci_low"] = s.ci_low;
    j["ci_high"] = s.ci_high;
    j["seed"] = s.master_seed;
    j["budget_failures"] = s.budget_failures;
    j["partial"] = s.partial;
    j["engine_version"] = kEngineVersion;
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SimulationSummary>& summaries) {
  out << "kind,n,p,R,mean,variance,skewness,kurtosis,ks,mean_stderr,variance_stderr,skewness_stderr,kurtosis_stderr,"
         "ci_low,ci_high,seed,budget_failures,partial,engine_version\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& s : summaries) {
    line.str("");
    line << to_string(s.kind) << ',' << s.n << ',' << s.p << ',' << s.replicates << ',' << s.mean << ',' << s.variance << ','
         << s.skewness << ',' << s.excess_kurtosis << ',' << s.ks_distance << ',' << s.mean_stderr << ','
         << s.variance_stderr << ',' << s.skewness_stderr << ',' << s.kurtosis_stderr << ',' << s.ci_low << ','
         << s.ci_high << ',' << s.master_seed << ',' << s.budget_failures << ',' << (s.partial ? "true" : "false") << ','
         << kEngineVersion << '\n';
    out << line.str();
  }
}

}  // namespace mislab
