#ifndef MISLAB_STATS_HPP
#define MISLAB_STATS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mislab/bignum.hpp"
#include "mislab/exact_engine.hpp"
#include "mislab/model.hpp"
#include "mislab/search_cost.hpp"

namespace mislab {

/// Moments of one sample, accumulated in long double in index order.
struct SampleMoments {
  std::size_t count = 0;
  double mean = 0;
  double variance = 0;  // unbiased
  double skewness = 0;  // m3 / m2^{3/2}
  double excess_kurtosis = 0;  // m4 / m2^2 - 3
  double m4_minus_m2sq = 0;    // central m4 - m2^2 (for the variance stderr)
};
SampleMoments sample_moments(const std::vector<double>& xs);

/// sup_z |F_n(z) - Phi(z)| after standardising by the sample mean and standard deviation.
double ks_distance_normal(std::vector<double> xs);
double normal_cdf(double z);

struct SimulationSummary {
  CostKind kind = CostKind::Y;
  std::size_t n = 0;
  std::string p;  // empty for Z
  std::size_t replicates = 0;
  double mean = 0;
  double variance = 0;
  double skewness = 0;
  double excess_kurtosis = 0;
  double ks_distance = 0;
  double mean_stderr = 0;
  double variance_stderr = 0;
  double skewness_stderr = 0;
  double kurtosis_stderr = 0;
  double ci_low = 0;   // mean +- 1.96 stderr
  double ci_high = 0;
  std::uint64_t master_seed = 0;
  std::size_t budget_failures = 0;
  bool partial = false;
};

SimulationSummary summarize(CostKind kind, std::size_t n, const std::string& p, std::uint64_t master_seed,
                            const std::vector<CostSample>& samples, std::size_t budget_failures = 0);

struct CampaignConfig {
  CostKind kind = CostKind::Y;
  std::vector<std::size_t> n_grid;
  std::optional<ModelParams> params;  // required for X and Y
  std::size_t replicates = 1000;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  std::uint64_t budget = kDefaultBudget;
  std::size_t table_cutoff = 16;
  bool keep_samples = false;
};

struct CampaignResult {
  std::vector<SimulationSummary> summaries;
  std::vector<std::vector<CostSample>> samples;  // per grid point, when keep_samples
};

/// Stream index of replicate i at grid point n: (master, tag(kind, n, p), i).
std::uint64_t campaign_tag(CostKind kind, std::size_t n, const std::string& p);

/// Runs R replicates per grid point on `threads` workers. Replicate i always
/// uses the same RNG stream, so results do not depend on the thread count.
/// Replicates that exceed the budget are dropped and the summary is flagged partial.
CampaignResult run_campaign(const CampaignConfig& config);

/// Per-replicate costs of one grid point in replicate order; replicates that hit
/// the budget are counted and left out.
struct ReplicateBatch {
  std::vector<CostSample> samples;
  std::size_t budget_failures = 0;
};
ReplicateBatch run_replicates(const CampaignConfig& config, std::size_t n);

// ---------------------------------------------------------------------------

/// Null distribution of the composite KS statistic for R standard normal variates.
struct KsCalibration {
  std::size_t sample_size = 0;
  std::size_t repetitions = 0;
  double quantile_95 = 0;
  double quantile_99 = 0;
};
KsCalibration calibrate_ks(std::size_t sample_size, std::size_t repetitions, std::uint64_t seed, unsigned threads = 1);

struct MomentTrend {
  std::vector<std::size_t> ns;
  std::vector<double> skew;      // M_{n,3} / sigma^3
  std::vector<double> kurt;      // M_{n,4} / sigma^4
  std::vector<double> fifth;     // M_{n,5} / sigma^5 (if m_max >= 5)
  std::vector<double> sixth;     // M_{n,6} / sigma^6 (if m_max >= 6)
  bool skew_shrinks = false;
  bool kurt_to_3 = false;
  bool fifth_shrinks = true;
  bool sixth_to_15 = true;
};
MomentTrend exact_moment_trend(const MomentTable<Real>& table, const std::vector<std::size_t>& ns);

struct NormalityReport {
  std::vector<SimulationSummary> summaries;
  bool skew_decreasing = false;
  bool kurtosis_decreasing = false;
  double ks_threshold = 0.05;
  double ks_at_largest = 0;
  bool ks_pass = false;
  std::optional<MomentTrend> exact;
  bool pass() const;
};
/// Throws InsufficientData for fewer than 3 grid points.
NormalityReport normality_report(const std::vector<SimulationSummary>& summaries, double ks_threshold,
                                 const MomentTable<Real>* exact_table, const std::vector<std::size_t>& exact_ns);

struct ZLimitRow {
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::vector<double> moments;       // sample E[(Z_n/nu_n)^k], k = 1..4
  std::vector<double> stderrs;
  std::vector<double> exact_finite;  // exact E[(Z_n/nu_n)^k]
  std::vector<bool> within;          // |moment - zeta_k| <= 4 stderr
  double skewness = 0;
  double skewness_stderr = 0;
};
struct ZLimitReport {
  std::vector<double> zeta;  // zeta_0..zeta_4
  double zeta_skewness = 0;
  double zeta_excess_kurtosis = 0;
  std::vector<ZLimitRow> rows;
  bool non_normal = false;  // sample skewness bounded away from 0
};
/// `samples[i]` are Z draws at n = ns[i]. Throws InsufficientData for fewer than 2 grid points.
ZLimitReport z_limit_report(const std::vector<std::size_t>& ns, const std::vector<std::vector<CostSample>>& samples);

struct VarianceRatioRow {
  std::size_t n = 0;
  double ratio = 0;
  double ci_low = 0;
  double ci_high = 0;
  double var_x = 0;
  double var_y = 0;
};
struct VarianceRatioReport {
  std::vector<VarianceRatioRow> rows;
  double growth_exponent = 0;  // least-squares slope of log ratio on log n
};
/// Bootstrap (500 resamples, seeded) CIs of Var(X_n)/Var(Y_n).
VarianceRatioReport x_vs_y_variance(const std::vector<std::size_t>& ns, const std::vector<std::vector<CostSample>>& x,
                                    const std::vector<std::vector<CostSample>>& y, std::uint64_t seed,
                                    std::size_t resamples = 500);

// ---------------------------------------------------------------------------

void write_summary_json(std::ostream& out, const std::vector<SimulationSummary>& summaries);
void write_summary_csv(std::ostream& out, const std::vector<SimulationSummary>& summaries);

}  // namespace mislab

#endif  // MISLAB_STATS_HPP
