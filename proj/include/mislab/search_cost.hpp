#ifndef MISLAB_SEARCH_COST_HPP
#define MISLAB_SEARCH_COST_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mislab/graph.hpp"
#include "mislab/model.hpp"
#include "mislab/rng.hpp"

namespace mislab {

enum class CostKind { X, Y, Z };

std::string to_string(CostKind kind);
CostKind parse_cost_kind(std::string_view text);

/// One draw of a cost variable. `alpha` is set for X samples only.
struct CostSample {
  CostKind kind = CostKind::X;
  std::size_t n = 0;
  std::uint64_t cost = 0;
  std::optional<std::size_t> alpha;
  std::uint64_t replicate_id = 0;
  std::uint64_t seed = 0;
};

/// Default guard on leaf calls per sample.
inline constexpr std::uint64_t kDefaultBudget = 1'000'000'000ULL;

struct MisResult {
  std::size_t alpha = 0;
  std::uint64_t cost = 0;
};

/// Naive exhaustive MIS search alpha(G) = max(alpha(G-v), 1 + alpha(G-N*(v))),
/// pivoting on the lowest-labelled alive vertex, without memoisation.
///
/// Cost counts base-level calls: 0 for an empty alive set, 1 for a single
/// vertex, and the sum of both branches otherwise. The recursion runs on an
/// explicit stack of alive-sets, one per depth. Throws BudgetExceeded once the
/// cost passes `budget`.
MisResult run_exhaustive_mis(const GraphInstance& g, std::uint64_t budget = kDefaultBudget);

/// Exact sampler for the idealised recurrences
///   C(0) = 0, C(1) = 1, C(n) = C(n-1) + C'(K_n),
/// with C' an independent copy and K_n the size of the second subproblem:
/// K_n ~ Binomial(n-1, q) for Y, K_n ~ Uniform{0..n-1} for Z.
///
/// For sizes up to `table_cutoff` the exact cost distribution is tabulated
/// (double precision) and sampled by inversion; above it the recurrence is
/// unrolled along its first argument. With table_cutoff = 1 this is the plain
/// recursion. Tables are immutable after construction, so one sampler can be
/// shared by threads, each with its own RNG stream.
class RecursiveCostSampler {
 public:
  static RecursiveCostSampler for_y(const ModelParams& params, std::size_t max_n, std::size_t table_cutoff = 16);
  static RecursiveCostSampler for_z(std::size_t max_n, std::size_t table_cutoff = 16);

  CostKind kind() const { return kind_; }
  std::size_t max_n() const { return max_n_; }
  std::size_t table_cutoff() const { return cutoff_; }

  /// Throws std::out_of_range for n > max_n and BudgetExceeded past `budget`.
  std::uint64_t sample(std::size_t n, Xoshiro256& rng, std::uint64_t budget = kDefaultBudget) const;

  /// Tabulated exact distribution of C(n) for n <= table_cutoff (index = cost value).
  const std::vector<double>& cost_pmf(std::size_t n) const { return pmf_.at(n); }

 private:
  RecursiveCostSampler(CostKind kind, std::size_t max_n, std::size_t cutoff);
  void build_tables();
  std::size_t draw_split(std::size_t n, Xoshiro256& rng) const;
  std::uint64_t draw_tabulated(std::size_t n, Xoshiro256& rng) const;
  // Probability that the second subproblem has size k, 0 <= k < n.
  double split_weight(std::size_t n, std::size_t k) const;

  CostKind kind_;
  std::size_t max_n_;
  std::size_t cutoff_;
  std::vector<std::vector<double>> split_cdf_;  // Y only
  std::vector<std::vector<double>> split_pmf_;  // Y only
  std::vector<std::vector<double>> pmf_;
  std::vector<std::vector<double>> cdf_;
};

/// One Y_n draw (builds a sampler for this call; prefer RecursiveCostSampler for campaigns).
std::uint64_t sample_Y(std::size_t n, const ModelParams& params, Xoshiro256& rng, std::uint64_t budget = kDefaultBudget);
/// One Z_n draw.
std::uint64_t sample_Z(std::size_t n, Xoshiro256& rng, std::uint64_t budget = kDefaultBudget);

/// CSV with header `kind,n,p,replicate,cost,alpha,seed`; alpha empty for Y/Z.
void write_samples_csv(std::ostream& out, const std::vector<CostSample>& samples, const ModelParams* params);

}  // namespace mislab

#endif  // MISLAB_SEARCH_COST_HPP
