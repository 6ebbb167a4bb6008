#include "mislab/search_cost.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mislab {

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::X: return "X";
    case CostKind::Y: return "Y";
    case CostKind::Z: return "Z";
  }
  return "?";
}

CostKind parse_cost_kind(std::string_view text) {
  if (text == "X" || text == "x") return CostKind::X;
  if (text == "Y" || text == "y") return CostKind::Y;
  if (text == "Z" || text == "z") return CostKind::Z;
  throw DomainError("unknown cost kind '" + std::string(text) + "' (expected X, Y or Z)");
}

MisResult run_exhaustive_mis(const GraphInstance& g, std::uint64_t budget) {
  const std::size_t n = g.n();
  if (n == 0) return {0, 0};
  const std::size_t w = g.words();

  // Depth never exceeds n + 1: every child has one fewer alive vertex.
  std::vector<std::uint64_t> pool((n + 2) * w, 0);
  struct Frame {
    std::uint8_t stage = 0;
    std::size_t pivot = 0;
    std::size_t excluded_alpha = 0;
  };
  std::vector<Frame> frames(n + 2);

  for (std::size_t v = 0; v < n; ++v) pool[v / 64] |= std::uint64_t{1} << (v % 64);

  std::uint64_t cost = 0;
  std::size_t returned = 0;
  std::size_t depth = 0;
  frames[0] = Frame{};

  for (;;) {
    Frame& f = frames[depth];
    const std::uint64_t* alive = pool.data() + depth * w;
    std::uint64_t* child = pool.data() + (depth + 1) * w;

    if (f.stage == 0) {
      std::size_t count = 0;
      std::size_t first_word = w;
      for (std::size_t i = 0; i < w && count < 2; ++i) {
        if (alive[i] != 0 && first_word == w) first_word = i;
        count += static_cast<std::size_t>(std::popcount(alive[i]));
      }
      if (count <= 1) {
        cost += count;
        if (cost > budget) throw BudgetExceeded("exhaustive MIS exceeded budget of " + std::to_string(budget) + " leaf calls");
        returned = count;
        if (depth == 0) break;
        --depth;
        continue;
      }
      f.pivot = first_word * 64 + static_cast<std::size_t>(std::countr_zero(alive[first_word]));
      std::copy(alive, alive + w, child);
      child[f.pivot / 64] &= ~(std::uint64_t{1} << (f.pivot % 64));
      f.stage = 1;
      frames[++depth] = Frame{};
      continue;
    }
    if (f.stage == 1) {
      f.excluded_alpha = returned;
      const auto nbr = g.neighbors(f.pivot);
      for (std::size_t i = 0; i < w; ++i) child[i] = alive[i] & ~nbr[i];
      child[f.pivot / 64] &= ~(std::uint64_t{1} << (f.pivot % 64));
      f.stage = 2;
      frames[++depth] = Frame{};
      continue;
    }
    returned = std::max(f.excluded_alpha, returned + 1);
    if (depth == 0) break;
    --depth;
  }
  return {returned, cost};
}

RecursiveCostSampler::RecursiveCostSampler(CostKind kind, std::size_t max_n, std::size_t cutoff)
    : kind_(kind), max_n_(max_n), cutoff_(std::max<std::size_t>(cutoff, 1)) {
  if (cutoff_ > 24) throw DomainError("table_cutoff must be <= 24");
}

RecursiveCostSampler RecursiveCostSampler::for_y(const ModelParams& params, std::size_t max_n, std::size_t table_cutoff) {
  RecursiveCostSampler s(CostKind::Y, max_n, table_cutoff);
  // Binomial(n-1, q) rows, computed at 128 bits and rounded to double.
  const unsigned bits = 128;
  const Real p = params.p_real(bits);
  const Real q = params.q_real(bits);
  const std::size_t rows = std::max(max_n, s.cutoff_) + 1;
  s.split_pmf_.assign(rows, {});
  s.split_cdf_.assign(rows, {});
  for (std::size_t n = 1; n < rows; ++n) {
    const std::size_t m = n - 1;
    std::vector<double> pmf(n), cdf(n);
    Real term = pow(p, static_cast<long>(m));  // k = 0
    const Real ratio = q / p;
    double acc = 0;
    for (std::size_t k = 0; k < n; ++k) {
      pmf[k] = term.to_double();
      acc += pmf[k];
      cdf[k] = acc;
      if (k + 1 < n) {
        mul_ui(term, m - k);
        div_ui(term, k + 1);
        term *= ratio;
      }
    }
    cdf[n - 1] = 1.0;
    s.split_pmf_[n] = std::move(pmf);
    s.split_cdf_[n] = std::move(cdf);
  }
  s.build_tables();
  return s;
}

RecursiveCostSampler RecursiveCostSampler::for_z(std::size_t max_n, std::size_t table_cutoff) {
  RecursiveCostSampler s(CostKind::Z, max_n, table_cutoff);
  s.build_tables();
  return s;
}

double RecursiveCostSampler::split_weight(std::size_t n, std::size_t k) const {
  if (kind_ == CostKind::Z) return 1.0 / static_cast<double>(n);
  return split_pmf_[n][k];
}

void RecursiveCostSampler::build_tables() {
  pmf_.assign(cutoff_ + 1, {});
  cdf_.assign(cutoff_ + 1, {});
  pmf_[0] = {1.0};
  pmf_[1] = {0.0, 1.0};
  for (std::size_t n = 2; n <= cutoff_; ++n) {
    // Distribution of the second branch: mixture over the split size.
    std::size_t support = 0;
    for (std::size_t k = 0; k < n; ++k) support = std::max(support, pmf_[k].size());
    std::vector<double> mix(support, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double wk = split_weight(n, k);
      if (wk == 0.0) continue;
      for (std::size_t v = 0; v < pmf_[k].size(); ++v) mix[v] += wk * pmf_[k][v];
    }
    const auto& prev = pmf_[n - 1];
    std::vector<double> out(prev.size() + mix.size() - 1, 0.0);
    for (std::size_t a = 0; a < prev.size(); ++a) {
      if (prev[a] == 0.0) continue;
      for (std::size_t b = 0; b < mix.size(); ++b) out[a + b] += prev[a] * mix[b];
    }
    while (out.size() > 1 && out.back() == 0.0) out.pop_back();
    pmf_[n] = std::move(out);
  }
  for (std::size_t n = 0; n <= cutoff_; ++n) {
    std::vector<double> cdf(pmf_[n].size());
    double acc = 0;
    for (std::size_t v = 0; v < cdf.size(); ++v) cdf[v] = acc += pmf_[n][v];
    // Inversion against the normalised CDF; the last entry is exactly 1.
    for (auto& c : cdf) c /= acc;
    cdf.back() = 1.0;
    cdf_[n] = std::move(cdf);
  }
}

std::size_t RecursiveCostSampler::draw_split(std::size_t n, Xoshiro256& rng) const {
  if (kind_ == CostKind::Z) return static_cast<std::size_t>(rng.below(n));
  const auto& cdf = split_cdf_[n];
  const double u = rng.uniform();
  return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

std::uint64_t RecursiveCostSampler::draw_tabulated(std::size_t n, Xoshiro256& rng) const {
  if (n <= 1) return n;
  const auto& cdf = cdf_[n];
  const double u = rng.uniform();
  return static_cast<std::uint64_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

std::uint64_t RecursiveCostSampler::sample(std::size_t n, Xoshiro256& rng, std::uint64_t budget) const {
  if (n > max_n_ && n > cutoff_) throw std::out_of_range("sampler built for n <= " + std::to_string(max_n_));
  std::uint64_t total = 0;
  std::vector<std::size_t> pending{n};
  while (!pending.empty()) {
    std::size_t m = pending.back();
    pending.pop_back();
    // C(m) = C(m-1) + C'(K_m): walk the first argument down, defer the second.
    while (m > cutoff_) {
      pending.push_back(draw_split(m, rng));
      --m;
    }
    total += draw_tabulated(m, rng);
    if (total > budget) throw BudgetExceeded("cost sample exceeded budget of " + std::to_string(budget));
  }
  return total;
}

std::uint64_t sample_Y(std::size_t n, const ModelParams& params, Xoshiro256& rng, std::uint64_t budget) {
  return RecursiveCostSampler::for_y(params, n, 1).sample(n, rng, budget);
}

std::uint64_t sample_Z(std::size_t n, Xoshiro256& rng, std::uint64_t budget) {
  return RecursiveCostSampler::for_z(n, 1).sample(n, rng, budget);
}

void write_samples_csv(std::ostream& out, const std::vector<CostSample>& samples, const ModelParams* params) {
  out << "kind,n,p,replicate,cost,alpha,seed\n";
  const std::string p = params ? params->p_string() : std::string();
  for (const auto& s : samples) {
    out << to_string(s.kind) << ',' << s.n << ',' << (s.kind == CostKind::Z ? std::string() : p) << ',' << s.replicate_id
        << ',' << s.cost << ',';
    if (s.alpha) out << *s.alpha;
    out << ',' << s.seed << '\n';
  }
}

}  // namespace mislab
