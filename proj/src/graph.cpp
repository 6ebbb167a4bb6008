#include "mislab/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mislab {

GraphInstance::GraphInstance(std::size_t n, std::uint64_t seed)
    : n_(n), words_((n + 63) / 64), seed_(seed), adjacency_(n * ((n + 63) / 64), 0) {}

void GraphInstance::add_edge(std::size_t u, std::size_t v) {
  if (u >= n_ || v >= n_ || u == v) throw std::invalid_argument("add_edge: invalid pair");
  adjacency_[u * words_ + v / 64] |= std::uint64_t{1} << (v % 64);
  adjacency_[v * words_ + u / 64] |= std::uint64_t{1} << (u % 64);
}

bool GraphInstance::has_edge(std::size_t u, std::size_t v) const {
  return (adjacency_[u * words_ + v / 64] >> (v % 64)) & 1U;
}

std::size_t GraphInstance::degree(std::size_t v) const {
  std::size_t d = 0;
  for (auto w : neighbors(v)) d += static_cast<std::size_t>(std::popcount(w));
  return d;
}

std::size_t GraphInstance::edge_count() const {
  std::size_t twice = 0;
  for (std::size_t v = 0; v < n_; ++v) twice += degree(v);
  return twice / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> GraphInstance::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t v = u + 1; v < n_; ++v)
      if (has_edge(u, v)) out.emplace_back(u, v);
  return out;
}

GraphInstance GraphInstance::complete(std::size_t n) {
  GraphInstance g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) g.add_edge(u, v);
  return g;
}

GraphInstance GraphInstance::cycle(std::size_t n) {
  GraphInstance g(n);
  if (n >= 3)
    for (std::size_t v = 0; v < n; ++v) g.add_edge(v, (v + 1) % n);
  return g;
}

void GraphInstance::dump(std::ostream& out) const {
  const auto es = edges();
  out << n_ << ' ' << es.size() << ' ' << seed_ << '\n';
  for (const auto& [u, v] : es) out << u << ' ' << v << '\n';
}

GraphInstance GraphInstance::read(std::istream& in) {
  std::size_t n = 0, m = 0;
  std::uint64_t seed = 0;
  if (!(in >> n >> m >> seed)) throw std::runtime_error("graph dump: bad header");
  GraphInstance g(n, seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t u = 0, v = 0;
    if (!(in >> u >> v)) throw std::runtime_error("graph dump: truncated edge list");
    if (u >= n || v >= n || u == v) throw std::runtime_error("graph dump: bad edge " + std::to_string(u) + " " + std::to_string(v));
    g.add_edge(u, v);
  }
  return g;
}

bool GraphInstance::well_formed() const {
  for (std::size_t u = 0; u < n_; ++u) {
    if (has_edge(u, u)) return false;
    for (std::size_t v = 0; v < n_; ++v)
      if (has_edge(u, v) != has_edge(v, u)) return false;
    // No bits beyond n in the last word.
    if (n_ % 64 != 0 && (adjacency_[u * words_ + words_ - 1] >> (n_ % 64)) != 0) return false;
  }
  return true;
}

GraphInstance sample_gnp(std::size_t n, const ModelParams& params, Xoshiro256& rng, std::uint64_t seed_label) {
  GraphInstance g(n, seed_label);
  const double p = params.p_double();
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) g.add_edge(u, v);
  return g;
}

namespace {

// indep[mask] for every subset mask, built by peeling the lowest vertex.
std::vector<std::uint8_t> independence_table(const GraphInstance& g) {
  const std::size_t n = g.n();
  if (n > kBruteForceLimit) throw SizeTooLarge("brute force enumeration limited to n <= 25, got " + std::to_string(n));
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t v = 0; v < n; ++v) adj[v] = n == 0 ? 0 : static_cast<std::uint32_t>(g.neighbors(v)[0]);
  const std::uint32_t total = std::uint32_t{1} << n;
  std::vector<std::uint8_t> indep(total, 0);
  indep[0] = 1;
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    const std::uint32_t rest = mask & (mask - 1);
    indep[mask] = indep[rest] && (adj[low] & rest) == 0;
  }
  return indep;
}

}  // namespace

std::size_t brute_force_alpha(const GraphInstance& g) {
  const auto indep = independence_table(g);
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < indep.size(); ++mask)
    if (indep[mask]) best = std::max<std::size_t>(best, static_cast<std::size_t>(std::popcount(mask)));
  return best;
}

std::uint64_t count_independent_sets(const GraphInstance& g) {
  const auto indep = independence_table(g);
  std::uint64_t count = 0;
  for (std::size_t mask = 1; mask < indep.size(); ++mask) count += indep[mask];
  return count;
}

}  // namespace mislab
