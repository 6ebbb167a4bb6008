#ifndef MISLAB_GRAPH_HPP
#define MISLAB_GRAPH_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mislab/model.hpp"
#include "mislab/rng.hpp"

namespace mislab {

/// Labeled undirected simple graph on vertices 0..n-1.
///
/// Each vertex owns a row of `words()` 64-bit words holding its neighbor set,
/// so that removing a closed neighborhood N*(v) from an alive-set is a
/// word-wise and-not.
class GraphInstance {
 public:
  GraphInstance() = default;
  explicit GraphInstance(std::size_t n, std::uint64_t seed = 0);

  std::size_t n() const { return n_; }
  std::size_t words() const { return words_; }
  std::uint64_t seed() const { return seed_; }

  void add_edge(std::size_t u, std::size_t v);
  bool has_edge(std::size_t u, std::size_t v) const;
  std::span<const std::uint64_t> neighbors(std::size_t v) const {
    return {adjacency_.data() + v * words_, words_};
  }
  std::size_t degree(std::size_t v) const;
  std::size_t edge_count() const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  static GraphInstance complete(std::size_t n);
  static GraphInstance empty(std::size_t n) { return GraphInstance(n); }
  static GraphInstance cycle(std::size_t n);

  /// Writes "n m seed" followed by m lines "u v" (u < v), LF line endings.
  void dump(std::ostream& out) const;
  /// Inverse of dump. Throws std::runtime_error on malformed input.
  static GraphInstance read(std::istream& in);

  /// Structural invariants: symmetric, loop-free, labels < n.
  bool well_formed() const;

 private:
  std::size_t n_ = 0;
  std::size_t words_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint64_t> adjacency_;
};

/// Each of the C(n,2) pairs becomes an edge independently with probability p,
/// decided in lexicographic pair order by `rng.uniform() < p`.
GraphInstance sample_gnp(std::size_t n, const ModelParams& params, Xoshiro256& rng, std::uint64_t seed_label = 0);

inline constexpr std::size_t kBruteForceLimit = 25;

/// Stability number by enumerating all 2^n vertex subsets. Throws SizeTooLarge for n > 25.
std::size_t brute_force_alpha(const GraphInstance& g);

/// Number of nonempty independent sets, by enumerating all 2^n subsets.
/// Throws SizeTooLarge for n > 25.
std::uint64_t count_independent_sets(const GraphInstance& g);

}  // namespace mislab

#endif  // MISLAB_GRAPH_HPP
