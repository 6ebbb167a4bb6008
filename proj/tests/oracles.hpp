#ifndef MISLAB_TESTS_ORACLES_HPP
#define MISLAB_TESTS_ORACLES_HPP

// Independent reference computations used by the unit tests. They are kept
// deliberately naive: exact rational PMFs by direct convolution and
// expectations over every labelled graph on a few vertices.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "mislab/bignum.hpp"
#include "mislab/graph.hpp"
#include "mislab/model.hpp"

namespace oracle {

using mislab::Rational;
using Pmf = std::map<std::uint64_t, Rational>;

inline Rational binom(unsigned n, unsigned k) {
  mislab::Integer r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return Rational(r);
}

inline Rational power(const Rational& x, unsigned e) {
  Rational r = 1;
  for (unsigned i = 0; i < e; ++i) r *= x;
  return r;
}

inline Pmf convolve(const Pmf& a, const Pmf& b) {
  Pmf out;
  for (const auto& [x, px] : a)
    for (const auto& [y, py] : b) out[x + y] += px * py;
  return out;
}

/// Exact law of C(n) = C(n-1) + C'(K_n), C(0) = 0, C(1) = 1, for n <= max_n,
/// where split(n, k) = P(K_n = k).
inline std::vector<Pmf> cost_laws(std::size_t max_n, const std::function<Rational(unsigned, unsigned)>& split) {
  std::vector<Pmf> law(max_n + 1);
  law[0][0] = 1;
  if (max_n >= 1) law[1][1] = 1;
  for (unsigned n = 2; n <= max_n; ++n) {
    Pmf mixture;
    for (unsigned k = 0; k < n; ++k) {
      const Rational w = split(n, k);
      for (const auto& [c, pc] : law[k]) mixture[c] += w * pc;
    }
    law[n] = convolve(law[n - 1], mixture);
  }
  return law;
}

inline std::vector<Pmf> y_laws(std::size_t max_n, const mislab::ModelParams& params) {
  const Rational p = params.p(), q = params.q();
  return cost_laws(max_n, [=](unsigned n, unsigned k) -> Rational { return binom(n - 1, k) * power(q, k) * power(p, n - 1 - k); });
}

inline std::vector<Pmf> z_laws(std::size_t max_n) {
  return cost_laws(max_n, [](unsigned n, unsigned) -> Rational { return Rational(1, n); });
}

inline Rational mean(const Pmf& law) {
  Rational m = 0;
  for (const auto& [c, pc] : law) m += Rational(c) * pc;
  return m;
}

inline Rational central(const Pmf& law, unsigned order) {
  const Rational m = mean(law);
  Rational acc = 0;
  for (const auto& [c, pc] : law) acc += power(Rational(c) - m, order) * pc;
  return acc;
}

inline Rational raw(const Pmf& law, unsigned order) {
  Rational acc = 0;
  for (const auto& [c, pc] : law) acc += power(Rational(c), order) * pc;
  return acc;
}

/// Expectation of f(G) over G(n,p), enumerating all 2^{C(n,2)} graphs.
template <class F>
Rational graph_expectation(std::size_t n, const mislab::ModelParams& params, F f) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  const std::size_t m = pairs.size();
  Rational total = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    mislab::GraphInstance g(n);
    unsigned edges = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1) {
        g.add_edge(pairs[i].first, pairs[i].second);
        ++edges;
      }
    total += Rational(f(g)) * power(params.p(), edges) * power(params.q(), static_cast<unsigned>(m) - edges);
  }
  return total;
}

}  // namespace oracle

#endif  // MISLAB_TESTS_ORACLES_HPP
