#ifndef MISLAB_EXACT_ENGINE_HPP
#define MISLAB_EXACT_ENGINE_HPP

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mislab/bignum.hpp"
#include "mislab/model.hpp"

namespace mislab {

enum class Mode { exact, real };
std::string to_string(Mode mode);

// ---------------------------------------------------------------------------
// Binomial split weights pi_{n,k} = C(n-1,k) p^{n-1-k} q^k, 0 <= k < n.

template <class Field>
std::vector<typename Field::value_type> binomial_row(std::size_t n, const ModelParams& params, const Field& field) {
  using T = typename Field::value_type;
  std::vector<T> row;
  if (n == 0) return row;
  row.reserve(n);
  T w = field.from(1);
  const T p = field.from(params.p());
  for (std::size_t i = 0; i + 1 < n; ++i) w *= p;
  const T ratio = field.from(params.q() / params.p());
  row.push_back(w);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    mul_ui(w, n - 1 - k);
    div_ui(w, k + 1);
    w *= ratio;
    row.push_back(w);
  }
  return row;
}

/// Solves a_n = a_{n-1} + sum_{k<n} pi_{n,k} a_k + b_n for n >= first, with a_0..a_{first-1} given.
template <class Field, class Toll>
std::vector<typename Field::value_type> solve_binomial_recurrence(std::size_t max_n, const ModelParams& params,
                                                                  const Field& field,
                                                                  std::vector<typename Field::value_type> initial,
                                                                  Toll&& toll) {
  using T = typename Field::value_type;
  std::vector<T> a = std::move(initial);
  a.reserve(max_n + 1);
  for (std::size_t n = a.size(); n <= max_n; ++n) {
    const auto row = binomial_row(n, params, field);
    T acc = a[n - 1];
    for (std::size_t k = 0; k < n; ++k) mul_add(acc, row[k], a[k]);
    acc += toll(n);
    a.push_back(std::move(acc));
  }
  a.resize(max_n + 1, field.zero());
  return a;
}

/// mu_0..mu_max_n from mu_n = mu_{n-1} + sum_k pi_{n,k} mu_k, mu_0 = 0, mu_1 = 1.
template <class Field>
std::vector<typename Field::value_type> mu_recurrence(std::size_t max_n, const ModelParams& params, const Field& field) {
  if (max_n == 0) return {field.zero()};
  return solve_binomial_recurrence(max_n, params, field, {field.zero(), field.from(1)},
                                   [&](std::size_t) { return field.zero(); });
}

/// Coefficients of e^{-z} f(z): mu~_k = sum_{j<k} (-1)^j q^{(k-1-j)(k+j)/2}, k = 0..max_n.
template <class Field>
std::vector<typename Field::value_type> mu_tilde(std::size_t max_n, const ModelParams& params, const Field& field) {
  using T = typename Field::value_type;
  std::vector<T> out(max_n + 1, field.zero());
  const T q = field.from(params.q());
  for (std::size_t k = 1; k <= max_n; ++k) {
    T acc = field.zero();
    for (std::size_t j = 0; j < k; ++j) {
      const long e = static_cast<long>((k - 1 - j) * (k + j) / 2);
      T term = field.from(1);
      if constexpr (Field::exact) {
        mpz_class num, den;
        mpz_pow_ui(num.get_mpz_t(), params.q().get_num_mpz_t(), static_cast<unsigned long>(e));
        mpz_pow_ui(den.get_mpz_t(), params.q().get_den_mpz_t(), static_cast<unsigned long>(e));
        term = Rational(num, den);
        term.canonicalize();
      } else {
        term = pow(q, e);
      }
      if (j % 2 == 0) acc += term;
      else acc -= term;
    }
    out[k] = std::move(acc);
  }
  return out;
}

/// mu_n = sum_{1<=k<=n} C(n,k) mu~_k (alternating; real mode needs required_precision(n) bits).
template <class Field>
typename Field::value_type mu_closed_form(std::size_t n, const ModelParams& params, const Field& field) {
  using T = typename Field::value_type;
  if constexpr (!Field::exact) {
    if (field.bits < required_precision(static_cast<double>(n)))
      throw PrecisionInsufficient("mu_closed_form: needs at least " + std::to_string(required_precision(static_cast<double>(n))) +
                                  " bits at n = " + std::to_string(n));
  }
  const auto tilde = mu_tilde(n, params, field);
  T acc = field.zero();
  T binom = field.from(1);
  for (std::size_t k = 1; k <= n; ++k) {
    mul_ui(binom, n - k + 1);
    div_ui(binom, k);
    mul_add(acc, binom, tilde[k]);
  }
  return acc;
}

/// Exact closed form for every n <= max_n using integer arithmetic over the
/// common denominator b^{C(n,2)} (q = a/b).
std::vector<Rational> mu_closed_form_table(std::size_t max_n, const ModelParams& params);

/// mu_n = n sum_j C(n-1,j) q^{C(j+1,2)} sum_l C(n-1-j,l) q^{jl} (1-q^j)^{n-1-j-l} / (j+l+1).
template <class Field>
typename Field::value_type mu_positive_form(std::size_t n, const ModelParams& params, const Field& field) {
  using T = typename Field::value_type;
  if (n == 0) return field.zero();
  const T q = field.from(params.q());
  T total = field.zero();
  T binom_outer = field.from(1);  // C(n-1, j)
  T q_tri = field.from(1);        // q^{C(j+1,2)}
  T q_j = field.from(1);          // q^j
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) {
      mul_ui(binom_outer, n - j);
      div_ui(binom_outer, j);
      q_j *= q;
      q_tri *= q_j;
    }
    const std::size_t m = n - 1 - j;
    const T one_minus = field.from(1) - q_j;
    // Powers of (1 - q^j) from the top down.
    std::vector<T> comp(m + 1, field.from(1));
    for (std::size_t i = 1; i <= m; ++i) comp[i] = comp[i - 1] * one_minus;
    T inner = field.zero();
    T binom_inner = field.from(1);
    T qjl = field.from(1);
    for (std::size_t l = 0; l <= m; ++l) {
      if (l > 0) {
        mul_ui(binom_inner, m - l + 1);
        div_ui(binom_inner, l);
        qjl *= q_j;
      }
      T term = binom_inner * qjl * comp[m - l];
      div_ui(term, j + l + 1);
      inner += term;
    }
    mul_add(total, binom_outer * q_tri, inner);
  }
  mul_ui(total, n);
  return total;
}

/// Exact positive form via integer arithmetic (same sum, one common denominator per n).
Rational mu_positive_form_exact(std::size_t n, const ModelParams& params);

// ---------------------------------------------------------------------------
// Independent sets.

/// J_n = sum_{1<=j<=n} C(n,j) q^{j(j-1)/2}.
template <class Field>
typename Field::value_type J_direct(std::size_t n, const ModelParams& params, const Field& field) {
  using T = typename Field::value_type;
  const T q = field.from(params.q());
  T acc = field.zero();
  T binom = field.from(1);
  T q_tri = field.from(1);  // q^{C(j,2)}
  T q_pow = field.from(1);  // q^{j-1}
  for (std::size_t j = 1; j <= n; ++j) {
    mul_ui(binom, n - j + 1);
    div_ui(binom, j);
    if (j > 1) {
      q_tri *= q_pow;
    }
    mul_add(acc, binom, q_tri);
    q_pow *= q;
  }
  return acc;
}

/// Jbar_n = J_n + 1 from Jbar_n = Jbar_{n-1} + sum_k pi_{n,k} Jbar_k, Jbar_0 = 1.
template <class Field>
std::vector<typename Field::value_type> J_bar_recurrence(std::size_t max_n, const ModelParams& params, const Field& field) {
  return solve_binomial_recurrence(max_n, params, field, {field.from(1)}, [&](std::size_t) { return field.zero(); });
}

// ---------------------------------------------------------------------------
// Central moments of Y_n.

/// Delta_{n,j} = mu_j + mu_{n-1} - mu_n for 0 <= j < n.
template <class T>
std::vector<T> delta_row(std::size_t n, const std::vector<T>& mu) {
  std::vector<T> out;
  out.reserve(n);
  const T shift = mu[n - 1] - mu[n];
  for (std::size_t j = 0; j < n; ++j) out.push_back(mu[j] + shift);
  return out;
}

/// Indexed tables of one engine run. `central[m][n]` = E(Y_n - mu_n)^m, `toll[m][n]` = T_{n,m}.
template <class T>
struct MomentTable {
  std::string p;  // "num/den"
  Mode mode = Mode::exact;
  unsigned precision_bits = 0;
  std::size_t max_n = 0;
  std::size_t m_max = 0;
  std::vector<T> mu;
  std::vector<std::vector<T>> central;
  std::vector<std::vector<T>> toll;

  const std::vector<T>& sigma2() const { return central.at(2); }
};

/// M_{n,m} = M_{n-1,m} + sum_j pi_{n,j} M_{j,m} + T_{n,m} for m <= m_max, n <= max_n, where
/// T_{n,m} = sum_{l<m} C(m,l) S(l, m-l) + sum_{2<=k<=m-2} C(m,k) M_{n-1,k} sum_{l<=m-k} C(m-k,l) S(l, m-k-l)
/// and S(l,h) = sum_j pi_{n,j} M_{j,l} Delta_{n,j}^h. All S(l,h) with l + h <= m_max come from one pass over j.
template <class Field>
MomentTable<typename Field::value_type> central_moments(std::size_t max_n, std::size_t m_max, const ModelParams& params,
                                                        const Field& field) {
  using T = typename Field::value_type;
  if (m_max < 2) throw DomainError("central_moments: m_max must be >= 2");
  MomentTable<T> table;
  table.p = params.p_string();
  table.mode = Field::exact ? Mode::exact : Mode::real;
  if constexpr (!Field::exact) table.precision_bits = field.bits;
  table.max_n = max_n;
  table.m_max = m_max;
  table.mu = mu_recurrence(max_n, params, field);
  table.central.assign(m_max + 1, std::vector<T>(max_n + 1, field.zero()));
  table.toll.assign(m_max + 1, std::vector<T>(max_n + 1, field.zero()));
  for (std::size_t n = 0; n <= max_n; ++n) table.central[0][n] = field.from(1);

  // Binomial coefficients C(m, k) for m <= m_max.
  std::vector<std::vector<unsigned long>> binom(m_max + 1, std::vector<unsigned long>(m_max + 1, 0));
  for (std::size_t m = 0; m <= m_max; ++m) {
    binom[m][0] = binom[m][m] = 1;
    for (std::size_t k = 1; k < m; ++k) binom[m][k] = binom[m - 1][k - 1] + binom[m - 1][k];
  }

  auto& M = table.central;
  std::vector<std::vector<T>> S(m_max + 1, std::vector<T>(m_max + 1, field.zero()));
  std::vector<T> dpow(m_max + 1, field.zero());
  for (std::size_t n = 2; n <= max_n; ++n) {
    const auto row = binomial_row(n, params, field);
    const auto delta = delta_row(n, table.mu);
    for (auto& r : S)
      for (auto& v : r) v = field.zero();
    for (std::size_t j = 0; j < n; ++j) {
      dpow[0] = row[j];
      for (std::size_t h = 1; h <= m_max; ++h) dpow[h] = dpow[h - 1] * delta[j];
      for (std::size_t l = 0; l <= m_max; ++l) {
        if (l == 1) continue;  // M_{j,1} = 0
        const T& mj = M[l][j];
        if constexpr (Field::exact) {
          if (mj == 0) continue;
        } else {
          if (mj.is_zero()) continue;
        }
        for (std::size_t h = 0; l + h <= m_max; ++h) mul_add(S[l][h], mj, dpow[h]);
      }
    }
    for (std::size_t m = 2; m <= m_max; ++m) {
      T t = field.zero();
      for (std::size_t l = 0; l < m; ++l) {
        if (l == 1) continue;
        T term = S[l][m - l];
        mul_ui(term, binom[m][l]);
        t += term;
      }
      for (std::size_t k = 2; k + 2 <= m; ++k) {
        T inner = field.zero();
        for (std::size_t l = 0; l <= m - k; ++l) {
          if (l == 1) continue;
          T term = S[l][m - k - l];
          mul_ui(term, binom[m - k][l]);
          inner += term;
        }
        T term = M[k][n - 1] * inner;
        mul_ui(term, binom[m][k]);
        t += term;
      }
      table.toll[m][n] = t;
      M[m][n] = M[m][n - 1] + S[m][0] + t;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Uniform-split recurrences (Z_n).

/// nu_n = nu_{n-1} + (1/n) sum_{j<n} nu_j, nu_0 = 0, nu_1 = 1.
template <class Field>
std::vector<typename Field::value_type> nu_recurrence(std::size_t max_n, const Field& field) {
  using T = typename Field::value_type;
  std::vector<T> nu(max_n + 1, field.zero());
  if (max_n >= 1) nu[1] = field.from(1);
  T prefix = field.zero();
  if (max_n >= 1) prefix = nu[0] + nu[1];
  for (std::size_t n = 2; n <= max_n; ++n) {
    T avg = prefix;
    div_ui(avg, n);
    nu[n] = nu[n - 1] + avg;
    prefix += nu[n];
  }
  return nu;
}

/// n! nu_n for n <= max_n (exact); integral for every n.
std::vector<Rational> nu_factorial_scaled(std::size_t max_n);

/// Raw moments E(Z_n^m), m = 0..m_max, from the moment GF recurrence
/// Q_n = Q_{n-1} (1/n) sum_{j<n} Q_j. Result indexed [m][n].
template <class Field>
std::vector<std::vector<typename Field::value_type>> z_raw_moments(std::size_t max_n, std::size_t m_max, const Field& field) {
  using T = typename Field::value_type;
  std::vector<std::vector<T>> E(m_max + 1, std::vector<T>(max_n + 1, field.zero()));
  std::vector<T> prefix(m_max + 1, field.zero());
  for (std::size_t n = 0; n <= std::min<std::size_t>(max_n, 1); ++n)
    for (std::size_t m = 0; m <= m_max; ++m) E[m][n] = field.from(m == 0 || n == 1 ? 1 : 0);
  for (std::size_t m = 0; m <= m_max; ++m)
    for (std::size_t n = 0; n <= std::min<std::size_t>(max_n, 1); ++n) prefix[m] += E[m][n];
  std::vector<std::vector<unsigned long>> binom(m_max + 1, std::vector<unsigned long>(m_max + 1, 0));
  for (std::size_t m = 0; m <= m_max; ++m) {
    binom[m][0] = binom[m][m] = 1;
    for (std::size_t k = 1; k < m; ++k) binom[m][k] = binom[m - 1][k - 1] + binom[m - 1][k];
  }
  for (std::size_t n = 2; n <= max_n; ++n) {
    for (std::size_t m = 0; m <= m_max; ++m) {
      T acc = field.zero();
      for (std::size_t k = 0; k <= m; ++k) {
        T term = E[k][n - 1] * prefix[m - k];
        mul_ui(term, binom[m][k]);
        acc += term;
      }
      div_ui(acc, n);
      E[m][n] = acc;
    }
    for (std::size_t m = 0; m <= m_max; ++m) prefix[m] += E[m][n];
  }
  return E;
}

/// zeta_0..zeta_m_max from zeta_m = (1/(m - 1/m)) sum_{1<=j<m} C(m,j) (zeta_j/j) zeta_{m-j}.
std::vector<Rational> zeta_moments(std::size_t m_max);

/// Coefficients of y^0..y^order of both sides of y^2 z'' + y z' - z = y z z' for
/// z(y) = sum_{m>=1} zeta_m y^m / (m m!).
struct SeriesIdentity {
  std::vector<Rational> lhs;
  std::vector<Rational> rhs;
};
SeriesIdentity zeta_ode_coefficients(std::size_t order);

// ---------------------------------------------------------------------------
// Poisson generating function f~(x) = e^{-x} sum_n mu_n x^n / n!.

/// Pointwise evaluator of f~ and its derivatives,
///   f~^{(j)}(x) = e^{-x} sum_n (D^j mu)_n x^n / n!,
/// D the forward difference. The mu table is kept at the context precision and
/// extended on demand until the tail drops below series_epsilon.
class PoissonGF {
 public:
  PoissonGF(const ModelParams& params, const NumericContext& ctx);

  /// Throws PrecisionInsufficient if the context has fewer than required_precision(x) bits.
  Real eval(const Real& x, unsigned deriv = 0);
  Real eval(double x, unsigned deriv = 0) { return eval(Real::from_double(x, ctx_.precision_bits()), deriv); }

  /// Re-evaluates at doubled precision and throws PrecisionInsufficient unless
  /// the two values agree to within 16 bits of the series tolerance (or of
  /// precision_bits, whichever is coarser).
  Real eval_verified(const Real& x, unsigned deriv = 0);

  const NumericContext& context() const { return ctx_; }
  const ModelParams& params() const { return params_; }
  /// Number of series terms used by the most recent evaluation.
  std::size_t last_terms() const { return last_terms_; }
  /// mu_0..mu_k currently held (k grows lazily).
  const std::vector<Real>& mu_table() const { return mu_; }
  void ensure_mu(std::size_t max_n);

 private:
  ModelParams params_;
  NumericContext ctx_;
  std::vector<Real> mu_;
  std::size_t last_terms_ = 0;
};

// ---------------------------------------------------------------------------
// Modified Laplace transform f~*(s) = sum_{j>=0} q^{j(j+1)/2} s^{j+1} / (1 + q^j s).

/// Throws DomainError for s <= 0.
Real laplace_star_eval(const Real& s, const ModelParams& params, const NumericContext& ctx);
/// Complex argument with Re(s) > 0 (double precision).
std::complex<double> laplace_star_eval(std::complex<double> s, const ModelParams& params, double tol = 1e-17);
/// (1/(1+s)) sum_{n<terms} mu_n (s/(1+s))^n.
Real laplace_star_euler(const Real& s, const std::vector<Real>& mu, std::size_t terms);

// ---------------------------------------------------------------------------
// Table cache (JSON). Key: p, mode, precision_bits, engine version; max_n and
// m_max of the cached table must cover the request.

std::string cache_file_name(const std::string& p, Mode mode, unsigned precision_bits);
void save_moment_table(const std::string& path, const MomentTable<Real>& table);
void save_moment_table(const std::string& path, const MomentTable<Rational>& table);
std::optional<MomentTable<Real>> load_real_table(const std::string& path, unsigned precision_bits);
std::optional<MomentTable<Rational>> load_exact_table(const std::string& path);

/// Real-mode moment table, read from `cache_dir` when a covering entry exists,
/// otherwise computed and written back. Empty cache_dir disables caching.
MomentTable<Real> cached_central_moments(std::size_t max_n, std::size_t m_max, const ModelParams& params, unsigned bits,
                                         const std::string& cache_dir);

}  // namespace mislab

#endif  // MISLAB_EXACT_ENGINE_HPP
