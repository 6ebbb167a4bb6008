#include "mislab/exact_engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mislab {

std::string to_string(Mode mode) { return mode == Mode::exact ? "exact" : "real"; }

namespace {

Integer pow_z(const Integer& base, unsigned long e) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

// Per-term stopping threshold: series_epsilon with 32 bits of slack for the
// remaining tail after three quiet terms.
Real tail_threshold(const NumericContext& ctx) {
  Real eps = ctx.series_epsilon();
  mpfr_div_2ui(eps.raw(), eps.raw(), 32, MPFR_RNDN);
  return eps;
}

Integer lcm_upto(std::size_t n) {
  Integer l = 1;
  for (std::size_t i = 2; i <= n; ++i) mpz_lcm_ui(l.get_mpz_t(), l.get_mpz_t(), i);
  return l;
}

}  // namespace

std::vector<Rational> mu_closed_form_table(std::size_t max_n, const ModelParams& params) {
  const Integer a = params.q().get_num();
  const Integer b = params.q().get_den();
  // U_k = mu~_k b^{C(k,2)} = sum_{j<k} (-1)^j a^{(k-1-j)(k+j)/2} b^{C(j+1,2)}.
  std::vector<Integer> U(max_n + 1, 0);
  for (std::size_t k = 1; k <= max_n; ++k) {
    Integer acc = 0;
    for (std::size_t j = 0; j < k; ++j) {
      Integer term = pow_z(a, (k - 1 - j) * (k + j) / 2) * pow_z(b, j * (j + 1) / 2);
      if (j % 2 == 0) acc += term;
      else acc -= term;
    }
    U[k] = acc;
  }
  std::vector<Rational> out(max_n + 1, 0);
  for (std::size_t n = 1; n <= max_n; ++n) {
    const std::size_t top = n * (n - 1) / 2;
    Integer num = 0;
    Integer binom = 1;
    for (std::size_t k = 1; k <= n; ++k) {
      binom = binom * static_cast<unsigned long>(n - k + 1) / static_cast<unsigned long>(k);
      num += binom * U[k] * pow_z(b, top - k * (k - 1) / 2);
    }
    out[n] = Rational(num, pow_z(b, top));
    out[n].canonicalize();
  }
  return out;
}

Rational mu_positive_form_exact(std::size_t n, const ModelParams& params) {
  if (n == 0) return 0;
  const Integer a = params.q().get_num();
  const Integer b = params.q().get_den();
  const Integer L = lcm_upto(n);
  const std::size_t top = n * (n - 1) / 2;
  Integer total = 0;
  Integer binom_outer = 1;  // C(n-1, j)
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) binom_outer = binom_outer * static_cast<unsigned long>(n - j) / static_cast<unsigned long>(j);
    const std::size_t m = n - 1 - j;
    const Integer A = pow_z(a, j);
    const Integer bj = pow_z(b, j);
    const Integer B = bj - A;
    // Inner sum over the denominator b^{jm} L:
    //   sum_l C(m,l) A^l B^{m-l} L/(j+l+1).
    std::vector<Integer> bpow(m + 1, 1);
    for (std::size_t i = 1; i <= m; ++i) bpow[i] = bpow[i - 1] * B;
    Integer inner = 0;
    Integer binom_inner = 1;
    Integer apow = 1;
    for (std::size_t l = 0; l <= m; ++l) {
      if (l > 0) {
        binom_inner = binom_inner * static_cast<unsigned long>(m - l + 1) / static_cast<unsigned long>(l);
        apow *= A;
      }
      Integer weight = L / static_cast<unsigned long>(j + l + 1);
      inner += binom_inner * weight * apow * bpow[m - l];
    }
    const std::size_t tri = j * (j + 1) / 2;
    const std::size_t e_j = tri + j * m;
    total += binom_outer * pow_z(a, tri) * inner * pow_z(b, top - e_j);
  }
  Rational out(total * static_cast<unsigned long>(n), pow_z(b, top) * L);
  out.canonicalize();
  return out;
}

std::vector<Rational> nu_factorial_scaled(std::size_t max_n) {
  auto nu = nu_recurrence(max_n, ExactField{});
  Integer fact = 1;
  for (std::size_t n = 0; n <= max_n; ++n) {
    if (n > 0) fact *= static_cast<unsigned long>(n);
    nu[n] *= fact;
  }
  return nu;
}

std::vector<Rational> zeta_moments(std::size_t m_max) {
  if (m_max < 1) throw DomainError("zeta_moments: m_max must be >= 1");
  std::vector<Rational> z(m_max + 1, 0);
  z[0] = 1;
  z[1] = 1;
  for (std::size_t m = 2; m <= m_max; ++m) {
    Rational acc = 0;
    Integer binom = 1;
    for (std::size_t j = 1; j < m; ++j) {
      binom = binom * static_cast<unsigned long>(m - j + 1) / static_cast<unsigned long>(j);
      acc += Rational(binom) * z[j] / static_cast<unsigned long>(j) * z[m - j];
    }
    const auto mm = static_cast<long>(m);
    z[m] = acc * Rational(mm, mm * mm - 1);
    z[m].canonicalize();
  }
  return z;
}

SeriesIdentity zeta_ode_coefficients(std::size_t order) {
  const auto zeta = zeta_moments(std::max<std::size_t>(order + 1, 1));
  // c_m = zeta_m / (m m!), c_0 = 0.
  std::vector<Rational> c(order + 2, 0);
  Integer fact = 1;
  for (std::size_t m = 1; m < c.size(); ++m) {
    fact *= static_cast<unsigned long>(m);
    c[m] = zeta[m] / Rational(fact * static_cast<unsigned long>(m));
  }
  SeriesIdentity out;
  out.lhs.assign(order + 1, 0);
  out.rhs.assign(order + 1, 0);
  for (std::size_t k = 0; k <= order; ++k) {
    const auto kk = static_cast<long>(k);
    out.lhs[k] = Rational(kk * (kk - 1)) * c[k] + Rational(kk) * c[k] - c[k];
    if (k >= 1) {
      // [y^{k-1}] z z' = sum_{a + i = k-1} c_a (i+1) c_{i+1}.
      Rational acc = 0;
      for (std::size_t ai = 0; ai <= k - 1; ++ai) {
        const std::size_t i = k - 1 - ai;
        acc += c[ai] * static_cast<unsigned long>(i + 1) * c[i + 1];
      }
      out.rhs[k] = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

PoissonGF::PoissonGF(const ModelParams& params, const NumericContext& ctx) : params_(params), ctx_(ctx) {
  const unsigned bits = ctx_.precision_bits();
  mu_ = {Real(0, bits), Real(1, bits)};
}

void PoissonGF::ensure_mu(std::size_t max_n) {
  const RealField field = ctx_.field();
  while (mu_.size() <= max_n) {
    const std::size_t n = mu_.size();
    const auto row = binomial_row(n, params_, field);
    Real acc = mu_[n - 1];
    for (std::size_t k = 0; k < n; ++k) mul_add(acc, row[k], mu_[k]);
    mu_.push_back(std::move(acc));
  }
}

Real PoissonGF::eval(const Real& x_in, unsigned deriv) {
  const unsigned bits = ctx_.precision_bits();
  if (x_in.sign() < 0) throw DomainError("poisson_gf_eval: x must be >= 0");
  const double xd = x_in.to_double();
  if (bits < required_precision(xd))
    throw PrecisionInsufficient("poisson_gf_eval: x = " + x_in.to_string(10) + " needs " +
                                std::to_string(required_precision(xd)) + " bits, context has " + std::to_string(bits));
  Real x = x_in;
  x.set_precision(bits);

  // Binomial coefficients with sign for the forward difference of order deriv.
  std::vector<long> diff(deriv + 1);
  {
    long c = 1;
    for (unsigned i = 0; i <= deriv; ++i) {
      diff[i] = ((deriv - i) % 2 == 0 ? c : -c);
      c = c * static_cast<long>(deriv - i) / static_cast<long>(i + 1);
    }
  }
  const Real eps = tail_threshold(ctx_);
  Real sum(bits), abs_sum(bits), term(bits), weight(1, bits), coef(bits);
  const double settle = xd + static_cast<double>(deriv) + 10.0;
  int quiet = 0;
  std::size_t n = 0;
  for (;; ++n) {
    if (n + deriv >= mu_.size()) ensure_mu(n + deriv + 64);
    coef = Real(bits);
    for (unsigned i = 0; i <= deriv; ++i) {
      Real t = mu_[n + i];
      t *= diff[i];
      coef += t;
    }
    term = coef * weight;
    sum += term;
    abs_sum += abs(term);
    if (static_cast<double>(n) > settle) {
      if (abs(term) <= eps * abs_sum) ++quiet;
      else quiet = 0;
      if (quiet >= 3) break;
    }
    weight *= x;
    div_ui(weight, n + 1);
  }
  last_terms_ = n + 1;
  return sum * exp(-x);
}

Real PoissonGF::eval_verified(const Real& x, unsigned deriv) {
  const Real value = eval(x, deriv);
  PoissonGF wide(params_, ctx_.doubled());
  Real xw = x;
  xw.set_precision(wide.context().precision_bits());
  const Real reference = wide.eval(xw, deriv);
  const long agree = agreement_bits(value, reference);
  // The series is truncated at series_epsilon, so that is all we can promise.
  const long need = std::min(static_cast<long>(ctx_.precision_bits()), -ctx_.series_epsilon().exponent()) - 16;
  if (agree < need)
    throw PrecisionInsufficient("poisson_gf_eval: only " + std::to_string(agree) + " bits agree at doubled precision (need " +
                                std::to_string(need) + ")");
  return value;
}

// ---------------------------------------------------------------------------

Real laplace_star_eval(const Real& s_in, const ModelParams& params, const NumericContext& ctx) {
  if (s_in.sign() <= 0) throw DomainError("laplace_star_eval: s must be positive");
  const unsigned bits = ctx.precision_bits();
  Real s = s_in;
  s.set_precision(bits);
  const Real q = params.q_real(bits);
  const Real eps = tail_threshold(ctx);
  Real sum(bits);
  Real coef = s;               // q^{j(j+1)/2} s^{j+1}
  Real qj(1, bits);            // q^j
  int quiet = 0;
  for (std::size_t j = 0; j < 100000; ++j) {
    const Real term = coef / (qj * s + 1);
    sum += term;
    if (qj * s < Real(1, bits)) {
      if (abs(term) <= eps * abs(sum)) ++quiet;
      else quiet = 0;
      if (quiet >= 3) break;
    }
    qj *= q;
    coef *= qj;
    coef *= s;
  }
  return sum;
}

std::complex<double> laplace_star_eval(std::complex<double> s, const ModelParams& params, double tol) {
  if (!(s.real() > 0)) throw DomainError("laplace_star_eval: Re(s) must be positive");
  const double q = params.q_double();
  std::complex<double> sum = 0, coef = s;
  double qj = 1;
  int quiet = 0;
  for (std::size_t j = 0; j < 100000; ++j) {
    const std::complex<double> term = coef / (1.0 + qj * s);
    sum += term;
    if (qj * std::abs(s) < 1) {
      if (std::abs(term) <= tol * std::abs(sum)) ++quiet;
      else quiet = 0;
      if (quiet >= 3) break;
    }
    qj *= q;
    coef *= qj * s;
  }
  return sum;
}

Real laplace_star_euler(const Real& s, const std::vector<Real>& mu, std::size_t terms) {
  const unsigned bits = s.precision();
  const Real w = s / (s + 1);
  Real sum(bits), wp(1, bits);
  for (std::size_t n = 0; n < terms && n < mu.size(); ++n) {
    mul_add(sum, mu[n], wp);
    wp *= w;
  }
  return sum / (s + 1);
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

std::string cell(const Real& v) { return v.to_string(); }
std::string cell(const Rational& v) { return to_string(v); }

template <class T>
json table_to_json(const MomentTable<T>& t) {
  json j;
  j["version"] = kEngineVersion;
  j["p"] = t.p;
  j["mode"] = to_string(t.mode);
  j["precision_bits"] = t.precision_bits;
  j["max_n"] = t.max_n;
  j["m_max"] = t.m_max;
  auto row = [](const std::vector<T>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(cell(x));
    return a;
  };
  j["mu"] = row(t.mu);
  j["central"] = json::array();
  j["toll"] = json::array();
  for (const auto& r : t.central) j["central"].push_back(row(r));
  for (const auto& r : t.toll) j["toll"].push_back(row(r));
  return j;
}

template <class T, class Parse>
std::optional<MomentTable<T>> table_from_json(const std::string& path, Mode mode, unsigned bits, Parse parse) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
    if (j.at("version") != kEngineVersion || j.at("mode") != to_string(mode)) return std::nullopt;
    if (mode == Mode::real && j.at("precision_bits").get<unsigned>() != bits) return std::nullopt;
    MomentTable<T> t;
    t.p = j.at("p").get<std::string>();
    t.mode = mode;
    t.precision_bits = j.at("precision_bits").get<unsigned>();
    t.max_n = j.at("max_n").get<std::size_t>();
    t.m_max = j.at("m_max").get<std::size_t>();
    auto row = [&](const json& a) {
      std::vector<T> v;
      v.reserve(a.size());
      for (const auto& c : a) v.push_back(parse(c.get<std::string>()));
      return v;
    };
    t.mu = row(j.at("mu"));
    for (const auto& r : j.at("central")) t.central.push_back(row(r));
    for (const auto& r : j.at("toll")) t.toll.push_back(row(r));
    if (t.mu.size() != t.max_n + 1 || t.central.size() != t.m_max + 1 || t.toll.size() != t.m_max + 1) return std::nullopt;
    return t;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void write_json(const std::string& path, const json& j) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write cache file " + tmp);
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace

std::string cache_file_name(const std::string& p, Mode mode, unsigned precision_bits) {
  std::string key = p;
  for (auto& ch : key)
    if (ch == '/') ch = '_';
  return std::string(kEngineVersion) + "_p" + key + "_" + to_string(mode) + "_" + std::to_string(precision_bits) + ".json";
}

void save_moment_table(const std::string& path, const MomentTable<Real>& table) { write_json(path, table_to_json(table)); }
void save_moment_table(const std::string& path, const MomentTable<Rational>& table) { write_json(path, table_to_json(table)); }

std::optional<MomentTable<Real>> load_real_table(const std::string& path, unsigned precision_bits) {
  return table_from_json<Real>(path, Mode::real, precision_bits,
                               [&](const std::string& s) { return Real::from_string(s, precision_bits); });
}

std::optional<MomentTable<Rational>> load_exact_table(const std::string& path) {
  return table_from_json<Rational>(path, Mode::exact, 0, [](const std::string& s) { return parse_rational(s); });
}

MomentTable<Real> cached_central_moments(std::size_t max_n, std::size_t m_max, const ModelParams& params, unsigned bits,
                                         const std::string& cache_dir) {
  std::string path;
  if (!cache_dir.empty()) {
    path = (std::filesystem::path(cache_dir) / cache_file_name(params.p_string(), Mode::real, bits)).string();
    if (auto hit = load_real_table(path, bits); hit && hit->p == params.p_string() && hit->max_n >= max_n && hit->m_max >= m_max) {
      // Rows are prefix-stable in n and order m only uses lower orders, so a covering table is truncated.
      MomentTable<Real> t = std::move(*hit);
      t.mu.resize(max_n + 1);
      t.central.resize(m_max + 1);
      t.toll.resize(m_max + 1);
      for (auto& r : t.central) r.resize(max_n + 1);
      for (auto& r : t.toll) r.resize(max_n + 1);
      t.max_n = max_n;
      t.m_max = m_max;
      return t;
    }
  }
  auto table = central_moments(max_n, m_max, params, RealField{bits});
  if (!path.empty()) save_moment_table(path, table);
  return table;
}

}  // namespace mislab
