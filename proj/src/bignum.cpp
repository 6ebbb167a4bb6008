#include "mislab/bignum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace mislab {

namespace {

void widen_to(mpfr_ptr x, mpfr_prec_t bits) {
  if (mpfr_get_prec(x) < bits) mpfr_prec_round(x, bits, MPFR_RNDN);
}

unsigned checked_bits(unsigned bits) {
  if (bits < MPFR_PREC_MIN) throw std::invalid_argument("Real: precision must be at least 2 bits");
  return bits;
}

}  // namespace

Real::Real(unsigned bits) {
  mpfr_init2(value_, checked_bits(bits));
  mpfr_set_zero(value_, 1);
}

Real::Real(long value, unsigned bits) {
  mpfr_init2(value_, checked_bits(bits));
  mpfr_set_si(value_, value, MPFR_RNDN);
}

Real::Real(const Rational& value, unsigned bits) {
  mpfr_init2(value_, checked_bits(bits));
  mpfr_set_q(value_, value.get_mpq_t(), MPFR_RNDN);
}

Real::Real(const Integer& value, unsigned bits) {
  mpfr_init2(value_, checked_bits(bits));
  mpfr_set_z(value_, value.get_mpz_t(), MPFR_RNDN);
}

Real Real::from_double(double value, unsigned bits) {
  Real r(bits);
  mpfr_set_d(r.value_, value, MPFR_RNDN);
  return r;
}

Real Real::from_string(std::string_view text, unsigned bits) {
  Real r(bits);
  std::string s(text);
  char* end = nullptr;
  mpfr_strtofr(r.value_, s.c_str(), &end, 10, MPFR_RNDN);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("Real: cannot parse '" + s + "'");
  }
  return r;
}

Real::Real(const Real& other) {
  mpfr_init2(value_, mpfr_get_prec(other.value_));
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

Real& Real::operator=(const Real& other) {
  if (this != &other) {
    mpfr_set_prec(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

Real::~Real() { mpfr_clear(value_); }

void Real::set_precision(unsigned bits) { mpfr_prec_round(value_, checked_bits(bits), MPFR_RNDN); }

Real& Real::operator+=(const Real& rhs) {
  widen_to(value_, mpfr_get_prec(rhs.value_));
  mpfr_add(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

Real& Real::operator-=(const Real& rhs) {
  widen_to(value_, mpfr_get_prec(rhs.value_));
  mpfr_sub(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

Real& Real::operator*=(const Real& rhs) {
  widen_to(value_, mpfr_get_prec(rhs.value_));
  mpfr_mul(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

Real& Real::operator/=(const Real& rhs) {
  widen_to(value_, mpfr_get_prec(rhs.value_));
  mpfr_div(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

Real& Real::operator+=(long rhs) {
  mpfr_add_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}

Real& Real::operator-=(long rhs) {
  mpfr_sub_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}

Real& Real::operator*=(long rhs) {
  mpfr_mul_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}

Real& Real::operator/=(long rhs) {
  mpfr_div_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}

Real Real::operator-() const {
  Real r(*this);
  mpfr_neg(r.value_, r.value_, MPFR_RNDN);
  return r;
}

std::string Real::to_string(std::size_t digits) const {
  if (mpfr_nan_p(value_)) return "nan";
  if (mpfr_inf_p(value_)) return mpfr_sgn(value_) > 0 ? "inf" : "-inf";
  if (digits == 0) digits = mpfr_get_str_ndigits(10, mpfr_get_prec(value_));
  char* buffer = nullptr;
  const std::string fmt = "%." + std::to_string(digits - 1) + "Re";
  if (mpfr_asprintf(&buffer, fmt.c_str(), value_) < 0) throw std::runtime_error("Real: formatting failed");
  std::unique_ptr<char, void (*)(char*)> guard(buffer, mpfr_free_str);
  return std::string(buffer);
}

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.value_, b.value_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.value_, b.value_);
  return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}

std::partial_ordering operator<=>(const Real& a, long b) {
  if (mpfr_nan_p(a.value_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp_si(a.value_, b);
  return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}

Real operator+(Real a, const Real& b) { return a += b; }
Real operator-(Real a, const Real& b) { return a -= b; }
Real operator*(Real a, const Real& b) { return a *= b; }
Real operator/(Real a, const Real& b) { return a /= b; }
Real operator+(Real a, long b) { return a += b; }
Real operator-(Real a, long b) { return a -= b; }
Real operator*(Real a, long b) { return a *= b; }
Real operator/(Real a, long b) { return a /= b; }
Real operator+(long a, Real b) { return b += a; }
Real operator*(long a, Real b) { return b *= a; }

Real operator-(long a, const Real& b) {
  Real r(b.precision());
  mpfr_si_sub(r.raw(), a, b.raw(), MPFR_RNDN);
  return r;
}

Real operator/(long a, const Real& b) {
  Real r(b.precision());
  mpfr_si_div(r.raw(), a, b.raw(), MPFR_RNDN);
  return r;
}

namespace {

template <class Fn>
Real unary(const Real& x, Fn fn) {
  Real r(x.precision());
  fn(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

}  // namespace

Real abs(const Real& x) { return unary(x, mpfr_abs); }
Real sqrt(const Real& x) { return unary(x, mpfr_sqrt); }
Real exp(const Real& x) { return unary(x, mpfr_exp); }
Real expm1(const Real& x) { return unary(x, mpfr_expm1); }
Real log(const Real& x) { return unary(x, mpfr_log); }
Real log1p(const Real& x) { return unary(x, mpfr_log1p); }
Real expint_e1(const Real& x) {
  // mpfr_eint computes Ei; E1(x) = -Ei(-x).
  Real r(x.precision());
  Real neg = -x;
  mpfr_eint(r.raw(), neg.raw(), MPFR_RNDN);
  mpfr_neg(r.raw(), r.raw(), MPFR_RNDN);
  return r;
}

Real floor(const Real& x) {
  Real r(x.precision());
  mpfr_floor(r.raw(), x.raw());
  return r;
}

Real frac(const Real& x) { return x - floor(x); }

Real lgamma(const Real& x) { return unary(x, mpfr_lngamma); }

Real pow(const Real& base, const Real& exponent) {
  Real r(std::max(base.precision(), exponent.precision()));
  mpfr_pow(r.raw(), base.raw(), exponent.raw(), MPFR_RNDN);
  return r;
}

Real pow(const Real& base, long exponent) {
  Real r(base.precision());
  mpfr_pow_si(r.raw(), base.raw(), exponent, MPFR_RNDN);
  return r;
}

Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real min(const Real& a, const Real& b) { return b < a ? b : a; }

Real const_pi(unsigned bits) {
  Real r(bits);
  mpfr_const_pi(r.raw(), MPFR_RNDN);
  return r;
}

Real const_e(unsigned bits) { return exp(Real(1, bits)); }

Real factorial(unsigned long n, unsigned bits) {
  Real r(bits);
  mpfr_fac_ui(r.raw(), n, MPFR_RNDN);
  return r;
}

long agreement_bits(const Real& a, const Real& b) {
  const Real diff = a - b;
  if (diff.is_zero()) return std::numeric_limits<int>::max();
  if (b.is_zero()) return -diff.exponent();
  return b.exponent() - diff.exponent();
}

std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty rational");
  if (text.find_first_of(".eE") != std::string_view::npos) {
    throw std::invalid_argument("decimal input '" + std::string(text) +
                                "' is not accepted; give an exact fraction such as 1/2");
  }
  const auto slash = text.find('/');
  auto parse_int = [&](std::string_view s) {
    if (s.empty()) throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    Integer v;
    if (v.set_str(std::string(s), 10) != 0) {
      throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    }
    return v;
  };
  Integer num = parse_int(text.substr(0, slash));
  Integer den = slash == std::string_view::npos ? Integer(1) : parse_int(text.substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace mislab
