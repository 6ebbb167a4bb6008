#ifndef MISLAB_BIGNUM_HPP
#define MISLAB_BIGNUM_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <gmpxx.h>
#include <mpfr.h>

namespace mislab {

/// Exact rational scalar (arbitrary-size numerator and denominator).
using Rational = mpq_class;
using Integer = mpz_class;

/// Floating-point scalar with an explicit mantissa width in bits, backed by MPFR.
///
/// Every value carries its own precision. Results of binary operations take
/// the larger precision of the two operands; operations with plain integers
/// keep the precision of the Real operand. All rounding is to nearest.
class Real {
 public:
  explicit Real(unsigned bits = 64);
  Real(long value, unsigned bits);
  Real(const Rational& value, unsigned bits);
  Real(const Integer& value, unsigned bits);

  static Real from_double(double value, unsigned bits);
  /// Parses a decimal (or MPFR-style) string; throws std::invalid_argument on garbage.
  static Real from_string(std::string_view text, unsigned bits);

  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  unsigned precision() const { return static_cast<unsigned>(mpfr_get_prec(value_)); }
  /// Rounds the stored value to a new precision.
  void set_precision(unsigned bits);

  mpfr_ptr raw() { return value_; }
  mpfr_srcptr raw() const { return value_; }

  Real& operator+=(const Real& rhs);
  Real& operator-=(const Real& rhs);
  Real& operator*=(const Real& rhs);
  Real& operator/=(const Real& rhs);
  Real& operator+=(long rhs);
  Real& operator-=(long rhs);
  Real& operator*=(long rhs);
  Real& operator/=(long rhs);

  Real operator-() const;

  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(value_, MPFR_RNDN); }
  /// Decimal scientific notation. digits == 0 means "enough to round-trip".
  std::string to_string(std::size_t digits = 0) const;

  bool is_zero() const { return mpfr_zero_p(value_) != 0; }
  bool is_finite() const { return mpfr_number_p(value_) != 0; }
  int sign() const { return mpfr_sgn(value_); }
  /// Binary exponent e with 0.5 <= |x| / 2^e < 1 (undefined for zero).
  long exponent() const { return mpfr_get_exp(value_); }

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.value_, b.value_) != 0; }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b);
  friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.value_, b) == 0; }
  friend std::partial_ordering operator<=>(const Real& a, long b);

 private:
  mpfr_t value_;
};

Real operator+(Real a, const Real& b);
Real operator-(Real a, const Real& b);
Real operator*(Real a, const Real& b);
Real operator/(Real a, const Real& b);
Real operator+(Real a, long b);
Real operator-(Real a, long b);
Real operator*(Real a, long b);
Real operator/(Real a, long b);
Real operator+(long a, Real b);
Real operator-(long a, const Real& b);
Real operator*(long a, Real b);
Real operator/(long a, const Real& b);

Real abs(const Real& x);
Real sqrt(const Real& x);
Real exp(const Real& x);
Real expm1(const Real& x);
Real log(const Real& x);
Real log1p(const Real& x);
Real pow(const Real& base, const Real& exponent);
Real pow(const Real& base, long exponent);
Real floor(const Real& x);
/// x - floor(x), in [0, 1).
Real frac(const Real& x);
/// log Gamma(x) for x > 0.
Real lgamma(const Real& x);
Real max(const Real& a, const Real& b);
Real min(const Real& a, const Real& b);
Real const_pi(unsigned bits);
Real const_e(unsigned bits);
Real factorial(unsigned long n, unsigned bits);
/// Exponential integral E1(x) = -Ei(-x) for x > 0.
Real expint_e1(const Real& x);

/// Number of leading bits on which a and b agree, measured relative to |b|.
/// Returns a large value when they are identical.
long agreement_bits(const Real& a, const Real& b);

// In-place kernels shared by the generic engines (overloaded for Rational).
inline void mul_add(Real& acc, const Real& a, const Real& b) {
  mpfr_fma(acc.raw(), a.raw(), b.raw(), acc.raw(), MPFR_RNDN);
}
inline void mul_ui(Real& x, unsigned long v) { mpfr_mul_ui(x.raw(), x.raw(), v, MPFR_RNDN); }
inline void div_ui(Real& x, unsigned long v) { mpfr_div_ui(x.raw(), x.raw(), v, MPFR_RNDN); }

inline void mul_add(Rational& acc, const Rational& a, const Rational& b) { acc += a * b; }
inline void mul_ui(Rational& x, unsigned long v) { x *= v; }
inline void div_ui(Rational& x, unsigned long v) { x /= v; }

/// Canonical "num/den" form (den omitted when 1).
std::string to_string(const Rational& r);
/// Parses "num/den" or "num". Decimal points are rejected.
Rational parse_rational(std::string_view text);

/// Field policies: the engines are templates over one of these.
struct ExactField {
  using value_type = Rational;
  value_type from(const Rational& r) const { return r; }
  value_type from(long v) const { return Rational(v); }
  value_type zero() const { return Rational(0); }
  static constexpr bool exact = true;
};

struct RealField {
  using value_type = Real;
  unsigned bits = 256;
  value_type from(const Rational& r) const { return Real(r, bits); }
  value_type from(long v) const { return Real(v, bits); }
  value_type zero() const { return Real(bits); }
  static constexpr bool exact = false;
};

}  // namespace mislab

#endif  // MISLAB_BIGNUM_HPP
