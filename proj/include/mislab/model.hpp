#ifndef MISLAB_MODEL_HPP
#define MISLAB_MODEL_HPP

#include <stdexcept>
#include <string>

#include "mislab/bignum.hpp"

namespace mislab {

inline constexpr const char* kEngineVersion = "mislab-1.0.0";

// Error kinds named by the operation contracts.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct SizeTooLarge : std::length_error {
  using std::length_error::length_error;
};
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PrecisionInsufficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Edge probability of G(n,p) together with q = 1 - p and kappa = 1/q, all exact.
class ModelParams {
 public:
  /// Throws DomainError unless 0 < p < 1.
  explicit ModelParams(Rational p);
  static ModelParams parse(std::string_view text) { return ModelParams(parse_rational(text)); }

  const Rational& p() const { return p_; }
  const Rational& q() const { return q_; }
  const Rational& kappa() const { return kappa_; }
  std::string p_string() const { return to_string(p_); }

  double p_double() const { return p_.get_d(); }
  double q_double() const { return q_.get_d(); }

  Real p_real(unsigned bits) const { return Real(p_, bits); }
  Real q_real(unsigned bits) const { return Real(q_, bits); }
  /// log(kappa) = -log(q).
  Real log_kappa(unsigned bits) const { return -log(Real(q_, bits)); }

 private:
  Rational p_;
  Rational q_;
  Rational kappa_;
};

/// Working precision and series truncation threshold for one run.
class NumericContext {
 public:
  /// series_epsilon defaults to 2^(-bits/2). Throws DomainError if bits < 64.
  explicit NumericContext(unsigned precision_bits = 256);
  NumericContext(unsigned precision_bits, Real series_epsilon);

  unsigned precision_bits() const { return bits_; }
  const Real& series_epsilon() const { return eps_; }
  RealField field() const { return RealField{bits_}; }
  Real real(long v) const { return Real(v, bits_); }
  Real real(const Rational& v) const { return Real(v, bits_); }
  /// Same context at twice the precision (used by stability re-runs).
  NumericContext doubled() const { return NumericContext(2 * bits_); }

 private:
  unsigned bits_;
  Real eps_;
};

/// ceil(1.5 x) + 64: bits needed so that evaluating e^{-x} * (a sum of size e^x)
/// keeps at least 64 significant bits.
unsigned required_precision(double x);

}  // namespace mislab

#endif  // MISLAB_MODEL_HPP
