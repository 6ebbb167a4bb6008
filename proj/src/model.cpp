#include "mislab/model.hpp"

#include <cmath>
#include <utility>

namespace mislab {

ModelParams::ModelParams(Rational p) : p_(std::move(p)) {
  p_.canonicalize();
  if (p_ <= 0 || p_ >= 1) throw DomainError("edge probability must satisfy 0 < p < 1, got " + to_string(p_));
  q_ = 1 - p_;
  kappa_ = 1 / q_;
}

NumericContext::NumericContext(unsigned precision_bits) : bits_(precision_bits), eps_(precision_bits) {
  if (bits_ < 64) throw DomainError("precision_bits must be >= 64");
  eps_ = Real(1, bits_);
  mpfr_div_2ui(eps_.raw(), eps_.raw(), bits_ / 2, MPFR_RNDN);
}

NumericContext::NumericContext(unsigned precision_bits, Real series_epsilon)
    : bits_(precision_bits), eps_(std::move(series_epsilon)) {
  if (bits_ < 64) throw DomainError("precision_bits must be >= 64");
  if (eps_.sign() <= 0) throw DomainError("series_epsilon must be positive");
}

unsigned required_precision(double x) {
  if (!(x >= 0)) throw DomainError("required_precision: x must be >= 0");
  return static_cast<unsigned>(std::ceil(1.5 * x)) + 64;
}

}  // namespace mislab
