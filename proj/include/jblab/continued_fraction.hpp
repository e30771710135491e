#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "jblab/numeric.hpp"

namespace jblab {

/// Simple continued fraction [a0; a1, ..., aK] with convergents p_k/q_k, k = 0..K.
/// A non-terminated expansion stands for every number sharing this prefix.
class ContinuedFraction {
 public:
  ContinuedFraction(BigInt a0, std::vector<BigInt> quotients, bool terminated);

  /// Euclid on an exact rational, at most K quotients after a0.
  static ContinuedFraction expand(const BigRat& x, std::size_t K);
  /// Quotients shared by every number in [lo, hi]; InsufficientPrecision if fewer than K agree.
  static ContinuedFraction expand_interval(const BigRat& lo, const BigRat& hi, std::size_t K);
  /// golden ratio - 1 = [0; 1, 1, ...]
  static ContinuedFraction golden(std::size_t K);
  /// sqrt(2) - 1 = [0; 2, 2, ...]
  static ContinuedFraction sqrt2_minus_1(std::size_t K);
  static ContinuedFraction parse(std::string_view text);

  const BigInt& a0() const { return a0_; }
  const std::vector<BigInt>& quotients() const { return a_; }
  std::size_t depth() const { return a_.size(); }
  bool terminated() const { return terminated_; }
  const std::vector<BigInt>& p() const { return p_; }
  const std::vector<BigInt>& q() const { return q_; }
  BigRat convergent(std::size_t k) const;
  BigRat value() const { return convergent(depth()); }
  /// Closed interval holding every number with this prefix (a point when terminated).
  RatInterval enclosure() const;

  ContinuedFraction truncated(std::size_t K) const;
  ContinuedFraction extended(const BigInt& next) const;

  /// "[a0; a1, a2]" when terminated, "[a0; a1, a2, ...]" otherwise.
  std::string to_string() const;

 private:
  BigInt a0_;
  std::vector<BigInt> a_;
  bool terminated_;
  std::vector<BigInt> p_, q_;
};

}  // namespace jblab
