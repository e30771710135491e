#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "jblab/cube.hpp"
#include "jblab/numeric.hpp"
#include "jblab/point.hpp"

namespace jblab {

struct RangeBounds {
  double lo;
  double hi;
};

/// Target rate f >= 1 of one real variable; on [0,1]^d it reads the first coordinate.
///
/// Specs:
///   const:c            f = c
///   affine:a,b         f = a + b x      (one_plus_x is affine:1,1)
///   alpha_over_x:a     f = a / x
///   two_sin_pi         f = 2 sin(pi x)
///   piecewise:S0|b1|S1|...|bn|Sn   S_i on [b_i, b_{i+1}); jumps allowed at the b_i
class TargetRate {
 public:
  static TargetRate parse(std::string_view spec);

  const std::string& spec() const { return spec_; }
  double eval(double x) const;
  double eval(const Point& p) const;
  /// Outward-rounded [inf, sup] of f over [lo, hi]. A jump inside the range contributes
  /// both one-sided limits. DomainViolation if the infimum is below 1.
  RangeBounds bounds(const BigRat& lo, const BigRat& hi) const;
  RangeBounds bounds(const DyadicCube& cube) const;
  RangeBounds bounds(const Box& box) const;
  const std::vector<BigRat>& discontinuities() const { return jumps_; }

  struct Piece;

 private:
  std::string spec_;
  std::vector<BigRat> jumps_;
  std::vector<std::shared_ptr<const Piece>> pieces_;
};

}  // namespace jblab
