#pragma once

#include <functional>

#include "jblab/numeric.hpp"

namespace jblab {

/// The fraction with the smallest denominator strictly between lo and hi (lo < hi).
/// Stern-Brocot descent driven by the continued fractions of the endpoints.
BigRat simplest_between(const BigRat& lo, const BigRat& hi);

struct FractionRange {
  BigRat lo;
  BigRat hi;
  bool lo_closed = true;
  bool hi_closed = true;
};

/// Visits every reduced fraction a/b in the range with b <= max_den (in no particular
/// order). The visitor returns false to stop early. Returns false if stopped.
bool for_each_fraction(const FractionRange& range, const BigInt& max_den,
                       const std::function<bool(const BigRat&)>& visit);

}  // namespace jblab
