#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "jblab/continued_fraction.hpp"
#include "jblab/numeric.hpp"
#include "jblab/point.hpp"
#include "jblab/system.hpp"

namespace jblab {

struct RateRecord {
  BigInt index;     ///< pair ordinal, or convergent index for delta_from_cf
  double exponent;  ///< log d(x, x_n) / log r_n
};

struct RateEstimate {
  std::vector<RateRecord> records;
  double estimate = 0.0;  ///< sup over the window; 0 when there are no records
  bool infinite = false;  ///< x is hit exactly
  std::size_t window_lo = 0, window_hi = 0;  ///< record positions [lo, hi) entering the max
  BigRat truncation_floor = 0;
  /// Pairs outside the scanned set could raise the estimate to at most this value
  /// (0 when every pair was scanned).
  double unscanned_bound = 0.0;

  /// Rows "index,exponent" with a header line.
  std::string to_csv() const;
};

/// e_k = (1 + ln q_{k+1} / ln q_k) / 2 over the convergents with q_k > 1; the estimate is
/// the max over the last `tail_fraction` of them. A terminated expansion is flagged infinite.
RateEstimate delta_from_cf(const ContinuedFraction& cf, double tail_fraction = 0.5);

/// Max over radius blocks r_n <= head_radius of the exponent of the closest pair.
RateEstimate delta_empirical(const Point& x, const System& system, const BigRat& head_radius);

/// a_1 = 2, a_{k+1} = max(1, round(q_k^{2 delta - 2})); the result is a prefix, not terminated.
/// DepthOverflow when q_K would exceed max_bits.
ContinuedFraction synthesize_rate(double delta, std::size_t K, long max_bits = 1L << 22);

}  // namespace jblab
