#pragma once

// Certified geometry of closed L-infinity balls B(y, rho^e) / divisor against dyadic grids.

#include <functional>

#include "jblab/cube.hpp"
#include "jblab/numeric.hpp"
#include "jblab/point.hpp"

namespace jblab::detail {

/// Radius rho^e / divisor as a certified comparison target.
struct PowerRadius {
  BigRat base;    ///< rho
  double expo;    ///< e
  BigRat divisor = 1;

  /// sign(D - rho^e / divisor)
  int compare(const BigRat& D) const { return compare_power(D * divisor, base, expo); }
  /// Rational upper bound of the radius.
  BigRat upper() const { return power_bounds(base, expo).hi / divisor; }
  BigRat lower() const { return power_bounds(base, expo).lo / divisor; }
};

/// Whether the closed ball meets the closed cube (L-infinity distance <= radius).
/// Equality and undecidable ties count as meeting.
inline bool ball_meets_closure(const Point& y, const PowerRadius& R, const DyadicCube& V) {
  return R.compare(distance(V, y)) <= 0;
}

/// Index range [k_lo, k_hi] along one axis of generation-j cells [k s, (k+1) s) that meet the
/// closed interval [y - R, y + R], clipped to [clip_lo, clip_hi]. Returns false if empty.
inline bool axis_range(const BigRat& y, const PowerRadius& R, long j, const BigInt& clip_lo, const BigInt& clip_hi,
                       BigInt& k_lo, BigInt& k_hi) {
  const BigRat s = pow2(-j);
  const BigRat up = R.upper();
  // k s <= y + R
  k_hi = floor_scaled(y + up, j);
  if (k_hi > clip_hi) k_hi = clip_hi;
  while (k_hi >= clip_lo && R.compare(BigRat(k_hi) * s - y) > 0) k_hi -= 1;
  // (k+1) s > y - R, ties counted as meeting
  k_lo = floor_scaled(y - up, j);
  if (k_lo < clip_lo) k_lo = clip_lo;
  while (k_lo <= k_hi && R.compare(y - BigRat(k_lo + 1) * s) > 0) k_lo += 1;
  return k_lo <= k_hi;
}

}  // namespace jblab::detail
