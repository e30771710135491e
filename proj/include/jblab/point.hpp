#pragma once

#include <string>
#include <vector>

#include "jblab/numeric.hpp"

namespace jblab {

enum class CoordKind { Exact, Real };

/// A point of [0,1]^d. Real coordinates are stored as their exact dyadic rounding,
/// so value equality coincides with bit equality for them.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<BigRat> coords, CoordKind kind = CoordKind::Exact);
  static Point scalar(const BigRat& x, CoordKind kind = CoordKind::Exact);

  int dim() const { return static_cast<int>(coords_.size()); }
  const BigRat& operator[](int i) const { return coords_[static_cast<size_t>(i)]; }
  const std::vector<BigRat>& coords() const { return coords_; }
  CoordKind kind() const { return kind_; }

  std::string to_string() const;

  friend bool operator==(const Point& a, const Point& b) { return a.coords_ == b.coords_; }
  friend bool operator<(const Point& a, const Point& b) { return a.coords_ < b.coords_; }

 private:
  std::vector<BigRat> coords_;
  CoordKind kind_ = CoordKind::Exact;
};

/// L-infinity distance.
BigRat linf_distance(const Point& a, const Point& b);

}  // namespace jblab
