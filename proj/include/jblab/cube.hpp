#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "jblab/numeric.hpp"
#include "jblab/point.hpp"

namespace jblab {

/// Half-open dyadic cube prod [k_i 2^-j, (k_i+1) 2^-j) of [0,1)^d. The point 1 belongs
/// to the last cube of its generation.
class DyadicCube {
 public:
  DyadicCube() : DyadicCube(0, {BigInt(0)}) {}
  DyadicCube(long generation, std::vector<BigInt> index);
  static DyadicCube unit(int d);
  static DyadicCube containing(const Point& p, long generation);
  static DyadicCube parse(std::string_view text);

  int dim() const { return static_cast<int>(index_.size()); }
  long generation() const { return generation_; }
  const std::vector<BigInt>& index() const { return index_; }
  const BigInt& index(int i) const { return index_[static_cast<size_t>(i)]; }

  BigRat side() const { return pow2(-generation_); }
  BigRat lower(int i) const;
  BigRat upper(int i) const;
  BigRat center(int i) const;
  Point center_point() const;

  std::vector<DyadicCube> children() const;
  DyadicCube parent() const;
  DyadicCube ancestor(long generation) const;
  bool contains(const Point& p) const;
  bool contains(const DyadicCube& other) const;

  /// "j:k1,...,kd"
  std::string to_string() const;

  friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
    return a.generation_ == b.generation_ && a.index_ == b.index_;
  }
  friend bool operator!=(const DyadicCube& a, const DyadicCube& b) { return !(a == b); }
  friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
    if (a.generation_ != b.generation_) return a.generation_ < b.generation_;
    return a.index_ < b.index_;
  }

 private:
  long generation_;
  std::vector<BigInt> index_;
};

/// Number of generation-j subcubes of a generation-g cube, 2^{d(j-g)}; throws if it does not fit.
std::uint64_t subcube_count(int d, long g, long j);

/// Visits the generation-j subcubes of U in lexicographic index order (first coordinate
/// most significant), passing the relative ordinal.
void for_each_subcube(const DyadicCube& U, long j,
                      const std::function<void(const DyadicCube&, std::uint64_t)>& visit);
std::vector<DyadicCube> cubes_within(const DyadicCube& U, long j);
/// Relative ordinal of a generation-j subcube V of U.
std::uint64_t subcube_ordinal(const DyadicCube& U, const DyadicCube& V);

/// L-infinity distance between closures.
BigRat distance(const DyadicCube& a, const DyadicCube& b);
BigRat distance(const DyadicCube& a, const Point& p);

/// Axis-aligned box [lo, hi] (or [lo, hi) per coordinate when hi_open).
struct Box {
  std::vector<BigRat> lo;
  std::vector<BigRat> hi;
  bool hi_open = false;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Point& p) const;
};

Box box_of(const DyadicCube& V);
/// Closed L-infinity ball as a box (not clipped).
Box ball_box(const Point& center, const BigRat& radius);

struct BallFit {
  long generation;
  DyadicCube cube;
};

/// Coarsest generation g with a cube of G_g whose closure lies in the closed ball
/// (intersected with [0,1]^d); smallest index among those.
BallFit largest_contained(const Point& center, const BigRat& radius);
/// Finest dyadic cube containing the whole ball intersected with [0,1]^d.
DyadicCube smallest_enclosing(const Point& center, const BigRat& radius);

}  // namespace jblab
