#include "jblab/point.hpp"

#include "jblab/errors.hpp"

namespace jblab {

Point::Point(std::vector<BigRat> coords, CoordKind kind) : coords_(std::move(coords)), kind_(kind) {
  for (const auto& c : coords_) {
    if (sgn(c) < 0 || c > 1) throw Error(ErrorCode::OutOfDomain, "coordinate outside [0,1]: " + c.get_str());
  }
}

Point Point::scalar(const BigRat& x, CoordKind kind) { return Point(std::vector<BigRat>{x}, kind); }

std::string Point::to_string() const {
  std::string s = "(";
  for (size_t i = 0; i < coords_.size(); ++i) {
    if (i) s += ", ";
    s += to_fraction_string(coords_[i]);
  }
  return s + ")";
}

BigRat linf_distance(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  BigRat best = 0;
  for (int i = 0; i < a.dim(); ++i) {
    BigRat d = abs(BigRat(a[i] - b[i]));
    if (d > best) best = d;
  }
  return best;
}

}  // namespace jblab
