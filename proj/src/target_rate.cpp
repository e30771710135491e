#include "jblab/target_rate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "jblab/errors.hpp"

namespace jblab {

namespace {

enum class Shape { Const, Affine, AlphaOverX, TwoSinPi };

// Two ulps plus an absolute floor cover libm error on the built-ins.
double widen_down(double v) { return std::nextafter(std::nextafter(v, -INFINITY), -INFINITY) - 1e-15; }
double widen_up(double v) { return std::nextafter(std::nextafter(v, INFINITY), INFINITY) + 1e-15; }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& spec) {
  try {
    return parse_rational(s).get_d();
  } catch (const Error&) {
    throw Error(ErrorCode::ParseError, "bad number '" + s + "' in rate spec '" + spec + "'");
  }
}

}  // namespace

struct TargetRate::Piece {
  Shape shape;
  double a = 0, b = 0;

  double eval(double x) const {
    switch (shape) {
      case Shape::Const: return a;
      case Shape::Affine: return a + b * x;
      case Shape::AlphaOverX: return x > 0 ? a / x : INFINITY;
      case Shape::TwoSinPi: return 2.0 * std::sin(std::numbers::pi * x);
    }
    return a;
  }

  // Extremes of the closed-interval restriction, before widening.
  RangeBounds raw_bounds(double lo, double hi) const {
    double flo = eval(lo), fhi = eval(hi);
    switch (shape) {
      case Shape::Const: return {a, a};
      case Shape::Affine:
      case Shape::AlphaOverX: return {std::min(flo, fhi), std::max(flo, fhi)};
      case Shape::TwoSinPi: {
        double top = (lo <= 0.5 && 0.5 <= hi) ? 2.0 : std::max(flo, fhi);
        return {std::min(flo, fhi), top};
      }
    }
    return {flo, fhi};
  }
};

namespace {

std::shared_ptr<const TargetRate::Piece> parse_piece(const std::string& s, const std::string& spec) {
  auto p = std::make_shared<TargetRate::Piece>();
  auto colon = s.find(':');
  std::string head = s.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "const") {
    p->shape = Shape::Const;
    p->a = parse_double(args, spec);
  } else if (head == "affine") {
    auto parts = split(args, ',');
    if (parts.size() != 2) throw Error(ErrorCode::ParseError, "affine needs a,b in '" + spec + "'");
    p->shape = Shape::Affine;
    p->a = parse_double(parts[0], spec);
    p->b = parse_double(parts[1], spec);
  } else if (head == "one_plus_x") {
    p->shape = Shape::Affine;
    p->a = 1;
    p->b = 1;
  } else if (head == "alpha_over_x") {
    p->shape = Shape::AlphaOverX;
    p->a = parse_double(args, spec);
  } else if (head == "two_sin_pi") {
    p->shape = Shape::TwoSinPi;
  } else {
    throw Error(ErrorCode::ParseError, "unknown rate spec '" + s + "'");
  }
  return p;
}

}  // namespace

TargetRate TargetRate::parse(std::string_view spec_view) {
  TargetRate f;
  f.spec_ = std::string(spec_view);
  const std::string prefix = "piecewise:";
  if (f.spec_.rfind(prefix, 0) == 0) {
    auto parts = split(f.spec_.substr(prefix.size()), '|');
    if (parts.size() < 3 || parts.size() % 2 == 0)
      throw Error(ErrorCode::ParseError, "piecewise spec must alternate pieces and breakpoints: '" + f.spec_ + "'");
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i % 2 == 0) {
        f.pieces_.push_back(parse_piece(parts[i], f.spec_));
      } else {
        BigRat b = parse_rational(parts[i]);
        if (!f.jumps_.empty() && !(f.jumps_.back() < b))
          throw Error(ErrorCode::ParseError, "breakpoints must increase in '" + f.spec_ + "'");
        f.jumps_.push_back(b);
      }
    }
  } else {
    f.pieces_.push_back(parse_piece(f.spec_, f.spec_));
  }
  return f;
}

double TargetRate::eval(double x) const {
  size_t i = 0;
  while (i < jumps_.size() && x >= jumps_[i].get_d()) ++i;
  return pieces_[i]->eval(x);
}

double TargetRate::eval(const Point& p) const { return eval(p[0].get_d()); }

RangeBounds TargetRate::bounds(const BigRat& lo, const BigRat& hi) const {
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty range");
  RangeBounds out{INFINITY, -INFINITY};
  // Piece i lives on [b_i, b_{i+1}); its closure supplies the one-sided limits.
  for (size_t i = 0; i < pieces_.size(); ++i) {
    // A range starting at the jump b_{i+1} only sees piece i + 1 there.
    if (i < jumps_.size() && lo >= jumps_[i]) continue;
    BigRat a = lo, b = hi;
    if (i > 0 && a < jumps_[i - 1]) a = jumps_[i - 1];
    if (i < jumps_.size() && b > jumps_[i]) b = jumps_[i];
    if (b < a) continue;
    RangeBounds r = pieces_[i]->raw_bounds(a.get_d(), b.get_d());
    out.lo = std::min(out.lo, r.lo);
    out.hi = std::max(out.hi, r.hi);
  }
  out.lo = widen_down(out.lo);
  out.hi = widen_up(out.hi);
  // Exact minima of 1 (e.g. 2 sin(pi/6)) must not be flagged by the widening.
  if (out.lo < 1.0 - 1e-12) {
    std::ostringstream os;
    os << "f = " << spec_ << " drops to " << out.lo << " < 1 on [" << lo.get_d() << ", " << hi.get_d() << "]";
    throw Error(ErrorCode::DomainViolation, os.str());
  }
  out.lo = std::max(out.lo, 1.0);
  return out;
}

RangeBounds TargetRate::bounds(const DyadicCube& cube) const { return bounds(cube.lower(0), cube.upper(0)); }

RangeBounds TargetRate::bounds(const Box& box) const { return bounds(box.lo[0], box.hi[0]); }

}  // namespace jblab
