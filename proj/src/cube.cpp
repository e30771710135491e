#include "jblab/cube.hpp"

#include <algorithm>
#include <sstream>

#include "jblab/errors.hpp"

namespace jblab {

DyadicCube::DyadicCube(long generation, std::vector<BigInt> index)
    : generation_(generation), index_(std::move(index)) {
  if (generation_ < 0) throw Error(ErrorCode::InvalidArgument, "negative generation");
  if (index_.empty()) throw Error(ErrorCode::InvalidArgument, "cube needs d >= 1");
  BigInt limit = pow2_int(static_cast<unsigned long>(generation_));
  for (const auto& k : index_) {
    if (sgn(k) < 0 || k >= limit) throw Error(ErrorCode::OutOfDomain, "cube index out of range");
  }
}

DyadicCube DyadicCube::unit(int d) { return DyadicCube(0, std::vector<BigInt>(static_cast<size_t>(d), BigInt(0))); }

DyadicCube DyadicCube::containing(const Point& p, long generation) {
  BigInt last = pow2_int(static_cast<unsigned long>(generation)) - 1;
  std::vector<BigInt> idx;
  for (int i = 0; i < p.dim(); ++i) {
    BigInt k = floor_scaled(p[i], generation);
    if (k > last) k = last;
    idx.push_back(k);
  }
  return DyadicCube(generation, std::move(idx));
}

DyadicCube DyadicCube::parse(std::string_view text) {
  std::string s(text);
  auto colon = s.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "cube must look like j:k1,...,kd: " + s);
  try {
    long j = std::stol(s.substr(0, colon));
    std::vector<BigInt> idx;
    std::stringstream rest(s.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) idx.emplace_back(item, 10);
    return DyadicCube(j, std::move(idx));
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "cube must look like j:k1,...,kd: " + s);
  }
}

BigRat DyadicCube::lower(int i) const { return BigRat(index(i)) * side(); }
BigRat DyadicCube::upper(int i) const { return BigRat(index(i) + 1) * side(); }
BigRat DyadicCube::center(int i) const {
  BigRat c(BigInt(2) * index(i) + 1, pow2_int(static_cast<unsigned long>(generation_ + 1)));
  c.canonicalize();
  return c;
}

Point DyadicCube::center_point() const {
  std::vector<BigRat> c;
  for (int i = 0; i < dim(); ++i) c.push_back(center(i));
  return Point(std::move(c));
}

std::vector<DyadicCube> DyadicCube::children() const { return cubes_within(*this, generation_ + 1); }

DyadicCube DyadicCube::parent() const {
  if (generation_ == 0) throw Error(ErrorCode::InvalidArgument, "root cube has no parent");
  return ancestor(generation_ - 1);
}

DyadicCube DyadicCube::ancestor(long generation) const {
  if (generation > generation_ || generation < 0) throw Error(ErrorCode::InvalidArgument, "bad ancestor generation");
  std::vector<BigInt> idx;
  for (const auto& k : index_) idx.push_back(k >> static_cast<mp_bitcnt_t>(generation_ - generation));
  return DyadicCube(generation, std::move(idx));
}

bool DyadicCube::contains(const Point& p) const {
  if (p.dim() != dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  return DyadicCube::containing(p, generation_) == *this;
}

bool DyadicCube::contains(const DyadicCube& other) const {
  return other.generation_ >= generation_ && other.dim() == dim() && other.ancestor(generation_) == *this;
}

std::string DyadicCube::to_string() const {
  std::string s = std::to_string(generation_) + ":";
  for (size_t i = 0; i < index_.size(); ++i) {
    if (i) s += ",";
    s += index_[i].get_str();
  }
  return s;
}

std::uint64_t subcube_count(int d, long g, long j) {
  if (j < g) throw Error(ErrorCode::InvalidArgument, "refinement generation below cube generation");
  long bits = static_cast<long>(d) * (j - g);
  if (bits > 40) throw Error(ErrorCode::PreconditionViolated, "subcube scan of 2^" + std::to_string(bits) + " cubes is too large");
  return std::uint64_t{1} << bits;
}

void for_each_subcube(const DyadicCube& U, long j,
                      const std::function<void(const DyadicCube&, std::uint64_t)>& visit) {
  const int d = U.dim();
  const long shift = j - U.generation();
  const std::uint64_t total = subcube_count(d, U.generation(), j);
  const std::uint64_t per_axis = std::uint64_t{1} << shift;
  std::vector<BigInt> base;
  for (int i = 0; i < d; ++i) base.push_back(U.index(i) << static_cast<mp_bitcnt_t>(shift));
  std::vector<BigInt> idx(base);
  for (std::uint64_t ord = 0; ord < total; ++ord) {
    std::uint64_t rest = ord;
    for (int i = d - 1; i >= 0; --i) {
      std::uint64_t digit = rest % per_axis;
      rest /= per_axis;
      idx[static_cast<size_t>(i)] = base[static_cast<size_t>(i)] + digit;
    }
    visit(DyadicCube(j, idx), ord);
  }
}

std::vector<DyadicCube> cubes_within(const DyadicCube& U, long j) {
  std::vector<DyadicCube> out;
  for_each_subcube(U, j, [&](const DyadicCube& V, std::uint64_t) { out.push_back(V); });
  return out;
}

std::uint64_t subcube_ordinal(const DyadicCube& U, const DyadicCube& V) {
  if (!U.contains(V)) throw Error(ErrorCode::InvalidArgument, "subcube_ordinal: V not inside U");
  const long shift = V.generation() - U.generation();
  subcube_count(U.dim(), U.generation(), V.generation());
  std::uint64_t ord = 0;
  for (int i = 0; i < U.dim(); ++i) {
    BigInt rel = V.index(i) - (U.index(i) << static_cast<mp_bitcnt_t>(shift));
    ord = (ord << shift) | rel.get_ui();
  }
  return ord;
}

namespace {

// Distance between closed intervals [a1,b1], [a2,b2].
BigRat interval_gap(const BigRat& a1, const BigRat& b1, const BigRat& a2, const BigRat& b2) {
  if (b1 < a2) return a2 - b1;
  if (b2 < a1) return a1 - b2;
  return 0;
}

}  // namespace

BigRat distance(const DyadicCube& a, const DyadicCube& b) {
  BigRat best = 0;
  for (int i = 0; i < a.dim(); ++i) {
    BigRat g = interval_gap(a.lower(i), a.upper(i), b.lower(i), b.upper(i));
    if (g > best) best = g;
  }
  return best;
}

BigRat distance(const DyadicCube& a, const Point& p) {
  BigRat best = 0;
  for (int i = 0; i < a.dim(); ++i) {
    BigRat g = interval_gap(a.lower(i), a.upper(i), p[i], p[i]);
    if (g > best) best = g;
  }
  return best;
}

bool Box::contains(const Point& p) const {
  for (int i = 0; i < dim(); ++i) {
    if (p[i] < lo[static_cast<size_t>(i)]) return false;
    if (hi_open ? p[i] >= hi[static_cast<size_t>(i)] : p[i] > hi[static_cast<size_t>(i)]) return false;
  }
  return true;
}

Box box_of(const DyadicCube& V) {
  Box b;
  for (int i = 0; i < V.dim(); ++i) {
    b.lo.push_back(V.lower(i));
    b.hi.push_back(V.upper(i));
  }
  b.hi_open = true;
  return b;
}

Box ball_box(const Point& center, const BigRat& radius) {
  Box b;
  for (int i = 0; i < center.dim(); ++i) {
    b.lo.push_back(center[i] - radius);
    b.hi.push_back(center[i] + radius);
  }
  return b;
}

BallFit largest_contained(const Point& center, const BigRat& radius) {
  if (sgn(radius) <= 0) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const int d = center.dim();
  std::vector<BigRat> lo, hi;
  for (int i = 0; i < d; ++i) {
    lo.push_back(std::max(BigRat(center[i] - radius), BigRat(0)));
    hi.push_back(std::min(BigRat(center[i] + radius), BigRat(1)));
  }
  // A generation-g cube fits once 2^{1-g} <= the narrowest side, so g <= -floor_log2 + 2.
  BigRat narrow = hi[0] - lo[0];
  for (int i = 1; i < d; ++i) narrow = std::min(narrow, BigRat(hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)]));
  long g_max = (sgn(narrow) > 0 ? -floor_log2(narrow) : 0) + 2;
  for (long g = 0; g <= std::max(g_max, 0L); ++g) {
    std::vector<BigInt> idx;
    bool ok = true;
    for (int i = 0; i < d && ok; ++i) {
      BigInt k = ceil_scaled(lo[static_cast<size_t>(i)], g);
      BigInt k_end = floor_scaled(hi[static_cast<size_t>(i)], g);  // need k + 1 <= k_end
      if (k + 1 > k_end) ok = false;
      idx.push_back(k);
    }
    if (ok) return {g, DyadicCube(g, std::move(idx))};
  }
  throw Error(ErrorCode::InvalidArgument, "ball does not meet [0,1]^d");
}

DyadicCube smallest_enclosing(const Point& center, const BigRat& radius) {
  if (sgn(radius) <= 0) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const int d = center.dim();
  std::vector<BigRat> lo, hi;
  for (int i = 0; i < d; ++i) {
    lo.push_back(std::max(BigRat(center[i] - radius), BigRat(0)));
    hi.push_back(std::min(BigRat(center[i] + radius), BigRat(1)));
  }
  Point plo(lo), phi(hi);
  // The point 1 sits in the last cube, so containment of both corners is exact.
  long g = 0;
  for (;;) {
    DyadicCube a = DyadicCube::containing(plo, g + 1);
    DyadicCube b = DyadicCube::containing(phi, g + 1);
    bool closed_inside = a == b;
    // The closed ball must not reach the upper face of the half-open cube (unless it is 1).
    for (int i = 0; i < d && closed_inside; ++i) {
      if (hi[static_cast<size_t>(i)] == a.upper(i) && a.upper(i) != 1) closed_inside = false;
    }
    if (!closed_inside) return DyadicCube::containing(plo, g);
    ++g;
    if (g > 100000) throw Error(ErrorCode::InvalidArgument, "degenerate ball");
  }
}

}  // namespace jblab
