#include "jblab/farey.hpp"

#include <utility>
#include <vector>

#include "jblab/errors.hpp"

namespace jblab {

BigRat simplest_between(const BigRat& lo_in, const BigRat& hi_in) {
  if (!(lo_in < hi_in)) throw Error(ErrorCode::InvalidArgument, "simplest_between needs lo < hi");
  // Accumulate x = [c0; c1, ...] through the matrix (p1 p0; q1 q0); the tail is 1/s.
  BigInt p1 = 1, p0 = 0, q1 = 0, q0 = 1;
  BigRat lo = lo_in, hi = hi_in;
  for (;;) {
    BigInt fl = floor_div(lo.get_num(), lo.get_den());
    BigInt cand = fl + 1;  // smallest integer > lo
    BigInt c;
    bool done = false;
    if (BigRat(cand) < hi) {
      c = cand;
      done = true;
    } else if (lo == BigRat(fl)) {
      // lo integer, hi <= lo + 1: answer fl + 1/b with the smallest b such that 1/b < hi - fl.
      BigRat t = hi - BigRat(fl);
      BigInt b = floor_div(t.get_den(), t.get_num()) + 1;
      // x = fl + 1/b = [fl; b]
      BigInt np = fl * p1 + p0, nq = fl * q1 + q0;
      p0 = p1; q0 = q1; p1 = np; q1 = nq;
      c = b;
      done = true;
    }
    if (done) {
      BigInt num = c * p1 + p0;
      BigInt den = c * q1 + q0;
      return make_rat(num, den);
    }
    // Both in (fl, fl+1]; recurse on reciprocals of the fractional parts.
    BigInt np = fl * p1 + p0, nq = fl * q1 + q0;
    p0 = p1; q0 = q1; p1 = np; q1 = nq;
    BigRat flo = lo - BigRat(fl);
    BigRat fhi = hi - BigRat(fl);
    lo = 1 / fhi;
    hi = 1 / flo;
  }
}

bool for_each_fraction(const FractionRange& range, const BigInt& max_den,
                       const std::function<bool(const BigRat&)>& visit) {
  if (range.hi < range.lo) return true;
  if (range.lo == range.hi) {
    if (range.lo_closed && range.hi_closed && range.lo.get_den() <= max_den) return visit(range.lo);
    return true;
  }
  if (range.lo_closed && range.lo.get_den() <= max_den && !visit(range.lo)) return false;
  if (range.hi_closed && range.hi.get_den() <= max_den && !visit(range.hi)) return false;
  std::vector<std::pair<BigRat, BigRat>> stack;
  stack.emplace_back(range.lo, range.hi);
  while (!stack.empty()) {
    auto [a, b] = std::move(stack.back());
    stack.pop_back();
    BigRat s = simplest_between(a, b);
    if (s.get_den() > max_den) continue;
    if (!visit(s)) return false;
    stack.emplace_back(a, s);
    stack.emplace_back(s, b);
  }
  return true;
}

}  // namespace jblab
