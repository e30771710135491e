#include "jblab/continued_fraction.hpp"

#include <algorithm>
#include <sstream>

#include "jblab/errors.hpp"

namespace jblab {

ContinuedFraction::ContinuedFraction(BigInt a0, std::vector<BigInt> quotients, bool terminated)
    : a0_(std::move(a0)), a_(std::move(quotients)), terminated_(terminated) {
  for (const auto& a : a_) {
    if (sgn(a) <= 0) throw Error(ErrorCode::InvalidArgument, "partial quotients must be positive");
  }
  p_.reserve(a_.size() + 1);
  q_.reserve(a_.size() + 1);
  p_.push_back(a0_);
  q_.push_back(1);
  BigInt pm = 1, qm = 0;  // p_{-1}, q_{-1}
  for (const auto& a : a_) {
    BigInt np = a * p_.back() + pm;
    BigInt nq = a * q_.back() + qm;
    pm = p_.back();
    qm = q_.back();
    p_.push_back(std::move(np));
    q_.push_back(std::move(nq));
  }
}

ContinuedFraction ContinuedFraction::expand(const BigRat& x, std::size_t K) {
  BigInt num = x.get_num(), den = x.get_den();
  BigInt a0 = floor_div(num, den);
  num -= a0 * den;
  std::vector<BigInt> a;
  while (sgn(num) != 0 && a.size() < K) {
    // remaining value num/den in (0,1): next quotient floor(den/num)
    BigInt next = floor_div(den, num);
    BigInt rem = den - next * num;
    a.push_back(next);
    den = num;
    num = rem;
  }
  return ContinuedFraction(a0, std::move(a), sgn(num) == 0);
}

ContinuedFraction ContinuedFraction::expand_interval(const BigRat& lo, const BigRat& hi, std::size_t K) {
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "expand_interval needs lo <= hi");
  ContinuedFraction a = expand(lo, K + 1);
  ContinuedFraction b = expand(hi, K + 1);
  if (a.a0() != b.a0()) throw Error(ErrorCode::InsufficientPrecision, "integer parts differ");
  std::vector<BigInt> common;
  // A quotient is certified only if both ends agree on it and on the one after it being
  // present (the last quotient of a terminating expansion is ambiguous: [..., a] = [..., a-1, 1]).
  size_t n = std::min(a.depth(), b.depth());
  for (size_t k = 0; k < n; ++k) {
    if (a.quotients()[k] != b.quotients()[k]) break;
    if (k + 1 >= a.depth() || k + 1 >= b.depth()) break;
    common.push_back(a.quotients()[k]);
  }
  if (lo == hi && a.terminated()) return a.truncated(K);
  if (common.size() < K)
    throw Error(ErrorCode::InsufficientPrecision,
                "interval certifies only " + std::to_string(common.size()) + " of " + std::to_string(K) + " quotients");
  common.resize(K);
  return ContinuedFraction(a.a0(), std::move(common), false);
}

ContinuedFraction ContinuedFraction::golden(std::size_t K) {
  return ContinuedFraction(0, std::vector<BigInt>(K, BigInt(1)), false);
}

ContinuedFraction ContinuedFraction::sqrt2_minus_1(std::size_t K) {
  return ContinuedFraction(0, std::vector<BigInt>(K, BigInt(2)), false);
}

ContinuedFraction ContinuedFraction::parse(std::string_view text) {
  std::string s(text);
  auto bad = [&]() { return Error(ErrorCode::ParseError, "continued fraction must look like [a0; a1, a2, ...]: " + s); };
  auto open = s.find('['), close = s.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) throw bad();
  std::string body = s.substr(open + 1, close - open - 1);
  auto semi = body.find(';');
  std::string head = semi == std::string::npos ? body : body.substr(0, semi);
  auto trim = [](std::string t) {
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    return t;
  };
  try {
    BigInt a0(trim(head), 10);
    std::vector<BigInt> a;
    bool terminated = true;
    if (semi != std::string::npos) {
      std::stringstream rest(body.substr(semi + 1));
      std::string item;
      while (std::getline(rest, item, ',')) {
        item = trim(item);
        if (item == "..." || item == "…") {
          terminated = false;
          break;
        }
        if (item.empty()) continue;
        a.emplace_back(item, 10);
      }
    }
    return ContinuedFraction(a0, std::move(a), terminated);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
}

BigRat ContinuedFraction::convergent(std::size_t k) const {
  if (k > depth()) throw Error(ErrorCode::InvalidArgument, "convergent index beyond depth");
  return make_rat(p_[k], q_[k]);
}

RatInterval ContinuedFraction::enclosure() const {
  BigRat v = value();
  if (terminated_) return {v, v};
  // Tail t >= 1: value = (p_K t + p_{K-1}) / (q_K t + q_{K-1}), between t = 1 and t = infinity.
  BigInt pm = depth() == 0 ? BigInt(1) : p_[depth() - 1];
  BigInt qm = depth() == 0 ? BigInt(0) : q_[depth() - 1];
  BigRat other = make_rat(p_.back() + pm, q_.back() + qm);
  if (other < v) return {other, v};
  return {v, other};
}

ContinuedFraction ContinuedFraction::truncated(std::size_t K) const {
  if (K >= depth()) return *this;
  return ContinuedFraction(a0_, std::vector<BigInt>(a_.begin(), a_.begin() + static_cast<long>(K)), false);
}

ContinuedFraction ContinuedFraction::extended(const BigInt& next) const {
  std::vector<BigInt> a = a_;
  a.push_back(next);
  return ContinuedFraction(a0_, std::move(a), false);
}

std::string ContinuedFraction::to_string() const {
  std::string s = "[" + a0_.get_str();
  for (size_t k = 0; k < a_.size(); ++k) s += (k == 0 ? "; " : ", ") + a_[k].get_str();
  if (!terminated_) s += a_.empty() ? "; ..." : ", ...";
  return s + "]";
}

}  // namespace jblab
