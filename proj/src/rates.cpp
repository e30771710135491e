#include "jblab/rates.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jblab/errors.hpp"

namespace jblab {

std::string RateEstimate::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "index,exponent\n";
  for (const auto& r : records) os << r.index.get_str() << "," << r.exponent << "\n";
  return os.str();
}

RateEstimate delta_from_cf(const ContinuedFraction& cf, double tail_fraction) {
  RateEstimate out;
  if (cf.terminated()) {
    out.infinite = true;
    out.estimate = std::numeric_limits<double>::infinity();
    return out;
  }
  if (cf.depth() < 5) throw Error(ErrorCode::PreconditionViolated, "delta_from_cf needs depth >= 5");
  const auto& q = cf.q();
  for (std::size_t k = 0; k + 1 < q.size(); ++k) {
    if (q[k] <= 1) continue;
    double e = (1.0 + log2_of(q[k + 1]) / log2_of(q[k])) / 2.0;
    out.records.push_back({BigInt(static_cast<unsigned long>(k)), e});
  }
  std::size_t n = out.records.size();
  std::size_t keep = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  keep = std::clamp<std::size_t>(keep, n ? 1 : 0, n);
  out.window_lo = n - keep;
  out.window_hi = n;
  for (std::size_t i = out.window_lo; i < n; ++i) out.estimate = std::max(out.estimate, out.records[i].exponent);
  return out;
}

namespace {

// Exponent log d / log r for 0 < d < 1, 0 < r < 1.
double exponent_of(const BigRat& d, const BigRat& r) { return log2_of(d) / log2_of(r); }

void offer(RateEstimate& out, const BigInt& index, const BigRat& d, const BigRat& r) {
  if (sgn(d) == 0) {
    out.infinite = true;
    out.estimate = std::numeric_limits<double>::infinity();
    return;
  }
  if (d >= 1 || r >= 1) return;
  double e = exponent_of(d, r);
  if (out.records.empty() || e > out.estimate) {
    out.records.push_back({index, e});
    out.estimate = e;
  }
}

// Distance from x to the nearest p/q with 0 <= p <= q-1.
BigRat nearest_on_grid(const BigRat& x, const BigInt& q, BigInt& p) {
  BigRat scaled = x * BigRat(q);
  p = floor_div(2 * scaled.get_num() + scaled.get_den(), 2 * scaled.get_den());  // round half up
  if (p > q - 1) p = q - 1;
  if (sgn(p) < 0) p = 0;
  BigRat d = x - make_rat(p, q);
  return abs(d);
}

void rational_path(const BigRat& x, const System& system, const BigRat& head_radius, RateEstimate& out) {
  const BigInt& q_max = system.params().q_max;
  // r = 1/q^2 <= head  <=>  q >= sqrt(1/head).
  BigRat inv = 1 / head_radius;
  BigInt q_head = isqrt_ceil(ceil_div(inv.get_num(), inv.get_den()));
  while (q_head > 1 && BigRat(BigInt(1), (q_head - 1) * (q_head - 1)) <= head_radius) q_head -= 1;
  if (q_head < 1) q_head = 1;
  const BigInt explicit_span = BigInt(1) << 16;
  BigInt q_explicit_end = std::min(q_max, BigInt(q_head + explicit_span - 1));
  for (BigInt q = q_head; q <= q_explicit_end && !out.infinite; q += 1) {
    BigInt p;
    BigRat d = nearest_on_grid(x, q, p);
    offer(out, q * (q - 1) / 2 + p, d, BigRat(BigInt(1), q * q));
  }
  if (out.infinite || q_explicit_end >= q_max) return;
  // Beyond the explicit segment a non-convergent p/q has |x - p/q| >= 1/(2q^2) (Legendre),
  // so only convergents can exceed 1 + 1/(2 log2 q).
  BigInt q_next = q_explicit_end + 1;
  out.unscanned_bound = 1.0 + 1.0 / (2.0 * log2_of(q_next));
  ContinuedFraction cf = ContinuedFraction::expand(x, 1u << 20);
  const auto& qs = cf.q();
  const auto& ps = cf.p();
  for (std::size_t k = 0; k < qs.size() && !out.infinite; ++k) {
    if (qs[k] < q_next) continue;
    if (qs[k] > q_max) break;
    if (sgn(ps[k]) < 0 || ps[k] >= qs[k]) continue;
    BigRat d = abs(x - make_rat(ps[k], qs[k]));
    offer(out, qs[k] * (qs[k] - 1) / 2 + ps[k], d, BigRat(BigInt(1), qs[k] * qs[k]));
  }
}

void dyadic_path(const Point& x, const System& system, const BigRat& head_radius, RateEstimate& out) {
  const long j_max = system.params().j_max;
  const int d = system.dim();
  BigInt offset = 0;
  for (long j = 1; j <= j_max && !out.infinite; ++j) {
    BigRat r = pow2(-(j + 5));
    BigInt per = pow2_int(static_cast<unsigned long>(j * d));
    if (r <= head_radius) {
      BigRat best = 0;
      BigInt lex = 0;
      BigInt top = pow2_int(static_cast<unsigned long>(j)) - 1;
      for (int i = 0; i < d; ++i) {
        BigInt k;
        BigRat di = nearest_on_grid(x[i], pow2_int(static_cast<unsigned long>(j)), k);
        if (k > top) k = top;
        best = std::max(best, di);
        lex = (lex << static_cast<mp_bitcnt_t>(j)) + k;
      }
      offer(out, offset + lex, best, r);
    }
    offset += per;
  }
}

void generic_path(const Point& x, const System& system, const BigRat& head_radius, RateEstimate& out) {
  bool have_block = false;
  BigRat block_radius, block_best;
  BigInt block_index;
  auto flush = [&]() {
    if (have_block) offer(out, block_index, block_best, block_radius);
  };
  system.for_each_pair([&](const ApproxPair& p) {
    if (p.radius > head_radius) return true;
    BigRat dist = linf_distance(x, p.center);
    if (!have_block || p.radius != block_radius) {
      flush();
      have_block = true;
      block_radius = p.radius;
      block_best = dist;
      block_index = p.index;
    } else if (dist < block_best) {
      block_best = dist;
      block_index = p.index;
    }
    return !out.infinite;
  });
  flush();
}

}  // namespace

RateEstimate delta_empirical(const Point& x, const System& system, const BigRat& head_radius) {
  if (x.dim() != system.dim()) throw Error(ErrorCode::InvalidArgument, "point dimension mismatch");
  if (sgn(head_radius) <= 0) throw Error(ErrorCode::InvalidArgument, "head radius must be positive");
  RateEstimate out;
  out.truncation_floor = system.radius_floor();
  switch (system.kind()) {
    case SystemKind::Rational: rational_path(x[0], system, head_radius, out); break;
    case SystemKind::Dyadic: dyadic_path(x, system, head_radius, out); break;
    default: generic_path(x, system, head_radius, out); break;
  }
  out.window_lo = 0;
  out.window_hi = out.records.size();
  if (out.records.empty() && !out.infinite) out.estimate = 0.0;
  return out;
}

ContinuedFraction synthesize_rate(double delta, std::size_t K, long max_bits) {
  if (!(delta >= 1.0)) throw Error(ErrorCode::InvalidArgument, "synthesize_rate needs delta >= 1");
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "synthesize_rate needs K >= 1");
  std::vector<BigInt> a{BigInt(2)};
  BigInt q_prev = 1, q = 2;  // q_0 = 1, q_1 = a_1
  const double power = 2.0 * delta - 2.0;
  while (a.size() < K) {
    BigInt next;
    if (power == 0.0) {
      next = 1;
    } else {
      long bits = static_cast<long>(power * static_cast<double>(bit_length(q))) + 96;
      mpfr_t base, ex, res;
      mpfr_inits2(bits, base, res, static_cast<mpfr_ptr>(nullptr));
      mpfr_init2(ex, 64);
      mpfr_set_z(base, q.get_mpz_t(), MPFR_RNDN);
      mpfr_set_d(ex, power, MPFR_RNDN);
      mpfr_pow(res, base, ex, MPFR_RNDN);
      mpfr_round(res, res);
      mpfr_get_z(next.get_mpz_t(), res, MPFR_RNDN);
      mpfr_clears(base, ex, res, static_cast<mpfr_ptr>(nullptr));
      if (next < 1) next = 1;
    }
    BigInt q_new = next * q + q_prev;
    if (bit_length(q_new) > max_bits)
      throw Error(ErrorCode::DepthOverflow, "synthesize_rate: q exceeds " + std::to_string(max_bits) +
                                                " bits after depth " + std::to_string(a.size()));
    a.push_back(next);
    q_prev = q;
    q = q_new;
  }
  return ContinuedFraction(BigInt(0), std::move(a), false);
}

}  // namespace jblab
