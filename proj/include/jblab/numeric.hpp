#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace jblab {

using BigInt = mpz_class;
using BigRat = mpq_class;

BigRat make_rat(const BigInt& num, const BigInt& den);
BigInt pow2_int(unsigned long e);
/// 2^e for any sign of e.
BigRat pow2(long e);

/// floor(log2 n) + 1 for n > 0.
long bit_length(const BigInt& n);
/// Exact floor(log2 x) for x > 0.
long floor_log2(const BigRat& x);
/// log2 x to double precision, valid far outside the double exponent range.
double log2_of(const BigRat& x);
double log2_of(const BigInt& x);

BigInt floor_div(const BigInt& a, const BigInt& b);
BigInt ceil_div(const BigInt& a, const BigInt& b);
/// floor(x * 2^j), j may be negative.
BigInt floor_scaled(const BigRat& x, long j);
BigInt ceil_scaled(const BigRat& x, long j);
BigInt isqrt_floor(const BigInt& n);
BigInt isqrt_ceil(const BigInt& n);

/// "p/q" always, also for integers.
std::string to_fraction_string(const BigRat& x);
/// Accepts "p/q", integers and finite decimals such as "0.25" or "1e-3"; exact.
BigRat parse_rational(std::string_view text);

struct RatInterval {
  BigRat lo;
  BigRat hi;
};

/// Rational bracket lo <= r^e <= hi; r > 0, e > 0.
RatInterval power_bounds(const BigRat& r, double e, long precision_bits = 128);

/// Certified sign of (D - r^e) for D >= 0, r > 0, e > 0. Returns 0 only on exact equality
/// (or when equality cannot be excluded at 4096 bits).
int compare_power(const BigRat& D, const BigRat& r, double e);

/// Certified floor(-log2(r^e)) = floor(e * log2(1/r)).
long floor_neg_log2_power(const BigRat& r, double e);

}  // namespace jblab
