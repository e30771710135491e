#include "jblab/numeric.hpp"

#include <mpfr.h>

#include <cmath>
#include <string>

#include "jblab/errors.hpp"

namespace jblab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::InsufficientPrecision: return "InsufficientPrecision";
    case ErrorCode::TruncationTooShallow: return "TruncationTooShallow";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::DepthOverflow: return "DepthOverflow";
    case ErrorCode::NoSeed: return "NoSeed";
    case ErrorCode::BandViolation: return "BandViolation";
    case ErrorCode::LevelNotFound: return "LevelNotFound";
    case ErrorCode::AnnulusTooThin: return "AnnulusTooThin";
    case ErrorCode::ScalingViolation: return "ScalingViolation";
    case ErrorCode::RangeTooNarrow: return "RangeTooNarrow";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

BigRat make_rat(const BigInt& num, const BigInt& den) {
  BigRat q(num, den);
  q.canonicalize();
  return q;
}

BigInt pow2_int(unsigned long e) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
  return r;
}

BigRat pow2(long e) {
  if (e >= 0) return BigRat(pow2_int(static_cast<unsigned long>(e)));
  return BigRat(BigInt(1), pow2_int(static_cast<unsigned long>(-e)));
}

long bit_length(const BigInt& n) {
  if (sgn(n) <= 0) throw Error(ErrorCode::InvalidArgument, "bit_length of non-positive integer");
  return static_cast<long>(mpz_sizeinbase(n.get_mpz_t(), 2));
}

long floor_log2(const BigRat& x) {
  if (sgn(x) <= 0) throw Error(ErrorCode::InvalidArgument, "floor_log2 of non-positive value");
  long k = bit_length(x.get_num()) - bit_length(x.get_den());
  // 2^(k-1) < x < 2^(k+1); settle whether x >= 2^k.
  if (x >= pow2(k)) return k;
  return k - 1;
}

double log2_of(const BigInt& x) {
  if (sgn(x) <= 0) throw Error(ErrorCode::InvalidArgument, "log2 of non-positive value");
  long exp = 0;
  double m = mpz_get_d_2exp(&exp, x.get_mpz_t());
  return std::log2(m) + static_cast<double>(exp);
}

double log2_of(const BigRat& x) { return log2_of(x.get_num()) - log2_of(x.get_den()); }

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

BigInt ceil_div(const BigInt& a, const BigInt& b) {
  BigInt q;
  mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

BigInt floor_scaled(const BigRat& x, long j) {
  BigInt num = x.get_num();
  BigInt den = x.get_den();
  if (j >= 0)
    num <<= j;
  else
    den <<= -j;
  return floor_div(num, den);
}

BigInt ceil_scaled(const BigRat& x, long j) {
  BigInt num = x.get_num();
  BigInt den = x.get_den();
  if (j >= 0)
    num <<= j;
  else
    den <<= -j;
  return ceil_div(num, den);
}

BigInt isqrt_floor(const BigInt& n) {
  if (sgn(n) < 0) throw Error(ErrorCode::InvalidArgument, "isqrt of negative value");
  BigInt r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

BigInt isqrt_ceil(const BigInt& n) {
  BigInt r = isqrt_floor(n);
  if (r * r < n) r += 1;
  return r;
}

std::string to_fraction_string(const BigRat& x) {
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

BigRat parse_rational(std::string_view text) {
  std::string s(text);
  auto fail = [&]() { return Error(ErrorCode::ParseError, "not a rational number: '" + s + "'"); };
  if (s.empty()) throw fail();
  try {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
      BigInt num(s.substr(0, slash), 10);
      BigInt den(s.substr(slash + 1), 10);
      if (sgn(den) == 0) throw fail();
      return make_rat(num, den);
    }
    std::string mant = s;
    long exp10 = 0;
    auto epos = s.find_first_of("eE");
    if (epos != std::string::npos) {
      mant = s.substr(0, epos);
      exp10 = std::stol(s.substr(epos + 1));
    }
    bool negative = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
      negative = mant[0] == '-';
      mant = mant.substr(1);
    }
    auto dot = mant.find('.');
    std::string digits = mant;
    if (dot != std::string::npos) {
      digits = mant.substr(0, dot) + mant.substr(dot + 1);
      exp10 -= static_cast<long>(mant.size() - dot - 1);
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) throw fail();
    BigInt num(digits, 10);
    if (negative) num = -num;
    BigInt ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
    if (exp10 >= 0) return BigRat(num * ten_pow);
    return make_rat(num, ten_pow);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw fail();
  }
}

namespace {

// RAII holder for one MPFR variable.
class Mpfr {
 public:
  explicit Mpfr(long prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }

 private:
  mpfr_t v_;
};

BigRat to_rat(mpfr_ptr x) {
  // Every finite MPFR value is a dyadic rational; extract it exactly.
  BigInt mant;
  mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), x);
  BigRat r(mant);
  if (e >= 0)
    r *= pow2(e);
  else
    r /= pow2(-e);
  r.canonicalize();
  return r;
}

bool is_small_integer(double e, long& out) {
  if (e == std::floor(e) && e >= 1 && e <= 64) {
    out = static_cast<long>(e);
    return true;
  }
  return false;
}

}  // namespace

RatInterval power_bounds(const BigRat& r, double e, long precision_bits) {
  if (sgn(r) <= 0 || !(e > 0)) throw Error(ErrorCode::InvalidArgument, "power_bounds needs r > 0, e > 0");
  Mpfr rlo(precision_bits), rhi(precision_bits), ex(64), lo(precision_bits), hi(precision_bits);
  mpfr_set_q(rlo.get(), r.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(rhi.get(), r.get_mpq_t(), MPFR_RNDU);
  mpfr_set_d(ex.get(), e, MPFR_RNDN);
  mpfr_pow(lo.get(), rlo.get(), ex.get(), MPFR_RNDD);
  mpfr_pow(hi.get(), rhi.get(), ex.get(), MPFR_RNDU);
  return {to_rat(lo.get()), to_rat(hi.get())};
}

int compare_power(const BigRat& D, const BigRat& r, double e) {
  if (sgn(r) <= 0 || !(e > 0)) throw Error(ErrorCode::InvalidArgument, "compare_power needs r > 0, e > 0");
  if (sgn(D) <= 0) return -1;
  long ie = 0;
  if (is_small_integer(e, ie)) {
    BigInt num, den;
    mpz_pow_ui(num.get_mpz_t(), r.get_num_mpz_t(), static_cast<unsigned long>(ie));
    mpz_pow_ui(den.get_mpz_t(), r.get_den_mpz_t(), static_cast<unsigned long>(ie));
    int c = cmp(D, make_rat(num, den));
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  for (long prec : {96L, 256L, 1024L, 4096L}) {
    Mpfr rlo(prec), rhi(prec), ex(64), lo(prec), hi(prec);
    mpfr_set_q(rlo.get(), r.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(rhi.get(), r.get_mpq_t(), MPFR_RNDU);
    mpfr_set_d(ex.get(), e, MPFR_RNDN);
    mpfr_pow(lo.get(), rlo.get(), ex.get(), MPFR_RNDD);
    mpfr_pow(hi.get(), rhi.get(), ex.get(), MPFR_RNDU);
    if (mpfr_cmp_q(lo.get(), D.get_mpq_t()) > 0) return -1;
    if (mpfr_cmp_q(hi.get(), D.get_mpq_t()) < 0) return 1;
    if (mpfr_equal_p(lo.get(), hi.get())) return 0;
  }
  return 0;
}

long floor_neg_log2_power(const BigRat& r, double e) {
  if (sgn(r) <= 0 || !(e > 0)) throw Error(ErrorCode::InvalidArgument, "floor_neg_log2_power needs r > 0, e > 0");
  for (long prec : {96L, 256L, 1024L}) {
    Mpfr rlo(prec), rhi(prec), ex(64), lo(prec), hi(prec);
    mpfr_set_q(rlo.get(), r.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(rhi.get(), r.get_mpq_t(), MPFR_RNDU);
    mpfr_set_d(ex.get(), e, MPFR_RNDN);
    // -log2 r is decreasing in r.
    mpfr_log2(lo.get(), rhi.get(), MPFR_RNDU);
    mpfr_neg(lo.get(), lo.get(), MPFR_RNDD);
    mpfr_log2(hi.get(), rlo.get(), MPFR_RNDD);
    mpfr_neg(hi.get(), hi.get(), MPFR_RNDU);
    mpfr_mul(lo.get(), lo.get(), ex.get(), MPFR_RNDD);
    mpfr_mul(hi.get(), hi.get(), ex.get(), MPFR_RNDU);
    mpfr_floor(lo.get(), lo.get());
    mpfr_floor(hi.get(), hi.get());
    if (mpfr_equal_p(lo.get(), hi.get())) return mpfr_get_si(lo.get(), MPFR_RNDN);
  }
  // Only reachable when the value is an integer that the brackets straddle.
  Mpfr v(1024), rr(1024), ex(64);
  mpfr_set_q(rr.get(), r.get_mpq_t(), MPFR_RNDN);
  mpfr_set_d(ex.get(), e, MPFR_RNDN);
  mpfr_log2(v.get(), rr.get(), MPFR_RNDN);
  mpfr_neg(v.get(), v.get(), MPFR_RNDN);
  mpfr_mul(v.get(), v.get(), ex.get(), MPFR_RNDN);
  mpfr_round(v.get(), v.get());
  return mpfr_get_si(v.get(), MPFR_RNDN);
}

}  // namespace jblab
