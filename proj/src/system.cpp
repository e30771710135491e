#include "jblab/system.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "jblab/errors.hpp"
#include "jblab/farey.hpp"

namespace jblab {

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Rational: return "rational";
    case SystemKind::Dyadic: return "dyadic";
    case SystemKind::Inhomogeneous: return "inhomogeneous";
    case SystemKind::Poisson: return "poisson";
    case SystemKind::Custom: return "custom";
  }
  return "custom";
}

SystemKind parse_system_kind(std::string_view text) {
  if (text == "rational") return SystemKind::Rational;
  if (text == "dyadic") return SystemKind::Dyadic;
  if (text == "inhomogeneous") return SystemKind::Inhomogeneous;
  if (text == "poisson") return SystemKind::Poisson;
  if (text == "custom") return SystemKind::Custom;
  throw Error(ErrorCode::ParseError, "unknown system kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// RadiusBand

bool RadiusBand::admits(const BigRat& r) const {
  int c = cmp(r, pow2(-coarse));
  if (coarse_open ? c >= 0 : c > 0) return false;
  int f = cmp(r, pow2(-fine));
  if (fine_open ? f <= 0 : f < 0) return false;
  return true;
}

bool RadiusBand::empty() const {
  if (fine > coarse) return false;
  if (fine < coarse) return true;
  return coarse_open || fine_open;
}

RadiusBand RadiusBand::witness(long g) { return {g, true, g + 1, false}; }
RadiusBand RadiusBand::layer(long j) { return {j, false, j + 1, true}; }
RadiusBand RadiusBand::layers(long k_lo, long k_hi) { return {k_lo, false, k_hi + 1, true}; }
RadiusBand RadiusBand::window(long lo, long hi) { return {lo, false, hi, true}; }
RadiusBand RadiusBand::closed(long coarse, long fine) { return {coarse, false, fine, false}; }

long layer_of(const BigRat& radius) {
  if (sgn(radius) <= 0) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  // 2^{-(j+1)} < r <= 2^{-j}  <=>  j <= log2(1/r) < j+1
  return floor_log2(1 / radius);
}

// ---------------------------------------------------------------------------
// Backends

class SystemBackend {
 public:
  virtual ~SystemBackend() = default;
  SystemKind kind;
  int d = 1;
  SystemParams params;

  virtual bool enumerable() const = 0;
  virtual std::uint64_t size() const = 0;
  virtual ApproxPair pair(std::uint64_t i) const = 0;
  virtual BigRat radius_floor() const = 0;
  virtual bool centers_in(const Box& box, const RadiusBand& band, CenterFilter filter, const CenterVisitor& visit,
                          bool all_pairs) const = 0;
  virtual bool equal_pairs(const SystemBackend& other) const = 0;
};

namespace {

const BigInt kEnumerableLimit = pow2_int(62);

// Rational system, analytic.
class RationalBackend : public SystemBackend {
 public:
  explicit RationalBackend(const BigInt& q_max) {
    if (q_max < 1) throw Error(ErrorCode::InvalidArgument, "q_max must be >= 1");
    kind = SystemKind::Rational;
    d = 1;
    params.q_max = q_max;
    total_ = q_max * (q_max + 1) / 2;
  }

  bool enumerable() const override { return total_ <= kEnumerableLimit; }
  std::uint64_t size() const override {
    if (!enumerable()) throw Error(ErrorCode::PreconditionViolated, "system too large to enumerate");
    return total_.get_ui();
  }

  static BigInt index_of(const BigInt& p, const BigInt& q) { return q * (q - 1) / 2 + p; }

  static ApproxPair make(const BigInt& p, const BigInt& q) {
    return {Point::scalar(make_rat(p, q)), BigRat(BigInt(1), BigInt(q * q)), index_of(p, q)};
  }

  ApproxPair pair(std::uint64_t i) const override {
    if (BigInt(std::to_string(i)) >= total_) throw Error(ErrorCode::InvalidArgument, "pair index out of range");
    // q(q-1)/2 <= i < q(q+1)/2
    BigInt bi(std::to_string(i));
    BigInt q = (isqrt_floor(8 * bi + 1) + 1) / 2;
    while (q * (q - 1) / 2 > bi) q -= 1;
    while (q * (q + 1) / 2 <= bi) q += 1;
    BigInt p = bi - q * (q - 1) / 2;
    return make(p, q);
  }

  BigRat radius_floor() const override { return BigRat(BigInt(1), params.q_max * params.q_max); }

  // Denominator range [q_lo, q_hi] of radii 1/q^2 inside the band, clipped to q_max.
  bool q_range(const RadiusBand& band, BigInt& q_lo, BigInt& q_hi) const {
    BigInt two_c = pow2_int(static_cast<unsigned long>(std::max(band.coarse, 0L)));
    q_lo = isqrt_ceil(two_c);
    if (band.coarse_open && q_lo * q_lo == two_c) q_lo += 1;
    if (band.fine < 0) return false;
    BigInt two_f = pow2_int(static_cast<unsigned long>(band.fine));
    q_hi = isqrt_floor(two_f);
    if (band.fine_open && q_hi * q_hi == two_f) q_hi -= 1;
    if (q_lo < 1) q_lo = 1;
    if (q_hi > params.q_max) q_hi = params.q_max;
    return q_lo <= q_hi;
  }

  bool centers_in(const Box& box, const RadiusBand& band, CenterFilter filter, const CenterVisitor& visit,
                  bool all_pairs) const override {
    BigInt q_lo, q_hi;
    if (!q_range(band, q_lo, q_hi)) return true;
    FractionRange range;
    range.lo = box.lo[0];
    range.lo_closed = true;
    if (sgn(range.lo) < 0) range.lo = 0;
    range.hi = box.hi[0];
    range.hi_closed = !box.hi_open;
    if (range.hi >= 1) {
      range.hi = 1;
      range.hi_closed = false;  // 1 is never a center
    }
    if (range.hi < range.lo) return true;
    return for_each_fraction(range, q_hi, [&](const BigRat& v) {
      const BigInt& a = v.get_num();
      const BigInt& b = v.get_den();
      CenterHit hit;
      if (filter == CenterFilter::Irreducible) {
        if (b < q_lo) return true;
        hit.center = Point::scalar(v);
        hit.pairs.push_back(make(a, b));
        return visit(hit);
      }
      BigInt m_lo = ceil_div(q_lo, b);
      BigInt m_hi = floor_div(q_hi, b);
      if (m_lo > m_hi) return true;
      hit.center = Point::scalar(v);
      hit.pairs.push_back(make(m_lo * a, m_lo * b));
      if (all_pairs) {
        // Multiples of a small denominator can be astronomically many; expose them lazily.
        hit.count = m_hi - m_lo + 1;
        hit.nth = [a = BigInt(a), b = BigInt(b), m_lo](const BigInt& i) { return make((m_lo + i) * a, (m_lo + i) * b); };
      }
      return visit(hit);
    });
  }

  bool equal_pairs(const SystemBackend& other) const override { return params.q_max == other.params.q_max; }

 private:
  BigInt total_;
};

// Dyadic system, analytic.
class DyadicBackend : public SystemBackend {
 public:
  DyadicBackend(long j_max, int dim) {
    if (j_max < 1 || dim < 1) throw Error(ErrorCode::InvalidArgument, "dyadic system needs j_max >= 1, d >= 1");
    kind = SystemKind::Dyadic;
    d = dim;
    params.j_max = j_max;
    total_ = offset(j_max + 1);
  }

  // Number of pairs with generation < j.
  BigInt offset(long j) const {
    BigInt s = 0;
    for (long i = 1; i < j; ++i) s += pow2_int(static_cast<unsigned long>(i * d));
    return s;
  }

  bool enumerable() const override { return total_ <= kEnumerableLimit; }
  std::uint64_t size() const override {
    if (!enumerable()) throw Error(ErrorCode::PreconditionViolated, "system too large to enumerate");
    return total_.get_ui();
  }

  ApproxPair make(long j, const std::vector<BigInt>& k) const {
    std::vector<BigRat> c;
    BigInt lex = 0;
    for (const auto& ki : k) {
      c.push_back(make_rat(ki, pow2_int(static_cast<unsigned long>(j))));
      lex = (lex << static_cast<mp_bitcnt_t>(j)) + ki;
    }
    return {Point(std::move(c)), pow2(-(j + 5)), offset(j) + lex};
  }

  ApproxPair pair(std::uint64_t i) const override {
    BigInt bi(std::to_string(i));
    if (bi >= total_) throw Error(ErrorCode::InvalidArgument, "pair index out of range");
    long j = 1;
    while (offset(j + 1) <= bi) ++j;
    BigInt lex = bi - offset(j);
    std::vector<BigInt> k(static_cast<size_t>(d));
    BigInt mask = pow2_int(static_cast<unsigned long>(j)) - 1;
    for (int t = d - 1; t >= 0; --t) {
      k[static_cast<size_t>(t)] = lex & mask;
      lex >>= static_cast<mp_bitcnt_t>(j);
    }
    return make(j, k);
  }

  BigRat radius_floor() const override { return pow2(-(params.j_max + 5)); }

  bool centers_in(const Box& box, const RadiusBand& band, CenterFilter filter, const CenterVisitor& visit,
                  bool all_pairs) const override {
    // r = 2^{-(j+5)}: exponent e = j + 5 must satisfy coarse <= e <= fine (strict where open).
    long e_lo = band.coarse + (band.coarse_open ? 1 : 0);
    long e_hi = band.fine - (band.fine_open ? 1 : 0);
    long j_lo = std::max(1L, e_lo - 5);
    long j_hi = std::min(params.j_max, e_hi - 5);
    if (j_lo > j_hi) return true;
    std::uint64_t budget = std::uint64_t{1} << 26;
    for (long j = j_lo; j <= j_hi; ++j) {
      // Index ranges of generation-j grid points inside the box.
      std::vector<BigInt> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
      BigInt last = pow2_int(static_cast<unsigned long>(j)) - 1;
      bool empty = false;
      BigInt count = 1;
      for (int t = 0; t < d; ++t) {
        const BigRat& blo = box.lo[static_cast<size_t>(t)];
        const BigRat& bhi = box.hi[static_cast<size_t>(t)];
        BigInt a = ceil_scaled(blo, j);
        BigInt b = box.hi_open ? ceil_scaled(bhi, j) - 1 : floor_scaled(bhi, j);
        if (sgn(a) < 0) a = 0;
        if (b > last) b = last;
        if (a > b) {
          empty = true;
          break;
        }
        count *= (b - a + 1);
        lo[static_cast<size_t>(t)] = a;
        hi[static_cast<size_t>(t)] = b;
      }
      if (empty) continue;
      if (count > BigInt(std::to_string(budget)))
        throw Error(ErrorCode::PreconditionViolated, "dyadic center query too large");
      budget -= count.get_ui();
      bool first_gen = filter == CenterFilter::All ? j == j_lo : false;
      std::vector<BigInt> k(lo);
      for (;;) {
        bool some_odd = false, all_zero = true;
        for (const auto& ki : k) {
          if (mpz_odd_p(ki.get_mpz_t())) some_odd = true;
          if (sgn(ki) != 0) all_zero = false;
        }
        bool take = first_gen || some_odd || (all_zero && j == 1);
        if (take) {
          CenterHit hit;
          ApproxPair p = make(j, k);
          hit.center = p.center;
          hit.pairs.push_back(p);
          if (all_pairs && filter == CenterFilter::All) {
            std::vector<BigInt> kk(k);
            for (long jj = j + 1; jj <= j_hi; ++jj) {
              for (auto& x : kk) x <<= 1;
              hit.pairs.push_back(make(jj, kk));
            }
          }
          if (!visit(hit)) return false;
        }
        int t = d - 1;
        while (t >= 0) {
          auto& kt = k[static_cast<size_t>(t)];
          if (kt < hi[static_cast<size_t>(t)]) {
            kt += 1;
            break;
          }
          kt = lo[static_cast<size_t>(t)];
          --t;
        }
        if (t < 0) break;
      }
    }
    return true;
  }

  bool equal_pairs(const SystemBackend& other) const override {
    return params.j_max == other.params.j_max && d == other.d;
  }

 private:
  BigInt total_;
};

// Explicit list of pairs.
class ListBackend : public SystemBackend {
 public:
  ListBackend(SystemKind k, int dim, SystemParams p, std::vector<ApproxPair> pairs, BigRat floor)
      : pairs_(std::move(pairs)), floor_(std::move(floor)) {
    kind = k;
    d = dim;
    params = std::move(p);
    for (size_t i = 0; i < pairs_.size(); ++i) {
      if (pairs_[i].center.dim() != d) throw Error(ErrorCode::InvalidArgument, "pair dimension mismatch");
      if (sgn(pairs_[i].radius) <= 0 || pairs_[i].radius > 1)
        throw Error(ErrorCode::InvalidArgument, "radius must lie in (0,1]");
      if (i > 0 && pairs_[i].radius > pairs_[i - 1].radius)
        throw Error(ErrorCode::InvalidArgument, "radii must be non-increasing");
      pairs_[i].index = static_cast<unsigned long>(i);
    }
    by_center_.resize(pairs_.size());
    std::iota(by_center_.begin(), by_center_.end(), 0);
    std::stable_sort(by_center_.begin(), by_center_.end(), [&](std::uint64_t a, std::uint64_t b) {
      return pairs_[a].center < pairs_[b].center;
    });
    first_.assign(pairs_.size(), false);
    for (size_t t = 0; t < by_center_.size(); ++t) {
      if (t == 0 || !(pairs_[by_center_[t]].center == pairs_[by_center_[t - 1]].center)) first_[by_center_[t]] = true;
    }
  }

  bool enumerable() const override { return true; }
  std::uint64_t size() const override { return pairs_.size(); }
  ApproxPair pair(std::uint64_t i) const override {
    if (i >= pairs_.size()) throw Error(ErrorCode::InvalidArgument, "pair index out of range");
    return pairs_[i];
  }
  BigRat radius_floor() const override { return floor_; }
  bool is_first(std::uint64_t i) const { return first_[i]; }

  bool centers_in(const Box& box, const RadiusBand& band, CenterFilter filter, const CenterVisitor& visit,
                  bool all_pairs) const override {
    // Centers sorted lexicographically, so the first coordinate bounds a contiguous run.
    auto lower = std::lower_bound(by_center_.begin(), by_center_.end(), box.lo[0],
                                  [&](std::uint64_t i, const BigRat& v) { return pairs_[i].center[0] < v; });
    size_t t = static_cast<size_t>(lower - by_center_.begin());
    while (t < by_center_.size()) {
      const Point& c = pairs_[by_center_[t]].center;
      if (box.hi_open ? c[0] >= box.hi[0] : c[0] > box.hi[0]) break;
      size_t end = t;
      while (end < by_center_.size() && pairs_[by_center_[end]].center == c) ++end;
      if (box.contains(c)) {
        CenterHit hit;
        hit.center = c;
        for (size_t u = t; u < end; ++u) {
          const ApproxPair& p = pairs_[by_center_[u]];
          if (filter == CenterFilter::Irreducible) {
            if (first_[by_center_[u]] && band.admits(p.radius)) hit.pairs.push_back(p);
            break;
          }
          if (band.admits(p.radius)) {
            hit.pairs.push_back(p);
            if (!all_pairs) break;
          }
        }
        if (!hit.pairs.empty() && !visit(hit)) return false;
      }
      t = end;
    }
    return true;
  }

  bool equal_pairs(const SystemBackend& other) const override {
    if (other.size() != size()) return false;
    for (std::uint64_t i = 0; i < size(); ++i) {
      ApproxPair b = other.pair(i);
      if (!(pairs_[i].center == b.center) || pairs_[i].radius != b.radius) return false;
      if (pairs_[i].center.kind() != b.center.kind()) return false;
    }
    return true;
  }

 private:
  std::vector<ApproxPair> pairs_;
  BigRat floor_;
  std::vector<std::uint64_t> by_center_;
  std::vector<bool> first_;
};

}  // namespace

// ---------------------------------------------------------------------------
// System

System::System(std::shared_ptr<const SystemBackend> impl) : impl_(std::move(impl)) {}

SystemKind System::kind() const { return impl_->kind; }
int System::dim() const { return impl_->d; }
const SystemParams& System::params() const { return impl_->params; }
bool System::enumerable() const { return impl_->enumerable(); }
std::uint64_t System::size() const { return impl_->size(); }
ApproxPair System::pair(std::uint64_t i) const { return impl_->pair(i); }
BigRat System::radius_floor() const { return impl_->radius_floor(); }

void System::for_each_pair(const std::function<bool(const ApproxPair&)>& visit) const {
  if (kind() == SystemKind::Rational) {
    // Direct generation avoids re-solving the triangular index.
    const BigInt& q_max = params().q_max;
    if (!enumerable()) throw Error(ErrorCode::PreconditionViolated, "system too large to enumerate");
    for (BigInt q = 1; q <= q_max; q += 1) {
      for (BigInt p = 0; p < q; p += 1) {
        if (!visit(RationalBackend::make(p, q))) return;
      }
    }
    return;
  }
  std::uint64_t n = size();
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!visit(pair(i))) return;
  }
}

std::vector<ApproxPair> System::pairs() const {
  std::vector<ApproxPair> out;
  for_each_pair([&](const ApproxPair& p) {
    out.push_back(p);
    return true;
  });
  return out;
}

bool System::covers(const RadiusBand& band) const {
  if (band.empty()) return true;
  return radius_floor() <= pow2(-band.fine);
}

bool System::centers_in(const Box& box, const RadiusBand& band, CenterFilter filter, const CenterVisitor& visit,
                        bool all_pairs) const {
  if (box.dim() != dim()) throw Error(ErrorCode::InvalidArgument, "box dimension mismatch");
  if (band.empty()) return true;
  return impl_->centers_in(box, band, filter, visit, all_pairs);
}

bool operator==(const System& a, const System& b) {
  if (a.kind() != b.kind() || a.dim() != b.dim()) return false;
  const SystemParams& p = a.params();
  const SystemParams& q = b.params();
  if (p.q_max != q.q_max || p.j_max != q.j_max || p.n_max != q.n_max || p.seed != q.seed || p.r_min != q.r_min ||
      p.alpha != q.alpha)
    return false;
  return a.impl_->equal_pairs(*b.impl_);
}

// ---------------------------------------------------------------------------
// Generators

System gen_rational(const BigInt& q_max) { return System(std::make_shared<RationalBackend>(q_max)); }

System gen_dyadic(long j_max, int d) { return System(std::make_shared<DyadicBackend>(j_max, d)); }

System gen_inhomogeneous(const ContinuedFraction& alpha, std::uint64_t n_max) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  if (alpha.terminated()) throw Error(ErrorCode::InvalidArgument, "alpha must be irrational (non-terminating CF)");
  RatInterval enc = alpha.enclosure();
  if (sgn(enc.lo) <= 0 || enc.hi >= 1) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  // Fixed point with 128 fractional bits; error per step <= width + 2^-128.
  const long bits = 128;
  BigInt A = floor_scaled(alpha.value(), bits);
  BigRat per_step = (enc.hi - enc.lo) + pow2(-bits);
  if (per_step * BigRat(std::to_string(n_max)) > pow2(-64))
    throw Error(ErrorCode::InsufficientPrecision,
                "continued fraction depth " + std::to_string(alpha.depth()) + " cannot certify {n alpha} to 64 bits for n <= " +
                    std::to_string(n_max));
  std::vector<ApproxPair> pairs;
  pairs.reserve(n_max);
  BigInt acc = 0;
  BigInt modulus = pow2_int(bits);
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    acc += A;
    if (acc >= modulus) acc -= modulus;
    BigRat x = make_rat(acc, modulus);
    pairs.push_back({Point::scalar(x, CoordKind::Real), BigRat(BigInt(1), BigInt(std::to_string(n))), 0});
  }
  SystemParams params;
  params.n_max = n_max;
  params.alpha = alpha.to_string();
  return System(std::make_shared<ListBackend>(SystemKind::Inhomogeneous, 1, params, std::move(pairs),
                                              BigRat(BigInt(1), BigInt(std::to_string(n_max)))));
}

System gen_poisson(std::uint64_t seed, const BigRat& r_min) {
  if (sgn(r_min) <= 0 || r_min >= 1) throw Error(ErrorCode::InvalidArgument, "r_min must lie in (0,1)");
  std::mt19937_64 rng(seed);
  BigRat inv = 1 / r_min;
  BigRat mass = inv - 1;
  std::poisson_distribution<std::uint64_t> count_dist(mass.get_d());
  std::uint64_t n = count_dist(rng);
  const BigInt two64 = pow2_int(64);
  auto uniform = [&]() {
    std::uint64_t u = rng();
    return make_rat(BigInt(std::to_string(u)), two64);
  };
  std::vector<ApproxPair> pairs;
  pairs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    BigRat x = uniform();
    BigRat u = uniform();
    // Inverse CDF of dy/y^2 on [r_min, 1): y = 1/(1/r_min - U (1/r_min - 1)).
    BigRat y = 1 / BigRat(inv - u * mass);
    pairs.push_back({Point::scalar(x, CoordKind::Real), y, 0});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const ApproxPair& a, const ApproxPair& b) { return a.radius > b.radius; });
  SystemParams params;
  params.seed = seed;
  params.r_min = r_min;
  return System(std::make_shared<ListBackend>(SystemKind::Poisson, 1, params, std::move(pairs), r_min));
}

System make_custom(int d, std::vector<ApproxPair> pairs) {
  return System(std::make_shared<ListBackend>(SystemKind::Custom, d, SystemParams{}, std::move(pairs), BigRat(0)));
}

// ---------------------------------------------------------------------------
// Serialization

std::string System::serialize() const {
  std::ostringstream os;
  const SystemParams& p = params();
  os << "jblab-system 1\n";
  os << "kind " << to_string(kind()) << "\n";
  os << "d " << dim() << "\n";
  os << "q_max " << p.q_max.get_str() << "\n";
  os << "j_max " << p.j_max << "\n";
  os << "n_max " << p.n_max << "\n";
  os << "seed " << p.seed << "\n";
  os << "r_min " << to_fraction_string(p.r_min) << "\n";
  os << "alpha " << (p.alpha.empty() ? "-" : p.alpha) << "\n";
  os << "floor " << to_fraction_string(radius_floor()) << "\n";
  std::uint64_t n = size();
  os << "pairs " << n << "\n";
  for_each_pair([&](const ApproxPair& a) {
    for (int i = 0; i < a.center.dim(); ++i) os << (a.center.kind() == CoordKind::Real ? "~" : "") << to_fraction_string(a.center[i]) << " ";
    os << to_fraction_string(a.radius) << "\n";
    return true;
  });
  return os.str();
}

System System::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  auto bad = [](const std::string& why) { return Error(ErrorCode::ParseError, "system text: " + why); };
  std::map<std::string, std::string> header;
  if (!std::getline(is, line) || line != "jblab-system 1") throw bad("missing header line");
  std::uint64_t n = 0;
  while (std::getline(is, line)) {
    auto sp = line.find(' ');
    if (sp == std::string::npos) throw bad("malformed header: " + line);
    std::string key = line.substr(0, sp), value = line.substr(sp + 1);
    if (key == "pairs") {
      n = std::stoull(value);
      break;
    }
    header[key] = value;
  }
  auto get = [&](const std::string& key) {
    auto it = header.find(key);
    if (it == header.end()) throw bad("missing key " + key);
    return it->second;
  };
  SystemKind kind = parse_system_kind(get("kind"));
  int d = std::stoi(get("d"));
  std::vector<ApproxPair> pairs;
  pairs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw bad("truncated pair list");
    std::istringstream ls(line);
    std::vector<BigRat> c;
    CoordKind ck = CoordKind::Exact;
    std::string tok;
    for (int t = 0; t < d; ++t) {
      if (!(ls >> tok)) throw bad("short pair line");
      if (!tok.empty() && tok[0] == '~') {
        ck = CoordKind::Real;
        tok = tok.substr(1);
      }
      c.push_back(parse_rational(tok));
    }
    if (!(ls >> tok)) throw bad("missing radius");
    pairs.push_back({Point(std::move(c), ck), parse_rational(tok), 0});
  }
  SystemParams p;
  p.q_max = BigInt(get("q_max"), 10);
  p.j_max = std::stol(get("j_max"));
  p.n_max = std::stoull(get("n_max"));
  p.seed = std::stoull(get("seed"));
  p.r_min = parse_rational(get("r_min"));
  p.alpha = get("alpha") == "-" ? "" : get("alpha");
  BigRat floor = parse_rational(get("floor"));
  if (kind == SystemKind::Rational || kind == SystemKind::Dyadic) {
    System s = kind == SystemKind::Rational ? gen_rational(p.q_max) : gen_dyadic(p.j_max, d);
    if (s.size() != n) throw bad("pair count does not match parameters");
    std::uint64_t i = 0;
    bool ok = true;
    s.for_each_pair([&](const ApproxPair& a) {
      if (!(a.center == pairs[i].center) || a.radius != pairs[i].radius) ok = false;
      ++i;
      return ok;
    });
    if (!ok) throw bad("pair list does not match parameters");
    return s;
  }
  return System(std::make_shared<ListBackend>(kind, d, p, std::move(pairs), floor));
}

// ---------------------------------------------------------------------------
// Irreducible subsystem

IrreducibleSystem::IrreducibleSystem(System parent, std::vector<std::uint64_t> indices)
    : parent_(std::move(parent)), indices_(std::move(indices)) {}

System IrreducibleSystem::as_system() const {
  std::vector<ApproxPair> pairs;
  pairs.reserve(indices_.size());
  for (auto i : indices_) pairs.push_back(parent_.pair(i));
  return make_custom(parent_.dim(), std::move(pairs));
}

IrreducibleSystem irreducible(const System& system) {
  if (!system.enumerable()) throw Error(ErrorCode::PreconditionViolated, "irreducible needs an enumerable system");
  std::vector<std::uint64_t> keep;
  if (system.kind() == SystemKind::Rational) {
    std::uint64_t q_max = system.params().q_max.get_ui();
    std::uint64_t idx = 0;
    for (std::uint64_t q = 1; q <= q_max; ++q) {
      for (std::uint64_t p = 0; p < q; ++p, ++idx) {
        if (std::gcd(p, q) == 1) keep.push_back(idx);
      }
    }
    return IrreducibleSystem(system, std::move(keep));
  }
  if (system.kind() == SystemKind::Dyadic) {
    const int d = system.dim();
    const long j_max = system.params().j_max;
    std::uint64_t idx = 0;
    for (long j = 1; j <= j_max; ++j) {
      std::uint64_t per = std::uint64_t{1} << (j * d);
      std::uint64_t mask = (std::uint64_t{1} << j) - 1;
      for (std::uint64_t lex = 0; lex < per; ++lex, ++idx) {
        bool some_odd = false;
        for (int t = 0; t < d; ++t) {
          if ((lex >> (t * j)) & mask & 1) some_odd = true;
        }
        if (some_odd || (lex == 0 && j == 1)) keep.push_back(idx);
      }
    }
    return IrreducibleSystem(system, std::move(keep));
  }
  std::map<std::vector<BigRat>, bool> seen;
  std::uint64_t n = system.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    ApproxPair p = system.pair(i);
    if (seen.emplace(p.center.coords(), true).second) keep.push_back(i);
  }
  return IrreducibleSystem(system, std::move(keep));
}

std::vector<std::uint64_t> t_layer(const IrreducibleSystem& irr, long j) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < irr.size(); ++i) {
    if (layer_of(irr.pair(i).radius) == j) out.push_back(irr.indices()[i]);
  }
  return out;
}

}  // namespace jblab
