#include "jblab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "ball_geometry.hpp"
#include "jblab/errors.hpp"

namespace jblab {

using detail::PowerRadius;

// ---------------------------------------------------------------------------
// C1

namespace {

std::uint64_t overlap_depth(std::vector<std::pair<BigRat, BigRat>>& intervals) {
  // Closed intervals: at equal positions starts are processed first.
  std::vector<std::pair<BigRat, int>> events;
  events.reserve(2 * intervals.size());
  for (auto& iv : intervals) {
    events.emplace_back(std::move(iv.first), 0);
    events.emplace_back(std::move(iv.second), 1);
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    int c = cmp(a.first, b.first);
    if (c != 0) return c < 0;
    return a.second < b.second;
  });
  std::uint64_t depth = 0, best = 0;
  for (const auto& e : events) {
    if (e.second == 0) {
      best = std::max(best, ++depth);
    } else {
      --depth;
    }
  }
  return best;
}

bool balls_meet(const ApproxPair& a, const ApproxPair& b) {
  return linf_distance(a.center, b.center) <= a.radius + b.radius;
}

std::uint64_t greedy_colors(std::vector<ApproxPair>& balls) {
  std::sort(balls.begin(), balls.end(), [](const ApproxPair& a, const ApproxPair& b) {
    return a.center[0] - a.radius < b.center[0] - b.radius;
  });
  std::vector<std::uint64_t> color(balls.size());
  std::vector<std::size_t> active;
  std::uint64_t used = 0;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const BigRat left = balls[i].center[0] - balls[i].radius;
    std::vector<std::size_t> still;
    std::vector<bool> taken;
    for (std::size_t a : active) {
      if (balls[a].center[0] + balls[a].radius < left) continue;
      still.push_back(a);
      if (balls_meet(balls[a], balls[i])) {
        if (taken.size() <= color[a]) taken.resize(color[a] + 1, false);
        taken[color[a]] = true;
      }
    }
    std::uint64_t c = 0;
    while (c < taken.size() && taken[c]) ++c;
    color[i] = c;
    used = std::max(used, c + 1);
    still.push_back(i);
    active.swap(still);
  }
  return used;
}

}  // namespace

RedundancyProfile c1_profile(const IrreducibleSystem& irr, long j_max) {
  if (j_max < 0) throw Error(ErrorCode::InvalidArgument, "j_max must be >= 0");
  const int d = irr.parent().dim();
  std::vector<std::uint64_t> raw(static_cast<std::size_t>(j_max + 1), 0);
  std::vector<ApproxPair> layer;
  long current = -1;
  auto close_layer = [&]() {
    if (current < 0 || current > j_max || layer.empty()) return;
    std::uint64_t n;
    if (d == 1) {
      std::vector<std::pair<BigRat, BigRat>> iv;
      iv.reserve(layer.size());
      for (const auto& p : layer) iv.emplace_back(p.center[0] - p.radius, p.center[0] + p.radius);
      n = overlap_depth(iv);
    } else {
      n = greedy_colors(layer);
    }
    raw[static_cast<std::size_t>(current)] = n;
  };
  for (std::size_t i = 0; i < irr.size(); ++i) {
    ApproxPair p = irr.pair(i);
    long j = layer_of(p.radius);
    if (j != current) {
      close_layer();
      layer.clear();
      current = j;
    }
    if (j > j_max) break;
    layer.push_back(std::move(p));
  }
  close_layer();
  std::vector<std::uint64_t> counts(raw.size());
  std::uint64_t run = 1;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    run = std::max(run, raw[j]);
    counts[j] = run;
  }
  return RedundancyProfile(d, std::move(counts), d >= 2);
}

// ---------------------------------------------------------------------------
// Context

ConditionContext::ConditionContext(System system, const RedundancyProfile& profile, GaugeFunction phi, long slack)
    : system_(std::move(system)), profile_(profile.extended_to(1L << 15)), phi_(std::move(phi)), slack_(slack) {
  if (profile.dim() != system_.dim()) throw Error(ErrorCode::InvalidArgument, "profile dimension mismatch");
}

long ConditionContext::gamma_of(long j) const {
  if (j <= 0) return 0;
  return gamma(profile_, phi_, j).gamma;
}

double ConditionContext::psi_of(long j) const { return profile_.psi(j); }

double ConditionContext::theta_of(long j) const {
  if (j <= 0) return 1.0;
  return gamma(profile_, phi_, j).theta;
}

// ---------------------------------------------------------------------------
// Property P

std::pair<long, long> p_window(long g, double delta, const ConditionContext& ctx) {
  long hi = static_cast<long>(std::floor(delta * static_cast<double>(g + 1))) + ctx.slack();
  return {ctx.gamma_of(g), hi};
}

namespace {

bool isolated(const ApproxPair& cand, double delta, const RadiusBand& window, const System& system) {
  PowerRadius R{cand.radius, delta};
  Box box = ball_box(cand.center, R.upper());
  bool alone = true;
  system.centers_in(box, window, CenterFilter::All, [&](const CenterHit& hit) {
    if (hit.center == cand.center) return true;
    if (R.compare(linf_distance(hit.center, cand.center)) <= 0) {
      alone = false;
      return false;
    }
    return true;
  });
  return alone;
}

}  // namespace

std::optional<PWitness> check_P_window(const DyadicCube& V, double delta, long lo, long hi,
                                       const ConditionContext& ctx) {
  if (!(delta > 1.0)) throw Error(ErrorCode::InvalidArgument, "property P needs delta > 1");
  const System& system = ctx.system();
  if (V.dim() != system.dim()) throw Error(ErrorCode::InvalidArgument, "cube dimension mismatch");
  const long g = V.generation();
  RadiusBand window = RadiusBand::window(lo, hi);
  RadiusBand witness_band = RadiusBand::witness(g);
  if (!system.covers(window) || !system.covers(witness_band))
    throw Error(ErrorCode::TruncationTooShallow,
                "system stops at radius " + to_fraction_string(system.radius_floor()) + " but P(" + V.to_string() +
                    ") scans down to 2^-" + std::to_string(std::max(hi, g + 1)));
  // Per center the isolated pairs form a suffix of its pairs (radii shrink), so the first
  // isolated one is found by bisection; the witness is the earliest over all centers.
  std::optional<ApproxPair> best;
  system.centers_in(
      box_of(V), witness_band, CenterFilter::All,
      [&](const CenterHit& hit) {
        BigInt first = 0, last = hit.total();
        if (!isolated(hit.pair_at(last - 1), delta, window, system)) return true;
        last -= 1;
        while (first < last) {
          BigInt mid = (first + last) / 2;
          if (isolated(hit.pair_at(mid), delta, window, system))
            last = mid;
          else
            first = mid + 1;
        }
        ApproxPair cand = hit.pair_at(first);
        if (!best || cand.index < best->index) best = std::move(cand);
        return true;
      },
      true);
  if (best) return PWitness{V, *best, delta, lo, hi};
  return std::nullopt;
}

std::optional<PWitness> check_P(const DyadicCube& V, double delta, const ConditionContext& ctx) {
  auto [lo, hi] = p_window(V.generation(), delta, ctx);
  return check_P_window(V, delta, lo, hi, ctx);
}

QCount count_Q(const DyadicCube& U, long j, double delta, const ConditionContext& ctx) {
  QCount out;
  out.total = subcube_count(U.dim(), U.generation(), j);
  for_each_subcube(U, j, [&](const DyadicCube& V, std::uint64_t ord) {
    if (auto w = check_P(V, delta, ctx)) {
      ++out.count;
      out.members.push_back(ord);
      out.witnesses.push_back(*w);
    }
  });
  return out;
}

QtildeCount count_Qtilde(const DyadicCube& U, long j, double delta, const ConditionContext& ctx) {
  const System& system = ctx.system();
  const int d = U.dim();
  const long g = U.generation();
  QtildeCount out;
  out.total = subcube_count(d, g, j);
  out.hit.assign(out.total, false);
  const long k_hi = ctx.gamma_of(j);
  if (k_hi < g) return out;
  if (!system.covers(RadiusBand::layers(g, k_hi)))
    throw Error(ErrorCode::TruncationTooShallow, "layers up to " + std::to_string(k_hi) + " not in the system");
  const long shift = j - g;
  std::vector<BigInt> base, top;
  for (int i = 0; i < d; ++i) {
    base.push_back(U.index(i) << static_cast<mp_bitcnt_t>(shift));
    top.push_back(base.back() + (BigInt(1) << static_cast<mp_bitcnt_t>(shift)) - 1);
  }
  for (long k = g; k <= k_hi; ++k) {
    // rho <= 2^-k, so rho^delta <= 2^{-floor(k delta)}.
    BigRat reach = pow2(-static_cast<long>(std::floor(static_cast<double>(k) * delta)));
    Box box = box_of(U);
    for (int i = 0; i < d; ++i) {
      box.lo[static_cast<size_t>(i)] -= reach;
      box.hi[static_cast<size_t>(i)] += reach;
    }
    box.hi_open = false;
    system.centers_in(box, RadiusBand::layer(k), CenterFilter::Irreducible, [&](const CenterHit& hit) {
      PowerRadius R{hit.pairs.front().radius, delta};
      std::vector<BigInt> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
      for (int i = 0; i < d; ++i) {
        if (!detail::axis_range(hit.center[i], R, j, base[static_cast<size_t>(i)], top[static_cast<size_t>(i)],
                                lo[static_cast<size_t>(i)], hi[static_cast<size_t>(i)]))
          return true;
      }
      std::vector<BigInt> idx(lo);
      for (;;) {
        std::uint64_t ord = 0;
        for (int i = 0; i < d; ++i) ord = (ord << shift) | BigInt(idx[static_cast<size_t>(i)] - base[static_cast<size_t>(i)]).get_ui();
        if (!out.hit[ord]) {
          out.hit[ord] = true;
          ++out.count;
        }
        int t = d - 1;
        while (t >= 0) {
          if (idx[static_cast<size_t>(t)] < hi[static_cast<size_t>(t)]) {
            idx[static_cast<size_t>(t)] += 1;
            break;
          }
          idx[static_cast<size_t>(t)] = lo[static_cast<size_t>(t)];
          --t;
        }
        if (t < 0) break;
      }
      return true;
    });
  }
  return out;
}

QtildeBoundReport qtilde_bound_check(const DyadicCube& U, long j, double delta, const ConditionContext& ctx) {
  const double d = U.dim();
  QtildeBoundReport rep;
  rep.lhs = count_Qtilde(U, j, delta, ctx).ratio();
  rep.gauge_term = std::exp2(-d * static_cast<double>(j) * ctx.phi().at_generation(j));
  for (long k = U.generation(); static_cast<double>(k) <= static_cast<double>(j) / delta; ++k)
    rep.sum_term += std::exp2(-d * static_cast<double>(k) * (delta - 1.0 - ctx.psi_of(k)));
  return rep;
}

double C2Report::min_kappa_hat() const {
  double m = 1.0;
  for (const auto& r : rows) m = std::min(m, r.kappa_hat());
  return m;
}

std::string C2Report::to_csv(bool header) const {
  std::ostringstream out;
  out.precision(10);
  if (header) out << "delta,j,q,qtilde,total,kappa_hat\n";
  for (const auto& r : rows)
    out << delta << ',' << r.j << ',' << r.q << ',' << r.qtilde << ',' << r.total << ',' << r.kappa_hat() << '\n';
  return out.str();
}

C2Report c2_report(const DyadicCube& U, double delta, long j_lo, long j_hi, const ConditionContext& ctx) {
  if (j_lo < U.generation() || j_hi < j_lo) throw Error(ErrorCode::InvalidArgument, "need g(U) <= j_lo <= j_hi");
  C2Report rep;
  rep.U = U;
  rep.delta = delta;
  long deepest = 0;
  for (long j = j_lo; j <= j_hi; ++j) {
    C2Row row;
    row.j = j;
    QCount q = count_Q(U, j, delta, ctx);
    row.q = q.count;
    row.total = q.total;
    row.qtilde = count_Qtilde(U, j, delta, ctx).count;
    rep.rows.push_back(row);
    deepest = std::max(deepest, p_window(j, delta, ctx).second);
  }
  std::ostringstream note;
  BigRat floor = ctx.system().radius_floor();
  note << "radius floor ";
  if (floor > 0)
    note << "2^-" << -log2_of(floor);
  else
    note << "0";
  note << ", windows up to -log2 r < " << deepest;
  rep.truncation_note = note.str();
  return rep;
}

PoissonStripStats poisson_strip_counts(long j, std::uint64_t trials, std::uint64_t seed) {
  if (j < 1 || trials < 2) throw Error(ErrorCode::InvalidArgument, "strip counts need j >= 1 and trials >= 2");
  PoissonStripStats st;
  st.j = j;
  st.trials = trials;
  const BigRat side = pow2(-j), floor_radius = pow2(-(j + 1));
  double sum = 0, sum_sq = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
    std::mt19937_64 rng(seq);
    System process = gen_poisson(rng(), floor_radius);
    std::uint64_t k = 0;
    process.for_each_pair([&](const ApproxPair& p) {
      if (p.radius <= side && p.center[0] < side) ++k;
      return true;
    });
    if (st.histogram.size() <= k) st.histogram.resize(k + 1, 0);
    ++st.histogram[k];
    sum += static_cast<double>(k);
    sum_sq += static_cast<double>(k) * static_cast<double>(k);
  }
  const double n = static_cast<double>(trials);
  st.mean = sum / n;
  st.variance = (sum_sq - n * st.mean * st.mean) / (n - 1);
  return st;
}

// ---------------------------------------------------------------------------
// Ball counts

std::uint64_t ball_cube_count(const Point& center, const BigRat& radius, long j, const BigRat& r0) {
  BigRat diameter = 2 * radius;
  if (diameter < pow2(-j) || diameter > r0)
    throw Error(ErrorCode::PreconditionViolated, "ball count needs 2^-j <= |B| <= r0");
  BigInt last = pow2_int(static_cast<unsigned long>(j)) - 1;
  std::uint64_t count = 1;
  for (int i = 0; i < center.dim(); ++i) {
    // cells [k s, (k+1) s) meeting [c - r, c + r]
    BigInt hi = floor_scaled(center[i] + radius, j);
    BigInt lo = floor_scaled(center[i] - radius, j);
    if (hi > last) hi = last;
    if (sgn(lo) < 0) lo = 0;
    if (lo > hi) return 0;
    count *= BigInt(hi - lo + 1).get_ui();
  }
  return count;
}

std::uint64_t family_ball_count(const std::vector<std::pair<Point, BigRat>>& balls, long k, const DyadicCube& U) {
  const BigRat floor_radius = pow2(-(k + 1));
  for (std::size_t a = 0; a < balls.size(); ++a) {
    if (!(balls[a].second > floor_radius))
      throw Error(ErrorCode::PreconditionViolated, "family count needs radii > 2^-(k+1)");
    for (std::size_t b = a + 1; b < balls.size(); ++b) {
      if (linf_distance(balls[a].first, balls[b].first) <= balls[a].second + balls[b].second)
        throw Error(ErrorCode::PreconditionViolated, "family count must be pairwise disjoint");
    }
  }
  std::uint64_t count = 0;
  for (const auto& [c, r] : balls) {
    bool meets = true;
    for (int i = 0; i < U.dim() && meets; ++i) meets = c[i] - r < U.upper(i) && c[i] + r >= U.lower(i);
    if (meets) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Three-distance

ThreeDistanceReport three_distance(const ContinuedFraction& alpha, std::uint64_t N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
  if (alpha.terminated()) throw Error(ErrorCode::InvalidArgument, "alpha must be irrational");
  const long bits = 128;
  RatInterval enc = alpha.enclosure();
  BigRat per_step = (enc.hi - enc.lo) + pow2(-bits);
  ThreeDistanceReport rep;
  rep.error_bound = 2 * per_step * BigRat(std::to_string(N));
  if (rep.error_bound > pow2(-64))
    throw Error(ErrorCode::InsufficientPrecision, "continued fraction too shallow for N = " + std::to_string(N));
  const BigInt modulus = pow2_int(bits);
  BigInt A = floor_scaled(alpha.value(), bits);
  BigInt acc = 0;
  std::vector<BigInt> pts{BigInt(0)};
  for (std::uint64_t n = 1; n <= N; ++n) {
    acc += A;
    if (acc >= modulus) acc -= modulus;
    pts.push_back(acc);
  }
  pts.push_back(modulus);
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) rep.gaps.push_back(make_rat(pts[i] - pts[i - 1], modulus));
  rep.max_gap = *std::max_element(rep.gaps.begin(), rep.gaps.end());
  std::vector<BigRat> sorted = rep.gaps;
  std::sort(sorted.begin(), sorted.end());
  const BigRat tol = pow2(-40);
  for (const auto& g : sorted) {
    if (rep.gap_classes.empty() || g - rep.gap_classes.back() > tol) rep.gap_classes.push_back(g);
  }
  rep.max_gap_ok = rep.max_gap + rep.error_bound <= BigRat(BigInt(3), BigInt(std::to_string(N + 1)));
  return rep;
}

// ---------------------------------------------------------------------------
// Poisson C2

PoissonMcReport poisson_c2_mc(double delta, long j, std::uint64_t trials, std::uint64_t seed, long gamma_j) {
  if (!(delta > 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must be > 1");
  if (j < 1) throw Error(ErrorCode::InvalidArgument, "j must be >= 1");
  if (trials < 100) throw Error(ErrorCode::PreconditionViolated, "poisson_c2_mc needs >= 100 trials");
  PoissonMcReport rep;
  rep.trials = trials;
  rep.window_hi = static_cast<long>(std::floor(delta * static_cast<double>(j + 1))) + 4;
  if (gamma_j < 0) {
    RedundancyProfile flat = RedundancyProfile::constant(1, 1, j);
    gamma_j = gamma(flat, default_gauge(), j).gamma;
  }
  rep.gamma = gamma_j;
  // Window layers over a unit of width |V|: 2^{h-j} - 2^{gamma-j}; the strip S_V itself has mass 1.
  const double layer_mass = std::exp2(static_cast<double>(rep.window_hi - j)) -
                            std::exp2(static_cast<double>(gamma_j - j));
  rep.log_kappa1 = -1.0 - 16.0 * std::exp2(delta);
  rep.kappa1 = std::exp(rep.log_kappa1);
  double sum = 0, sum_sq = 0;
  std::uint64_t naive = 0, single = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::poisson_distribution<int> strip(1.0);
    double value = 0;
    if (strip(rng) == 1) {
      ++single;
      // Position inside V and height in units of |V|: density u^-2 on [1/2, 1].
      double x = unit(rng);
      double u = 1.0 / (2.0 - unit(rng));
      double ball = std::pow(u, delta) * std::exp2(-static_cast<double>(j) * (delta - 1.0));
      // Centers above neighbouring cubes count too: P(V, delta) looks at the whole ball.
      double inside_v = std::min(1.0, x + ball) - std::max(0.0, x - ball);
      double mean_inside = layer_mass * 2.0 * ball - inside_v;
      // Given the single point, the others in its ball are Poisson(mean_inside).
      value = std::exp(-mean_inside);
      std::poisson_distribution<long> inside(mean_inside);
      if (inside(rng) == 0) ++naive;
    }
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(trials);
  rep.estimate = sum / n;
  double var = std::max(0.0, sum_sq / n - rep.estimate * rep.estimate);
  double half = 1.96 * std::sqrt(var / n);
  rep.ci_lo = std::max(0.0, rep.estimate - half);
  rep.ci_hi = rep.estimate + half;
  rep.naive_frequency = static_cast<double>(naive) / n;
  rep.single_point_frequency = static_cast<double>(single) / n;
  return rep;
}

}  // namespace jblab
