#include "jblab/cantor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ball_geometry.hpp"
#include "jblab/errors.hpp"

namespace jblab {

using detail::PowerRadius;

namespace {

double neg_log2_mass(const BigRat& mass) {
  if (mass.get_num() == 1) {
    const BigInt& den = mass.get_den();
    long bits = bit_length(den) - 1;
    if (den == pow2_int(static_cast<unsigned long>(bits))) return static_cast<double>(bits);
  }
  return -log2_of(mass);
}

BigRat closure_coordinate_distance(const BigRat& x, const BigRat& lo, const BigRat& hi) {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0;
}

}  // namespace

bool AnnulusSpec::contains(const DyadicCube& V) const {
  // Every point of the closure within r^delta, none within r^{delta + slack}.
  BigRat far = 0;
  for (int i = 0; i < V.dim(); ++i) {
    far = std::max<BigRat>(far, abs(V.lower(i) - center[i]));
    far = std::max<BigRat>(far, abs(V.upper(i) - center[i]));
  }
  if (compare_power(far, radius, delta) > 0) return false;
  return compare_power(distance(V, center), radius, delta + slack) > 0;
}

// ---------------------------------------------------------------------------
// Calibration

GaugeCalibration calibrate_gauge(int d, double kappa, double eps, const RedundancyProfile& profile) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
  if (!(kappa > 0 && kappa <= 1)) throw Error(ErrorCode::InvalidArgument, "kappa must be in (0, 1]");
  const double L = static_cast<double>(d + 1) - std::log2(kappa);
  RedundancyProfile ext = profile.extended_to(1L << 15);
  for (long g = 1; g <= ext.max_generation(); ++g) {
    double log_n = std::log2(static_cast<double>(ext.count(g)));
    if (3.0 * (L + log_n) <= eps * static_cast<double>(g)) {
      double scale = L / (static_cast<double>(d) * std::sqrt(static_cast<double>(g)));
      return GaugeCalibration{scaled_gauge(scale), scale, g};
    }
  }
  throw Error(ErrorCode::NoSeed, "no generation meets the gauge constraints");
}

KappaCalibration calibrate_kappa(const DyadicCube& U, const std::vector<double>& deltas, long j_lo, long j_hi,
                                 const ConditionContext& ctx) {
  KappaCalibration out;
  for (double delta : deltas)
    for (long j = j_lo; j <= j_hi; ++j) out.measured = std::min(out.measured, count_Q(U, j, delta, ctx).ratio());
  if (out.measured <= 0) {
    out.kappa = 0;
    return out;
  }
  out.kappa = std::min(0.5, std::exp2(std::floor(std::log2(out.measured))));
  return out;
}

// ---------------------------------------------------------------------------
// Seed region

namespace {

struct Minimum {
  double lower;
  BigRat arg;          ///< best midpoint seen
  BigRat box_lo, box_hi;  ///< box holding the smallest lower bound
};

/// Branch and bound on the first coordinate; stops when the best value is within tol of the
/// smallest outstanding lower bound.
Minimum minimize(const TargetRate& f, const BigRat& lo, const BigRat& hi, double tol) {
  struct Item {
    double lower;
    BigRat lo, hi;
    bool operator<(const Item& o) const { return lower > o.lower; }
  };
  std::priority_queue<Item> queue;
  queue.push({f.bounds(lo, hi).lo, lo, hi});
  BigRat best_arg = (lo + hi) / 2;
  double best = f.eval(best_arg.get_d());
  for (int it = 0; it < 200000 && !queue.empty(); ++it) {
    Item top = queue.top();
    if (best - top.lower <= tol) return {top.lower, best_arg, top.lo, top.hi};
    queue.pop();
    BigRat mid = (top.lo + top.hi) / 2;
    double value = f.eval(mid.get_d());
    if (value < best) {
      best = value;
      best_arg = mid;
    }
    queue.push({f.bounds(top.lo, mid).lo, top.lo, mid});
    queue.push({f.bounds(mid, top.hi).lo, mid, top.hi});
  }
  throw Error(ErrorCode::NoSeed, "minimization of f did not converge");
}

bool cube_inside(const DyadicCube& C, const Box& box) {
  for (int i = 0; i < C.dim(); ++i)
    if (C.lower(i) < box.lo[static_cast<size_t>(i)] || C.upper(i) > box.hi[static_cast<size_t>(i)]) return false;
  return true;
}

}  // namespace

SeedRegion seed_region(const CantorConfig& config, const ConditionContext& ctx) {
  const int d = ctx.system().dim();
  const double dd = d;
  const double eps = config.epsilon;
  if (config.omega.dim() != d) throw Error(ErrorCode::InvalidArgument, "omega dimension mismatch");
  SeedRegion seed;
  seed.region = config.omega;
  const double tol = eps / (4.0 * dd);
  Minimum m = minimize(config.f, seed.region.lo[0], seed.region.hi[0], tol);
  if (m.lower <= 1.0 + 1e-9) {
    // Shrink to a dyadic piece where inf f lies in (1 + eps/2, 1 + eps).
    const BigRat lo = seed.region.lo[0], hi = seed.region.hi[0];
    bool found = false;
    for (long g = 1; g <= 24 && !found; ++g) {
      BigInt k = ceil_scaled(lo, g), k_end = floor_scaled(hi, g);
      double best = 0;
      BigInt best_k;
      for (; k + 1 <= k_end; ++k) {
        BigRat a = make_rat(k, pow2_int(static_cast<unsigned long>(g)));
        BigRat b = make_rat(k + 1, pow2_int(static_cast<unsigned long>(g)));
        double low = config.f.bounds(a, b).lo;
        if (low > 1.0 + eps / 2 && low < 1.0 + eps && (!found || low < best)) {
          found = true;
          best = low;
          best_k = k;
        }
      }
      if (found) {
        seed.region.lo[0] = make_rat(best_k, pow2_int(static_cast<unsigned long>(g)));
        seed.region.hi[0] = make_rat(best_k + 1, pow2_int(static_cast<unsigned long>(g)));
      }
    }
    if (!found) throw Error(ErrorCode::NoSeed, "inf f = 1 and no piece with inf f in (1, 1 + eps)");
    seed.shrunk = true;
    m = minimize(config.f, seed.region.lo[0], seed.region.hi[0], tol);
  }
  seed.inf_f = std::max(1.0, m.lower);
  seed.h = dd / seed.inf_f;
  if (seed.h <= eps) throw Error(ErrorCode::NoSeed, "eps must be below h");
  // A golden-section point of the minimizing box keeps U_0 off low-height rationals, around
  // which the rational system has no centers at nearby scales.
  // The golden fraction is kept to twice the seed cap in bits so that y is not itself a
  // low-height rational at any generation the construction reaches.
  const unsigned long bits = 2 * static_cast<unsigned long>(std::max(config.seed_cap, 64L)) + 64;
  BigRat golden = make_rat((isqrt_floor(5 * pow2_int(2 * bits)) - pow2_int(bits)) / 2, pow2_int(bits));
  BigRat y0 = m.box_lo + (m.box_hi - m.box_lo) * golden;
  if (!(config.f.eval(y0.get_d()) <= dd / (seed.h - eps / 2))) y0 = m.arg;
  std::vector<BigRat> y{y0};
  for (int i = 1; i < d; ++i)
    y.push_back((seed.region.lo[static_cast<size_t>(i)] + seed.region.hi[static_cast<size_t>(i)]) / 2);
  seed.y = Point(std::move(y));
  seed.f_y = config.f.eval(seed.y);

  const double f_cap = dd / (seed.h - eps);
  long g_omega = -1;
  for (long g = 0; g <= config.seed_cap; ++g) {
    DyadicCube C = DyadicCube::containing(seed.y, g);
    if (!cube_inside(C, seed.region)) continue;
    if (config.f.bounds(C).hi <= f_cap) {
      seed.omega_eps = C;
      g_omega = g;
      break;
    }
  }
  if (g_omega < 0)
    throw Error(ErrorCode::NoSeed, "no cube around y_eps up to generation " + std::to_string(config.seed_cap) +
                                       " keeps f below d/(h - eps)");

  const double L = dd + 1.0 - std::log2(config.kappa);
  for (long g = std::max(g_omega, config.min_generation); g <= config.seed_cap; ++g) {
    double phi0 = ctx.phi().at_generation(g), psi0 = ctx.psi_of(g);
    if (3.0 * dd * (phi0 + psi0) > eps) continue;
    if (L > dd * static_cast<double>(g) * phi0 + 1e-12) continue;
    if (seed.inf_f - dd * phi0 <= 1.0) continue;
    seed.u0 = DyadicCube::containing(seed.y, g);
    seed.alpha = (1.0 + seed.inf_f - dd * phi0) / 2.0;
    seed.H = seed.f_y + eps * (2.0 * dd / (seed.h * seed.h) + 1.0);
    return seed;
  }
  throw Error(ErrorCode::NoSeed, "no U_0 meets the size constraints below generation " +
                                     std::to_string(config.seed_cap) + "; tightest cube " +
                                     seed.omega_eps.to_string());
}

double delta_of_cube(const DyadicCube& V, const SeedRegion& seed, const TargetRate& f, const ConditionContext& ctx) {
  const double dd = V.dim();
  const long g = V.generation();
  const double phi = ctx.phi().at_generation(g);
  const double delta = f.eval(V.center_point()) + 2.0 * dd * (phi + ctx.psi_of(g));
  if (delta - 3.0 * dd * phi < seed.alpha)
    throw Error(ErrorCode::BandViolation, "delta(" + V.to_string() + ") - 3 d phi below alpha; cube too large");
  if (delta > seed.H + 1e-12)
    throw Error(ErrorCode::BandViolation, "delta(" + V.to_string() + ") above H_eps");
  return delta;
}

// ---------------------------------------------------------------------------
// Levels

std::uint64_t sibling_count(int d, double kappa, long j, long g) {
  double n = std::ceil(std::ldexp(kappa, static_cast<int>(d * (j - g) - d - 1)));
  return static_cast<std::uint64_t>(std::max(1.0, n));
}

namespace {

std::optional<LevelChoice> try_level(const DyadicCube& U, long j, double delta, const CantorConfig& config,
                                     const ConditionContext& ctx) {
  const int d = U.dim();
  const long g = U.generation();
  if (static_cast<double>(d) * static_cast<double>(j - g) > std::log2(static_cast<double>(config.scan_budget)))
    throw Error(ErrorCode::LevelNotFound, "level " + std::to_string(j) + " for " + U.to_string() +
                                              " needs 2^" + std::to_string(d * (j - g)) +
                                              " subcube checks, above the scan budget");
  QCount q = count_Q(U, j, delta, ctx);
  QtildeCount qt = count_Qtilde(U, j, delta, ctx);
  std::vector<std::size_t> good;
  LevelChoice out;
  out.j = j;
  out.q_count = q.count;
  for (std::size_t i = 0; i < q.members.size(); ++i) {
    if (qt.hit[q.members[i]])
      ++out.qtilde_overlap;
    else
      good.push_back(i);
  }
  if (static_cast<double>(good.size()) < config.kappa / 2.0 * static_cast<double>(q.total)) return std::nullopt;
  const std::uint64_t need = sibling_count(d, config.kappa, j, g);
  if (d == 1) {
    std::uint64_t last = 0;
    bool any = false;
    for (std::size_t i : good) {
      if (out.selected.size() == need) break;
      if (any && q.members[i] < last + 2) continue;
      out.selected.push_back(q.witnesses[i]);
      last = q.members[i];
      any = true;
    }
  } else {
    // Cubes with equal index parities are pairwise >= 2^-j apart.
    auto parity = [&](std::size_t i) {
      unsigned c = 0;
      for (int t = 0; t < d; ++t) c = (c << 1) | (mpz_tstbit(q.witnesses[i].cube.index(t).get_mpz_t(), 0) ? 1U : 0U);
      return c;
    };
    std::vector<std::uint64_t> per_class(1U << d, 0);
    for (std::size_t i : good) ++per_class[parity(i)];
    unsigned best = static_cast<unsigned>(std::max_element(per_class.begin(), per_class.end()) - per_class.begin());
    for (std::size_t i : good) {
      if (out.selected.size() == need) break;
      if (parity(i) == best) out.selected.push_back(q.witnesses[i]);
    }
  }
  if (out.selected.size() < need) return std::nullopt;
  return out;
}

}  // namespace

LevelChoice find_level(const DyadicCube& U, double delta, std::optional<double> parent_delta,
                       const CantorConfig& config, const ConditionContext& ctx) {
  const int d = U.dim();
  const double dd = d;
  const long g = U.generation();
  if (config.mode == LevelMode::Desk) {
    for (long b = config.min_branch; b <= config.max_branch; ++b)
      if (auto choice = try_level(U, g + b, delta, config, ctx)) return *choice;
    throw Error(ErrorCode::LevelNotFound, "no level for " + U.to_string() + " with branch in [" +
                                              std::to_string(config.min_branch) + ", " +
                                              std::to_string(config.max_branch) + "]");
  }
  double need_log = std::max(dd + 1.0 - std::log2(config.kappa), dd * static_cast<double>(g));
  if (parent_delta) {
    double third = static_cast<double>(-g) * (dd / *parent_delta - 3.0 * dd * ctx.phi().at_generation(g));
    need_log = std::max(need_log, third);
  }
  for (long j = std::max(2 * g, g + 1); j <= config.j_cap; ++j) {
    if (need_log > dd * static_cast<double>(j) * ctx.phi().at_generation(j)) continue;
    if (auto choice = try_level(U, j, delta, config, ctx)) return *choice;
  }
  throw Error(ErrorCode::LevelNotFound, "no level for " + U.to_string() + " up to " + std::to_string(config.j_cap));
}

// ---------------------------------------------------------------------------
// Contracted descendant

namespace {

/// Cells [k s, (k+1) s] at generation G with lo <= k s and (k+1) s <= hi (strict where flagged).
bool fit_range(const BigRat& lo, bool lo_strict, const BigRat& hi, bool hi_strict, long G, BigInt& a, BigInt& b) {
  a = ceil_scaled(lo, G);
  if (lo_strict && BigRat(a) == lo * pow2(G)) a += 1;
  b = floor_scaled(hi, G) - 1;
  if (hi_strict && BigRat(b + 1) == hi * pow2(G)) b -= 1;
  return a <= b;
}

std::optional<long> min_fit_generation(const BigRat& lo, bool lo_strict, const BigRat& hi, bool hi_strict) {
  if (hi <= lo) return std::nullopt;
  long G = std::max(0L, -floor_log2(hi - lo));
  BigInt a, b;
  for (long step = 0; step < 4; ++step, ++G)
    if (fit_range(lo, lo_strict, hi, hi_strict, G, a, b)) return G;
  return std::nullopt;
}

struct AxisSpan {
  BigRat lo, hi;
  bool lo_strict = false, hi_strict = false;
};

BigRat cell_distance(const BigRat& x, const BigInt& k, long G) {
  BigRat s = pow2(-G);
  return closure_coordinate_distance(x, BigRat(k) * s, BigRat(k + 1) * s);
}

struct Candidate {
  long G;
  BigRat M;
  std::vector<BigInt> index;
};

std::optional<Candidate> slab_candidate(const std::vector<AxisSpan>& spans, const Point& x) {
  const int d = static_cast<int>(spans.size());
  long G = 0;
  for (const auto& s : spans) {
    auto g = min_fit_generation(s.lo, s.lo_strict, s.hi, s.hi_strict);
    if (!g) return std::nullopt;
    G = std::max(G, *g);
  }
  std::vector<BigInt> a(static_cast<size_t>(d)), b(static_cast<size_t>(d)), nearest(static_cast<size_t>(d));
  BigRat M = 0;
  for (int i = 0; i < d; ++i) {
    const auto& s = spans[static_cast<size_t>(i)];
    if (!fit_range(s.lo, s.lo_strict, s.hi, s.hi_strict, G, a[static_cast<size_t>(i)], b[static_cast<size_t>(i)]))
      return std::nullopt;
    BigInt k = floor_scaled(x[i], G);
    k = std::clamp(k, a[static_cast<size_t>(i)], b[static_cast<size_t>(i)]);
    nearest[static_cast<size_t>(i)] = k;
    M = std::max(M, cell_distance(x[i], k, G));
  }
  Candidate c{G, M, {}};
  for (int i = 0; i < d; ++i) {
    // Smallest index whose coordinate distance stays within M.
    BigInt k = std::max(a[static_cast<size_t>(i)], BigInt(ceil_scaled(x[i] - M, G) - 1));
    while (cell_distance(x[i], k, G) > M) k += 1;
    c.index.push_back(std::min(k, nearest[static_cast<size_t>(i)]));
  }
  return c;
}

}  // namespace

Descendant contracted_descendant(const DyadicCube& tilde, const ApproxPair& witness, double delta, double slack) {
  const int d = tilde.dim();
  const Point& x = witness.center;
  const BigRat R = power_bounds(witness.radius, delta).lo;
  const BigRat rho = power_bounds(witness.radius, delta + slack).hi;
  std::optional<Candidate> best;
  for (int axis = 0; axis < d; ++axis) {
    for (int side = 0; side < 2; ++side) {
      std::vector<AxisSpan> spans;
      for (int i = 0; i < d; ++i) {
        AxisSpan s;
        s.lo = std::max<BigRat>(x[i] - R, tilde.lower(i));
        s.hi = std::min<BigRat>(x[i] + R, tilde.upper(i));
        if (i == axis) {
          if (side == 0) {
            s.lo = std::max<BigRat>(s.lo, x[i] + rho);
            s.lo_strict = true;
          } else {
            s.hi = std::min<BigRat>(s.hi, x[i] - rho);
            s.hi_strict = true;
          }
        }
        spans.push_back(std::move(s));
      }
      auto c = slab_candidate(spans, x);
      if (!c) continue;
      if (!best || c->G < best->G || (c->G == best->G && (c->M < best->M || (c->M == best->M && c->index < best->index))))
        best = std::move(c);
    }
  }
  if (!best) throw Error(ErrorCode::AnnulusTooThin, "no dyadic cube fits in the annulus inside " + tilde.to_string());
  Descendant out;
  out.W = DyadicCube(best->G, best->index);
  std::optional<BigRat> best_dist;
  for (const auto& child : out.W.children()) {
    BigRat dist = distance(child, x);
    if (!best_dist || dist < *best_dist) {
      best_dist = dist;
      out.V = child;
    }
  }
  out.floor_generation = floor_neg_log2_power(witness.radius, delta);
  if (out.V.generation() > out.floor_generation + 4)
    throw Error(ErrorCode::AnnulusTooThin, "annulus of " + tilde.to_string() + " only holds generation " +
                                               std::to_string(out.V.generation()) + " > " +
                                               std::to_string(out.floor_generation) + " + 4");
  if (out.V.generation() < out.floor_generation)
    throw Error(ErrorCode::BandViolation, "contracted descendant coarser than the contracted ball");
  return out;
}

// ---------------------------------------------------------------------------
// Tree

BigRat CantorTree::total_mass(long n) const {
  BigRat sum = 0;
  for (const auto& node : generations.at(static_cast<size_t>(n))) sum += node.mass;
  return sum;
}

CantorTree start_tree(const CantorConfig& config, const ConditionContext& ctx) {
  CantorTree tree;
  tree.config = config;
  tree.gauge = ctx.phi().label();
  tree.seed = seed_region(config, ctx);
  CantorNode root;
  root.cube = tree.seed.u0;
  root.tilde = tree.seed.u0;
  tree.generations.push_back({root});
  return tree;
}

namespace {

Box expanded(const DyadicCube& V, const BigRat& by) {
  Box box = box_of(V);
  for (int i = 0; i < V.dim(); ++i) {
    box.lo[static_cast<size_t>(i)] -= by;
    box.hi[static_cast<size_t>(i)] += by;
  }
  box.hi_open = false;
  return box;
}

void check_irreducible_avoidance(const DyadicCube& V, long k_lo, long k_hi, double delta,
                                 const ConditionContext& ctx) {
  if (k_hi < k_lo) return;
  BigRat reach = pow2(-static_cast<long>(std::floor(static_cast<double>(k_lo) * delta)));
  ctx.system().centers_in(expanded(V, reach), RadiusBand::layers(k_lo, k_hi), CenterFilter::Irreducible,
                          [&](const CenterHit& hit) {
                            PowerRadius R{hit.pairs.front().radius, delta};
                            if (detail::ball_meets_closure(hit.center, R, V))
                              throw Error(ErrorCode::ScalingViolation,
                                          V.to_string() + " meets the contracted ball of " + hit.center.to_string());
                            return true;
                          });
}

std::uint64_t count_avoidance_violations(const DyadicCube& V, long g_parent, double exponent, const Point& own,
                                         const ConditionContext& ctx) {
  BigRat reach = pow2(-static_cast<long>(std::floor(static_cast<double>(g_parent) * exponent)) - 4);
  std::uint64_t bad = 0;
  ctx.system().centers_in(expanded(V, reach), RadiusBand::closed(g_parent, V.generation()), CenterFilter::All,
                          [&](const CenterHit& hit) {
                            if (hit.center == own) return true;
                            PowerRadius R{hit.pairs.front().radius, exponent, 16};
                            if (detail::ball_meets_closure(hit.center, R, V)) ++bad;
                            return true;
                          });
  return bad;
}

}  // namespace

void extend_generation(CantorTree& tree, const ConditionContext& ctx) {
  const auto& config = tree.config;
  const std::size_t n = tree.generations.size() - 1;
  std::vector<CantorNode> current = tree.generations[n];
  std::vector<CantorNode> next;
  double delta_eps = tree.delta_eps;
  for (std::size_t i = 0; i < current.size(); ++i) {
    CantorNode& node = current[i];
    const DyadicCube& U = node.cube;
    const double delta = delta_of_cube(U, tree.seed, config.f, ctx);
    std::optional<double> parent_delta;
    if (n > 0) parent_delta = node.delta_used;
    LevelChoice choice = find_level(U, delta, parent_delta, config, ctx);
    const double slack = ctx.phi().at_generation(choice.j);
    const double avoid_exponent = delta + ctx.theta_of(choice.j) * tree.seed.H / 2.0;
    const long gamma_j = ctx.gamma_of(choice.j);
    const BigRat share = node.mass / BigRat(static_cast<unsigned long>(choice.selected.size()));
    for (const auto& w : choice.selected) {
      Descendant desc = contracted_descendant(w.cube, w.pair, delta, slack);
      check_irreducible_avoidance(desc.V, U.generation(), gamma_j, delta, ctx);
      CantorNode child;
      child.cube = desc.V;
      child.parent = static_cast<long>(i);
      child.delta_used = delta;
      child.witness = w;
      child.tilde = w.cube;
      child.slack = slack;
      child.mass = share;
      child.avoidance_violations =
          count_avoidance_violations(desc.V, U.generation(), avoid_exponent, w.pair.center, ctx);
      next.push_back(std::move(child));
    }
    node.delta = delta;
    node.level = choice.j;
    node.children = choice.selected.size();
    delta_eps = std::max(delta_eps, delta);
  }
  tree.generations[n] = std::move(current);
  tree.generations.push_back(std::move(next));
  tree.delta_eps = delta_eps;
}

CantorTree build_tree(const CantorConfig& config, const ConditionContext& ctx) {
  CantorTree tree = start_tree(config, ctx);
  while (tree.depth() < config.depth) {
    try {
      extend_generation(tree, ctx);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::LevelNotFound || e.code() == ErrorCode::AnnulusTooThin ||
          e.code() == ErrorCode::BandViolation || e.code() == ErrorCode::ScalingViolation ||
          e.code() == ErrorCode::TruncationTooShallow) {
        tree.failure = e.what();
        break;
      }
      throw;
    }
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Verification

ScalingReport verify_scaling(const CantorTree& tree, const ConditionContext& ctx) {
  if (tree.depth() < 1) throw Error(ErrorCode::PreconditionViolated, "verify_scaling needs depth >= 1");
  ScalingReport rep;
  const int d = tree.seed.u0.dim();
  const double dd = d;
  for (long n = 0; n <= tree.depth(); ++n) {
    if (tree.total_mass(n) != 1) rep.mass_ok = false;
    if (n == 0) continue;
    const auto& gen = tree.generations[static_cast<size_t>(n)];
    for (std::size_t i = 0; i < gen.size(); ++i) {
      const auto& node = gen[i];
      ++rep.nodes_checked;
      rep.avoidance_violations += node.avoidance_violations;
      const long g = node.cube.generation();
      const double E = neg_log2_mass(node.mass);
      const double need = static_cast<double>(g) * (dd / node.delta_used - 3.0 * dd * ctx.phi().at_generation(g));
      if (E < need) rep.violations.push_back({n, i, E, need});
    }
  }
  // Global constant: masses of the dyadic cubes meeting the tree, leaves spread uniformly inside.
  const auto& leaves = tree.generations.back();
  const long g0 = tree.seed.u0.generation();
  long g_max = g0;
  for (const auto& leaf : leaves) g_max = std::max(g_max, leaf.cube.generation());
  std::map<std::vector<BigInt>, BigRat> level;
  std::vector<std::vector<const CantorNode*>> by_generation(static_cast<size_t>(g_max - g0 + 1));
  for (const auto& leaf : leaves) by_generation[static_cast<size_t>(leaf.cube.generation() - g0)].push_back(&leaf);
  // coarse[k - g0]: max over leaves of generation < k of log2 mu + d g.
  std::vector<double> coarse(by_generation.size() + 1, -HUGE_VAL);
  for (std::size_t t = 0; t < by_generation.size(); ++t) {
    coarse[t + 1] = coarse[t];
    for (const CantorNode* leaf : by_generation[t])
      coarse[t + 1] = std::max(coarse[t + 1], log2_of(leaf->mass) + dd * static_cast<double>(leaf->cube.generation()));
  }
  const double exponent_base = dd / tree.delta_eps;
  rep.log2_global_constant = -HUGE_VAL;
  for (long k = g_max; k >= g0; --k) {
    std::map<std::vector<BigInt>, BigRat> up;
    for (auto& [idx, mass] : level) {
      std::vector<BigInt> parent;
      for (const auto& c : idx) parent.push_back(c >> 1);
      up[parent] += mass;
    }
    for (const CantorNode* leaf : by_generation[static_cast<size_t>(k - g0)]) up[leaf->cube.index()] += leaf->mass;
    level.swap(up);
    double best = -HUGE_VAL;
    for (const auto& [idx, mass] : level) best = std::max(best, log2_of(mass));
    best = std::max(best, coarse[static_cast<size_t>(k - g0)] - dd * static_cast<double>(k));
    double a = exponent_base - 4.0 * dd * ctx.phi().at_generation(k);
    rep.log2_global_constant = std::max(rep.log2_global_constant, best + static_cast<double>(k) * a);
    ++rep.global_generations;
  }
  return rep;
}

Certificate dimension_certificate(const CantorTree& tree, const ConditionContext& ctx) {
  if (tree.depth() < 1) throw Error(ErrorCode::PreconditionViolated, "certificate needs depth >= 1");
  const double dd = tree.seed.u0.dim();
  const double h = tree.seed.h, eps = tree.config.epsilon;
  Certificate c;
  c.h_eps = (h - eps) / (1.0 + eps * (2.0 * dd / (h * h) + 1.0) / tree.seed.f_y);
  c.scaling_exponent = dd / tree.delta_eps;
  bool first = true;
  for (const auto& node : tree.generations.back()) {
    const long g = node.cube.generation();
    double local = neg_log2_mass(node.mass) / static_cast<double>(g);
    double required = c.scaling_exponent - 4.0 * dd * ctx.phi().at_generation(g);
    if (first || local < c.min_local_exponent) {
      c.min_local_exponent = local;
      c.required_exponent = required;
    }
    c.margin = first ? local - required : std::min(c.margin, local - required);
    first = false;
  }
  return c;
}

std::vector<SamplePoint> sample_points(const CantorTree& tree, std::size_t count, std::uint64_t seed) {
  if (tree.depth() < 2) throw Error(ErrorCode::PreconditionViolated, "sample_points needs depth >= 2");
  std::vector<std::vector<std::vector<std::size_t>>> kids(tree.generations.size());
  for (std::size_t n = 0; n + 1 < tree.generations.size(); ++n) {
    kids[n].resize(tree.generations[n].size());
    for (std::size_t i = 0; i < tree.generations[n + 1].size(); ++i)
      kids[n][static_cast<size_t>(tree.generations[n + 1][i].parent)].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<SamplePoint> out;
  for (std::size_t s = 0; s < count; ++s) {
    SamplePoint p;
    std::size_t at = 0;
    std::size_t n = 0;
    for (;; ++n) {
      const auto& node = tree.generations[n][at];
      if (node.level >= 0) p.deltas.push_back(node.delta);
      if (n + 1 >= tree.generations.size() || kids[n][at].empty()) break;
      const auto& options = kids[n][at];
      // Siblings share their mass equally.
      std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
      at = options[pick(rng)];
    }
    p.leaf = tree.generations[n][at].cube;
    p.x = p.leaf.center_point();
    p.f_x = tree.config.f.eval(p.x);
    out.push_back(std::move(p));
  }
  return out;
}

std::string tree_to_json(const CantorTree& tree) {
  using nlohmann::json;
  json j;
  j["f"] = tree.config.f.spec();
  j["epsilon"] = tree.config.epsilon;
  j["kappa"] = tree.config.kappa;
  j["gauge"] = tree.gauge;
  j["h"] = tree.seed.h;
  j["H_eps"] = tree.seed.H;
  j["alpha"] = tree.seed.alpha;
  j["y_eps"] = tree.seed.y.to_string();
  j["omega_eps"] = tree.seed.omega_eps.to_string();
  j["u0"] = tree.seed.u0.to_string();
  j["delta_eps"] = tree.delta_eps;
  j["failure"] = tree.failure;
  json gens = json::array();
  for (const auto& gen : tree.generations) {
    json nodes = json::array();
    for (const auto& node : gen) {
      json e;
      e["cube"] = node.cube.to_string();
      e["parent"] = node.parent;
      e["mass"] = to_fraction_string(node.mass);
      e["delta_used"] = node.delta_used;
      if (node.witness) {
        e["tilde"] = node.tilde.to_string();
        e["witness_center"] = node.witness->pair.center.to_string();
        e["witness_radius"] = to_fraction_string(node.witness->pair.radius);
        e["slack"] = node.slack;
      }
      if (node.level >= 0) {
        e["delta"] = node.delta;
        e["level"] = node.level;
        e["children"] = node.children;
      }
      e["avoidance_violations"] = node.avoidance_violations;
      nodes.push_back(std::move(e));
    }
    gens.push_back(std::move(nodes));
  }
  j["generations"] = std::move(gens);
  return j.dump(1);
}

std::string tree_summary_csv(const CantorTree& tree) {
  std::ostringstream out;
  out.precision(10);
  out << "n,nodes,j_min,j_max,delta_min,delta_max,min_local_exponent\n";
  for (std::size_t n = 0; n < tree.generations.size(); ++n) {
    const auto& gen = tree.generations[n];
    long j_min = -1, j_max = -1;
    double d_min = HUGE_VAL, d_max = -HUGE_VAL, local = HUGE_VAL;
    for (const auto& node : gen) {
      if (node.level >= 0) {
        j_min = j_min < 0 ? node.level : std::min(j_min, node.level);
        j_max = std::max(j_max, node.level);
        d_min = std::min(d_min, node.delta);
        d_max = std::max(d_max, node.delta);
      }
      if (node.cube.generation() > 0)
        local = std::min(local, neg_log2_mass(node.mass) / static_cast<double>(node.cube.generation()));
    }
    out << n << ',' << gen.size() << ',';
    if (j_min >= 0)
      out << j_min << ',' << j_max << ',' << d_min << ',' << d_max << ',';
    else
      out << ",,,,";
    if (local < HUGE_VAL) out << local;
    out << '\n';
  }
  return out.str();
}

}  // namespace jblab
