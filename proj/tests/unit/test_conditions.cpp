#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "jblab/conditions.hpp"
#include "jblab/errors.hpp"

using namespace jblab;

namespace {

ConditionContext context_for(const System& s, long layers) {
  return ConditionContext(s, c1_profile(irreducible(s), layers), default_gauge());
}

System two_pair_system(bool with_intruder) {
  std::vector<ApproxPair> pairs;
  pairs.push_back({Point::scalar(BigRat(1, 2)), pow2(-5), 0});
  // Radius 2^-8 lies in the window [gamma(4), floor(2 * 5) + 4) = [2, 14); center at 2^-11 from 1/2,
  // inside B(1/2, (2^-5)^2).
  if (with_intruder) pairs.push_back({Point::scalar(BigRat(1, 2) + pow2(-11)), pow2(-8), 0});
  return make_custom(1, pairs);
}

}  // namespace

TEST_SUITE("conditions") {
  TEST_CASE("C1 profiles") {
    RedundancyProfile dy = c1_profile(irreducible(gen_dyadic(12, 1)), 12);
    for (long j = 6; j <= 12; ++j) CHECK(dy.count(j) == 1);
    RedundancyProfile dy2 = c1_profile(irreducible(gen_dyadic(5, 2)), 5);
    CHECK(dy2.upper_bound());
    for (long j = 6; j <= 5 + 5; ++j) CHECK(dy2.count(std::min(j, 5L)) >= 1);
    RedundancyProfile rat = c1_profile(irreducible(gen_rational(BigInt(3000))), 20);
    std::uint64_t max_n = 0;
    for (long j = 0; j <= 20; ++j) max_n = std::max(max_n, rat.count(j));
    MESSAGE("rational measured max N_j = " << max_n << " (pairwise-distance bound 4)");
    CHECK(max_n <= 5);
    CHECK(std::log2(static_cast<double>(rat.count(20))) / 20.0 <= 0.2);
    for (long j = 1; j <= 20; ++j) CHECK(rat.count(j) >= rat.count(j - 1));
    // A single ball gives N = 1 on its layer.
    System single = make_custom(1, {{Point::scalar(BigRat(1, 3)), BigRat(1, 16), 0}});
    CHECK(c1_profile(irreducible(single), 6).count(4) == 1);
  }

  TEST_CASE("C1 sweep against a brute-force overlap oracle") {
    // Oracle: maximum number of closed intervals of a layer containing a common endpoint.
    IrreducibleSystem irr = irreducible(gen_rational(BigInt(300)));
    RedundancyProfile prof = c1_profile(irr, 14);
    std::uint64_t running = 0;
    for (long j = 0; j <= 14; ++j) {
      std::vector<std::pair<BigRat, BigRat>> iv;
      for (auto idx : t_layer(irr, j)) {
        auto p = irr.parent().pair(idx);
        iv.emplace_back(p.center[0] - p.radius, p.center[0] + p.radius);
      }
      std::uint64_t depth = 0;
      for (const auto& a : iv) {
        std::uint64_t c = 0;
        for (const auto& b : iv) c += (b.first <= a.first && a.first <= b.second) ? 1 : 0;
        depth = std::max(depth, c);
      }
      running = std::max<std::uint64_t>({running, depth, 1});
      CHECK(prof.count(j) == running);
    }
  }

  TEST_CASE("property P on the dyadic system") {
    // The witness band [2^-g-1, 2^-g) holds the radii 2^-(j+5) of grid generation j = g - 4, so
    // V has a witness exactly when its corner is on that grid.
    System s = gen_dyadic(40, 1);
    ConditionContext ctx = context_for(gen_dyadic(12, 1), 12);
    ConditionContext full(s, ctx.profile(), default_gauge());
    long g = 10;
    for (long k = 0; k < 64; ++k) {
      DyadicCube V(g, {BigInt(k)});
      auto w = check_P(V, 2.0, full);
      bool aligned = k % 16 == 0;
      CHECK(w.has_value() == aligned);
      if (w) {
        CHECK(w->pair.center[0] == V.lower(0));
        CHECK(w->pair.radius == pow2(-(g + 1)));
      }
    }
  }

  TEST_CASE("property P on the rational system") {
    ConditionContext ctx(gen_rational(pow2_int(40)), c1_profile(irreducible(gen_rational(BigInt(3000))), 20),
                         default_gauge());
    std::size_t holds = 0;
    for (long k = 0; k < 64; ++k) {
      DyadicCube V(8, {BigInt(k * 4)});
      auto w = check_P(V, 2.0, ctx);
      if (!w) continue;
      ++holds;
      // Dirichlet witness p/q in V with q^2 in (2^8, 2^9].
      BigRat q2 = 1 / w->pair.radius;
      CHECK(q2 > 256);
      CHECK(q2 <= 512);
      CHECK(V.contains(w->pair.center));
    }
    CHECK(holds > 0);
    CHECK_THROWS_AS(check_P(DyadicCube(8, {BigInt(3)}), 2.0, context_for(gen_rational(BigInt(10)), 6)), Error);
  }

  TEST_CASE("property P constructed violation") {
    DyadicCube V(4, {BigInt(8)});
    ConditionContext clean = context_for(two_pair_system(false), 10);
    ConditionContext bad(two_pair_system(true), clean.profile(), default_gauge());
    CHECK(check_P(V, 2.0, clean).has_value());
    CHECK_FALSE(check_P(V, 2.0, bad).has_value());
  }

  TEST_CASE("property P is monotone in the window") {
    ConditionContext ctx(gen_rational(pow2_int(40)), c1_profile(irreducible(gen_rational(BigInt(3000))), 20),
                         default_gauge());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 40; ++i) {
      long g = 6 + static_cast<long>(rng() % 4);
      DyadicCube V(g, {BigInt(static_cast<long>(rng() % (1u << g)))});
      auto [lo, hi] = p_window(g, 2.0, ctx);
      bool narrow = check_P_window(V, 2.0, lo + 1, hi - 1, ctx).has_value();
      bool wide = check_P_window(V, 2.0, lo, hi, ctx).has_value();
      if (wide) CHECK(narrow);
    }
  }

  TEST_CASE("Q counts") {
    ConditionContext ctx(gen_dyadic(30, 1), c1_profile(irreducible(gen_dyadic(12, 1)), 12), default_gauge());
    DyadicCube U(3, {BigInt(5)});
    QCount q = count_Q(U, 9, 2.0, ctx);
    CHECK(q.total == 64);
    CHECK(q.count == q.members.size());
    std::uint64_t by_scan = 0;
    for_each_subcube(U, 9, [&](const DyadicCube& V, std::uint64_t) { by_scan += check_P(V, 2.0, ctx) ? 1 : 0; });
    CHECK(by_scan == q.count);
    // Grid generation j - 4 has 2^-4 of the cubes as corners.
    CHECK(q.ratio() == doctest::Approx(1.0 / 16));
    System empty = make_custom(1, {});
    ConditionContext none(empty, RedundancyProfile::constant(1, 1, 20), default_gauge());
    CHECK(count_Q(U, 6, 2.0, none).count == 0);
  }

  TEST_CASE("C2 report") {
    ConditionContext ctx(gen_dyadic(30, 1), c1_profile(irreducible(gen_dyadic(12, 1)), 12), default_gauge());
    C2Report rep = c2_report(DyadicCube(2, {BigInt(1)}), 2.0, 8, 10, ctx);
    REQUIRE(rep.rows.size() == 3);
    for (const auto& r : rep.rows) {
      CHECK(r.kappa_hat() >= 0);
      CHECK(r.kappa_hat() <= 1);
      CHECK(r.qtilde <= r.total);
    }
    CHECK(rep.to_csv().rfind("delta,j,q,qtilde,total,kappa_hat", 0) == 0);
  }

  TEST_CASE("Qtilde counts") {
    // Single pair (1/2, 1/4), delta = 2: cells of generation 8 meeting [7/16, 9/16].
    System one = make_custom(1, {{Point::scalar(BigRat(1, 2)), BigRat(1, 4), 0}});
    ConditionContext ctx(one, RedundancyProfile::constant(1, 1, 20), default_gauge());
    QtildeCount qt = count_Qtilde(DyadicCube::unit(1), 8, 2.0, ctx);
    std::uint64_t oracle = 0;
    for (long k = 0; k < 256; ++k) {
      BigRat lo(k, 256), hi(k + 1, 256);
      if (hi > BigRat(7, 16) && lo <= BigRat(9, 16)) ++oracle;
    }
    CHECK(qt.count == oracle);
    // Very large delta: each tiny ball meets at most 3 cells.
    System few = make_custom(1, {{Point::scalar(BigRat(1, 3)), BigRat(1, 4), 0}, {Point::scalar(BigRat(5, 7)), BigRat(1, 4), 1}});
    ConditionContext ctx2(few, RedundancyProfile::constant(1, 1, 20), default_gauge());
    CHECK(count_Qtilde(DyadicCube::unit(1), 8, 40.0, ctx2).count <= 2 * 3);
    // Rational system on a cube of generation 1: the ratio is small and settles as j grows,
    // since the layer g(U) term of the bound does not decay.
    ConditionContext rat(gen_rational(BigInt(3000)), c1_profile(irreducible(gen_rational(BigInt(3000))), 20),
                         default_gauge());
    double r12 = count_Qtilde(DyadicCube(1, {BigInt(1)}), 12, 2.0, rat).ratio();
    double r16 = count_Qtilde(DyadicCube(1, {BigInt(1)}), 16, 2.0, rat).ratio();
    CHECK(r12 < 0.5);
    CHECK(r16 == doctest::Approx(r12).epsilon(0.05));
  }

  TEST_CASE("Qtilde bound") {
    // Dyadic system (psi = 0), delta = 2: the sum is geometric with ratio 2^-(delta - 1) = 1/2.
    ConditionContext dy(gen_dyadic(20, 1), c1_profile(irreducible(gen_dyadic(12, 1)), 12), default_gauge());
    QtildeBoundReport rep = qtilde_bound_check(DyadicCube(2, {BigInt(1)}), 12, 2.0, dy);
    double oracle = 0;
    for (long k = 2; k <= 6; ++k) oracle += std::exp2(-static_cast<double>(k));
    CHECK(rep.sum_term == doctest::Approx(oracle));
    CHECK(rep.gauge_term == doctest::Approx(std::exp2(-12.0 / std::sqrt(12.0))));
    // Rational system, delta = 3: lhs / rhs stays within one constant across j = 9..15.
    ConditionContext rat(gen_rational(BigInt(3000)), c1_profile(irreducible(gen_rational(BigInt(3000))), 20),
                         default_gauge());
    double lo = 1e300, hi = 0;
    for (long j = 9; j <= 15; ++j) {
      double r = qtilde_bound_check(DyadicCube(1, {BigInt(1)}), j, 3.0, rat).ratio();
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    MESSAGE("Qtilde bound ratio range " << lo << " .. " << hi);
    CHECK(hi <= 4.0);
    // No populated layer: lhs = 0.
    System empty = make_custom(1, {});
    ConditionContext none(empty, RedundancyProfile::constant(1, 1, 20), default_gauge());
    CHECK(qtilde_bound_check(DyadicCube(1, {BigInt(0)}), 8, 2.0, none).lhs == 0);
  }

  TEST_CASE("three distance") {
    ThreeDistanceReport g = three_distance(ContinuedFraction::golden(80), 3);
    REQUIRE(g.distinct() == 3);
    std::vector<double> want{0.1458980337503155, 0.2360679774997897, 0.3819660112501051};
    std::vector<double> got;
    for (const auto& c : g.gap_classes) got.push_back(c.get_d());
    std::sort(got.begin(), got.end());
    for (int i = 0; i < 3; ++i) CHECK(got[static_cast<size_t>(i)] == doctest::Approx(want[static_cast<size_t>(i)]).epsilon(1e-12));
    CHECK(g.max_gap_ok);
    ThreeDistanceReport one = three_distance(ContinuedFraction::golden(80), 1);
    CHECK(one.gaps.size() == 2);
    CHECK(one.distinct() <= 3);
    // Large partial quotients break the max-gap bound: alpha near 1/50 leaves a gap near 4/5 at N = 10.
    std::vector<BigInt> big(60, BigInt(1));
    big[0] = 50;
    ThreeDistanceReport wide = three_distance(ContinuedFraction(BigInt(0), big, false), 10);
    CHECK(wide.distinct() <= 3);
    CHECK_FALSE(wide.max_gap_ok);
    // Random CF prefixes with quotients at most 6, and N.
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
      std::vector<BigInt> a;
      for (int k = 0; k < 60; ++k) a.push_back(BigInt(static_cast<long>(1 + rng() % 6)));
      ContinuedFraction cf(BigInt(0), a, false);
      std::uint64_t N = 1 + rng() % 500;
      ThreeDistanceReport r = three_distance(cf, N);
      CHECK(r.gaps.size() == N + 1);
      CHECK(r.distinct() <= 3);
      CHECK(r.max_gap_ok);
    }
  }

  TEST_CASE("poisson strips and the C2 probability") {
    PoissonStripStats st = poisson_strip_counts(4, 10000, 17);
    CHECK(st.mean == doctest::Approx(1.0).epsilon(0.05));
    CHECK(st.variance == doctest::Approx(1.0).epsilon(0.05));
    PoissonMcReport r8 = poisson_c2_mc(2.0, 8, 10000, 5);
    PoissonMcReport r12 = poisson_c2_mc(2.0, 12, 10000, 5);
    CHECK(r8.single_point_frequency == doctest::Approx(std::exp(-1.0)).epsilon(0.02 / std::exp(-1.0)));
    CHECK(r8.estimate >= r8.kappa1);
    CHECK(r12.estimate >= r12.kappa1);
    CHECK(std::fabs(r8.estimate - r12.estimate) <= 0.3 * r8.estimate);
    CHECK(r8.estimate <= r8.single_point_frequency + 1e-12);
    CHECK(r8.ci_lo <= r8.estimate);
    CHECK(r8.estimate <= r8.ci_hi);
    CHECK(r8.log_kappa1 == doctest::Approx(-1.0 - 16.0 * 4.0));
  }
}
