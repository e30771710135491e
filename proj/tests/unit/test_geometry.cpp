#include <doctest.h>

#include <cmath>
#include <random>

#include "jblab/conditions.hpp"
#include "jblab/cube.hpp"
#include "jblab/errors.hpp"
#include "jblab/gauge.hpp"
#include "jblab/profile.hpp"

using namespace jblab;

namespace {

BigRat random_rat(std::mt19937_64& rng, long bits) {
  return make_rat(BigInt(std::to_string(rng() >> (64 - bits))), pow2_int(static_cast<unsigned long>(bits)));
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("cube algebra") {
    DyadicCube half(1, {BigInt(0)});
    auto kids = half.children();
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].lower(0) == 0);
    CHECK(kids[0].upper(0) == BigRat(1, 4));
    CHECK(kids[1].lower(0) == BigRat(1, 4));
    CHECK(kids[1].upper(0) == BigRat(1, 2));
    CHECK(kids[1].parent() == half);
    CHECK(DyadicCube::parse("3:5").to_string() == "3:5");
    CHECK(DyadicCube::containing(Point::scalar(BigRat(1)), 3).index(0) == 7);
    for (int d = 1; d <= 3; ++d) CHECK(cubes_within(DyadicCube::unit(d).children()[0], 4).size() == (1u << (3 * d)));
    CHECK(distance(DyadicCube(2, {BigInt(0)}), DyadicCube(2, {BigInt(2)})) == BigRat(1, 4));
    CHECK(distance(DyadicCube(2, {BigInt(0)}), DyadicCube(2, {BigInt(1)})) == 0);
  }

  TEST_CASE("children partition their parent") {
    // Exhaustive at small sizes: every grid point of generation g + 2 lies in exactly one child.
    for (int d = 1; d <= 3; ++d) {
      for (long g = 0; g <= 2; ++g) {
        for (const auto& parent : cubes_within(DyadicCube::unit(d), g)) {
          auto kids = parent.children();
          CHECK(kids.size() == (1u << d));
          for (const auto& probe : cubes_within(parent, g + 2)) {
            Point p = probe.center_point();
            int hits = 0;
            for (const auto& k : kids) hits += k.contains(p) ? 1 : 0;
            CHECK(hits == 1);
          }
        }
      }
    }
    // Point 1 belongs to the last cube and only to it.
    DyadicCube last(4, {BigInt(15)});
    CHECK(last.contains(Point::scalar(BigRat(1))));
  }

  TEST_CASE("largest contained and smallest enclosing cubes") {
    BallFit fit = largest_contained(Point::scalar(BigRat(1, 3)), BigRat(1, 8));
    CHECK(fit.generation == 3);
    // Oracle: exhaustive over generations 1..6 for the first generation with a cube inside.
    BigRat lo = BigRat(1, 3) - BigRat(1, 8), hi = BigRat(1, 3) + BigRat(1, 8);
    long first = -1;
    for (long g = 1; g <= 6 && first < 0; ++g)
      for (const auto& c : cubes_within(DyadicCube::unit(1), g))
        if (c.lower(0) >= lo && c.upper(0) <= hi) {
          first = g;
          break;
        }
    CHECK(first == fit.generation);
    CHECK(fit.cube.lower(0) >= lo);
    CHECK(fit.cube.upper(0) <= hi);
    DyadicCube enc = smallest_enclosing(Point::scalar(BigRat(3, 8)), BigRat(1, 64));
    CHECK(enc.lower(0) <= BigRat(3, 8) - BigRat(1, 64));
    CHECK(enc.upper(0) >= BigRat(3, 8) + BigRat(1, 64));
  }

  TEST_CASE("default gauge") {
    GaugeFunction phi = default_gauge();
    CHECK(phi.at_generation(16) == doctest::Approx(0.25));
    CHECK(phi(pow2(-16)) == doctest::Approx(0.25));
    // r^{-phi(r)} = 2^{sqrt j}
    CHECK(std::exp2(16 * phi.at_generation(16)) == doctest::Approx(16.0));
    CHECK(validate_gauge(phi).ok);
    CHECK(validate_gauge(scaled_gauge(0.4)).ok);
    GaugeCheck bad = validate_gauge(inverse_log_gauge(1.0));
    CHECK_FALSE(bad.ok);
    // Oracle for the rejection: 2^{j phi(2^-j)} is the constant 2^c.
    GaugeFunction inv = inverse_log_gauge(1.0);
    for (long j : {4L, 40L, 400L}) CHECK(std::exp2(static_cast<double>(j) * inv.at_generation(j)) == doctest::Approx(2.0));
  }

  TEST_CASE("gamma and theta") {
    GaugeFunction phi = default_gauge();
    RedundancyProfile ones = RedundancyProfile::constant(1, 1, 64);
    GammaResult g16 = gamma(ones, phi, 16);
    CHECK(g16.gamma == 12);
    CHECK(g16.theta == doctest::Approx(0.25));
    RedundancyProfile fours = RedundancyProfile::constant(1, 4, 64);
    // Oracle: brute-force scan of N_k 2^k <= 2^{-j phi} 2^j.
    for (long j = 1; j <= 60; ++j) {
      long brute = -1;
      for (long k = 0; k <= j; ++k)
        if (std::log2(4.0) + static_cast<double>(k) <= static_cast<double>(j) - static_cast<double>(j) * phi.at_generation(j))
          brute = k;
      GammaResult r = gamma(fours, phi, j);
      if (brute < 0) {
        CHECK(r.degenerate);
      } else {
        CHECK(r.gamma == brute);
      }
      CHECK(r.gamma <= j);
      CHECK(static_cast<double>(j - r.gamma) == doctest::Approx(static_cast<double>(j) * r.theta));
    }
    CHECK(gamma(fours, phi, 25).gamma == 18);
    // Non-decreasing in j.
    long prev = 0;
    for (long j = 1; j <= 60; ++j) {
      long now = gamma(ones, phi, j).gamma;
      CHECK(now >= prev);
      prev = now;
    }
  }

  TEST_CASE("redundancy profile") {
    RedundancyProfile p(1, {1, 1, 2, 2, 3});
    for (long j = 1; j <= 4; ++j)
      CHECK(std::exp2(static_cast<double>(j) * p.psi(j)) == doctest::Approx(static_cast<double>(p.count(j))));
    RedundancyProfile ext = p.extended_to(10);
    CHECK(ext.count(10) == 3);
    CHECK(ext.extrapolated_from() == 5);
    CHECK(p.to_csv(default_gauge()).rfind("j,N_j,psi,gamma,theta", 0) == 0);
  }

  TEST_CASE("cubes meeting a ball") {
    // Diameter 2^-j meets at most 3 cells.
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      long j = 3 + static_cast<long>(rng() % 8);
      Point c = Point::scalar(random_rat(rng, 40));
      CHECK(ball_cube_count(c, pow2(-j - 1), j, BigRat(1)) <= 3);
    }
    // Empirical constant C'_1: count / (2^j r0) over random balls with |B| = r0.
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      long j = 6 + static_cast<long>(rng() % 6);
      BigRat r0 = pow2(-j) * (1 + random_rat(rng, 20) * 15);
      Point c = Point::scalar(random_rat(rng, 40));
      std::uint64_t n = ball_cube_count(c, r0 / 2, j, r0);
      worst = std::max(worst, static_cast<double>(n) / (std::exp2(static_cast<double>(j)) * r0.get_d()));
    }
    // A closed interval of length r0 meets at most 2^j r0 + 2 cells, so the ratio stays below 3.
    CHECK(worst <= 3.0);
    CHECK_THROWS_AS(ball_cube_count(Point::scalar(BigRat(1, 2)), pow2(-10), 4, BigRat(1)), Error);
  }

  TEST_CASE("family count counts") {
    // Disjoint balls of radius just above 2^-(k+1) centred on a grid of step 2^-k (+ gap).
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      long k = 6 + static_cast<long>(rng() % 4);
      long g = static_cast<long>(rng() % 4);
      BigRat r = pow2(-(k + 1)) * BigRat(17, 16);
      BigRat step = 2 * r + pow2(-(k + 8));
      std::vector<std::pair<Point, BigRat>> balls;
      for (BigRat x = r; x + r <= 1; x += step) balls.push_back({Point::scalar(x), r});
      DyadicCube U(g, {BigInt(static_cast<long>(rng() % (1u << g)))});
      std::uint64_t n = family_ball_count(balls, k, U);
      CHECK(static_cast<double>(n) <= 2.0 * std::exp2(static_cast<double>(k - g)) + 2.0);
      CHECK(n >= 1);
    }
  }
}
