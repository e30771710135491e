#include <doctest.h>

#include <cmath>
#include <random>

#include "jblab/dimension.hpp"
#include "jblab/errors.hpp"

using namespace jblab;

namespace {

// Left endpoints of the level-n middle-thirds intervals, with denominators 3^n.
std::vector<Point> cantor_endpoints(int n) {
  std::vector<BigInt> nums{BigInt(0)};
  BigInt den = 1;
  for (int level = 0; level < n; ++level) {
    std::vector<BigInt> next;
    for (const auto& a : nums) {
      next.push_back(3 * a);
      next.push_back(3 * a + 2);
    }
    nums.swap(next);
    den *= 3;
  }
  std::vector<Point> out;
  for (const auto& a : nums) out.push_back(Point::scalar(make_rat(a, den)));
  return out;
}

RedundancyProfile constant_profile(std::uint64_t n, long j_max) {
  std::vector<std::uint64_t> counts(static_cast<size_t>(j_max + 1), n);
  return RedundancyProfile(1, counts);
}

}  // namespace

TEST_SUITE("dimension") {
  TEST_CASE("box counting") {
    std::mt19937_64 rng(11);
    std::vector<Point> uniform;
    for (int i = 0; i < 10000; ++i) uniform.push_back(Point::scalar(make_rat(BigInt(static_cast<unsigned long>(rng() >> 11)), pow2_int(53))));
    BoxCountReport u = box_counting(uniform, 4, 10);
    CHECK(u.slope >= 0.9);
    CHECK(u.slope <= 1.0);
    for (std::size_t i = 1; i < u.rows.size(); ++i) CHECK(u.rows[i].count >= u.rows[i - 1].count);

    // 256 endpoints separate at j = 13 (gap 3^-8 > 2^-13), so the fit stops at j = 12.
    BoxCountReport c = box_counting(cantor_endpoints(8), 3, 12);
    CHECK(c.slope >= 0.58);
    CHECK(c.slope <= 0.68);

    std::vector<Point> one{Point::scalar(BigRat(1, 3))};
    BoxCountReport s = box_counting(one, 1, 8);
    CHECK(s.slope == doctest::Approx(0.0));

    // Two points separated at j = 2: every later row is saturated.
    std::vector<Point> two{Point::scalar(BigRat(1, 8)), Point::scalar(BigRat(5, 8))};
    CHECK_THROWS_AS(box_counting(two, 1, 10), Error);
    CHECK_THROWS_AS(box_counting(uniform, 4, 4), Error);
    CHECK(u.to_csv().rfind("j,count,saturated\n", 0) == 0);
  }

  TEST_CASE("box counting of a cube family") {
    // All generation-6 cubes: the union is [0,1), slope 1.
    std::vector<DyadicCube> full;
    for (long k = 0; k < 64; ++k) full.push_back(DyadicCube(6, {BigInt(k)}));
    BoxCountReport f = box_counting(full, 1, 5);
    CHECK(f.slope == doctest::Approx(1.0));
    // Coarser than j: a cube counts all its subcubes.
    std::vector<DyadicCube> half{DyadicCube(1, {BigInt(0)})};
    BoxCountReport h = box_counting(half, 1, 6);
    for (const auto& row : h.rows) CHECK(row.count == (1ULL << (row.j - 1)));
  }

  TEST_CASE("covering sums") {
    RedundancyProfile four = constant_profile(4, 60);
    CoveringSum conv = covering_sum(four, 2.0, 0.6, 1, 60);
    CHECK(conv.verdict == CoverVerdict::Converging);
    CHECK(conv.log2_terms[0] == doctest::Approx(2.0 - 0.2));
    // Geometric tail: partial sums approach 4 * 2^-0.2 / (1 - 2^-0.2).
    CHECK(conv.partial_sums.back() == doctest::Approx(4 * std::exp2(-0.2) / (1 - std::exp2(-0.2))).epsilon(0.01));
    CHECK(covering_sum(four, 2.0, 0.4, 1, 60).verdict == CoverVerdict::Diverging);
    CHECK(covering_sum(constant_profile(1, 60), 2.0, 0.5, 1, 60).verdict == CoverVerdict::Inconclusive);
    CHECK(std::string(to_string(CoverVerdict::Converging)) == "Converging");
    CHECK_THROWS_AS(covering_sum(four, 2.0, 0.6, 1, 61), Error);

    // Once a value of s converges, every larger s converges.
    RedundancyProfile rat = c1_profile(irreducible(gen_rational(BigInt(3000))), 20);
    for (double delta : {1.5, 2.0, 3.0}) {
      bool converged = false;
      for (int i = 0; i <= 40; ++i) {
        double s = 0.2 + 0.02 * i;
        CoverVerdict v = covering_sum(rat, delta, s, 1, 20).verdict;
        if (converged) CHECK(v == CoverVerdict::Converging);
        converged = converged || v == CoverVerdict::Converging;
      }
      CHECK(converged);
    }
  }

  TEST_CASE("local exponents") {
    CantorTree tree;
    tree.seed.u0 = DyadicCube::unit(1);
    for (long n = 0; n <= 3; ++n) {
      std::vector<CantorNode> gen;
      for (long k = 0; k < (1L << n); ++k) {
        CantorNode node;
        node.cube = DyadicCube(n, {BigInt(k)});
        node.parent = n == 0 ? -1 : k / 2;
        node.mass = BigRat(1, 1L << n);
        gen.push_back(node);
      }
      tree.generations.push_back(std::move(gen));
    }
    LocalExponentReport rep = local_exponents(tree, 4);
    REQUIRE(rep.exponents.size() == 8);
    for (double e : rep.exponents) CHECK(e == doctest::Approx(1.0));
    CHECK(rep.min == doctest::Approx(1.0));
    CHECK(rep.histogram.size() == 4);
    CHECK(rep.histogram[0] == 8);

    // Unequal split: masses 3/4 and 1/4 on the two halves at depth 1.
    CantorTree skew;
    skew.seed.u0 = DyadicCube::unit(1);
    skew.generations.push_back(tree.generations[0]);
    skew.generations.push_back(tree.generations[1]);
    skew.generations[1][0].mass = BigRat(3, 4);
    skew.generations[1][1].mass = BigRat(1, 4);
    LocalExponentReport sk = local_exponents(skew);
    CHECK(sk.min == doctest::Approx(-std::log2(0.75)));
    CHECK(sk.max == doctest::Approx(2.0));
    CHECK(sk.mean == doctest::Approx((2.0 - std::log2(0.75)) / 2));

    CantorTree bare;
    bare.generations.push_back(tree.generations[0]);
    CHECK_THROWS_AS(local_exponents(bare), Error);
  }

  TEST_CASE("estimators agree on a built tree") {
    RedundancyProfile prof = c1_profile(irreducible(gen_dyadic(14, 1)), 14);
    CantorConfig cfg;
    cfg.f = TargetRate::parse("const:2");
    cfg.omega = Box{{BigRat(0)}, {BigRat(1)}, false};
    cfg.epsilon = 0.2;
    cfg.kappa = 1.0 / 16;
    cfg.min_branch = cfg.max_branch = 9;
    cfg.depth = 2;
    GaugeCalibration gc = calibrate_gauge(1, cfg.kappa, cfg.epsilon, prof);
    ConditionContext ctx(gen_dyadic(8192, 1), prof, gc.phi);
    CantorTree tree = build_tree(cfg, ctx);
    REQUIRE(tree.depth() == 2);
    LocalExponentReport loc = local_exponents(tree);
    ScalingReport scaling = verify_scaling(tree, ctx);
    Certificate cert = dimension_certificate(tree, ctx);
    MESSAGE("const-2 tree: min local exponent " << loc.min << ", required " << cert.required_exponent
                                                << ", per-node violations " << scaling.violations.size());
    CHECK(loc.min == doctest::Approx(cert.min_local_exponent));
    if (scaling.ok()) CHECK(loc.min >= cert.required_exponent);

    std::vector<DyadicCube> leaves;
    long g_lo = tree.seed.u0.generation(), g_hi = 0;
    for (const auto& node : tree.generations.back()) {
      leaves.push_back(node.cube);
      g_hi = std::max(g_hi, node.cube.generation());
    }
    BoxCountReport box = box_counting(leaves, g_lo + 1, g_hi);
    MESSAGE("box-count slope " << box.slope << " over " << box.used << " rows");
    CHECK(box.slope >= loc.min - 0.1);
  }
}
