#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "jblab/system.hpp"

using namespace jblab;

namespace {

bool radii_non_increasing(const System& s) {
  auto pairs = s.pairs();
  for (std::size_t i = 1; i < pairs.size(); ++i)
    if (pairs[i].radius > pairs[i - 1].radius) return false;
  return true;
}

}  // namespace

TEST_SUITE("systems") {
  TEST_CASE("rational system enumeration") {
    auto one = gen_rational(BigInt(1)).pairs();
    REQUIRE(one.size() == 1);
    CHECK(one[0].center[0] == 0);
    CHECK(one[0].radius == 1);
    auto two = gen_rational(BigInt(2)).pairs();
    REQUIRE(two.size() == 3);
    CHECK(two[1].center[0] == 0);
    CHECK(two[1].radius == BigRat(1, 4));
    CHECK(two[2].center[0] == BigRat(1, 2));
    System hundred = gen_rational(BigInt(100));
    CHECK(hundred.size() == 100 * 101 / 2);
    CHECK(radii_non_increasing(hundred));
  }

  TEST_CASE("dyadic system enumeration") {
    auto s = gen_dyadic(1, 1).pairs();
    REQUIRE(s.size() == 2);
    CHECK(s[0].center[0] == 0);
    CHECK(s[1].center[0] == BigRat(1, 2));
    CHECK(s[0].radius == BigRat(1, 64));
    CHECK(gen_dyadic(3, 1).size() == 14);
    CHECK(gen_dyadic(2, 2).size() == 20);
    CHECK(radii_non_increasing(gen_dyadic(6, 2)));
  }

  TEST_CASE("inhomogeneous system") {
    System g = gen_inhomogeneous(ContinuedFraction::golden(80), 3);
    auto p = g.pairs();
    CHECK(p[0].center[0].get_d() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-15));
    CHECK(p[0].radius == 1);
    CHECK(p[1].radius == BigRat(1, 2));
    CHECK(p[2].radius == BigRat(1, 3));
    // Oracle: {n (sqrt2 - 1)} to 40 bits by integer square roots.
    System s = gen_inhomogeneous(ContinuedFraction::sqrt2_minus_1(80), 5);
    auto sp = s.pairs();
    for (long n = 1; n <= 5; ++n) {
      BigInt scaled = isqrt_floor(2 * BigInt(n) * BigInt(n) * pow2_int(80)) - BigInt(n) * pow2_int(40);
      BigInt frac = scaled % pow2_int(40);
      BigInt mine = floor_scaled(sp[static_cast<size_t>(n - 1)].center[0], 40);
      CHECK(abs(mine - frac) <= 1);
    }
  }

  TEST_CASE("poisson system") {
    // Mean pair count with r_min = 2^-8 in the radius band [2^-8, 2^-4]: 2^8 - 2^4.
    double total = 0, all = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
      System p = gen_poisson(static_cast<std::uint64_t>(s), pow2(-8));
      for (const auto& pair : p.pairs())
        if (pair.radius <= pow2(-4)) total += 1;
      all += static_cast<double>(p.size());
    }
    CHECK(total / seeds == doctest::Approx(240.0).epsilon(0.05));
    CHECK(all / seeds == doctest::Approx(255.0).epsilon(0.05));
    System a = gen_poisson(7, BigRat(1, 2)), b = gen_poisson(7, BigRat(1, 2));
    CHECK(a == b);
    CHECK(radii_non_increasing(gen_poisson(3, pow2(-6))));
  }

  TEST_CASE("irreducible subsystems") {
    IrreducibleSystem r4 = irreducible(gen_rational(BigInt(4)));
    bool half_kept = false, half_dup = false;
    for (std::size_t i = 0; i < r4.size(); ++i) {
      auto p = r4.pair(i);
      if (p.center[0] == BigRat(1, 2)) {
        if (p.radius == BigRat(1, 4)) half_kept = true;
        else half_dup = true;
      }
    }
    CHECK(half_kept);
    CHECK_FALSE(half_dup);

    // Rational: coprime pairs plus the q = 1 pair, by a gcd filter.
    IrreducibleSystem r50 = irreducible(gen_rational(BigInt(50)));
    std::set<BigRat> expected;
    for (long q = 1; q <= 50; ++q)
      for (long p = 0; p < q; ++p)
        if (std::gcd(p, q) == 1 || q == 1) expected.insert(BigRat(p, q));
    std::set<BigRat> got;
    for (std::size_t i = 0; i < r50.size(); ++i) got.insert(r50.pair(i).center[0]);
    CHECK(got == expected);
    CHECK(r50.size() == expected.size());

    // Dyadic: odd k at each generation plus the generation-1 copy of 0.
    IrreducibleSystem d4 = irreducible(gen_dyadic(4, 1));
    CHECK(d4.size() == 1 + 1 + 2 + 4 + 8);
    for (std::size_t i = 0; i < d4.size(); ++i) {
      auto p = d4.pair(i);
      BigRat k = p.center[0] / (p.radius * 32);
      if (p.center[0] != 0) CHECK(k.get_num() % 2 == 1);
    }

    // Inhomogeneous: identity.
    System in = gen_inhomogeneous(ContinuedFraction::golden(80), 200);
    CHECK(irreducible(in).size() == 200);

    // Idempotence.
    IrreducibleSystem twice = irreducible(r50.as_system());
    CHECK(twice.size() == r50.size());
  }

  TEST_CASE("layers") {
    CHECK(layer_of(BigRat(1, 4)) == 2);
    CHECK(layer_of(BigRat(1, 5)) == 2);
    CHECK(layer_of(BigRat(1, 8)) == 3);
    // Rational radii 1/q^2 against the defining inequality 2^-(j+1) < r <= 2^-j.
    for (long q = 1; q <= 1000; ++q) {
      BigRat r(1, q * q);
      long j = layer_of(r);
      CHECK((pow2(-(j + 1)) < r && r <= pow2(-j)));
    }
    IrreducibleSystem irr = irreducible(gen_rational(BigInt(60)));
    std::set<std::uint64_t> all;
    std::size_t total = 0;
    for (long j = 0; j <= 12; ++j) {
      auto layer = t_layer(irr, j);
      total += layer.size();
      all.insert(layer.begin(), layer.end());
    }
    CHECK(total == irr.size());
    CHECK(all.size() == irr.size());
  }

  TEST_CASE("serialization round trip") {
    for (const System& s : {gen_rational(BigInt(40)), gen_dyadic(5, 2), gen_poisson(9, pow2(-5)),
                            gen_inhomogeneous(ContinuedFraction::golden(60), 30)}) {
      System back = System::deserialize(s.serialize());
      CHECK(back == s);
      CHECK(back.serialize() == s.serialize());
    }
  }

  TEST_CASE("center queries") {
    // Centers of the rational system in [1/4, 1/2] with radius layer 6 (q = 6, 7, 8).
    System s = gen_rational(BigInt(20));
    Box box{{BigRat(1, 4)}, {BigRat(1, 2)}, false};
    std::set<BigRat> got;
    s.centers_in(box, RadiusBand::layer(6), CenterFilter::Irreducible, [&](const CenterHit& h) {
      got.insert(h.center[0]);
      return true;
    });
    std::set<BigRat> expected;
    for (long q = 1; q <= 20; ++q) {
      long j = layer_of(BigRat(1, q * q));
      if (j != 6) continue;
      for (long p = 0; p < q; ++p)
        if (std::gcd(p, q) == 1 && BigRat(p, q) >= BigRat(1, 4) && BigRat(p, q) <= BigRat(1, 2)) expected.insert(BigRat(p, q));
    }
    CHECK(got == expected);
  }
}
