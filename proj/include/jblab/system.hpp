#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "jblab/continued_fraction.hpp"
#include "jblab/cube.hpp"
#include "jblab/numeric.hpp"
#include "jblab/point.hpp"

namespace jblab {

enum class SystemKind { Rational, Dyadic, Inhomogeneous, Poisson, Custom };

std::string to_string(SystemKind kind);
SystemKind parse_system_kind(std::string_view text);

struct ApproxPair {
  Point center;
  BigRat radius;
  BigInt index;
};

/// Set of radii between two powers of two, each end open or closed:
/// 2^{-fine} <= r <= 2^{-coarse} (strict where flagged).
struct RadiusBand {
  long coarse = 0;
  bool coarse_open = false;
  long fine = 0;
  bool fine_open = false;

  bool admits(const BigRat& r) const;
  bool empty() const;

  /// 2^{-g-1} <= r < 2^{-g}
  static RadiusBand witness(long g);
  /// 2^{-(j+1)} < r <= 2^{-j}
  static RadiusBand layer(long j);
  /// union of layer(k) for k_lo <= k <= k_hi
  static RadiusBand layers(long k_lo, long k_hi);
  /// lo <= -log2 r < hi
  static RadiusBand window(long lo, long hi);
  /// 2^{-fine} <= r <= 2^{-coarse}
  static RadiusBand closed(long coarse, long fine);
};

enum class CenterFilter {
  All,          ///< distinct centers having some pair in the band
  Irreducible,  ///< distinct centers whose first occurrence lies in the band
};

struct CenterHit {
  Point center;
  /// Pairs with this center in the band, system order. Only the first one unless all
  /// pairs were requested; for Irreducible it is the first occurrence.
  std::vector<ApproxPair> pairs;
  /// When set, all pairs were requested but only a prefix is stored: `count` pairs in the
  /// band, reachable through pair_at.
  BigInt count = 0;
  std::function<ApproxPair(const BigInt&)> nth;

  BigInt total() const { return nth ? count : BigInt(static_cast<unsigned long>(pairs.size())); }
  ApproxPair pair_at(const BigInt& i) const { return nth ? nth(i) : pairs.at(i.get_ui()); }
};

using CenterVisitor = std::function<bool(const CenterHit&)>;

struct SystemParams {
  BigInt q_max = 0;
  long j_max = 0;
  std::uint64_t n_max = 0;
  std::uint64_t seed = 0;
  BigRat r_min = 0;
  std::string alpha;
};

class SystemBackend;

/// An ordered approximation system ((x_n, r_n)) with non-increasing radii.
class System {
 public:
  explicit System(std::shared_ptr<const SystemBackend> impl);

  SystemKind kind() const;
  int dim() const;
  const SystemParams& params() const;

  /// True when the pairs can be addressed by 64-bit ordinals.
  bool enumerable() const;
  std::uint64_t size() const;
  ApproxPair pair(std::uint64_t i) const;
  /// Visits pairs in system order; the visitor returns false to stop.
  void for_each_pair(const std::function<bool(const ApproxPair&)>& visit) const;
  std::vector<ApproxPair> pairs() const;

  /// Smallest radius present (0 for complete finite families).
  BigRat radius_floor() const;
  /// Whether every pair of the underlying family with radius in the band is present.
  bool covers(const RadiusBand& band) const;

  /// Distinct centers inside the box with pairs in the band. Returns false if stopped.
  bool centers_in(const Box& box, const RadiusBand& band, CenterFilter filter, const CenterVisitor& visit,
                  bool all_pairs = false) const;

  std::string serialize() const;
  static System deserialize(std::string_view text);

  friend bool operator==(const System& a, const System& b);

 private:
  std::shared_ptr<const SystemBackend> impl_;
};

/// (p/q, 1/q^2), 1 <= q <= q_max, 0 <= p < q; order q then p.
System gen_rational(const BigInt& q_max);
/// (k 2^{-j}, 2^{-j}/32), 1 <= j <= j_max, k in {0..2^j-1}^d; order j then lexicographic k.
System gen_dyadic(long j_max, int d);
/// ({n alpha}, 1/n), 1 <= n <= n_max; centers are 128-bit fixed-point roundings.
System gen_inhomogeneous(const ContinuedFraction& alpha, std::uint64_t n_max);
/// Poisson process of intensity dx dy / y^2 on [0,1] x [r_min, 1), radii descending.
System gen_poisson(std::uint64_t seed, const BigRat& r_min);
/// Finite family given explicitly (complete: no truncation floor). Pairs must have
/// non-increasing radii; indices are reassigned to 0..n-1.
System make_custom(int d, std::vector<ApproxPair> pairs);

/// Layer index j with 2^{-(j+1)} < r <= 2^{-j}.
long layer_of(const BigRat& radius);

class IrreducibleSystem {
 public:
  IrreducibleSystem(System parent, std::vector<std::uint64_t> indices);

  const System& parent() const { return parent_; }
  /// Back-references into the parent order.
  const std::vector<std::uint64_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  ApproxPair pair(std::size_t i) const { return parent_.pair(indices_[i]); }
  /// The retained pairs as a custom system.
  System as_system() const;

 private:
  System parent_;
  std::vector<std::uint64_t> indices_;
};

IrreducibleSystem irreducible(const System& system);
/// Parent indices of the irreducible pairs in layer j.
std::vector<std::uint64_t> t_layer(const IrreducibleSystem& irr, long j);

}  // namespace jblab
