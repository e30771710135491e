#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jblab/continued_fraction.hpp"
#include "jblab/cube.hpp"
#include "jblab/gauge.hpp"
#include "jblab/profile.hpp"
#include "jblab/system.hpp"

namespace jblab {

/// N_j per layer of the irreducible subsystem, made non-decreasing by cumulative max.
/// d = 1: exact maximum overlap depth of the closed intervals. d >= 2: first-fit coloring
/// (flagged as an upper bound).
RedundancyProfile c1_profile(const IrreducibleSystem& irr, long j_max);

/// System plus the data the window of property P depends on. The profile is extended by
/// its last value far enough for deep generations.
class ConditionContext {
 public:
  ConditionContext(System system, const RedundancyProfile& profile, GaugeFunction phi, long slack = 4);

  const System& system() const { return system_; }
  const RedundancyProfile& profile() const { return profile_; }
  const GaugeFunction& phi() const { return phi_; }
  long slack() const { return slack_; }
  /// gamma(j) of the profile, 0 for j = 0.
  long gamma_of(long j) const;
  double psi_of(long j) const;
  double theta_of(long j) const;

 private:
  System system_;
  RedundancyProfile profile_;
  GaugeFunction phi_;
  long slack_;
};

struct PWitness {
  DyadicCube cube;
  ApproxPair pair;
  double delta = 0;
  long window_lo = 0;  ///< closed end on -log2 r_p
  long window_hi = 0;  ///< open end on -log2 r_p
};

/// Window [gamma(g), floor(delta (g+1)) + slack) on -log2 r_p for a cube of generation g.
std::pair<long, long> p_window(long g, double delta, const ConditionContext& ctx);

/// Property P(V, delta): first witness in system order, or nullopt. TruncationTooShallow when
/// the system does not reach the window.
std::optional<PWitness> check_P(const DyadicCube& V, double delta, const ConditionContext& ctx);
/// Same with an explicit window [lo, hi).
std::optional<PWitness> check_P_window(const DyadicCube& V, double delta, long lo, long hi,
                                       const ConditionContext& ctx);

struct QCount {
  std::uint64_t count = 0;
  std::uint64_t total = 0;  ///< 2^{d(j-g(U))}
  std::vector<std::uint64_t> members;  ///< subcube ordinals, increasing
  std::vector<PWitness> witnesses;     ///< parallel to members
  double ratio() const { return total ? static_cast<double>(count) / static_cast<double>(total) : 0.0; }
};

QCount count_Q(const DyadicCube& U, long j, double delta, const ConditionContext& ctx);

struct QtildeCount {
  std::uint64_t count = 0;
  std::uint64_t total = 0;
  std::vector<bool> hit;  ///< by subcube ordinal
  double ratio() const { return total ? static_cast<double>(count) / static_cast<double>(total) : 0.0; }
};

/// Generation-j subcubes of U meeting B(y_p, rho_p^delta) for irreducible pairs of layers
/// g(U)..gamma(j).
QtildeCount count_Qtilde(const DyadicCube& U, long j, double delta, const ConditionContext& ctx);

struct C2Row {
  long j = 0;
  std::uint64_t q = 0;       ///< #Q(U, j, delta)
  std::uint64_t qtilde = 0;  ///< #Qtilde(U, j, delta)
  std::uint64_t total = 0;   ///< 2^{d(j-g(U))}
  double kappa_hat() const { return total ? static_cast<double>(q) / static_cast<double>(total) : 0.0; }
};

struct C2Report {
  DyadicCube U;
  double delta = 0;
  std::vector<C2Row> rows;
  std::string truncation_note;  ///< radius floor of the system and the deepest window used

  double min_kappa_hat() const;
  /// Rows "delta,j,q,qtilde,total,kappa_hat" with a header line.
  std::string to_csv(bool header = true) const;
};

C2Report c2_report(const DyadicCube& U, double delta, long j_lo, long j_hi, const ConditionContext& ctx);

struct QtildeBoundReport {
  double lhs = 0;         ///< #Qtilde / 2^{d(j-g(U))}
  double gauge_term = 0;  ///< 2^{-d j phi(2^-j)}
  double sum_term = 0;    ///< sum_{g(U) <= k <= j/delta} 2^{-d k (delta - 1 - psi(2^-k))}
  double ratio() const { return lhs / (gauge_term + sum_term); }
};

/// #Qtilde of U at generation j against the bound gauge_term + sum_term.
QtildeBoundReport qtilde_bound_check(const DyadicCube& U, long j, double delta, const ConditionContext& ctx);

/// Number of generation-j cubes meeting the closed ball (clipped to [0,1]^d).
/// Requires 2^{-j} <= 2 radius <= r0.
std::uint64_t ball_cube_count(const Point& center, const BigRat& radius, long j, const BigRat& r0);
/// Members of a family of pairwise disjoint closed balls of radius > 2^{-(k+1)} meeting U.
std::uint64_t family_ball_count(const std::vector<std::pair<Point, BigRat>>& balls, long k,
                                  const DyadicCube& U);

struct ThreeDistanceReport {
  std::vector<BigRat> gaps;         ///< N+1 gaps in position order (128-bit fixed point)
  std::vector<BigRat> gap_classes;  ///< representatives after clustering at 2^-40
  BigRat max_gap;
  BigRat error_bound;               ///< bound on |computed - true| for each gap
  bool max_gap_ok = false;          ///< max gap + error <= 3/(N+1)
  std::size_t distinct() const { return gap_classes.size(); }
};

ThreeDistanceReport three_distance(const ContinuedFraction& alpha, std::uint64_t N);

struct PoissonMcReport {
  double estimate = 0;  ///< Rao-Blackwellized P(event)
  double ci_lo = 0, ci_hi = 0;
  double naive_frequency = 0;      ///< plain indicator frequency
  double single_point_frequency = 0;  ///< frequency of N_V = 1
  double kappa1 = 0;               ///< e^{-1} e^{-16 2^delta}
  double log_kappa1 = 0;
  long window_hi = 0;              ///< h(V)
  long gamma = 0;
  std::uint64_t trials = 0;
};

/// Monte Carlo for one cube V of generation j: exactly one point in the strip
/// V x [2^{-j-1}, 2^{-j}] and no other point with height in [2^{-h}, 2^{-gamma}] inside its
/// contracted ball (neighbours of V included), h = floor(delta (j+1)) + 4. gamma < 0 selects gamma of the constant
/// profile N = 1 under the default gauge.
struct PoissonStripStats {
  long j = 0;
  std::uint64_t trials = 0;
  double mean = 0;
  double variance = 0;  ///< unbiased sample variance
  std::vector<std::uint64_t> histogram;  ///< histogram[k] = trials with S_V = k
};

/// S_V = points of gen_poisson with x in V = [0, 2^-j) and height in [2^{-j-1}, 2^{-j}], one
/// independent realization per trial.
PoissonStripStats poisson_strip_counts(long j, std::uint64_t trials, std::uint64_t seed);

PoissonMcReport poisson_c2_mc(double delta, long j, std::uint64_t trials, std::uint64_t seed, long gamma = -1);

}  // namespace jblab
