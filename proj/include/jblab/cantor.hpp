#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jblab/conditions.hpp"
#include "jblab/target_rate.hpp"

namespace jblab {

/// B(x, r^delta) minus B(x, r^{delta + slack}), L-infinity balls.
struct AnnulusSpec {
  Point center;
  BigRat radius;
  double delta = 0;
  double slack = 0;

  RatInterval outer() const { return power_bounds(radius, delta); }
  RatInterval inner() const { return power_bounds(radius, delta + slack); }
  /// Certified: the closure of V lies in the annulus.
  bool contains(const DyadicCube& V) const;
};

/// phi(2^-t) = scale / sqrt(t), with the generation g0 from which both seed constraints hold:
/// 3 d (phi + psi) <= eps and 2^{d+1}/kappa <= 2^{d g0 phi(2^-g0)}.
struct GaugeCalibration {
  GaugeFunction phi;
  double scale = 0;
  long g0 = 0;
};

GaugeCalibration calibrate_gauge(int d, double kappa, double eps, const RedundancyProfile& profile);

/// Smallest kappa-hat of count_Q over the sweep, rounded down to a power of two.
struct KappaCalibration {
  double measured = 1.0;
  double kappa = 1.0;
};

KappaCalibration calibrate_kappa(const DyadicCube& U, const std::vector<double>& deltas, long j_lo, long j_hi,
                                 const ConditionContext& ctx);

enum class LevelMode {
  Desk,   ///< j = g(U) + b for b in [min_branch, max_branch]
  Threshold,  ///< j >= 2 g(U) and the cube-size thresholds, up to j_cap
};

struct CantorConfig {
  TargetRate f = TargetRate::parse("const:2");
  Box omega;
  double epsilon = 0.1;
  double kappa = 0.25;
  long min_generation = 0;  ///< lower bound on g(U_0)
  long seed_cap = 4096;     ///< generation cap for the seed search
  LevelMode mode = LevelMode::Desk;
  long min_branch = 5;
  long max_branch = 9;
  long j_cap = 4096;
  std::uint64_t scan_budget = 1ULL << 20;  ///< max subcubes scanned per level
  long depth = 3;
};

struct SeedRegion {
  Point y;               ///< y_eps, near-minimizer of f
  double f_y = 0;
  double inf_f = 0;      ///< certified lower bound of f on the (possibly shrunk) region
  double h = 0;          ///< d / inf_f
  bool shrunk = false;   ///< inf f was 1 and the region was shrunk
  Box region;            ///< Omega after the shrink step
  DyadicCube omega_eps;  ///< coarsest cube around y_eps with d/h <= f <= d/(h - eps)
  DyadicCube u0;
  double alpha = 0;      ///< lower bound for delta(V) - 3 d phi(|V|)
  double H = 0;          ///< H_eps = f(y_eps) + eps (2d/h^2 + 1)
};

SeedRegion seed_region(const CantorConfig& config, const ConditionContext& ctx);

/// delta(V) = f(center) + 2 d (phi(|V|) + psi(|V|)); BandViolation when it leaves [alpha + 3 d phi, H].
double delta_of_cube(const DyadicCube& V, const SeedRegion& seed, const TargetRate& f, const ConditionContext& ctx);

struct LevelChoice {
  long j = 0;
  std::uint64_t q_count = 0;
  std::uint64_t qtilde_overlap = 0;  ///< members of Q also in Qtilde
  std::vector<PWitness> selected;    ///< pairwise >= 2^-j apart, ordinal order
};

/// Children per node: ceil(kappa 2^{d(j-g)} / 2^{d+1}).
std::uint64_t sibling_count(int d, double kappa, long j, long g);

LevelChoice find_level(const DyadicCube& U, double delta, std::optional<double> parent_delta,
                       const CantorConfig& config, const ConditionContext& ctx);

struct Descendant {
  DyadicCube W;  ///< largest cube in the annulus and the parent cube
  DyadicCube V;  ///< child of W closest to x
  long floor_generation = 0;  ///< floor(-log2 r^delta)
};

/// AnnulusTooThin when g(V) exceeds floor(-log2 r^delta) + 4.
Descendant contracted_descendant(const DyadicCube& tilde, const ApproxPair& witness, double delta, double slack);

struct CantorNode {
  DyadicCube cube;
  long parent = -1;         ///< index in the previous generation
  double delta_used = 0;    ///< delta of the parent
  std::optional<PWitness> witness;
  DyadicCube tilde;         ///< the cube of the witness
  double slack = 0;         ///< annulus slot phi(2^-j(parent))
  BigRat mass = 1;
  // Filled when the node is extended.
  double delta = 0;
  long level = -1;
  std::uint64_t children = 0;
  // Pairs with radius in [2^-g(V), 2^-g(parent)] whose B(x_p, r_p^{delta_used + theta H/2}/16)
  // meets V (center != x(tilde)).
  std::uint64_t avoidance_violations = 0;
};

struct CantorTree {
  CantorConfig config;
  SeedRegion seed;
  std::string gauge;
  std::vector<std::vector<CantorNode>> generations;
  double delta_eps = 0;  ///< max delta(U) over extended nodes
  std::string failure;   ///< why the construction stopped before config.depth

  long depth() const { return static_cast<long>(generations.size()) - 1; }
  BigRat total_mass(long n) const;
};

/// Seeds F_0 = {U_0}.
CantorTree start_tree(const CantorConfig& config, const ConditionContext& ctx);
/// Appends F_{n+1}; throws LevelNotFound / AnnulusTooThin / ScalingViolation and leaves the tree intact.
void extend_generation(CantorTree& tree, const ConditionContext& ctx);
/// Seeds and extends up to config.depth; a construction error ends the build and is recorded in failure.
CantorTree build_tree(const CantorConfig& config, const ConditionContext& ctx);

struct ScalingViolationRecord {
  long generation;
  std::size_t node;
  double neg_log2_mass;
  double required;
};

struct ScalingReport {
  std::uint64_t nodes_checked = 0;
  std::vector<ScalingViolationRecord> violations;  ///< mu(V) > |V|^{d/delta(U) - 3 d phi(|V|)}
  bool mass_ok = true;                              ///< every generation sums to 1
  std::uint64_t avoidance_violations = 0;
  /// max over dyadic B meeting the tree, g(U_0) <= g(B) <= deepest generation, of
  /// log2 mu(B) + g(B) (d/delta_eps - 4 d phi(|B|)).
  double log2_global_constant = 0;
  long global_generations = 0;

  bool ok() const { return violations.empty() && mass_ok; }
};

ScalingReport verify_scaling(const CantorTree& tree, const ConditionContext& ctx);

struct Certificate {
  double h_eps = 0;               ///< (h - eps) / (1 + eps (2d/h^2 + 1) / f(y_eps))
  double scaling_exponent = 0;    ///< d / delta_eps
  double min_local_exponent = 0;  ///< min over the deepest nodes of log mu(V) / log |V|
  double required_exponent = 0;   ///< d / delta_eps - 4 d phi(|V|) at the node attaining the minimum
  double margin = 0;              ///< min over the deepest nodes of local minus required exponent
};

Certificate dimension_certificate(const CantorTree& tree, const ConditionContext& ctx);

struct SamplePoint {
  Point x;  ///< center of the deepest cube reached
  DyadicCube leaf;
  double f_x = 0;
  std::vector<double> deltas;  ///< delta(U_n) along the branch
};

std::vector<SamplePoint> sample_points(const CantorTree& tree, std::size_t count, std::uint64_t seed);

/// Nodes as structured text: cube, parent, mass, witness.
std::string tree_to_json(const CantorTree& tree);
/// Rows "n,nodes,j_min,j_max,delta_min,delta_max,min_local_exponent".
std::string tree_summary_csv(const CantorTree& tree);

}  // namespace jblab
