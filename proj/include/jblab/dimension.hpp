#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jblab/cantor.hpp"
#include "jblab/cube.hpp"
#include "jblab/point.hpp"
#include "jblab/profile.hpp"

namespace jblab {

struct BoxCountRow {
  long j = 0;
  std::uint64_t count = 0;  ///< occupied generation-j cubes
  bool saturated = false;   ///< every input item sits in its own cube
};

struct BoxCountReport {
  std::vector<BoxCountRow> rows;
  double slope = 0;     ///< least squares of log2 N(j) on j over unsaturated rows, clamped to [0, d]
  double raw_slope = 0;
  double residual = 0;  ///< root mean square residual of the fit
  long j_lo = 0, j_hi = 0;
  std::size_t used = 0;

  /// Rows "j,count,saturated" with a header line.
  std::string to_csv() const;
};

/// Occupied cubes of the points for j in [j_lo, j_hi]. Saturated rows (N(j) equal to the
/// number of distinct points, more than one) are left out of the fit. RangeTooNarrow when
/// fewer than 3 rows remain.
BoxCountReport box_counting(const std::vector<Point>& points, long j_lo, long j_hi);
/// Same for the union of a cube family; a cube coarser than j counts all its subcubes.
BoxCountReport box_counting(const std::vector<DyadicCube>& cubes, long j_lo, long j_hi);

enum class CoverVerdict { Converging, Diverging, Inconclusive };

const char* to_string(CoverVerdict v);

struct CoveringSum {
  double delta = 0, s = 0;
  long J = 0, j_max = 0;
  std::vector<double> log2_terms;    ///< log2(N_j 2^{j(d - s delta)}), j = J..j_max
  std::vector<double> partial_sums;  ///< may be inf when the terms grow
  CoverVerdict verdict = CoverVerdict::Inconclusive;
};

/// Partial sums of N_j 2^{j(d - s delta)}. Verdict from the ratios between the last 5 terms:
/// all below 0.95 converges, all above 1 diverges.
CoveringSum covering_sum(const RedundancyProfile& profile, double delta, double s, long J, long j_max);

struct LocalExponentReport {
  std::vector<double> exponents;  ///< log mu(V) / log |V| per deepest node, tree order
  double min = 0, mean = 0, max = 0;
  std::vector<double> bin_edges;  ///< bins + 1 edges over [min, max]
  std::vector<std::uint64_t> histogram;
};

/// Exponents over the deepest generation; PreconditionViolated for a depth-0 tree.
LocalExponentReport local_exponents(const CantorTree& tree, std::size_t bins = 10);

}  // namespace jblab
