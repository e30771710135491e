#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jblab/gauge.hpp"

namespace jblab {

/// The sequence N_j of condition C1 with psi(2^{-j}) = log2(N_j)/(d j).
class RedundancyProfile {
 public:
  RedundancyProfile(int d, std::vector<std::uint64_t> counts, bool upper_bound = false);
  static RedundancyProfile constant(int d, std::uint64_t n, long j_max);

  int dim() const { return d_; }
  long max_generation() const { return static_cast<long>(counts_.size()) - 1; }
  std::uint64_t count(long j) const;
  double psi(long j) const;
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  /// True when the counts are greedy-coloring upper bounds (d >= 2).
  bool upper_bound() const { return upper_bound_; }
  /// First generation filled by constant extension, or -1.
  long extrapolated_from() const { return extrapolated_from_; }

  /// Extends with the last measured value up to j_max; records where measurement ended.
  RedundancyProfile extended_to(long j_max) const;

  /// Rows "j,N_j,psi,gamma,theta" with a header line.
  std::string to_csv(const GaugeFunction& phi) const;

 private:
  int d_;
  std::vector<std::uint64_t> counts_;
  bool upper_bound_;
  long extrapolated_from_ = -1;
};

struct GammaResult {
  long gamma = 0;
  double theta = 1.0;
  bool degenerate = false;
};

/// gamma(j) = max{k : N_k 2^{dk} <= 2^{-dj phi(2^{-j})} 2^{dj}} and theta = (j - gamma)/j.
GammaResult gamma(const RedundancyProfile& profile, const GaugeFunction& phi, long j);

}  // namespace jblab
