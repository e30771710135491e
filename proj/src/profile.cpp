#include "jblab/profile.hpp"

#include <cmath>
#include <sstream>

#include "jblab/errors.hpp"

namespace jblab {

RedundancyProfile::RedundancyProfile(int d, std::vector<std::uint64_t> counts, bool upper_bound)
    : d_(d), counts_(std::move(counts)), upper_bound_(upper_bound) {
  if (d_ < 1) throw Error(ErrorCode::InvalidArgument, "profile dimension must be >= 1");
  if (counts_.empty()) throw Error(ErrorCode::InvalidArgument, "empty profile");
  for (size_t j = 0; j < counts_.size(); ++j) {
    if (counts_[j] == 0) throw Error(ErrorCode::InvalidArgument, "N_j must be positive");
    if (j > 0 && counts_[j] < counts_[j - 1]) throw Error(ErrorCode::InvalidArgument, "N_j must be non-decreasing");
  }
}

RedundancyProfile RedundancyProfile::constant(int d, std::uint64_t n, long j_max) {
  return RedundancyProfile(d, std::vector<std::uint64_t>(static_cast<size_t>(j_max + 1), n));
}

std::uint64_t RedundancyProfile::count(long j) const {
  if (j < 0 || j > max_generation())
    throw Error(ErrorCode::PreconditionViolated, "profile not defined at j=" + std::to_string(j) +
                                                     " (defined up to " + std::to_string(max_generation()) + ")");
  return counts_[static_cast<size_t>(j)];
}

double RedundancyProfile::psi(long j) const {
  if (j == 0) return 0.0;
  return std::log2(static_cast<double>(count(j))) / (static_cast<double>(d_) * static_cast<double>(j));
}

RedundancyProfile RedundancyProfile::extended_to(long j_max) const {
  if (j_max <= max_generation()) return *this;
  RedundancyProfile out = *this;
  out.extrapolated_from_ = extrapolated_from_ >= 0 ? extrapolated_from_ : max_generation() + 1;
  out.counts_.resize(static_cast<size_t>(j_max + 1), counts_.back());
  return out;
}

std::string RedundancyProfile::to_csv(const GaugeFunction& phi) const {
  std::ostringstream os;
  os.precision(17);
  os << "j,N_j,psi,gamma,theta\n";
  for (long j = 0; j <= max_generation(); ++j) {
    os << j << "," << count(j) << "," << psi(j) << ",";
    if (j == 0) {
      os << ",\n";
      continue;
    }
    GammaResult g = gamma(*this, phi, j);
    os << g.gamma << "," << g.theta << "\n";
  }
  return os.str();
}

GammaResult gamma(const RedundancyProfile& profile, const GaugeFunction& phi, long j) {
  if (j < 1) throw Error(ErrorCode::InvalidArgument, "gamma needs j >= 1");
  profile.count(j);
  const long double d = profile.dim();
  const long double bound = d * j * (1.0L - static_cast<long double>(phi.at_generation(j)));
  GammaResult out;
  for (long k = j; k >= 0; --k) {
    long double lhs = std::log2(static_cast<long double>(profile.count(k))) + d * k;
    // The bound is a product of doubles; exact ties such as j = 25, phi = 1/5 must count.
    if (lhs <= bound + 1e-12L * (1.0L + bound)) {
      out.gamma = k;
      out.theta = static_cast<double>(j - k) / static_cast<double>(j);
      return out;
    }
  }
  out.gamma = 0;
  out.theta = 1.0;
  out.degenerate = true;
  return out;
}

}  // namespace jblab
