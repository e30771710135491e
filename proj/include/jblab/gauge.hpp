#pragma once

#include <functional>
#include <string>

#include "jblab/numeric.hpp"

namespace jblab {

/// Gauge function phi of the class Phi, parametrized by the scale t = log2(1/r) so that
/// radii far below the double range stay usable.
class GaugeFunction {
 public:
  using ScaleFn = std::function<double(double)>;

  GaugeFunction(std::string label, ScaleFn at_scale);

  /// phi(2^{-t}); scales below t = 1 are clamped to t = 1.
  double at_scale(double t) const;
  double at_generation(long j) const { return at_scale(static_cast<double>(j)); }
  double operator()(const BigRat& r) const;
  const std::string& label() const { return label_; }

 private:
  std::string label_;
  ScaleFn fn_;
};

/// phi(r) = (log2 1/r)^{-1/2}.
GaugeFunction default_gauge();
/// phi(r) = c (log2 1/r)^{-1/2}.
GaugeFunction scaled_gauge(double c);
/// phi(r) = c / log2(1/r); r^{-phi(r)} is constant, so this is not in Phi.
GaugeFunction inverse_log_gauge(double c);

struct GaugeCheck {
  bool ok = true;
  std::string failure;
};

/// Numerical membership test for Phi on a log-grid of scales.
GaugeCheck validate_gauge(const GaugeFunction& phi);

}  // namespace jblab
