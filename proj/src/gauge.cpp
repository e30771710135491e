#include "jblab/gauge.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace jblab {

GaugeFunction::GaugeFunction(std::string label, ScaleFn at_scale)
    : label_(std::move(label)), fn_(std::move(at_scale)) {}

double GaugeFunction::at_scale(double t) const { return fn_(t < 1.0 ? 1.0 : t); }

double GaugeFunction::operator()(const BigRat& r) const { return at_scale(-log2_of(r)); }

GaugeFunction default_gauge() { return scaled_gauge(1.0); }

GaugeFunction scaled_gauge(double c) {
  std::ostringstream label;
  label << "power:" << c;
  return GaugeFunction(label.str(), [c](double t) { return c / std::sqrt(t); });
}

GaugeFunction inverse_log_gauge(double c) {
  std::ostringstream label;
  label << "inverse_log:" << c;
  return GaugeFunction(label.str(), [c](double t) { return c / t; });
}

GaugeCheck validate_gauge(const GaugeFunction& phi) {
  GaugeCheck out;
  auto fail = [&](const std::string& why) {
    out.ok = false;
    out.failure = why;
    return out;
  };
  std::vector<double> ts;
  for (double t = 1.0; t <= 1048576.0; t *= 1.25) ts.push_back(t);
  // phi non-decreasing in r means non-increasing in t; phi(0+) = 0.
  for (size_t i = 1; i < ts.size(); ++i) {
    double a = phi.at_scale(ts[i - 1]), b = phi.at_scale(ts[i]);
    if (!(b <= a) || !std::isfinite(a) || a < 0) return fail("phi is not non-decreasing in r");
  }
  if (!(phi.at_scale(ts.back()) < 0.05)) return fail("phi does not tend to 0");
  // log2 r^{-phi(r)} = t phi(t): strictly increasing and unbounded.
  const double rel = 1e-9;
  for (size_t i = 1; i < ts.size(); ++i) {
    double a = ts[i - 1] * phi.at_scale(ts[i - 1]);
    double b = ts[i] * phi.at_scale(ts[i]);
    if (!(b > a * (1 + rel))) return fail("r^{-phi(r)} is not strictly decreasing in r");
  }
  double head = ts.front() * phi.at_scale(ts.front());
  double tail = ts.back() * phi.at_scale(ts.back());
  if (!(tail > head + 10.0)) return fail("r^{-phi(r)} does not tend to infinity");
  // r^{alpha - beta phi(r)} increasing near 0: t (alpha - beta phi(t)) increasing on the tail.
  for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
    for (double beta : {0.5, 1.0, 3.0, 4.0}) {
      for (size_t i = ts.size() / 2 + 1; i < ts.size(); ++i) {
        double a = ts[i - 1] * (alpha - beta * phi.at_scale(ts[i - 1]));
        double b = ts[i] * (alpha - beta * phi.at_scale(ts[i]));
        if (!(b > a)) {
          std::ostringstream why;
          why << "r^{alpha-beta phi} not increasing near 0 for alpha=" << alpha << " beta=" << beta;
          return fail(why.str());
        }
      }
    }
  }
  return out;
}

}  // namespace jblab
