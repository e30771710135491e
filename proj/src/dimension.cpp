#include "jblab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "jblab/errors.hpp"

namespace jblab {

namespace {

void check_range(long j_lo, long j_hi) {
  if (j_lo < 1 || j_hi <= j_lo) throw Error(ErrorCode::InvalidArgument, "box counting needs j_hi > j_lo >= 1");
}

// Index of the generation-j cell holding x in [0, 1]; 1 goes to the last cell.
BigInt cell_of(const BigRat& x, long j) {
  BigInt k = floor_scaled(x, j);
  BigInt last = pow2_int(static_cast<unsigned long>(j)) - 1;
  return k > last ? last : k;
}

void fit(BoxCountReport& rep, int d, std::uint64_t items) {
  for (auto& row : rep.rows) row.saturated = items > 1 && row.count == items;
  std::vector<double> xs, ys;
  for (const auto& row : rep.rows) {
    if (row.saturated) continue;
    xs.push_back(static_cast<double>(row.j));
    ys.push_back(std::log2(static_cast<double>(row.count)));
  }
  rep.used = xs.size();
  if (xs.size() < 3) throw Error(ErrorCode::RangeTooNarrow, "fewer than 3 unsaturated generations");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  rep.raw_slope = sxy / sxx;
  double sse = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (my + rep.raw_slope * (xs[i] - mx));
    sse += e * e;
  }
  rep.residual = std::sqrt(sse / n);
  rep.slope = std::clamp(rep.raw_slope, 0.0, static_cast<double>(d));
}

}  // namespace

std::string BoxCountReport::to_csv() const {
  std::ostringstream out;
  out << "j,count,saturated\n";
  for (const auto& r : rows) out << r.j << ',' << r.count << ',' << (r.saturated ? 1 : 0) << '\n';
  return out.str();
}

BoxCountReport box_counting(const std::vector<Point>& points, long j_lo, long j_hi) {
  check_range(j_lo, j_hi);
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "no points");
  const int d = points.front().dim();
  std::set<Point> distinct(points.begin(), points.end());
  BoxCountReport rep;
  rep.j_lo = j_lo;
  rep.j_hi = j_hi;
  for (long j = j_lo; j <= j_hi; ++j) {
    std::set<std::vector<BigInt>> cells;
    for (const auto& p : distinct) {
      std::vector<BigInt> k;
      for (int i = 0; i < d; ++i) k.push_back(cell_of(p[i], j));
      cells.insert(std::move(k));
    }
    rep.rows.push_back({j, cells.size(), false});
  }
  fit(rep, d, distinct.size());
  return rep;
}

BoxCountReport box_counting(const std::vector<DyadicCube>& cubes, long j_lo, long j_hi) {
  check_range(j_lo, j_hi);
  if (cubes.empty()) throw Error(ErrorCode::InvalidArgument, "no cubes");
  const int d = cubes.front().dim();
  std::set<DyadicCube> distinct(cubes.begin(), cubes.end());
  BoxCountReport rep;
  rep.j_lo = j_lo;
  rep.j_hi = j_hi;
  for (long j = j_lo; j <= j_hi; ++j) {
    std::set<DyadicCube> cells;
    for (const auto& c : distinct) {
      if (c.generation() >= j) {
        cells.insert(c.ancestor(j));
      } else {
        for_each_subcube(c, j, [&](const DyadicCube& s, std::uint64_t) { cells.insert(s); });
      }
    }
    rep.rows.push_back({j, cells.size(), false});
  }
  fit(rep, d, distinct.size());
  return rep;
}

const char* to_string(CoverVerdict v) {
  switch (v) {
    case CoverVerdict::Converging: return "Converging";
    case CoverVerdict::Diverging: return "Diverging";
    case CoverVerdict::Inconclusive: break;
  }
  return "Inconclusive";
}

CoveringSum covering_sum(const RedundancyProfile& profile, double delta, double s, long J, long j_max) {
  if (J < 0 || j_max < J) throw Error(ErrorCode::InvalidArgument, "need 0 <= J <= j_max");
  if (j_max > profile.max_generation()) throw Error(ErrorCode::PreconditionViolated, "profile shorter than j_max");
  const double d = profile.dim();
  CoveringSum out;
  out.delta = delta;
  out.s = s;
  out.J = J;
  out.j_max = j_max;
  double sum = 0;
  for (long j = J; j <= j_max; ++j) {
    double t = std::log2(static_cast<double>(std::max<std::uint64_t>(profile.count(j), 1))) +
               static_cast<double>(j) * (d - s * delta);
    out.log2_terms.push_back(t);
    sum += std::exp2(t);
    out.partial_sums.push_back(sum);
  }
  const std::size_t n = out.log2_terms.size();
  if (n < 6) return out;
  bool all_below = true, all_above = true;
  for (std::size_t i = n - 5; i < n; ++i) {
    double log_ratio = out.log2_terms[i] - out.log2_terms[i - 1];
    all_below = all_below && log_ratio < std::log2(0.95);
    all_above = all_above && log_ratio > 0;
  }
  if (all_below) out.verdict = CoverVerdict::Converging;
  else if (all_above) out.verdict = CoverVerdict::Diverging;
  return out;
}

LocalExponentReport local_exponents(const CantorTree& tree, std::size_t bins) {
  if (tree.depth() < 1) throw Error(ErrorCode::PreconditionViolated, "local exponents need depth >= 1");
  if (bins == 0) bins = 1;
  LocalExponentReport rep;
  for (const auto& node : tree.generations.back())
    rep.exponents.push_back(-log2_of(node.mass) / static_cast<double>(node.cube.generation()));
  rep.min = *std::min_element(rep.exponents.begin(), rep.exponents.end());
  rep.max = *std::max_element(rep.exponents.begin(), rep.exponents.end());
  double total = 0;
  for (double e : rep.exponents) total += e;
  rep.mean = total / static_cast<double>(rep.exponents.size());
  const double width = (rep.max - rep.min) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) rep.bin_edges.push_back(rep.min + width * static_cast<double>(b));
  rep.histogram.assign(bins, 0);
  for (double e : rep.exponents) {
    std::size_t b = width > 0 ? static_cast<std::size_t>((e - rep.min) / width) : 0;
    ++rep.histogram[std::min(b, bins - 1)];
  }
  return rep;
}

}  // namespace jblab
