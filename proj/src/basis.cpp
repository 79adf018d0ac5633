#include "fgwas/basis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fgwas {

namespace {

[[noreturn]] void grid_error(const std::string& subject, const std::string& what) {
  std::ostringstream os;
  os << "time grid";
  if (!subject.empty()) os << " for subject '" << subject << "'";
  os << ": " << what;
  throw std::invalid_argument(os.str());
}

}  // namespace

std::vector<double> TimeGrid::gaps() const {
  std::vector<double> d(s.size() > 1 ? s.size() - 1 : 0);
  for (std::size_t l = 0; l + 1 < s.size(); ++l) d[l] = s[l + 1] - s[l];
  return d;
}

TimeRange dataset_time_range(const std::vector<std::vector<double>>& times) {
  bool any = false;
  TimeRange r{0.0, 0.0};
  for (const auto& grid : times) {
    for (double t : grid) {
      if (!std::isfinite(t)) throw std::invalid_argument("dataset time range: non-finite time");
      if (!any) {
        r.t_min = r.t_max = t;
        any = true;
      } else {
        r.t_min = std::min(r.t_min, t);
        r.t_max = std::max(r.t_max, t);
      }
    }
  }
  if (!any) throw std::invalid_argument("dataset time range: no observations");
  if (!(r.t_min < r.t_max))
    throw std::invalid_argument("dataset time range: degenerate (t_min == t_max)");
  return r;
}

TimeGrid standardize_times(const std::vector<double>& raw, const TimeRange& range,
                           const std::string& subject) {
  if (raw.empty()) grid_error(subject, "no observations");
  if (!(range.t_min < range.t_max)) grid_error(subject, "degenerate standardization range");

  TimeGrid g;
  g.raw = raw;
  g.range = range;
  g.s.resize(raw.size());
  const double span = range.t_max - range.t_min;
  // Endpoint times map to exactly -1/+1; a hair of slack covers ranges that
  // round-tripped through text.
  const double slack = 1e-9 * std::max(1.0, std::abs(span));
  for (std::size_t l = 0; l < raw.size(); ++l) {
    const double t = raw[l];
    if (!std::isfinite(t)) grid_error(subject, "non-finite time");
    if (t < range.t_min - slack || t > range.t_max + slack) {
      std::ostringstream os;
      os << "time " << t << " outside standardization range [" << range.t_min << ", "
         << range.t_max << "]";
      grid_error(subject, os.str());
    }
    if (l > 0 && !(t > raw[l - 1])) {
      std::ostringstream os;
      os << "times not strictly increasing at position " << l << " (value " << t << ")";
      grid_error(subject, os.str());
    }
    double s = 2.0 * (t - range.t_min) / span - 1.0;
    g.s[l] = std::min(1.0, std::max(-1.0, s));
  }
  return g;
}

Eigen::RowVectorXd legendre_row(double s, int order) {
  if (order < 1 || order > 8)
    throw std::invalid_argument("legendre_row: order must be in 1..8");
  if (!(s >= -1.0 && s <= 1.0))
    throw std::invalid_argument("legendre_row: argument outside [-1, 1]");
  Eigen::RowVectorXd row(order);
  row(0) = 1.0;
  if (order > 1) row(1) = s;
  // Bonnet: (k+1) P_{k+1} = (2k+1) s P_k - k P_{k-1}.
  for (int k = 1; k + 1 < order; ++k)
    row(k + 1) = ((2.0 * k + 1.0) * s * row(k) - k * row(k - 1)) / (k + 1.0);
  return row;
}

LegendreBasis legendre_design(const TimeGrid& grid, int order) {
  LegendreBasis basis;
  basis.order = order;
  basis.U.resize(grid.size(), order);
  for (int l = 0; l < grid.size(); ++l) basis.U.row(l) = legendre_row(grid.s[l], order);
  return basis;
}

}  // namespace fgwas
