// Legendre polynomial design matrices over standardized measurement times.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fgwas {

// Global standardization range; one range per dataset, shared by all subjects.
struct TimeRange {
  double t_min = 0.0;
  double t_max = 0.0;
};

// One subject's measurement times, raw and standardized to [-1, 1].
struct TimeGrid {
  std::vector<double> raw;  // strictly increasing
  std::vector<double> s;    // 2(t - t_min)/(t_max - t_min) - 1
  TimeRange range;

  int size() const { return static_cast<int>(s.size()); }
  // Successive standardized gaps s[l+1] - s[l], all > 0.
  std::vector<double> gaps() const;
};

// U(l, k) = P_k(s_l); columns are Legendre polynomials of degree 0..order-1.
struct LegendreBasis {
  int order = 0;
  Eigen::MatrixXd U;
};

// Min/max over every time of every subject. Errors on an empty or degenerate
// collection (t_min == t_max leaves s undefined).
TimeRange dataset_time_range(const std::vector<std::vector<double>>& times);

// Standardizes one subject's times against a dataset-level range. Times must
// be strictly increasing and inside the range; `subject` names the offender
// in error messages.
TimeGrid standardize_times(const std::vector<double>& raw, const TimeRange& range,
                           const std::string& subject = {});

// (P_0(s), ..., P_{order-1}(s)); order must be in 1..8, |s| <= 1.
Eigen::RowVectorXd legendre_row(double s, int order);

LegendreBasis legendre_design(const TimeGrid& grid, int order);

}  // namespace fgwas
