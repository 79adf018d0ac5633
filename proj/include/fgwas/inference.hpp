// Posterior summaries: convergence diagnostics, credible intervals, SNP
// selection, flat-prior refits, BIC degree choice and effect bands.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgwas/model.hpp"
#include "fgwas/sampler.hpp"

namespace fgwas {

// Potential scale reduction over M >= 2 equal-length sequences:
//   W = mean within-chain variance, B/L = variance of chain means,
//   Vhat = (L-1)/L W + B/L, psrf = sqrt(Vhat / W).
// Degenerate chains (W = 0) give 1 when the means also agree, +inf otherwise.
double psrf(const std::vector<std::vector<double>>& chains);

// Linear-interpolation (type 7) quantile of an ascending sample.
double quantile_type7(const std::vector<double>& sorted, double prob);

struct CredibleInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Equal-tailed interval at `level`, pooling the given draws.
CredibleInterval credible_interval(std::vector<double> draws, double level);

struct SelectionEntry {
  std::string snp;
  bool additive = false;
  bool dominant = false;
};

struct SelectionReport {
  double level = 0.95;
  int order = 0;
  std::vector<SelectionEntry> entries;  // one per SNP, dataset order
  std::vector<int> selected;            // SNP indices with any selected block
  std::vector<int> additive_blocks;     // SNP indices with the additive block selected
  std::vector<int> dominant_blocks;
};

// A block is selected when at least one of its v coefficients has an
// equal-tailed interval (draws pooled across chains) excluding zero.
SelectionReport select_snps(const ChainSet& chains, const std::vector<std::string>& snp_names,
                            double level = 0.95);

struct RefitResult {
  ChainSet chains;           // flat-prior rerun over the selected blocks
  ParameterState post_mean;  // pooled posterior means, zeros off the support
  ParameterState post_sd;
  double log_lik = 0.0;      // at post_mean
  long k = 0;                // v (1 + q + #selected blocks) + 2
  double bic = 0.0;          // -2 log_lik + k log(sum T_i)
};

RefitResult refit(const LongitudinalDataset& data, int order, const SelectionReport& selection,
                  const Hyperparameters& hyper, SamplerConfig config);

struct BicEntry {
  int degree = 0;
  double bic = 0.0;
  bool converged = false;
  int selected_blocks = 0;
};

struct BicSweepResult {
  int chosen_degree = 0;
  std::vector<BicEntry> table;
};

// Fits each degree (order = degree + 1), selects, refits, scores by BIC;
// ties go to the smaller degree. Hyperparameters are the diffuse defaults
// for each order.
BicSweepResult bic_degree_sweep(const LongitudinalDataset& data, const std::vector<int>& degrees,
                                SamplerConfig config, double level = 0.95);

struct BandPoint {
  double t = 0.0;  // raw time
  double s = 0.0;  // standardized
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Pointwise band of the curve sum_k coef_k P_k(s): the upper bound takes the
// coefficient's upper limit where P_k(s) > 0 and the lower limit where
// P_k(s) < 0; the lower bound mirrors it.
std::vector<BandPoint> effect_band(const Eigen::VectorXd& coef_mean,
                                   const std::vector<CredibleInterval>& coef_intervals,
                                   const TimeRange& range, int grid_points);

}  // namespace fgwas
