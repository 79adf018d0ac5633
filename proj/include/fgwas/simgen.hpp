// Synthetic GWAS generator matching the fitted model: liability-threshold
// genotypes with within-subject LD, irregular ages on a 0.1-year lattice and
// AR(1) Gaussian noise over standardized gaps.
#pragma once

#include <cstdint>
#include <functional>

#include "fgwas/data.hpp"
#include "fgwas/inference.hpp"
#include "fgwas/model.hpp"

namespace fgwas {

struct TruthTable {
  Eigen::VectorXd m;  // v
  RowMatrixXd r;      // q x v
  RowMatrixXd b;      // p x v, zero rows for null additive blocks
  RowMatrixXd c;      // p x v

  bool additive_causal(int j) const { return b.row(j).cwiseAbs().maxCoeff() > 0.0; }
  bool dominant_causal(int j) const { return c.row(j).cwiseAbs().maxCoeff() > 0.0; }

  // Cubic-order truth for p >= 5 SNPs: additive blocks on SNPs 0-2, dominant
  // on 2-4, one covariate effect.
  static TruthTable cubic_default(int p);
};

struct SimDesign {
  int n = 300;
  int p = 500;
  int q = 1;            // one binary covariate
  int order = 4;
  double maf = 0.3;     // P(homozygote) under the liability threshold
  double rho_g = 0.1;   // equicorrelation of the SNP liabilities per subject
  double sigma2 = 4.0;
  double rho = 0.4;
  int min_obs = 5, max_obs = 12;
  double age_min = 30.0, age_max = 80.0, age_step = 0.1;
  TruthTable truth;
  // Optional pointwise effect hook: value of SNP j's additive/dominant curve
  // at standardized time s, overriding the Legendre rows of `truth`.
  std::function<double(int snp, bool dominant, double s)> curve_truth;

  static SimDesign desk_default();
};

struct SimulatedData {
  LongitudinalDataset data;
  TruthTable truth;
};

// Deterministic in (design, seed); each subject consumes its own RNG
// streams, so the result is independent of evaluation order.
SimulatedData simulate_dataset(const SimDesign& design, std::uint64_t seed);

struct SelectionScore {
  int causal_selected = 0;  // causal SNPs with a truly-nonzero block selected
  int null_selected = 0;    // null SNPs with any block selected
  bool underfit = false;    // missed at least one true block
  bool overfit = false;     // all true blocks plus at least one extra
  bool correctfit = false;  // exact block-set match
};

SelectionScore score_selection(const SelectionReport& selection, const TruthTable& truth);

}  // namespace fgwas
