#include "fgwas/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "fgwas/ar1.hpp"
#include "fgwas/rng.hpp"

namespace fgwas {

TruthTable TruthTable::cubic_default(int p) {
  if (p < 5) throw std::invalid_argument("truth: default table needs p >= 5");
  const int v = 4;
  TruthTable t;
  t.m = Eigen::VectorXd(v);
  t.m << 13.40, -3.08, 1.88, -3.20;
  t.r = RowMatrixXd(1, v);
  t.r << 3.00, 0.15, -2.67, 3.25;
  t.b = RowMatrixXd::Zero(p, v);
  t.c = RowMatrixXd::Zero(p, v);
  t.b.row(0) << 1.04, 0.88, -2.05, 0.00;
  t.b.row(1) << 1.17, -0.22, 0.74, -4.72;
  t.b.row(2) << 1.40, 0.00, 0.00, 0.00;
  t.c.row(2) << 1.49, -2.13, 4.82, 1.42;
  t.c.row(3) << 1.00, 1.32, 1.90, 1.50;
  t.c.row(4) << 1.26, -1.22, 0.00, 0.00;
  return t;
}

SimDesign SimDesign::desk_default() {
  SimDesign d;
  d.truth = TruthTable::cubic_default(d.p);
  return d;
}

namespace {

std::string padded_name(const char* prefix, int idx, int width) {
  std::ostringstream os;
  os << prefix;
  std::string num = std::to_string(idx + 1);
  while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
  os << num;
  return os.str();
}

// Floyd's algorithm: k distinct draws from {0, ..., universe-1}.
std::set<int> sample_distinct(int universe, int k, std::mt19937_64& rng) {
  std::set<int> out;
  for (int j = universe - k; j < universe; ++j) {
    std::uniform_int_distribution<int> d(0, j);
    const int r = d(rng);
    if (!out.insert(r).second) out.insert(j);
  }
  return out;
}

}  // namespace

SimulatedData simulate_dataset(const SimDesign& design, std::uint64_t seed) {
  const int n = design.n, p = design.p, v = design.order;
  if (n < 1 || p < 1) throw std::invalid_argument("simgen: n and p must be positive");
  if (design.q != 1) throw std::invalid_argument("simgen: exactly one covariate is supported");
  if (!(design.maf > 0.0 && design.maf < 0.5))
    throw std::invalid_argument("simgen: maf must be in (0, 0.5)");
  if (!(design.rho_g >= 0.0 && design.rho_g < 1.0))
    throw std::invalid_argument("simgen: rho_g must be in [0, 1)");
  ar1_validate(Ar1Kernel{design.rho, design.sigma2});
  if (design.min_obs < 1 || design.max_obs < design.min_obs)
    throw std::invalid_argument("simgen: bad observation-count range");
  if (!(design.age_min < design.age_max) || !(design.age_step > 0.0))
    throw std::invalid_argument("simgen: bad age range");
  if (design.truth.m.size() != v || design.truth.b.rows() != p || design.truth.c.rows() != p ||
      design.truth.r.rows() != design.q || design.truth.b.cols() != v)
    throw std::invalid_argument("simgen: truth table shape does not match the design");

  const int lattice = static_cast<int>(std::floor((design.age_max - design.age_min) /
                                                  design.age_step + 0.5)) + 1;
  if (lattice < design.max_obs)
    throw std::invalid_argument("simgen: age lattice smaller than max_obs");

  const boost::math::normal_distribution<double> std_normal;
  const double cut = boost::math::quantile(std_normal, 1.0 - design.maf);
  const double w_shared = std::sqrt(design.rho_g);
  const double w_own = std::sqrt(1.0 - design.rho_g);

  SimulatedData out;
  out.truth = design.truth;
  LongitudinalDataset& data = out.data;
  data.q = design.q;
  data.geno.xi.resize(n, p);
  data.geno.zeta.resize(n, p);
  data.geno.flipped.assign(p, false);
  data.geno.maf.resize(p);
  data.geno.snp_names.resize(p);
  const int width = static_cast<int>(std::to_string(p).size());
  for (int j = 0; j < p; ++j) data.geno.snp_names[j] = padded_name("snp", j, width);

  data.subjects.resize(n);
  std::normal_distribution<double> normal;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(seed, 2ULL * static_cast<std::uint64_t>(i));
    // Liabilities u_ij = sqrt(rho_g) z0 + sqrt(1-rho_g) z_j, thresholded at
    // +-cut: P(AA) = P(aa) = maf.
    const double z0 = normal(rng);
    for (int j = 0; j < p; ++j) {
      const double u = w_shared * z0 + w_own * normal(rng);
      if (u > cut) {
        data.geno.xi(i, j) = 1;
        data.geno.zeta(i, j) = 0;
      } else if (u < -cut) {
        data.geno.xi(i, j) = -1;
        data.geno.zeta(i, j) = 0;
      } else {
        data.geno.xi(i, j) = 0;
        data.geno.zeta(i, j) = 1;
      }
    }

    Subject& subj = data.subjects[i];
    subj.id = padded_name("subj", i, static_cast<int>(std::to_string(n).size()));
    std::uniform_int_distribution<int> obs_count(design.min_obs, design.max_obs);
    const int T = obs_count(rng);
    const auto idx = sample_distinct(lattice, T, rng);
    subj.grid.raw.reserve(T);
    for (int id : idx) subj.grid.raw.push_back(design.age_min + id * design.age_step);
    std::uniform_int_distribution<int> coin(0, 1);
    subj.x = Eigen::VectorXd::Constant(1, static_cast<double>(coin(rng)));
  }

  // Standardize against the realized global range so the Legendre truth is
  // exact for this dataset.
  std::vector<std::vector<double>> all_times;
  all_times.reserve(n);
  for (const auto& s : data.subjects) all_times.push_back(s.grid.raw);
  data.range = dataset_time_range(all_times);
  for (auto& s : data.subjects) s.grid = standardize_times(s.grid.raw, data.range, s.id);

  for (int j = 0; j < p; ++j) {
    long twice_a = 0;
    for (int i = 0; i < n; ++i) twice_a += data.geno.xi(i, j) + 1;
    const double freq = static_cast<double>(twice_a) / (2.0 * n);
    data.geno.maf[j] = std::min(freq, 1.0 - freq);
  }

  const Ar1Kernel noise_kernel{design.rho, design.sigma2};
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(seed, 2ULL * static_cast<std::uint64_t>(i) + 1ULL);
    Subject& subj = data.subjects[i];
    const int T = subj.grid.size();
    const Eigen::MatrixXd U = legendre_design(subj.grid, v).U;

    Eigen::VectorXd theta = design.truth.m + subj.x(0) * design.truth.r.row(0).transpose();
    Eigen::VectorXd mu = U * theta;
    if (design.curve_truth) {
      for (int l = 0; l < T; ++l)
        for (int j = 0; j < p; ++j) {
          if (data.geno.xi(i, j) != 0)
            mu(l) += data.geno.xi(i, j) * design.curve_truth(j, false, subj.grid.s[l]);
          if (data.geno.zeta(i, j) != 0) mu(l) += design.curve_truth(j, true, subj.grid.s[l]);
        }
    } else {
      Eigen::VectorXd snp_theta = Eigen::VectorXd::Zero(v);
      for (int j = 0; j < p; ++j) {
        if (data.geno.xi(i, j) != 0)
          snp_theta += static_cast<double>(data.geno.xi(i, j)) * design.truth.b.row(j).transpose();
        if (data.geno.zeta(i, j) != 0) snp_theta += design.truth.c.row(j).transpose();
      }
      mu += U * snp_theta;
    }

    const auto gaps = subj.grid.gaps();
    const auto noise = ar1_noise(noise_kernel, gaps, rng);
    subj.y.resize(T);
    for (int l = 0; l < T; ++l) subj.y(l) = mu(l) + noise[l];
  }
  return out;
}

SelectionScore score_selection(const SelectionReport& selection, const TruthTable& truth) {
  const int p = static_cast<int>(truth.b.rows());
  if (static_cast<int>(selection.entries.size()) != p)
    throw std::invalid_argument("score_selection: entry count != truth rows");

  SelectionScore sc;
  bool missing_true = false, extra = false;
  for (int j = 0; j < p; ++j) {
    const bool ta = truth.additive_causal(j);
    const bool td = truth.dominant_causal(j);
    const bool sa = selection.entries[j].additive;
    const bool sd = selection.entries[j].dominant;
    if (ta || td) {
      if ((sa && ta) || (sd && td)) ++sc.causal_selected;
    } else if (sa || sd) {
      ++sc.null_selected;
    }
    missing_true |= (ta && !sa) || (td && !sd);
    extra |= (sa && !ta) || (sd && !td);
  }
  sc.underfit = missing_true;
  sc.overfit = !missing_true && extra;
  sc.correctfit = !missing_true && !extra;
  return sc;
}

}  // namespace fgwas
