#include "fgwas/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fgwas {

double psrf(const std::vector<std::vector<double>>& chains) {
  const std::size_t M = chains.size();
  if (M < 2) throw std::invalid_argument("psrf: needs at least two chains");
  std::size_t L = std::numeric_limits<std::size_t>::max();
  for (const auto& ch : chains) L = std::min(L, ch.size());
  if (L < 2) throw std::invalid_argument("psrf: needs at least two draws per chain");

  double w = 0.0, grand = 0.0;
  std::vector<double> means(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& ch = chains[m];
    double mu = 0.0;
    for (std::size_t t = ch.size() - L; t < ch.size(); ++t) mu += ch[t];
    mu /= static_cast<double>(L);
    double s2 = 0.0;
    for (std::size_t t = ch.size() - L; t < ch.size(); ++t) s2 += (ch[t] - mu) * (ch[t] - mu);
    s2 /= static_cast<double>(L - 1);
    means[m] = mu;
    w += s2;
    grand += mu;
  }
  w /= static_cast<double>(M);
  grand /= static_cast<double>(M);

  double b_over_l = 0.0;  // B/L = var of chain means
  for (double mu : means) b_over_l += (mu - grand) * (mu - grand);
  b_over_l /= static_cast<double>(M - 1);

  if (!(w > 0.0)) return b_over_l > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double vhat = (static_cast<double>(L - 1) / L) * w + b_over_l;
  return std::sqrt(vhat / w);
}

double quantile_type7(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile: prob outside [0, 1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * prob;
  const std::size_t i = std::min(static_cast<std::size_t>(h), n - 2);
  const double frac = h - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

CredibleInterval credible_interval(std::vector<double> draws, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible_interval: level outside (0, 1)");
  if (draws.empty()) throw std::invalid_argument("credible_interval: no draws");
  std::sort(draws.begin(), draws.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_type7(draws, tail), quantile_type7(draws, 1.0 - tail)};
}

namespace {

long pooled_count(const ChainSet& chains) {
  long n = 0;
  for (const auto& ch : chains.draws) n += static_cast<long>(ch.size());
  return n;
}

bool block_selected(const ChainSet& chains, bool dominant, int j, double level,
                    std::vector<double>& scratch) {
  for (int l = 0; l < chains.order; ++l) {
    scratch.clear();
    for (const auto& ch : chains.draws)
      for (const auto& s : ch) scratch.push_back(dominant ? s.c(j, l) : s.b(j, l));
    const CredibleInterval ci = credible_interval(scratch, level);
    if (ci.lo > 0.0 || ci.hi < 0.0) return true;
  }
  return false;
}

}  // namespace

SelectionReport select_snps(const ChainSet& chains, const std::vector<std::string>& snp_names,
                            double level) {
  if (static_cast<int>(snp_names.size()) != chains.p)
    throw std::invalid_argument("select_snps: name count != p");
  if (pooled_count(chains) == 0) throw std::invalid_argument("select_snps: no recorded draws");

  SelectionReport rep;
  rep.level = level;
  rep.order = chains.order;
  rep.entries.resize(chains.p);
  std::vector<double> scratch;
  scratch.reserve(pooled_count(chains));
  for (int j = 0; j < chains.p; ++j) {
    SelectionEntry& e = rep.entries[j];
    e.snp = snp_names[j];
    e.additive = block_selected(chains, false, j, level, scratch);
    e.dominant = block_selected(chains, true, j, level, scratch);
    if (e.additive) rep.additive_blocks.push_back(j);
    if (e.dominant) rep.dominant_blocks.push_back(j);
    if (e.additive || e.dominant) rep.selected.push_back(j);
  }
  return rep;
}

namespace {

// Pooled mean and sd of every parameter; tau/lambda summaries are not
// meaningful for flat-prior chains and are left at 1.
void pooled_moments(const ChainSet& chains, ParameterState& mean, ParameterState& sd) {
  const long n = pooled_count(chains);
  const int v = chains.order;
  mean = ParameterState::zeros(v, chains.q, chains.p);
  sd = ParameterState::zeros(v, chains.q, chains.p);
  mean.sigma2 = mean.rho = sd.sigma2 = sd.rho = 0.0;

  auto acc = [&](auto&& get, double& out_mean, double& out_sd) {
    double s = 0.0, s2 = 0.0;
    for (const auto& ch : chains.draws)
      for (const auto& st : ch) {
        const double x = get(st);
        s += x;
        s2 += x * x;
      }
    out_mean = s / n;
    const double var = std::max(0.0, s2 / n - out_mean * out_mean);
    out_sd = std::sqrt(var * n / std::max<long>(1, n - 1));
  };

  for (int k = 0; k < v; ++k)
    acc([&](const ParameterState& s) { return s.m(k); }, mean.m(k), sd.m(k));
  for (int kq = 0; kq < chains.q; ++kq)
    for (int k = 0; k < v; ++k)
      acc([&](const ParameterState& s) { return s.r(kq, k); }, mean.r(kq, k), sd.r(kq, k));
  for (int j = 0; j < chains.p; ++j)
    for (int k = 0; k < v; ++k) {
      acc([&](const ParameterState& s) { return s.b(j, k); }, mean.b(j, k), sd.b(j, k));
      acc([&](const ParameterState& s) { return s.c(j, k); }, mean.c(j, k), sd.c(j, k));
    }
  acc([](const ParameterState& s) { return s.sigma2; }, mean.sigma2, sd.sigma2);
  acc([](const ParameterState& s) { return s.rho; }, mean.rho, sd.rho);
  mean.lambda2 = mean.lambda2_star = 1.0;
  sd.lambda2 = sd.lambda2_star = 1.0;
}

}  // namespace

RefitResult refit(const LongitudinalDataset& data, int order, const SelectionReport& selection,
                  const Hyperparameters& hyper, SamplerConfig config) {
  FitOptions opts;
  opts.penalized = false;
  opts.all_active = false;
  opts.active_additive = selection.additive_blocks;
  opts.active_dominant = selection.dominant_blocks;

  RefitResult out;
  out.chains = run_chains(data, order, hyper, config, opts);
  pooled_moments(out.chains, out.post_mean, out.post_sd);

  const DesignMatrices design = DesignMatrices::build(data, order);
  out.log_lik = log_likelihood(out.post_mean, data, design);
  const long blocks = static_cast<long>(selection.additive_blocks.size()) +
                      static_cast<long>(selection.dominant_blocks.size());
  out.k = static_cast<long>(order) * (1 + data.q + blocks) + 2;
  out.bic = -2.0 * out.log_lik + static_cast<double>(out.k) * std::log(
                static_cast<double>(data.total_obs()));
  return out;
}

BicSweepResult bic_degree_sweep(const LongitudinalDataset& data, const std::vector<int>& degrees,
                                SamplerConfig config, double level) {
  if (degrees.empty()) throw std::invalid_argument("bic_degree_sweep: no degrees");
  BicSweepResult out;
  double best = std::numeric_limits<double>::infinity();
  for (int deg : degrees) {
    if (deg < 0 || deg > 7) throw std::invalid_argument("bic_degree_sweep: degree outside 0..7");
    const int order = deg + 1;
    const Hyperparameters hyper = Hyperparameters::defaults(order);
    const ChainSet chains = run_chains(data, order, hyper, config);
    const SelectionReport sel = select_snps(chains, data.geno.snp_names, level);
    const RefitResult rf = refit(data, order, sel, hyper, config);
    BicEntry entry;
    entry.degree = deg;
    entry.bic = rf.bic;
    entry.converged = chains.converged && rf.chains.converged;
    entry.selected_blocks = static_cast<int>(sel.additive_blocks.size() +
                                             sel.dominant_blocks.size());
    out.table.push_back(entry);
    if (entry.bic < best) {
      best = entry.bic;
      out.chosen_degree = deg;
    }
  }
  return out;
}

std::vector<BandPoint> effect_band(const Eigen::VectorXd& coef_mean,
                                   const std::vector<CredibleInterval>& coef_intervals,
                                   const TimeRange& range, int grid_points) {
  const int v = static_cast<int>(coef_mean.size());
  if (static_cast<int>(coef_intervals.size()) != v)
    throw std::invalid_argument("effect_band: interval count != order");
  if (grid_points < 2) throw std::invalid_argument("effect_band: need at least two grid points");
  if (!(range.t_min < range.t_max)) throw std::invalid_argument("effect_band: degenerate range");

  std::vector<BandPoint> band(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double t =
        range.t_min + (range.t_max - range.t_min) * g / static_cast<double>(grid_points - 1);
    const double s = 2.0 * (t - range.t_min) / (range.t_max - range.t_min) - 1.0;
    const Eigen::RowVectorXd row = legendre_row(std::min(1.0, std::max(-1.0, s)), v);
    BandPoint pt;
    pt.t = t;
    pt.s = s;
    pt.mean = row * coef_mean;
    for (int k = 0; k < v; ++k) {
      const double u = row(k);
      pt.hi += u * (u > 0.0 ? coef_intervals[k].hi : coef_intervals[k].lo);
      pt.lo += u * (u > 0.0 ? coef_intervals[k].lo : coef_intervals[k].hi);
    }
    band[g] = pt;
  }
  return band;
}

}  // namespace fgwas
