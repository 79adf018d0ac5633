#include "fgwas/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fgwas/ar1.hpp"
#include "fgwas/inference.hpp"
#include "fgwas/parallel.hpp"
#include "fgwas/rng.hpp"

namespace fgwas {

void validate_config(const SamplerConfig& config) {
  if (config.chains < 1) throw std::invalid_argument("config: chains must be >= 1");
  if (config.burn_in < 0) throw std::invalid_argument("config: burn_in must be >= 0");
  if (config.post_convergence_iters < 1)
    throw std::invalid_argument("config: post_convergence_iters must be >= 1");
  if (config.thin < 1) throw std::invalid_argument("config: thin must be >= 1");
  if (config.psrf_check_every < 4)
    throw std::invalid_argument("config: psrf_check_every must be >= 4");
  if (config.max_monitor_iters < 0)
    throw std::invalid_argument("config: max_monitor_iters must be >= 0");
  if (!(config.psrf_threshold > 1.0))
    throw std::invalid_argument("config: psrf_threshold must exceed 1");
  if (!(config.rho_step > 0.0) || config.rho_step > 0.5)
    throw std::invalid_argument("config: rho_step must be in (0, 0.5]");
  if (!(config.ig_mean_ceiling > 0.0))
    throw std::invalid_argument("config: ig_mean_ceiling must be positive");
  if (config.residual_refresh_every < 1)
    throw std::invalid_argument("config: residual_refresh_every must be >= 1");
  if (config.monitor_top_blocks < 0)
    throw std::invalid_argument("config: monitor_top_blocks must be >= 0");
}

namespace {

std::vector<std::uint8_t> active_mask(int p, bool all, const std::vector<int>& list,
                                      const char* what) {
  std::vector<std::uint8_t> mask(p, all ? 1 : 0);
  if (!all) {
    for (int j : list) {
      if (j < 0 || j >= p) {
        std::ostringstream os;
        os << "options: " << what << " block index " << j << " outside 0.." << p - 1;
        throw std::invalid_argument(os.str());
      }
      mask[j] = 1;
    }
  }
  return mask;
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& s, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
}

}  // namespace

GibbsSampler::GibbsSampler(const LongitudinalDataset& data, int order, Hyperparameters hyper,
                           FitOptions options, SamplerConfig config)
    : design_(kernels::PackedDesign::build(data, order)),
      hyper_(std::move(hyper)),
      opt_(std::move(options)),
      config_(config),
      rho_step_(config.rho_step) {
  if (order < 1 || order > 8) throw std::invalid_argument("sampler: order outside 1..8");
  validate_hyperparameters(hyper_, order);
  validate_config(config_);
  prior_prec_m_ = invert_spd(hyper_.sigma_m0, "sigma_m0");
  prior_prec_r_ = invert_spd(hyper_.sigma_r0, "sigma_r0");
  active_b_ = active_mask(design_.p, opt_.all_active, opt_.active_additive, "additive");
  active_c_ = active_mask(design_.p, opt_.all_active, opt_.active_dominant, "dominant");
  n_active_b_ = static_cast<int>(std::count(active_b_.begin(), active_b_.end(), 1));
  n_active_c_ = static_cast<int>(std::count(active_c_.begin(), active_c_.end(), 1));
  ws_.allocate(design_);
  if (opt_.fixed_rho) ar1_validate(*opt_.fixed_rho);
}

ParameterState GibbsSampler::initial_state(std::mt19937_64* jitter) const {
  const int v = design_.v;
  const int q = design_.q;
  const int d = v * (1 + q);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd row(d);
  for (int i = 0; i < design_.n; ++i) {
    for (int l = 0; l < design_.T[i]; ++l) {
      const double* u = design_.U.data() + (design_.off[i] + l) * v;
      for (int k = 0; k < v; ++k) row(k) = u[k];
      for (int k = 0; k < q; ++k) {
        const double x = design_.X[static_cast<long>(i) * q + k];
        for (int a = 0; a < v; ++a) row(v + k * v + a) = x * u[a];
      }
      Z.noalias() += row * row.transpose();
      rhs.noalias() += row * design_.y[design_.off[i] + l];
    }
  }
  Z.diagonal().array() += 1e-6 * (Z.trace() / d + 1.0);
  const Eigen::VectorXd theta = Z.ldlt().solve(rhs);

  ParameterState s = ParameterState::zeros(v, q, design_.p);
  s.m = theta.head(v);
  for (int k = 0; k < q; ++k) s.r.row(k) = theta.segment(v + k * v, v).transpose();

  double ssr = 0.0;
  for (int i = 0; i < design_.n; ++i) {
    for (int l = 0; l < design_.T[i]; ++l) {
      const double* u = design_.U.data() + (design_.off[i] + l) * v;
      double mu = 0.0;
      for (int k = 0; k < v; ++k) mu += u[k] * s.m(k);
      for (int k = 0; k < q; ++k) {
        const double x = design_.X[static_cast<long>(i) * q + k];
        for (int a = 0; a < v; ++a) mu += x * u[a] * s.r(k, a);
      }
      const double e = design_.y[design_.off[i] + l] - mu;
      ssr += e * e;
    }
  }
  s.sigma2 = std::max(ssr / std::max<long>(design_.total, 1), 1e-8);
  s.rho = 0.2;
  // Start the shrinkage scales on the sparse side. The lambda^2 posterior
  // can carry a second, weak-shrinkage mode where hundreds of null blocks
  // absorb the noise variance; a data-scale start lets the hierarchy crush
  // nulls on the first sweeps and descend into the sparse mode.
  s.lambda2 = s.lambda2_star = static_cast<double>(design_.p) * v;

  if (jitter) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.05, 0.6);
    s.sigma2 *= std::exp(0.5 * normal(*jitter));
    s.rho = unif(*jitter);
    s.lambda2 *= std::exp(normal(*jitter));
    s.lambda2_star *= std::exp(normal(*jitter));
  }
  if (opt_.fixed_rho) s.rho = *opt_.fixed_rho;
  if (opt_.fixed_sigma2) s.sigma2 = *opt_.fixed_sigma2;
  if (opt_.fixed_lambda2) s.lambda2 = *opt_.fixed_lambda2;
  if (opt_.fixed_lambda2_star) s.lambda2_star = *opt_.fixed_lambda2_star;
  return s;
}

void GibbsSampler::ensure_caches(const ParameterState& state) {
  if (state.rho != cached_rho_) {
    kernels::build_gamma_caches(design_, state.rho, ws_);
    kernels::build_block_grams(design_, ws_);
    cached_rho_ = state.rho;
    if (residual_valid_) kernels::rebuild_scores(design_, ws_);
    quad_valid_ = false;
  }
  if (!residual_valid_) {
    kernels::refresh_residual(design_, state.m.data(), state.r.data(), state.b.data(),
                              state.c.data(), ws_);
    kernels::rebuild_scores(design_, ws_);
    residual_valid_ = true;
    quad_valid_ = false;
  }
}

void GibbsSampler::draw_dense_block(int which_r, ParameterState& state, std::mt19937_64& rng) {
  const int v = design_.v;
  kernels::WeightView wt;
  if (which_r >= 0) wt = {design_.X.data() + which_r, design_.q};

  double sbuf[8];
  kernels::dense_score(design_, ws_, wt, sbuf);
  const double* A =
      (which_r < 0) ? ws_.Gsum.data() : ws_.Ar.data() + static_cast<long>(which_r) * v * v;
  Eigen::Map<const Eigen::MatrixXd> Am(A, v, v);  // symmetric, so layout is moot
  const Eigen::Map<const Eigen::VectorXd> s(sbuf, v);

  Eigen::VectorXd old =
      (which_r < 0) ? state.m : Eigen::VectorXd(state.r.row(which_r).transpose());
  const double inv_sig = 1.0 / state.sigma2;
  const Eigen::MatrixXd prec =
      ((which_r < 0) ? prior_prec_m_ : prior_prec_r_) + inv_sig * Am;
  const Eigen::VectorXd h = inv_sig * (s + Am * old);
  const Eigen::VectorXd draw = draw_mvn_precision(prec, h, rng);

  Eigen::VectorXd dlt = draw - old;
  kernels::dense_apply_delta(design_, ws_, wt, dlt.data());
  if (which_r < 0)
    state.m = draw;
  else
    state.r.row(which_r) = draw.transpose();
  quad_valid_ = false;
}

void GibbsSampler::draw_snp_blocks(bool dominant, ParameterState& state, std::mt19937_64& rng) {
  const int v = design_.v;
  const int vv = v * v;
  const double sigma = std::sqrt(state.sigma2);
  const double lambda2 = dominant ? state.lambda2_star : state.lambda2;
  const std::vector<std::uint8_t>& active = dominant ? active_c_ : active_b_;
  const std::vector<double>& grams = dominant ? ws_.Ac : ws_.Ab;
  std::normal_distribution<double> normal;

  double s[8], rhs[8], K[64], z[8], x[8];
  for (int j = 0; j < design_.p; ++j) {
    if (!active[j]) continue;
    const std::int8_t* col = dominant ? design_.zeta_col(j) : design_.xi_col(j);
    const double* A = grams.data() + static_cast<long>(j) * vv;
    double* coef = dominant ? &state.c(j, 0) : &state.b(j, 0);
    double* tau2 = dominant ? &state.tau2_star(j) : &state.tau2(j);

    kernels::snp_score(design_, ws_, col, s);
    // Posterior factored by sigma2: cov = sigma2 K^{-1}, mean = K^{-1} rhs
    // with K = prior_prec + A, rhs = score + A coef_old. In penalized mode
    // prior_prec = 1/tau_j^2 (the prior is sigma2 tau^2 I); in flat mode the
    // absolute prior 1e8 I contributes sigma2 * 1e-8.
    const double prior_prec = opt_.penalized ? 1.0 / *tau2 : state.sigma2 * 1e-8;
    for (int a = 0; a < v; ++a) {
      double acc = s[a];
      const double* arow = A + static_cast<long>(a) * v;
      for (int bb = 0; bb < v; ++bb) acc += arow[bb] * coef[bb];
      rhs[a] = acc;
    }

    double jitter = 0.0;
    for (int attempt = 0;; ++attempt) {
      for (int a = 0; a < v; ++a)
        for (int bb = 0; bb < v; ++bb)
          K[a * v + bb] = A[a * v + bb] + ((a == bb) ? prior_prec + jitter : 0.0);
      if (kernels::chol_small(v, K)) break;
      if (attempt == 3) throw std::runtime_error("snp block draw: gram not positive definite");
      double tr = prior_prec;
      for (int a = 0; a < v; ++a) tr += A[a * v + a] / v;
      jitter = tr * ((attempt == 0) ? 1e-12 : (attempt == 1) ? 1e-9 : 1e-6);
    }

    for (int a = 0; a < v; ++a) x[a] = rhs[a];
    kernels::chol_solve_small(v, K, x);  // x = mean
    for (int a = 0; a < v; ++a) z[a] = normal(rng);
    kernels::chol_lt_solve_small(v, K, z);
    for (int a = 0; a < v; ++a) x[a] += sigma * z[a];

    double dlt[8];
    bool moved = false;
    for (int a = 0; a < v; ++a) {
      dlt[a] = x[a] - coef[a];
      moved |= dlt[a] != 0.0;
    }
    if (moved) {
      kernels::snp_apply_delta(design_, ws_, col, dlt);
      for (int a = 0; a < v; ++a) coef[a] = x[a];
      quad_valid_ = false;
    }

    if (opt_.penalized) {
      double norm2 = 0.0;
      for (int a = 0; a < v; ++a) norm2 += coef[a] * coef[a];
      double mu = config_.ig_mean_ceiling;
      if (norm2 >= 1e-300)
        mu = std::min(mu, std::sqrt(v * lambda2 * state.sigma2 / norm2));
      const double inv_tau2 = draw_inverse_gaussian(mu, v * lambda2, rng);
      *tau2 = 1.0 / std::max(inv_tau2, 1e-300);
    }
  }
}

void GibbsSampler::sweep(ParameterState& state, std::mt19937_64& rng) {
  validate_state(state, design_.q, design_.p);
  if (opt_.fixed_rho) state.rho = *opt_.fixed_rho;
  if (opt_.fixed_sigma2) state.sigma2 = *opt_.fixed_sigma2;
  if (opt_.fixed_lambda2) state.lambda2 = *opt_.fixed_lambda2;
  if (opt_.fixed_lambda2_star) state.lambda2_star = *opt_.fixed_lambda2_star;
  ensure_caches(state);

  draw_dense_block(-1, state, rng);
  for (int k = 0; k < design_.q; ++k) draw_dense_block(k, state, rng);
  draw_snp_blocks(false, state, rng);
  draw_snp_blocks(true, state, rng);

  const int v = design_.v;
  if (opt_.penalized) {
    if (!opt_.fixed_lambda2) {
      double sum_tau2 = 0.0;
      for (int j = 0; j < design_.p; ++j)
        if (active_b_[j]) sum_tau2 += state.tau2(j);
      state.lambda2 = draw_gamma_rate(hyper_.a + n_active_b_ * (v + 1) / 2.0,
                                      hyper_.b + 0.5 * v * sum_tau2, rng);
    }
    if (!opt_.fixed_lambda2_star) {
      double sum_tau2 = 0.0;
      for (int j = 0; j < design_.p; ++j)
        if (active_c_[j]) sum_tau2 += state.tau2_star(j);
      state.lambda2_star = draw_gamma_rate(hyper_.a_star + n_active_c_ * (v + 1) / 2.0,
                                           hyper_.b_star + 0.5 * v * sum_tau2, rng);
    }
  }

  ++sweeps_;
  if (sweeps_ % config_.residual_refresh_every == 0) {
    kernels::refresh_residual(design_, state.m.data(), state.r.data(), state.b.data(),
                              state.c.data(), ws_);
    kernels::rebuild_scores(design_, ws_);
    quad_valid_ = false;
  } else if (ws_.delta_dirty) {
    kernels::flush_delta(design_, ws_);
    quad_valid_ = false;
  }

  if (!quad_valid_) {
    const auto ql = kernels::quad_logdet(design_, state.rho, ws_.e);
    quad_cur_ = ql.quad;
    logdet_cur_ = ql.logdet;
    quad_valid_ = true;
  }

  if (!opt_.fixed_sigma2) {
    double df = static_cast<double>(design_.total) + 2.0 * hyper_.a_sigma;
    double num = quad_cur_ + 2.0 * hyper_.b_sigma;
    if (opt_.penalized) {
      df += static_cast<double>(v) * (n_active_b_ + n_active_c_);
      for (int j = 0; j < design_.p; ++j) {
        if (active_b_[j]) num += state.b.row(j).squaredNorm() / state.tau2(j);
        if (active_c_[j]) num += state.c.row(j).squaredNorm() / state.tau2_star(j);
      }
    }
    state.sigma2 = draw_scaled_inv_chisq(df, num / df, rng);
  }

  if (!opt_.fixed_rho) {
    ++rho_prop_;
    std::uniform_real_distribution<double> unif(-rho_step_, rho_step_);
    double prop = state.rho + unif(rng);
    for (int guard = 0; (prop <= 0.0 || prop >= 1.0) && guard < 8; ++guard) {
      if (prop <= 0.0) prop = -prop;
      if (prop >= 1.0) prop = 2.0 - prop;
    }
    prop = std::min(1.0 - 1e-12, std::max(1e-12, prop));
    const auto ql = kernels::quad_logdet(design_, prop, ws_.e);
    const double log_alpha = -0.5 * (ql.logdet - logdet_cur_) -
                             (ql.quad - quad_cur_) / (2.0 * state.sigma2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (std::log(u01(rng)) < log_alpha) {
      ++rho_acc_;
      state.rho = prop;
      quad_cur_ = ql.quad;
      logdet_cur_ = ql.logdet;
      kernels::build_gamma_caches(design_, prop, ws_);
      kernels::build_block_grams(design_, ws_);
      kernels::rebuild_scores(design_, ws_);
      cached_rho_ = prop;
    }
  }
}

void GibbsSampler::set_phenotypes(const std::vector<Eigen::VectorXd>& y) {
  if (static_cast<int>(y.size()) != design_.n)
    throw std::invalid_argument("set_phenotypes: subject count mismatch");
  for (int i = 0; i < design_.n; ++i) {
    if (y[i].size() != design_.T[i])
      throw std::invalid_argument("set_phenotypes: length mismatch");
    for (int l = 0; l < design_.T[i]; ++l) design_.y[design_.off[i] + l] = y[i](l);
  }
  residual_valid_ = false;
  quad_valid_ = false;
}

void GibbsSampler::simulate_phenotypes(const ParameterState& state, std::mt19937_64& rng) {
  validate_state(state, design_.q, design_.p);
  const int v = design_.v;
  std::vector<double> theta(static_cast<long>(design_.n) * v);
  kernels::coefficient_totals(design_, state.m.data(), state.r.data(), state.b.data(),
                              state.c.data(), theta.data());
  const Ar1Kernel kernel{state.rho, state.sigma2};
  for (int i = 0; i < design_.n; ++i) {
    const double* th = theta.data() + static_cast<long>(i) * v;
    const std::span<const double> gaps{design_.gaps.data() + design_.goff[i],
                                       static_cast<std::size_t>(design_.T[i] - 1)};
    const auto noise = ar1_noise(kernel, gaps, rng);
    for (int l = 0; l < design_.T[i]; ++l) {
      const double* u = design_.U.data() + (design_.off[i] + l) * v;
      double mu = 0.0;
      for (int k = 0; k < v; ++k) mu += u[k] * th[k];
      design_.y[design_.off[i] + l] = mu + noise[l];
    }
  }
  residual_valid_ = false;
  quad_valid_ = false;
}

std::vector<Eigen::VectorXd> GibbsSampler::phenotypes() const {
  std::vector<Eigen::VectorXd> out(design_.n);
  for (int i = 0; i < design_.n; ++i) {
    out[i].resize(design_.T[i]);
    for (int l = 0; l < design_.T[i]; ++l) out[i](l) = design_.y[design_.off[i] + l];
  }
  return out;
}

namespace {

// Post-burn-in scalar traces for one chain.
struct MonitorBuffers {
  std::vector<double> sigma2, rho, lambda2, lambda2_star, m0;
  std::vector<float> b0, c0;  // active blocks, dense order, one row per sweep
  std::vector<double> bnorm_sum, cnorm_sum;
  long count = 0;
};

void append_monitors(const ParameterState& s, const std::vector<int>& act_b,
                     const std::vector<int>& act_c, MonitorBuffers& mb) {
  mb.sigma2.push_back(s.sigma2);
  mb.rho.push_back(s.rho);
  mb.lambda2.push_back(s.lambda2);
  mb.lambda2_star.push_back(s.lambda2_star);
  mb.m0.push_back(s.m(0));
  for (std::size_t t = 0; t < act_b.size(); ++t) {
    mb.b0.push_back(static_cast<float>(s.b(act_b[t], 0)));
    mb.bnorm_sum[t] += s.b.row(act_b[t]).norm();
  }
  for (std::size_t t = 0; t < act_c.size(); ++t) {
    mb.c0.push_back(static_cast<float>(s.c(act_c[t], 0)));
    mb.cnorm_sum[t] += s.c.row(act_c[t]).norm();
  }
  ++mb.count;
}

std::vector<std::vector<double>> window_of(const std::vector<MonitorBuffers>& mbs,
                                           const std::vector<double> MonitorBuffers::* field,
                                           long lo, long hi) {
  std::vector<std::vector<double>> out;
  out.reserve(mbs.size());
  for (const auto& mb : mbs)
    out.emplace_back((mb.*field).begin() + lo, (mb.*field).begin() + hi);
  return out;
}

std::vector<std::vector<double>> window_of_block(const std::vector<MonitorBuffers>& mbs,
                                                 const std::vector<float> MonitorBuffers::* field,
                                                 std::size_t nblocks, std::size_t idx, long lo,
                                                 long hi) {
  std::vector<std::vector<double>> out;
  out.reserve(mbs.size());
  for (const auto& mb : mbs) {
    std::vector<double> seq;
    seq.reserve(hi - lo);
    for (long t = lo; t < hi; ++t) seq.push_back((mb.*field)[t * nblocks + idx]);
    out.push_back(std::move(seq));
  }
  return out;
}

PsrfReport psrf_check(const std::vector<MonitorBuffers>& mbs, const std::vector<int>& act_b,
                      const std::vector<int>& act_c, const SamplerConfig& config,
                      bool penalized) {
  PsrfReport rep;
  const long L = mbs.front().count;
  const long lo = L / 2;
  rep.window = static_cast<int>(L - lo);
  if (L - lo < 2) return rep;

  auto push = [&](const std::string& name, std::vector<std::vector<double>> seqs) {
    rep.entries.push_back({name, psrf(seqs)});
  };
  push("sigma2", window_of(mbs, &MonitorBuffers::sigma2, lo, L));
  push("rho", window_of(mbs, &MonitorBuffers::rho, lo, L));
  // The shrinkage scales exist only in penalized mode; a flat refit leaves
  // them at their (jittered) initial values.
  if (penalized) {
    push("lambda2", window_of(mbs, &MonitorBuffers::lambda2, lo, L));
    push("lambda2_star", window_of(mbs, &MonitorBuffers::lambda2_star, lo, L));
  }
  push("m.0", window_of(mbs, &MonitorBuffers::m0, lo, L));

  // Rank active blocks by posterior-mean norm averaged across chains, then
  // monitor the first coefficient of the top ones.
  struct Ranked {
    double norm;
    bool dominant;
    std::size_t idx;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(act_b.size() + act_c.size());
  for (std::size_t t = 0; t < act_b.size(); ++t) {
    double s = 0.0;
    for (const auto& mb : mbs) s += mb.bnorm_sum[t] / mb.count;
    ranked.push_back({s / mbs.size(), false, t});
  }
  for (std::size_t t = 0; t < act_c.size(); ++t) {
    double s = 0.0;
    for (const auto& mb : mbs) s += mb.cnorm_sum[t] / mb.count;
    ranked.push_back({s / mbs.size(), true, t});
  }
  const std::size_t keep = std::min<std::size_t>(ranked.size(), config.monitor_top_blocks);
  std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(),
                    [](const Ranked& a, const Ranked& b) { return a.norm > b.norm; });
  for (std::size_t t = 0; t < keep; ++t) {
    const auto& rk = ranked[t];
    std::ostringstream name;
    if (rk.dominant) {
      name << "c." << act_c[rk.idx] << ".0";
      rep.entries.push_back(
          {name.str(), psrf(window_of_block(mbs, &MonitorBuffers::c0, act_c.size(), rk.idx, lo, L))});
    } else {
      name << "b." << act_b[rk.idx] << ".0";
      rep.entries.push_back(
          {name.str(), psrf(window_of_block(mbs, &MonitorBuffers::b0, act_b.size(), rk.idx, lo, L))});
    }
  }

  rep.max_psrf = 0.0;
  for (const auto& e : rep.entries) rep.max_psrf = std::max(rep.max_psrf, e.value);
  rep.all_below = rep.max_psrf < config.psrf_threshold;
  return rep;
}

}  // namespace

ChainSet run_chains(const LongitudinalDataset& data, int order, const Hyperparameters& hyper,
                    const SamplerConfig& config, const FitOptions& options) {
  validate_config(config);
  if (config.threads > 0) set_threads(config.threads);
  ChainSet out;
  out.warnings = validate_dataset(data, false);
  out.order = order;
  out.q = data.q;
  out.p = data.p();
  out.total_obs = data.total_obs();

  const int M = config.chains;
  if (!options.freeze_lambda2_per_chain.empty() &&
      static_cast<int>(options.freeze_lambda2_per_chain.size()) != M)
    throw std::invalid_argument("options: freeze_lambda2_per_chain size != chains");

  std::vector<std::unique_ptr<GibbsSampler>> samplers(M);
  std::vector<ParameterState> states(M);
  std::vector<std::mt19937_64> rngs(M);
  for (int ch = 0; ch < M; ++ch) {
    FitOptions opts = options;
    if (!options.freeze_lambda2_per_chain.empty())
      opts.fixed_lambda2 = options.freeze_lambda2_per_chain[ch];
    samplers[ch] = std::make_unique<GibbsSampler>(data, order, hyper, opts, config);
    rngs[ch] = make_stream(config.seed, ch);
    states[ch] = samplers[ch]->initial_state(config.jitter_init ? &rngs[ch] : nullptr);
  }

  std::vector<int> act_b, act_c;
  for (int j = 0; j < out.p; ++j) {
    if (options.all_active || std::count(options.active_additive.begin(),
                                         options.active_additive.end(), j))
      act_b.push_back(j);
    if (options.all_active || std::count(options.active_dominant.begin(),
                                         options.active_dominant.end(), j))
      act_c.push_back(j);
  }

  // Burn-in with rho step adaptation toward a 30-45% acceptance rate.
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < M; ++ch) {
    auto& smp = *samplers[ch];
    for (int t = 1; t <= config.burn_in; ++t) {
      smp.sweep(states[ch], rngs[ch]);
      if (config.adapt_rho_step && t % 50 == 0 && smp.rho_proposals() > 0) {
        const double rate =
            static_cast<double>(smp.rho_accepts()) / static_cast<double>(smp.rho_proposals());
        double step = smp.rho_step();
        if (rate < 0.30) step *= 0.8;
        if (rate > 0.45) step *= 1.25;
        smp.set_rho_step(std::min(0.5, std::max(1e-4, step)));
        smp.reset_rho_counters();
      }
    }
    smp.reset_rho_counters();
  }

  // Post-burn-in monitoring in lockstep windows.
  std::vector<MonitorBuffers> mbs(M);
  for (auto& mb : mbs) {
    mb.bnorm_sum.assign(act_b.size(), 0.0);
    mb.cnorm_sum.assign(act_c.size(), 0.0);
  }
  long monitored = 0;
  out.converged = (M == 1 || config.max_monitor_iters == 0);
  while (!out.converged && monitored < config.max_monitor_iters) {
    const long todo =
        std::min<long>(config.psrf_check_every, config.max_monitor_iters - monitored);
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < M; ++ch) {
      for (long t = 0; t < todo; ++t) {
        samplers[ch]->sweep(states[ch], rngs[ch]);
        append_monitors(states[ch], act_b, act_c, mbs[ch]);
      }
    }
    monitored += todo;
    out.monitor = psrf_check(mbs, act_b, act_c, config, options.penalized);
    if (out.monitor.all_below) {
      out.converged = true;
      out.convergence_sweep = static_cast<int>(monitored);
    }
  }

  // Recording phase runs regardless; `converged` reports the diagnostic.
  const int recorded = config.post_convergence_iters / config.thin;
  out.draws.assign(M, {});
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < M; ++ch) {
    out.draws[ch].reserve(recorded);
    for (int t = 1; t <= config.post_convergence_iters; ++t) {
      samplers[ch]->sweep(states[ch], rngs[ch]);
      if (t % config.thin == 0) out.draws[ch].push_back(states[ch]);
    }
  }

  out.rho_accept_rate.resize(M);
  out.rho_step_final.resize(M);
  for (int ch = 0; ch < M; ++ch) {
    out.rho_accept_rate[ch] =
        static_cast<double>(samplers[ch]->rho_accepts()) /
        static_cast<double>(std::max<long>(1, samplers[ch]->rho_proposals()));
    out.rho_step_final[ch] = samplers[ch]->rho_step();
  }
  return out;
}

}  // namespace fgwas
