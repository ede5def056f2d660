#include "sums/sampler.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace sums {

void ChainConfig::validate() const {
  if (n_iter < burnin || burnin < adapt_burnin || adapt_burnin < 0)
    throw ValidationError("ChainConfig: need n_iter >= burnin >= adapt_burnin >= 0");
  if (thin < 1) throw ValidationError("ChainConfig: thin must be >= 1");
  if (n_mc < 100) throw ValidationError("ChainConfig: n_mc must be >= 100");
  if (init_components < 1) throw ValidationError("ChainConfig: init_components must be >= 1");
  if (!(hyper.lambda > 0.0) || !(hyper.gamma_s > 0.0))
    throw ValidationError("ChainConfig: Lambda and gamma_S must be positive");
  if (!(hyper.eta > 0.0 && hyper.eta < 1.0))
    throw ValidationError("ChainConfig: eta must be in (0,1)");
  if (!(hyper.a_k0 > 0.0) || !(hyper.b_k0 > 0.0))
    throw ValidationError("ChainConfig: k0 hyperparameters must be positive");
  if (hyper.nu != 0.0 && !(hyper.nu > 2.0))
    throw ValidationError("ChainConfig: nu must be > 2");
  if (hyper.psi_scale < 0.0) throw ValidationError("ChainConfig: psi_scale must be >= 0");
}

AdaptiveProposal::AdaptiveProposal(int dim, ProposalSettings settings)
    : dim_(dim), settings_(settings), mean_(Eigen::VectorXd::Zero(dim)),
      m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

void AdaptiveProposal::observe(const Eigen::VectorXd& value) {
  ++n_;
  const Eigen::VectorXd delta = value - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_.noalias() += delta * (value - mean_).transpose();
}

Eigen::MatrixXd AdaptiveProposal::covariance() const {
  if (n_ < 2) return Eigen::MatrixXd::Zero(dim_, dim_);
  return m2_ / static_cast<double>(n_ - 1);
}

Eigen::VectorXd AdaptiveProposal::propose(bool adapted, Rng& rng) const {
  if (!adapted || n_ < 2) return settings_.init_sd * rng.normal_vector(dim_);
  const double scale = settings_.scale > 0.0 ? settings_.scale : 5.6644 / dim_;  // 2.38^2/dim
  Eigen::MatrixXd cov =
      scale * (covariance() + settings_.jitter * Eigen::MatrixXd::Identity(dim_, dim_));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("AdaptiveProposal: proposal covariance not positive definite");
  return Eigen::MatrixXd(llt.matrixL()) * rng.normal_vector(dim_);
}

Sampler::Sampler(const PanelDataset& data, ChainConfig config)
    : data_(data), config_(std::move(config)) {
  config_.validate();
  const StudyDesign& design = data_.design();
  const int dp = design.total_rates();
  const double nu = config_.hyper.nu > 0.0 ? config_.hyper.nu : dp + 2;
  const double psi_scale = config_.hyper.psi_scale > 0.0 ? config_.hyper.psi_scale : 1.0 / nu;
  prior_ = {nu, psi_scale * Eigen::MatrixXd::Identity(dp, dp)};
  m_mu_ = Eigen::VectorXd::Constant(dp, config_.hyper.m_mu);
  Rng init_rng(splitmix64(config_.seed ^ 0x5eedu));
  init_state(init_rng);
}

// crude per-transition rates (transition count over person-time at risk),
// used only to centre the initial phi* values
Eigen::VectorXd Sampler::crude_log_rates() const {
  const StudyDesign& design = data_.design();
  Eigen::VectorXd logrates = Eigen::VectorXd::Zero(design.total_rates());
  for (int h = 0; h < design.n_processes(); ++h) {
    const int d = design.n_states(h);
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd exposure = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < data_.n_subjects(); ++i) {
      const ProcessSeries& s = data_.series(i, h);
      for (int j = 1; j < s.n_times(); ++j) {
        const int prev = s.states[j - 1];
        const int cur = s.states[j];
        if (prev < 0 || cur < 0) continue;
        exposure[prev] += s.eps(j);
        if (prev != cur) count(prev, cur) += 1.0;
      }
    }
    for (int r = 0; r < d; ++r)
      for (int s2 = 0; s2 < d; ++s2) {
        if (r == s2) continue;
        const double rate = (count(r, s2) + 0.5) / (exposure[r] + 1.0);
        logrates[design.rate_index(h, r, s2)] = std::log(rate);
      }
  }
  return logrates;
}

void Sampler::init_state(Rng& rng) {
  const StudyDesign& design = data_.design();
  const int dp = design.total_rates();
  const int n = data_.n_subjects();
  const int p = design.n_processes();

  const Eigen::VectorXd center = config_.prior_only ? m_mu_ : crude_log_rates();
  const int m0 = config_.init_components;
  state_.mix.s = Eigen::VectorXd::Ones(m0);
  state_.mix.phi_star.clear();
  for (int m = 0; m < m0; ++m)
    state_.mix.phi_star.push_back(center + 0.5 * rng.normal_vector(dp));
  state_.mix.c.resize(n);
  for (int i = 0; i < n; ++i) state_.mix.c[i] = rng.uniform_int(m0);
  state_.mix.u = 1.0;
  state_.mix.compact();

  state_.ggm.g0 = ProcessGraph(p);
  state_.ggm.g = expand(state_.ggm.g0, design);
  state_.ggm.omega = Eigen::MatrixXd::Identity(dp, dp);
  state_.ggm.mu = m_mu_;
  state_.ggm.k0 = config_.hyper.a_k0 / config_.hyper.b_k0;

  state_.regression = RegressionParams::zeros(design);
  state_.first_states.assign(n, std::vector<int>(p, 0));
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < p; ++h) {
      const ProcessSeries& s = data_.series(i, h);
      state_.first_states[i][h] = s.missing_first ? s.states[1] : s.states[0];
    }

  offsets_.assign(n, std::vector<Eigen::MatrixXd>(p));
  for (int h = 0; h < p; ++h) refresh_offsets(h);

  beta_props_.clear();
  gamma_props_.clear();
  for (int h = 0; h < p; ++h) {
    beta_props_.emplace_back(design.process(h).n_x * design.n_rates(h), config_.proposal);
    gamma_props_.emplace_back(design.process(h).n_z * design.n_rates(h), config_.proposal);
  }
  state_.iteration = 0;
}

void Sampler::refresh_offsets(int h) {
  for (int i = 0; i < data_.n_subjects(); ++i)
    offsets_[i][h] =
        covariate_offsets(data_.series(i, h), data_.subject(i).x, state_.regression.process[h]);
}

double Sampler::subject_loglik(int i, const Eigen::VectorXd& phi) const {
  if (config_.prior_only) return 0.0;
  const StudyDesign& design = data_.design();
  double ll = 0.0;
  for (int h = 0; h < design.n_processes(); ++h) {
    const Eigen::VectorXd phi_h = phi.segment(design.rate_offset(h), design.n_rates(h));
    ll += subject_process_loglik(design.n_states(h), data_.series(i, h),
                                 state_.first_states[i][h], phi_h, offsets_[i][h]);
  }
  return ll;
}

double Sampler::total_loglik() const {
  if (config_.prior_only) return 0.0;
  double ll = 0.0;
  for (int i = 0; i < data_.n_subjects(); ++i)
    ll += subject_loglik(i, state_.mix.phi_star[state_.mix.c[i]]);
  return ll;
}

double Sampler::process_loglik(int h, const std::vector<Eigen::MatrixXd>& off_h) const {
  if (config_.prior_only) return 0.0;
  const StudyDesign& design = data_.design();
  double ll = 0.0;
  for (int i = 0; i < data_.n_subjects(); ++i) {
    const Eigen::VectorXd phi_h = state_.mix.phi_star[state_.mix.c[i]].segment(
        design.rate_offset(h), design.n_rates(h));
    ll += subject_process_loglik(design.n_states(h), data_.series(i, h),
                                 state_.first_states[i][h], phi_h, off_h[i]);
  }
  return ll;
}

double Sampler::process_loglik_current(int h) const {
  if (config_.prior_only) return 0.0;
  const StudyDesign& design = data_.design();
  double ll = 0.0;
  for (int i = 0; i < data_.n_subjects(); ++i) {
    const Eigen::VectorXd phi_h = state_.mix.phi_star[state_.mix.c[i]].segment(
        design.rate_offset(h), design.n_rates(h));
    ll += subject_process_loglik(design.n_states(h), data_.series(i, h),
                                 state_.first_states[i][h], phi_h, offsets_[i][h]);
  }
  return ll;
}

void Sampler::step_missing(Rng& rng) {
  const StudyDesign& design = data_.design();
  for (int i = 0; i < data_.n_subjects(); ++i) {
    for (int h = 0; h < design.n_processes(); ++h) {
      const ProcessSeries& s = data_.series(i, h);
      if (!s.missing_first) continue;
      if (config_.prior_only) {
        state_.first_states[i][h] = rng.uniform_int(design.n_states(h));
        continue;
      }
      const Eigen::VectorXd phi_h = state_.mix.phi_star[state_.mix.c[i]].segment(
          design.rate_offset(h), design.n_rates(h));
      state_.first_states[i][h] =
          impute_initial_state(design.n_states(h), s, phi_h, offsets_[i][h], rng);
    }
  }
}

Eigen::VectorXd Sampler::sample_p0(Rng& rng) const {
  Eigen::LLT<Eigen::MatrixXd> llt(state_.ggm.omega);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_p0: precision matrix not positive definite");
  return rng.normal_from_precision_chol(state_.ggm.mu, Eigen::MatrixXd(llt.matrixL()));
}

void Sampler::mixture_sweep(Rng& rng) {
  MixtureHyper hyper{config_.hyper.lambda, config_.hyper.gamma_s};
  update_u(state_.mix, rng);
  update_allocated_weights(state_.mix, hyper, rng);
  if (!partition_frozen_) {
    Eigen::LLT<Eigen::MatrixXd> llt(state_.ggm.omega);
    if (llt.info() != Eigen::Success)
      throw NumericalError("mixture_sweep: precision matrix not positive definite");
    const Eigen::MatrixXd chol = llt.matrixL();
    auto p0 = [&](Rng& r) { return r.normal_from_precision_chol(state_.ggm.mu, chol); };
    update_nonallocated(state_.mix, hyper, p0, rng);

    const int m_total = state_.mix.n_components();
    Eigen::MatrixXd table(data_.n_subjects(), m_total);
    if (config_.prior_only) {
      table.setZero();
    } else {
      for (int m = 0; m < m_total; ++m)
        for (int i = 0; i < data_.n_subjects(); ++i)
          table(i, m) = subject_loglik(i, state_.mix.phi_star[m]);
    }
    update_allocations(state_.mix, table, rng);
  }
  auto data_ll = [&](int m, const Eigen::VectorXd& phi) {
    if (config_.prior_only) return 0.0;
    double ll = 0.0;
    for (int i = 0; i < data_.n_subjects(); ++i)
      if (state_.mix.c[i] == m) ll += subject_loglik(i, phi);
    return ll;
  };
  const int k_n = state_.mix.n_allocated();
  stats_.phi_proposed += k_n;
  stats_.phi_accepted += update_phi_star(state_.mix, data_ll, state_.ggm.mu, state_.ggm.omega,
                                         config_.proposal.phi_sd, rng);
}

void Sampler::step_beta_gamma(Rng& rng) {
  const StudyDesign& design = data_.design();
  const bool adapted = state_.iteration > config_.adapt_burnin;
  for (int h = 0; h < design.n_processes(); ++h) {
    for (int which = 0; which < 2; ++which) {  // 0: beta, 1: gamma
      Eigen::MatrixXd& coef = which == 0 ? state_.regression.process[h].beta
                                         : state_.regression.process[h].gamma;
      if (coef.size() == 0) continue;
      AdaptiveProposal& prop = which == 0 ? beta_props_[h] : gamma_props_[h];
      const Eigen::Map<const Eigen::VectorXd> cur(coef.data(), coef.size());
      const Eigen::VectorXd cur_vec = cur;
      const Eigen::VectorXd prop_vec = cur_vec + prop.propose(adapted, rng);

      const double ll_cur = process_loglik_current(h);
      Eigen::MatrixXd coef_prop = coef;
      std::copy(prop_vec.data(), prop_vec.data() + prop_vec.size(), coef_prop.data());
      ProcessParams trial = state_.regression.process[h];
      if (which == 0) trial.beta = coef_prop; else trial.gamma = coef_prop;
      std::vector<Eigen::MatrixXd> off_prop(data_.n_subjects());
      for (int i = 0; i < data_.n_subjects(); ++i)
        off_prop[i] = covariate_offsets(data_.series(i, h), data_.subject(i).x, trial);
      double ll_prop;
      try {
        ll_prop = process_loglik(h, off_prop);
      } catch (const NumericalError&) {
        ll_prop = -std::numeric_limits<double>::infinity();  // overflowing proposal
      }
      // matrix-normal prior with identity row/column covariances
      const double log_prior_diff =
          -0.5 * prop_vec.squaredNorm() + 0.5 * cur_vec.squaredNorm();
      if (which == 0) ++stats_.beta_proposed; else ++stats_.gamma_proposed;
      if (std::log(rng.uniform()) < ll_prop - ll_cur + log_prior_diff) {
        coef = coef_prop;
        for (int i = 0; i < data_.n_subjects(); ++i) offsets_[i][h] = std::move(off_prop[i]);
        if (which == 0) ++stats_.beta_accepted; else ++stats_.gamma_accepted;
      }
      const Eigen::Map<const Eigen::VectorXd> now(coef.data(), coef.size());
      prop.observe(now);
    }
  }
}

double Sampler::graph_prior_log_const(const ProcessGraph& g0, const RateGraph& g, Rng& rng) {
  const auto it = prior_const_cache_.find(g0.bits());
  if (it != prior_const_cache_.end()) return it->second;
  const double value = log_norm_const_mc(prior_, g, config_.n_mc, rng).value;
  prior_const_cache_.emplace(g0.bits(), value);
  return value;
}

void Sampler::step_graph(Rng& rng) {
  const StudyDesign& design = data_.design();
  const GWishartParams post =
      posterior_params(state_.mix.phi_star, m_mu_, state_.ggm.k0, prior_);
  ProcessGraph& g0 = state_.ggm.g0;
  if (g0.n_pairs() >= 1) {
    const int pick = rng.uniform_int(g0.n_pairs());
    int h = 0, k = 1, idx = 0;
    for (h = 0; h < g0.n_nodes(); ++h) {
      bool done = false;
      for (k = h + 1; k < g0.n_nodes(); ++k, ++idx)
        if (idx == pick) { done = true; break; }
      if (done) break;
    }
    ProcessGraph g0_prop = g0;
    g0_prop.toggle_edge(h, k);
    const RateGraph g_prop = expand(g0_prop, design);
    ++stats_.graph_proposed;
    try {
      const double log_accept = log_prior_ratio(g0, h, k, config_.hyper.eta) +
                                log_norm_const_mc(post, g_prop, config_.n_mc, rng).value -
                                log_norm_const_mc(post, state_.ggm.g, config_.n_mc, rng).value +
                                graph_prior_log_const(g0, state_.ggm.g, rng) -
                                graph_prior_log_const(g0_prop, g_prop, rng);
      if (std::log(rng.uniform()) < log_accept) {
        g0 = g0_prop;
        state_.ggm.g = g_prop;
        ++stats_.graph_accepted;
      }
    } catch (const NumericalError& err) {
      if (warn_) *warn_ << "warning: graph move rejected (" << err.what() << ")\n";
    }
  }
  // Omega from its full conditional (mu marginalized) under the current graph
  state_.ggm.omega = sample_direct(post, state_.ggm.g, rng);
}

void Sampler::step_mu_k0(Rng& rng) {
  const int m_total = state_.mix.n_components();
  const int dp = static_cast<int>(m_mu_.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dp);
  for (const auto& phi : state_.mix.phi_star) sum += phi;
  const double k0 = state_.ggm.k0;
  const Eigen::VectorXd mean = (sum + k0 * m_mu_) / (m_total + k0);
  Eigen::MatrixXd prec = (m_total + k0) * state_.ggm.omega;
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericalError("step_mu_k0: precision matrix not positive definite");
  state_.ggm.mu = rng.normal_from_precision_chol(mean, llt.matrixL());

  const Eigen::VectorXd diff = state_.ggm.mu - m_mu_;
  const double rate = config_.hyper.b_k0 + 0.5 * diff.dot(state_.ggm.omega * diff);
  state_.ggm.k0 = rng.gamma(config_.hyper.a_k0 + 0.5 * dp, rate);
}

void Sampler::freeze_partition(const std::vector<int>& allocations) {
  if (static_cast<int>(allocations.size()) != data_.n_subjects())
    throw ValidationError("freeze_partition: allocation length mismatch");
  int k = 0;
  for (int ci : allocations) k = std::max(k, ci + 1);
  for (int ci : allocations)
    if (ci < 0) throw ValidationError("freeze_partition: negative label");
  MixtureState& mix = state_.mix;
  const Eigen::VectorXd center = config_.prior_only ? m_mu_ : crude_log_rates();
  Rng init_rng(splitmix64(config_.seed ^ 0xf02eu));
  mix.s = Eigen::VectorXd::Ones(k);
  mix.c = allocations;
  mix.phi_star.clear();
  for (int m = 0; m < k; ++m)
    mix.phi_star.push_back(center + 0.5 * init_rng.normal_vector(m_mu_.size()));
  mix.compact();
  if (mix.n_allocated() != k)
    throw ValidationError("freeze_partition: labels must be contiguous (every label used)");
  partition_frozen_ = true;
}

SampleRecord Sampler::make_record() const {
  SampleRecord rec;
  rec.iter = state_.iteration;
  rec.n_components = state_.mix.n_components();
  rec.k_n = state_.mix.n_allocated();
  rec.c = state_.mix.c;
  rec.phi_star = state_.mix.phi_star;
  rec.s = state_.mix.s;
  for (const auto& proc : state_.regression.process) {
    rec.beta.push_back(proc.beta);
    rec.gamma.push_back(proc.gamma);
  }
  rec.mu = state_.ggm.mu;
  rec.k0 = state_.ggm.k0;
  rec.g0_edges = state_.ggm.g0.edges();
  rec.log_lik = total_loglik();
  return rec;
}

void Sampler::validate_state() const {
  const StudyDesign& design = data_.design();
  if (!(expand(state_.ggm.g0, design) == state_.ggm.g))
    throw NumericalError("invariant violated: G != expand(G0)");
  const int dp = design.total_rates();
  for (int i = 0; i < dp; ++i)
    for (int j = i + 1; j < dp; ++j)
      if (!state_.ggm.g.has_edge(i, j) && state_.ggm.omega(i, j) != 0.0)
        throw NumericalError("invariant violated: Omega zero pattern");
  if (Eigen::LLT<Eigen::MatrixXd>(state_.ggm.omega).info() != Eigen::Success)
    throw NumericalError("invariant violated: Omega not positive definite");
  const MixtureState& mix = state_.mix;
  if (static_cast<int>(mix.phi_star.size()) != mix.n_components())
    throw NumericalError("invariant violated: weight/location count mismatch");
  if ((mix.s.array() <= 0.0).any()) throw NumericalError("invariant violated: weights");
  if (!(mix.u > 0.0)) throw NumericalError("invariant violated: latent u");
  const auto sizes = mix.cluster_sizes();
  for (int m = 0; m < mix.n_allocated(); ++m)
    if (sizes[m] == 0) throw NumericalError("invariant violated: compaction order");
  for (const auto& phi : mix.phi_star)
    if (!phi.allFinite()) throw NumericalError("invariant violated: phi* not finite");
  for (int i = 0; i < data_.n_subjects(); ++i)
    for (int h = 0; h < design.n_processes(); ++h) {
      const int y = state_.first_states[i][h];
      if (y < 0 || y >= design.n_states(h))
        throw NumericalError("invariant violated: imputed state range");
    }
}

PosteriorChain Sampler::run(Rng& rng, std::ostream* progress,
                            const std::function<void(const SampleRecord&)>& on_sample) {
  warn_ = progress;
  PosteriorChain chain;
  const long n_saved = config_.thin > 0 ? (config_.n_iter - config_.burnin) / config_.thin : 0;
  chain.reserve(std::max(0L, n_saved));
  const long report_every = std::max(1L, config_.n_iter / 20);
  for (long t = 1; t <= config_.n_iter; ++t) {
    state_.iteration = t;
    try {
      step_missing(rng);
      mixture_sweep(rng);
      step_beta_gamma(rng);
      step_graph(rng);
      step_mu_k0(rng);
    } catch (const NumericalError& err) {
      std::ostringstream msg;
      msg << "iteration " << t << ": " << err.what();
      throw NumericalError(msg.str());
    }
    if (t > config_.burnin && (t - config_.burnin) % config_.thin == 0) {
      chain.push_back(make_record());
      if (on_sample) on_sample(chain.back());
    }
    if (progress && t % report_every == 0) {
      *progress << "iter " << t << "/" << config_.n_iter << "  K_N=" << state_.mix.n_allocated()
                << " M=" << state_.mix.n_components()
                << " edges=" << state_.ggm.g0.n_edges();
      if (stats_.phi_proposed > 0)
        *progress << "  acc(phi)=" << static_cast<double>(stats_.phi_accepted) / stats_.phi_proposed;
      if (stats_.beta_proposed > 0)
        *progress << " acc(beta)=" << static_cast<double>(stats_.beta_accepted) / stats_.beta_proposed;
      if (stats_.gamma_proposed > 0)
        *progress << " acc(gamma)=" << static_cast<double>(stats_.gamma_accepted) / stats_.gamma_proposed;
      if (stats_.graph_proposed > 0)
        *progress << " acc(graph)=" << static_cast<double>(stats_.graph_accepted) / stats_.graph_proposed;
      *progress << "\n";
    }
  }
  warn_ = nullptr;
  return chain;
}

}  // namespace sums
