#include "sums/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace sums {

SimScenario SimScenario::sm4_preset() {
  SimScenario sc;
  sc.n_subjects = 200;
  sc.processes = {{2, ProcessRole::response, 2, 2},
                  {2, ProcessRole::explanatory, 0, 0},
                  {2, ProcessRole::explanatory, 0, 0}};
  sc.cluster_proportions = Eigen::Vector2d(1.0 / 3.0, 2.0 / 3.0);
  Eigen::VectorXd crude(6);
  crude << 0.12, 0.37, 0.11, 0.26, 0.21, 0.34;
  crude = crude.array().log();
  sc.phi_star = {crude, crude.array() + 1.0};
  sc.beta.resize(2, 2);
  sc.beta << 1.0, 1.0, -1.0, -1.0;
  sc.gamma.resize(2, 2);
  sc.gamma << 0.75, -1.25, 1.25, -0.75;
  return sc;
}

void SimScenario::validate() const {
  if (n_subjects < 1) throw ValidationError("SimScenario: need at least one subject");
  if (processes.empty()) throw ValidationError("SimScenario: need at least one process");
  const StudyDesign design(processes);
  if (std::abs(cluster_proportions.sum() - 1.0) > 1e-9)
    throw ValidationError("SimScenario: cluster proportions must sum to 1");
  if (cluster_proportions.size() != static_cast<Eigen::Index>(phi_star.size()))
    throw ValidationError("SimScenario: proportions/phi* count mismatch");
  for (const auto& phi : phi_star)
    if (phi.size() != design.total_rates())
      throw ValidationError("SimScenario: phi* dimension must equal D_p");
  if (missing_rate < 0.0 || missing_rate > 1.0)
    throw ValidationError("SimScenario: missing rate must be in [0,1]");
  if (missing_process < 0 || missing_process >= static_cast<int>(processes.size()))
    throw ValidationError("SimScenario: missing process out of range");
  for (const auto& spec : processes) {
    // the covariate-generation rules are fixed (one normal + one Bernoulli;
    // two Gaussian time-varying trends), so counts are 0 or 2
    if (spec.n_x != 0 && spec.n_x != 2)
      throw ValidationError("SimScenario: n_x must be 0 or 2");
    if (spec.n_z != 0 && spec.n_z != 2)
      throw ValidationError("SimScenario: n_z must be 0 or 2");
  }
}

std::vector<double> gen_times(double horizon, double min_gap, Rng& rng) {
  std::vector<double> times{0.0};
  for (;;) {
    const double next = times.back() + rng.truncated_normal_lower(1.0, 1.0, min_gap);
    if (next > horizon && times.size() >= 2) break;
    if (next > horizon) continue;  // a panel needs at least two observations
    times.push_back(next);
  }
  return times;
}

Eigen::VectorXd gen_x(Rng& rng) {
  Eigen::VectorXd x(2);
  x[0] = rng.normal();
  x[1] = rng.bernoulli(0.25) ? 1.0 : 0.0;
  return x;
}

Eigen::MatrixXd gen_z(const std::vector<double>& times, double horizon, Rng& rng) {
  const double sd = std::sqrt(0.5);
  Eigen::MatrixXd z(times.size(), 2);
  for (std::size_t j = 0; j < times.size(); ++j) {
    z(j, 0) = rng.normal(times[j] / horizon, sd);
    z(j, 1) = rng.normal(std::cos(2.0 * M_PI * times[j] / horizon), sd);
  }
  return z;
}

SimResult gen_panel(const SimScenario& scenario, Rng& rng) {
  scenario.validate();
  const StudyDesign design(scenario.processes);
  const int n = scenario.n_subjects;
  const int p = design.n_processes();

  SimTruth truth;
  truth.phi_star = scenario.phi_star;
  truth.beta = scenario.beta;
  truth.gamma = scenario.gamma;
  truth.allocations.resize(n);

  std::vector<Subject> subjects(n);
  for (int i = 0; i < n; ++i) {
    truth.allocations[i] = rng.categorical(scenario.cluster_proportions);
    const Eigen::VectorXd& phi = scenario.phi_star[truth.allocations[i]];

    // one grid shared by all processes of the subject
    const std::vector<double> times = gen_times(scenario.horizon, scenario.min_gap, rng);
    Subject& subj = subjects[i];
    subj.series.resize(p);

    for (int h = 0; h < p; ++h) {
      ProcessSeries& s = subj.series[h];
      s.times = times;
      const ProcessSpec& spec = design.process(h);
      if (spec.n_x > 0 && subj.x.size() == 0) subj.x = gen_x(rng);
      if (spec.n_z > 0) s.z = gen_z(times, scenario.horizon, rng);

      ProcessParams params{
          spec.n_x > 0 ? scenario.beta : Eigen::MatrixXd(0, design.n_rates(h)),
          spec.n_z > 0 ? scenario.gamma : Eigen::MatrixXd(0, design.n_rates(h))};
      const Eigen::MatrixXd off = covariate_offsets(s, subj.x, params);
      const Eigen::VectorXd phi_h = phi.segment(design.rate_offset(h), design.n_rates(h));

      // initial state from the stationary law of the first-interval rates
      const Generator q0(rate_vector(phi_h, off, 0), spec.n_states);
      s.states.resize(times.size());
      s.states[0] = rng.categorical(stationary(q0).pi);
      int state = s.states[0];
      // evolve piecewise-constant: interval (t_{j-1}, t_j] uses the rates of
      // the observation ending it
      for (std::size_t j = 1; j < times.size(); ++j) {
        const Generator q(rate_vector(phi_h, off, static_cast<int>(j)), spec.n_states);
        state = evolve_state(q, state, times[j] - times[j - 1], rng);
        s.states[j] = state;
      }
    }
  }

  // deterministic masking: the first ceil(rate*N) subjects of a seeded
  // shuffle lose their first observation of the designated process
  if (scenario.missing_rate > 0.0) {
    const int n_mask = static_cast<int>(std::ceil(scenario.missing_rate * n));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    for (int m = 0; m < n_mask; ++m) {
      ProcessSeries& s = subjects[order[m]].series[scenario.missing_process];
      if (s.times.size() < 2) continue;  // keep the series valid
      s.states[0] = -1;
      s.missing_first = true;
    }
  }

  return {PanelDataset(design, std::move(subjects)), std::move(truth)};
}

}  // namespace sums
