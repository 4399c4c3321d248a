#include "rre/filter.hpp"

#include <cmath>

namespace rre {

FilterEnsemble make_ensemble(const LinearSystem& system, int sensor_count,
                             const Eigen::VectorXd& initial_estimate,
                             const Eigen::MatrixXd& initial_covariance) {
  system.validate();
  if (initial_estimate.size() != system.state_dim())
    throw ConfigError("make_ensemble: initial estimate dimension mismatch");
  if (initial_covariance.rows() != system.state_dim() ||
      initial_covariance.cols() != system.state_dim())
    throw ConfigError("make_ensemble: initial covariance dimension mismatch");
  FilterEnsemble e;
  e.states.assign(static_cast<std::size_t>(sensor_count),
                  {initial_estimate, initial_covariance});
  e.particle_location.resize(static_cast<std::size_t>(sensor_count));
  for (int n = 0; n < sensor_count; ++n) e.particle_location[static_cast<std::size_t>(n)] = n;
  e.particle_cov.assign(static_cast<std::size_t>(sensor_count), initial_covariance);
  return e;
}

void swap_states(FilterEnsemble& ensemble, const Matching& matching) {
  const int n = static_cast<int>(ensemble.states.size());
  if (matching.size() != n) throw std::invalid_argument("swap_states: matching size mismatch");
  for (int i = 0; i < n; ++i) {
    const int p = matching.partner[static_cast<std::size_t>(i)];
    if (p < 0 || p >= n || matching.partner[static_cast<std::size_t>(p)] != i)
      throw std::invalid_argument("swap_states: input is not a matching");
    if (p > i) std::swap(ensemble.states[static_cast<std::size_t>(i)],
                         ensemble.states[static_cast<std::size_t>(p)]);
  }
  for (int& loc : ensemble.particle_location) loc = matching.partner[static_cast<std::size_t>(loc)];
}

Eigen::MatrixXd covariance_update(const LinearSystem& system, const SensorSuite& suite,
                                  const Eigen::MatrixXd& P, const SubsetIndex& subset) {
  return riccati_op(system, suite, subset, P);
}

SensorState estimate_update(const LinearSystem& system, const SensorSuite& suite,
                            const SensorState& state, const Eigen::VectorXd& stacked_observation,
                            const SubsetIndex& subset) {
  if (subset.is_empty()) {
    // No-information limit: pure prediction.
    return {system.F * state.estimate, lyapunov_op(system, state.covariance)};
  }
  const StackedObservation obs = stack_subset(suite, subset);
  if (stacked_observation.size() != obs.C.rows())
    throw std::invalid_argument("estimate_update: observation dimension mismatch with subset");
  const Eigen::MatrixXd innovation_cov =
      symmetrize(obs.C * state.covariance * obs.C.transpose() + obs.R);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(innovation_cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("estimate_update: innovation covariance not positive definite");
  const Eigen::MatrixXd fpct = system.F * state.covariance * obs.C.transpose();
  const Eigen::MatrixXd gain = ldlt.solve(fpct.transpose()).transpose();  // K = F P C' S^{-1}
  SensorState next;
  next.estimate = system.F * state.estimate + gain * (stacked_observation - obs.C * state.estimate);
  next.covariance = covariance_update(system, suite, state.covariance, subset);
  return next;
}

Eigen::VectorXd stack_observations(const std::vector<Eigen::VectorXd>& per_sensor,
                                   const SubsetIndex& subset) {
  long rows = 0;
  for (int n : subset.members()) rows += per_sensor[static_cast<std::size_t>(n)].size();
  Eigen::VectorXd out(rows);
  long at = 0;
  for (int n : subset.members()) {
    const Eigen::VectorXd& y = per_sensor[static_cast<std::size_t>(n)];
    out.segment(at, y.size()) = y;
    at += y.size();
  }
  return out;
}

namespace {

void check_particle_identity(const FilterEnsemble& ensemble) {
  for (std::size_t n = 0; n < ensemble.states.size(); ++n) {
    const auto& particle = ensemble.particle_cov[n];
    const auto& sensor =
        ensemble.states[static_cast<std::size_t>(ensemble.particle_location[n])].covariance;
    if (!(particle.array() == sensor.array()).all())
      throw std::logic_error("particle/sensor covariance identity violated at epoch " +
                             std::to_string(ensemble.epoch));
  }
}

void step_common(FilterEnsemble& ensemble, const LinearSystem& system, const SensorSuite& suite,
                 const StepConfig& cfg, const Eigen::VectorXd& truth, EpochRngs& rngs,
                 const std::vector<SubsetIndex>& index_sets) {
  const int n = suite.count();

  std::vector<Eigen::VectorXd> observations;
  observations.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    observations.push_back(observe(suite.sensors[static_cast<std::size_t>(i)], truth, rngs.noise));

  std::vector<SensorState> next(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const SubsetIndex& set = index_sets[static_cast<std::size_t>(i)];
    if (!set.contains(i))
      throw std::logic_error("dissemination produced an index set missing the owner sensor");
    next[static_cast<std::size_t>(i)] = estimate_update(
        system, suite, ensemble.states[static_cast<std::size_t>(i)],
        stack_observations(observations, set), set);
  }
  ensemble.states = std::move(next);

  // Switched Riccati iterate of each particle, driven by the index set at its
  // post-swap location; this is the independent path the identity check pins
  // against the sensor recursion.
  for (int p = 0; p < n; ++p) {
    const SubsetIndex& set =
        index_sets[static_cast<std::size_t>(ensemble.particle_location[static_cast<std::size_t>(p)])];
    ensemble.particle_cov[static_cast<std::size_t>(p)] =
        riccati_op(system, suite, set, ensemble.particle_cov[static_cast<std::size_t>(p)]);
  }

  ensemble.last_index_sets = index_sets;
  ensemble.epoch += 1;
  if (cfg.assert_every > 0 && ensemble.epoch % cfg.assert_every == 0)
    check_particle_identity(ensemble);
}

}  // namespace

void step_mgikf(FilterEnsemble& ensemble, const LinearSystem& system, const SensorSuite& suite,
                const GossipTopology& topology, const MatchingDistribution& dist,
                const StepConfig& cfg, const Eigen::VectorXd& truth, EpochRngs rngs) {
  swap_states(ensemble, dist.sample(rngs.swap));
  const DisseminationRound round = run_dissemination(topology, cfg.gamma_bar, rngs.dissemination);
  step_common(ensemble, system, suite, cfg, truth, rngs, round.index_sets);
}

void step_gikf(FilterEnsemble& ensemble, const LinearSystem& system, const SensorSuite& suite,
               const MatchingDistribution& dist, const StepConfig& cfg,
               const Eigen::VectorXd& truth, EpochRngs rngs) {
  swap_states(ensemble, dist.sample(rngs.swap));
  const int n = suite.count();
  std::vector<SubsetIndex> own;
  own.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) own.push_back(SubsetIndex::singleton(i, n));
  step_common(ensemble, system, suite, cfg, truth, rngs, own);
}

SensorState centralized_step(const LinearSystem& system, const SensorSuite& suite,
                             const SensorState& state, const Eigen::VectorXd& all_observations) {
  return estimate_update(system, suite, state, all_observations,
                         SubsetIndex::full_set(suite.count()));
}

CovarianceEnsemble make_covariance_ensemble(const LinearSystem& system, int sensor_count,
                                            const Eigen::MatrixXd& initial_covariance) {
  system.validate();
  CovarianceEnsemble e;
  e.covariances.assign(static_cast<std::size_t>(sensor_count), initial_covariance);
  e.particle_location.resize(static_cast<std::size_t>(sensor_count));
  for (int n = 0; n < sensor_count; ++n) e.particle_location[static_cast<std::size_t>(n)] = n;
  return e;
}

void step_covariances(CovarianceEnsemble& ensemble, const LinearSystem& system,
                      const SensorSuite& suite, const GossipTopology& topology,
                      const MatchingDistribution& dist, double gamma_bar, RngStream& swap,
                      RngStream& dissemination, double divergence_guard) {
  const int n = static_cast<int>(ensemble.covariances.size());
  const Matching& matching = dist.sample(swap);
  for (int i = 0; i < n; ++i) {
    const int p = matching.partner[static_cast<std::size_t>(i)];
    if (p > i) std::swap(ensemble.covariances[static_cast<std::size_t>(i)],
                         ensemble.covariances[static_cast<std::size_t>(p)]);
  }
  for (int& loc : ensemble.particle_location) loc = matching.partner[static_cast<std::size_t>(loc)];

  const DisseminationRound round = run_dissemination(topology, gamma_bar, dissemination);
  for (int i = 0; i < n; ++i) {
    ensemble.covariances[static_cast<std::size_t>(i)] =
        riccati_op(system, suite, round.index_sets[static_cast<std::size_t>(i)],
                   ensemble.covariances[static_cast<std::size_t>(i)]);
    if (ensemble.covariances[static_cast<std::size_t>(i)].trace() > divergence_guard)
      ensemble.diverged = true;
  }
  ensemble.last_index_sets = round.index_sets;
  ensemble.epoch += 1;
}

AuxiliaryTrajectory run_auxiliary_sequence(const LinearSystem& system, const SensorSuite& suite,
                                           const GossipTopology& topology,
                                           const MatchingDistribution& dist, double gamma_bar,
                                           const Eigen::MatrixXd& initial_covariance, int k_max,
                                           RngStream& rng) {
  const int n = suite.count();
  const Eigen::MatrixXd abar = dist.mean_adjacency();

  AuxiliaryTrajectory out;
  out.covariances.reserve(static_cast<std::size_t>(k_max) + 1);
  out.locations.reserve(static_cast<std::size_t>(k_max) + 1);
  out.covariances.push_back(initial_covariance);
  out.locations.push_back(rng.uniform_int(n));  // stationary start: uniform on V

  for (int k = 0; k < k_max; ++k) {
    const int loc = out.locations.back();
    const DisseminationRound round = run_dissemination(topology, gamma_bar, rng);
    out.covariances.push_back(riccati_op(system, suite,
                                         round.index_sets[static_cast<std::size_t>(loc)],
                                         out.covariances.back()));
    // One A-bar transition by inverse-CDF over the current row.
    const double u = rng.uniform();
    double acc = 0.0;
    int next = n - 1;
    for (int j = 0; j < n; ++j) {
      acc += abar(loc, j);
      if (u < acc) {
        next = j;
        break;
      }
    }
    out.locations.push_back(next);
  }
  return out;
}

}  // namespace rre
