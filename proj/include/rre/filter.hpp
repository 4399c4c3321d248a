#pragma once

#include "rre/gossip.hpp"
#include "rre/riccati.hpp"

namespace rre {

struct SensorState {
  Eigen::VectorXd estimate;    // one-step-ahead prediction
  Eigen::MatrixXd covariance;  // predicted error covariance
};

/// Per-sensor filter states plus the particle bookkeeping of the switched
/// Riccati representation: particle n sits at sensor particle_location[n] and
/// carries particle_cov[n], which must equal that sensor's covariance at
/// every epoch.
struct FilterEnsemble {
  std::vector<SensorState> states;
  std::vector<int> particle_location;         // pi_k(n)
  std::vector<Eigen::MatrixXd> particle_cov;  // P_n(k)
  std::vector<SubsetIndex> last_index_sets;   // I^n of the last epoch
  long epoch = 0;
};

FilterEnsemble make_ensemble(const LinearSystem& system, int sensor_count,
                             const Eigen::VectorXd& initial_estimate,
                             const Eigen::MatrixXd& initial_covariance);

/// Exchanges states along the matching and advances the permutation.
void swap_states(FilterEnsemble& ensemble, const Matching& matching);

/// Delegates to the subset Riccati operator.
Eigen::MatrixXd covariance_update(const LinearSystem& system, const SensorSuite& suite,
                                  const Eigen::MatrixXd& P, const SubsetIndex& subset);

/// One Kalman predict-update with the stacked observation model of `subset`.
/// An empty subset is the no-information limit (pure prediction).
SensorState estimate_update(const LinearSystem& system, const SensorSuite& suite,
                            const SensorState& state, const Eigen::VectorXd& stacked_observation,
                            const SubsetIndex& subset);

Eigen::VectorXd stack_observations(const std::vector<Eigen::VectorXd>& per_sensor,
                                   const SubsetIndex& subset);

struct EpochRngs {
  RngStream& swap;
  RngStream& dissemination;
  RngStream& noise;
};

struct StepConfig {
  double gamma_bar = 0.0;
  int assert_every = 1;  // particle/sensor equality check cadence; 0 disables
};

/// One M-GIKF epoch: state swap, observation, dissemination, update.
void step_mgikf(FilterEnsemble& ensemble, const LinearSystem& system, const SensorSuite& suite,
                const GossipTopology& topology, const MatchingDistribution& dist,
                const StepConfig& cfg, const Eigen::VectorXd& truth, EpochRngs rngs);

/// GIKF baseline: the same epoch with every index set forced to {n}. Consumes
/// the swap and noise streams exactly as step_mgikf does.
void step_gikf(FilterEnsemble& ensemble, const LinearSystem& system, const SensorSuite& suite,
               const MatchingDistribution& dist, const StepConfig& cfg,
               const Eigen::VectorXd& truth, EpochRngs rngs);

/// Centralized baseline: update with the full sensor set.
SensorState centralized_step(const LinearSystem& system, const SensorSuite& suite,
                             const SensorState& state, const Eigen::VectorXd& all_observations);

/// Covariance-only epoch state; produces the identical covariance path to
/// step_mgikf under shared swap/dissemination streams (the noise stream only
/// feeds estimates). This is the kernel the measure sampler iterates.
struct CovarianceEnsemble {
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<int> particle_location;
  std::vector<SubsetIndex> last_index_sets;
  long epoch = 0;
  bool diverged = false;
};

CovarianceEnsemble make_covariance_ensemble(const LinearSystem& system, int sensor_count,
                                            const Eigen::MatrixXd& initial_covariance);

void step_covariances(CovarianceEnsemble& ensemble, const LinearSystem& system,
                      const SensorSuite& suite, const GossipTopology& topology,
                      const MatchingDistribution& dist, double gamma_bar, RngStream& swap,
                      RngStream& dissemination, double divergence_guard = 1e12);

/// Auxiliary stationary-switching trajectory: a single covariance driven by
/// the index set observed at a stationary A-bar Markov chain location.
struct AuxiliaryTrajectory {
  std::vector<Eigen::MatrixXd> covariances;  // P-tilde(0..k_max)
  std::vector<int> locations;                // z-tilde(0..k_max)
};

AuxiliaryTrajectory run_auxiliary_sequence(const LinearSystem& system, const SensorSuite& suite,
                                           const GossipTopology& topology,
                                           const MatchingDistribution& dist, double gamma_bar,
                                           const Eigen::MatrixXd& initial_covariance, int k_max,
                                           RngStream& rng);

}  // namespace rre
