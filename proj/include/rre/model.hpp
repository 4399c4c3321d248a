#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "rre/rng.hpp"

namespace rre {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Default numerical tolerances.
inline constexpr double kPsdTol = 1e-9;       // relative, PSD checks
inline constexpr double kPdPivotTol = 1e-12;  // absolute, PD (Cholesky) checks
inline constexpr double kRankTol = 1e-9;      // smallest-singular-value threshold

bool is_symmetric(const Eigen::MatrixXd& A, double rel_tol = 1e-10);
bool is_psd(const Eigen::MatrixXd& A, double rel_tol = kPsdTol);

// Symmetric square root with negative eigenvalues clamped to zero.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& A);

/// Sampled linear dynamics x_{k+1} = F x_k + w_k, w_k ~ N(0, Q).
/// The sampling interval is bookkeeping only; indices are integer epochs.
struct LinearSystem {
  Eigen::MatrixXd F;
  Eigen::MatrixXd Q;
  double sampling_interval = 1.0;

  int state_dim() const { return static_cast<int>(F.rows()); }
  void validate() const;  // F square, Q symmetric PSD
  Eigen::MatrixXd noise_sqrt() const;
};

/// One sensor: y = C x + v, v ~ N(0, R) with R symmetric positive definite.
struct Sensor {
  Eigen::MatrixXd C;
  Eigen::MatrixXd R;

  int obs_dim() const { return static_cast<int>(C.rows()); }
  void validate(int state_dim) const;
};

struct SensorSuite {
  std::vector<Sensor> sensors;

  int count() const { return static_cast<int>(sensors.size()); }
  int total_obs_dim() const;
  void validate(const LinearSystem& system) const;
};

/// Subset of sensors as a bitmask; members enumerate in ascending order.
/// Sensors are 0-based internally, 1-based in text output.
class SubsetIndex {
 public:
  SubsetIndex() = default;
  SubsetIndex(std::uint32_t bits, int sensor_count);

  static SubsetIndex empty_set(int sensor_count) { return {0u, sensor_count}; }
  static SubsetIndex full_set(int sensor_count);
  static SubsetIndex singleton(int sensor, int sensor_count);
  static SubsetIndex of(std::initializer_list<int> sensors, int sensor_count);

  std::uint32_t bits() const { return bits_; }
  int sensor_count() const { return sensor_count_; }
  int size() const;
  bool contains(int sensor) const;
  bool is_empty() const { return bits_ == 0; }
  bool is_full() const;
  std::vector<int> members() const;  // ascending
  void insert(int sensor);

  bool operator==(const SubsetIndex& other) const = default;
  std::string to_string() const;

 private:
  std::uint32_t bits_ = 0;
  int sensor_count_ = 0;
};

struct StackedObservation {
  Eigen::MatrixXd C;  // rows stacked in ascending sensor order
  Eigen::MatrixXd R;  // block diagonal
};

/// C and R of the stacked observation model for a sensor subset.
/// The empty subset yields 0-row matrices.
StackedObservation stack_subset(const SensorSuite& suite, const SubsetIndex& subset);

struct StabilizabilityReport {
  bool stabilizable = false;
  std::string method;  // which path decided
};

/// Checks stabilizability of (F, Q^{1/2}): positive definite Q short-circuits,
/// otherwise a PBH rank test over eigenvalues with modulus >= 1.
StabilizabilityReport check_stabilizability(const LinearSystem& system);

enum class DetectabilityStatus { Satisfied, Inconclusive };

struct DetectabilityReport {
  DetectabilityStatus status = DetectabilityStatus::Inconclusive;
  std::vector<int> walk;  // witness sensor walk (0-based), empty if inconclusive
  double gramian_min_sv = 0.0;
};

Eigen::MatrixXd detectability_gramian(const LinearSystem& system, const SensorSuite& suite,
                                      const std::vector<int>& walk);

/// Searches for a walk (w.r.t. the graph induced by the non-zero entries of
/// mean_adjacency) covering all nodes whose observability Gramian is
/// invertible. Absence of a witness is reported as Inconclusive, never as
/// failure.
DetectabilityReport check_weak_detectability(const LinearSystem& system, const SensorSuite& suite,
                                             const Eigen::MatrixXd& mean_adjacency,
                                             int max_walk_len, int trials, RngStream& rng);

/// x_0 ~ N(0, initial_covariance); returns x_0..x_horizon.
std::vector<Eigen::VectorXd> simulate_trajectory(const LinearSystem& system, int horizon,
                                                 const Eigen::MatrixXd& initial_covariance,
                                                 RngStream& rng);
std::vector<Eigen::VectorXd> simulate_trajectory_from(const LinearSystem& system, int horizon,
                                                      const Eigen::VectorXd& x0, RngStream& rng);

Eigen::VectorXd observe(const Sensor& sensor, const Eigen::VectorXd& x, RngStream& rng);

}  // namespace rre
