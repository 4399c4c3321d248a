#include "rre/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>

namespace rre {

bool is_symmetric(const Eigen::MatrixXd& A, double rel_tol) {
  if (A.rows() != A.cols()) return false;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const Eigen::MatrixXd& A, double rel_tol) {
  if (!is_symmetric(A)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const double lmax = std::max(1e-300, es.eigenvalues().maxCoeff());
  return es.eigenvalues().minCoeff() >= -rel_tol * std::max(1.0, lmax);
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

void LinearSystem::validate() const {
  if (F.rows() == 0 || F.rows() != F.cols())
    throw ConfigError("LinearSystem: F must be square and non-empty");
  if (Q.rows() != F.rows() || Q.cols() != F.cols())
    throw ConfigError("LinearSystem: Q must match the state dimension");
  if (!is_symmetric(Q)) throw ConfigError("LinearSystem: Q must be symmetric");
  if (!is_psd(Q)) throw ConfigError("LinearSystem: Q must be positive semidefinite");
  if (sampling_interval <= 0.0) throw ConfigError("LinearSystem: sampling interval must be positive");
}

Eigen::MatrixXd LinearSystem::noise_sqrt() const { return matrix_sqrt_psd(Q); }

void Sensor::validate(int state_dim) const {
  if (C.rows() == 0) throw ConfigError("Sensor: C must have at least one row");
  if (C.cols() != state_dim) throw ConfigError("Sensor: C column count must equal the state dimension");
  if (R.rows() != C.rows() || R.cols() != C.rows())
    throw ConfigError("Sensor: R must be square with the observation dimension");
  if (!is_symmetric(R)) throw ConfigError("Sensor: R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= kPdPivotTol)
    throw ConfigError("Sensor: R must be positive definite (pivot threshold 1e-12)");
}

int SensorSuite::total_obs_dim() const {
  int total = 0;
  for (const auto& s : sensors) total += s.obs_dim();
  return total;
}

void SensorSuite::validate(const LinearSystem& system) const {
  if (sensors.empty()) throw ConfigError("SensorSuite: at least one sensor required");
  if (sensors.size() > 31) throw ConfigError("SensorSuite: at most 31 sensors supported");
  for (const auto& s : sensors) s.validate(system.state_dim());
}

SubsetIndex::SubsetIndex(std::uint32_t bits, int sensor_count)
    : bits_(bits), sensor_count_(sensor_count) {
  if (sensor_count < 0 || sensor_count > 31)
    throw std::invalid_argument("SubsetIndex: sensor count out of range");
  if (sensor_count < 31 && bits >= (1u << sensor_count))
    throw std::invalid_argument("SubsetIndex: bits exceed sensor count");
}

SubsetIndex SubsetIndex::full_set(int sensor_count) {
  return {static_cast<std::uint32_t>((1u << sensor_count) - 1u), sensor_count};
}

SubsetIndex SubsetIndex::singleton(int sensor, int sensor_count) {
  SubsetIndex s(0u, sensor_count);
  s.insert(sensor);
  return s;
}

SubsetIndex SubsetIndex::of(std::initializer_list<int> sensors, int sensor_count) {
  SubsetIndex s(0u, sensor_count);
  for (int n : sensors) s.insert(n);
  return s;
}

int SubsetIndex::size() const { return std::popcount(bits_); }

bool SubsetIndex::contains(int sensor) const {
  return sensor >= 0 && sensor < sensor_count_ && (bits_ >> sensor) & 1u;
}

bool SubsetIndex::is_full() const {
  return bits_ == ((1u << sensor_count_) - 1u) && sensor_count_ > 0;
}

std::vector<int> SubsetIndex::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (int n = 0; n < sensor_count_; ++n)
    if ((bits_ >> n) & 1u) out.push_back(n);
  return out;
}

void SubsetIndex::insert(int sensor) {
  if (sensor < 0 || sensor >= sensor_count_)
    throw std::invalid_argument("SubsetIndex: sensor out of range");
  bits_ |= (1u << sensor);
}

std::string SubsetIndex::to_string() const {
  std::string out = "{";
  bool first = true;
  for (int n : members()) {
    if (!first) out += ",";
    out += std::to_string(n + 1);
    first = false;
  }
  out += "}";
  return out;
}

StackedObservation stack_subset(const SensorSuite& suite, const SubsetIndex& subset) {
  if (subset.sensor_count() != suite.count())
    throw ConfigError("stack_subset: subset sized for a different suite");
  const int state_dim = suite.sensors.empty() ? 0 : static_cast<int>(suite.sensors[0].C.cols());
  int rows = 0;
  for (int n : subset.members()) rows += suite.sensors[static_cast<std::size_t>(n)].obs_dim();

  StackedObservation out;
  out.C = Eigen::MatrixXd::Zero(rows, state_dim);
  out.R = Eigen::MatrixXd::Zero(rows, rows);
  int at = 0;
  for (int n : subset.members()) {
    const Sensor& s = suite.sensors[static_cast<std::size_t>(n)];
    if (s.C.cols() != state_dim) throw ConfigError("stack_subset: inconsistent state dimension");
    out.C.middleRows(at, s.obs_dim()) = s.C;
    out.R.block(at, at, s.obs_dim(), s.obs_dim()) = s.R;
    at += s.obs_dim();
  }
  return out;
}

StabilizabilityReport check_stabilizability(const LinearSystem& system) {
  system.validate();
  const int m = system.state_dim();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qes(system.Q, Eigen::EigenvaluesOnly);
  const double qmax = qes.eigenvalues().maxCoeff();
  if (qes.eigenvalues().minCoeff() > kPsdTol * std::max(1.0, qmax))
    return {true, "positive-definite Q"};

  // PBH: rank [lambda I - F, Q^{1/2}] must be full for every |lambda| >= 1.
  const Eigen::MatrixXd qs = system.noise_sqrt();
  Eigen::EigenSolver<Eigen::MatrixXd> es(system.F);
  for (int i = 0; i < m; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - 1e-12) continue;
    Eigen::MatrixXcd pencil(m, 2 * m);
    pencil << lambda * Eigen::MatrixXcd::Identity(m, m) - system.F.cast<std::complex<double>>(),
        qs.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const double smin = svd.singularValues()(m - 1);
    const double smax = svd.singularValues()(0);
    if (smin <= kRankTol * std::max(1.0, smax)) {
      StabilizabilityReport rep;
      rep.stabilizable = false;
      rep.method = "PBH rank test failed at |lambda| = " + std::to_string(std::abs(lambda));
      return rep;
    }
  }
  return {true, "PBH rank test"};
}

Eigen::MatrixXd detectability_gramian(const LinearSystem& system, const SensorSuite& suite,
                                      const std::vector<int>& walk) {
  const int m = system.state_dim();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m, m);
  for (int n : walk) {
    const Eigen::MatrixXd cf = suite.sensors[static_cast<std::size_t>(n)].C * power;
    gram += cf.transpose() * cf;
    power = system.F * power;
  }
  return gram;
}

namespace {

double gramian_min_singular_value(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct WalkSearch {
  const LinearSystem& system;
  const SensorSuite& suite;
  std::vector<std::vector<int>> neighbors;
  int max_len;
  long budget;
  DetectabilityReport found;

  bool dfs(std::vector<int>& walk, std::uint32_t covered, const Eigen::MatrixXd& gram,
           const Eigen::MatrixXd& power) {
    if (budget-- <= 0) return false;
    const std::uint32_t all = (1u << suite.count()) - 1u;
    if (covered == all) {
      const double smin = gramian_min_singular_value(gram);
      if (smin > kRankTol) {
        found.status = DetectabilityStatus::Satisfied;
        found.walk = walk;
        found.gramian_min_sv = smin;
        return true;
      }
    }
    if (static_cast<int>(walk.size()) >= max_len) return false;
    for (int next : neighbors[static_cast<std::size_t>(walk.back())]) {
      const Eigen::MatrixXd cf = suite.sensors[static_cast<std::size_t>(next)].C * power;
      walk.push_back(next);
      if (dfs(walk, covered | (1u << next), gram + cf.transpose() * cf, system.F * power))
        return true;
      walk.pop_back();
      if (budget <= 0) return false;
    }
    return false;
  }
};

}  // namespace

DetectabilityReport check_weak_detectability(const LinearSystem& system, const SensorSuite& suite,
                                             const Eigen::MatrixXd& mean_adjacency,
                                             int max_walk_len, int trials, RngStream& rng) {
  system.validate();
  suite.validate(system);
  const int n_nodes = suite.count();
  if (mean_adjacency.rows() != n_nodes || mean_adjacency.cols() != n_nodes)
    throw ConfigError("check_weak_detectability: adjacency size mismatch");
  if (max_walk_len <= 0) max_walk_len = 2 * n_nodes * system.state_dim();

  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j)
      if (mean_adjacency(i, j) > 0.0) neighbors[static_cast<std::size_t>(i)].push_back(j);

  WalkSearch search{system, suite, neighbors, max_walk_len, 100000, {}};
  const int m = system.state_dim();
  for (int start = 0; start < n_nodes && search.budget > 0; ++start) {
    std::vector<int> walk{start};
    const Eigen::MatrixXd c0 = suite.sensors[static_cast<std::size_t>(start)].C;
    if (search.dfs(walk, 1u << start, c0.transpose() * c0, system.F)) return search.found;
  }

  // Randomized walks after the deterministic budget runs out.
  const std::uint32_t all = (1u << n_nodes) - 1u;
  for (int t = 0; t < trials; ++t) {
    int node = rng.uniform_int(n_nodes);
    std::vector<int> walk{node};
    std::uint32_t covered = 1u << node;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    {
      const Eigen::MatrixXd cf = suite.sensors[static_cast<std::size_t>(node)].C * power;
      gram += cf.transpose() * cf;
      power = system.F * power;
    }
    for (int step = 1; step < max_walk_len; ++step) {
      const auto& nb = neighbors[static_cast<std::size_t>(node)];
      if (nb.empty()) break;
      node = nb[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(nb.size())))];
      walk.push_back(node);
      covered |= 1u << node;
      const Eigen::MatrixXd cf = suite.sensors[static_cast<std::size_t>(node)].C * power;
      gram += cf.transpose() * cf;
      power = system.F * power;
      if (covered == all) {
        const double smin = gramian_min_singular_value(gram);
        if (smin > kRankTol) return {DetectabilityStatus::Satisfied, walk, smin};
      }
    }
  }
  return {};
}

std::vector<Eigen::VectorXd> simulate_trajectory(const LinearSystem& system, int horizon,
                                                 const Eigen::MatrixXd& initial_covariance,
                                                 RngStream& rng) {
  const int m = system.state_dim();
  const Eigen::MatrixXd p0s = matrix_sqrt_psd(initial_covariance);
  Eigen::VectorXd x0(m);
  for (int i = 0; i < m; ++i) x0(i) = rng.gaussian();
  return simulate_trajectory_from(system, horizon, (p0s * x0).eval(), rng);
}

std::vector<Eigen::VectorXd> simulate_trajectory_from(const LinearSystem& system, int horizon,
                                                      const Eigen::VectorXd& x0, RngStream& rng) {
  system.validate();
  if (horizon < 0) throw std::invalid_argument("simulate_trajectory: negative horizon");
  const int m = system.state_dim();
  const Eigen::MatrixXd qs = system.noise_sqrt();
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(horizon) + 1);
  out.push_back(x0);
  Eigen::VectorXd noise(m);
  for (int k = 0; k < horizon; ++k) {
    for (int i = 0; i < m; ++i) noise(i) = rng.gaussian();
    out.push_back(system.F * out.back() + qs * noise);
  }
  return out;
}

Eigen::VectorXd observe(const Sensor& sensor, const Eigen::VectorXd& x, RngStream& rng) {
  if (x.size() != sensor.C.cols()) throw std::invalid_argument("observe: state dimension mismatch");
  const Eigen::MatrixXd rs = matrix_sqrt_psd(sensor.R);
  Eigen::VectorXd noise(sensor.obs_dim());
  for (int i = 0; i < sensor.obs_dim(); ++i) noise(i) = rng.gaussian();
  return sensor.C * x + rs * noise;
}

}  // namespace rre
