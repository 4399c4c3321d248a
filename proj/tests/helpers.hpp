#pragma once

#include <cmath>

#include "rre/analysis.hpp"
#include "rre/config.hpp"

namespace rre::testing {

// Desk-scale model: a 2-state rotation with spectral radius 1.4 observed by
// three precise scalar sensors. Every sensor pair is observable, so only
// single-sensor epochs inflate the covariance past the rare-event threshold.
inline LinearSystem desk_system(double rho = 1.4, double theta = 0.7) {
  LinearSystem system;
  system.F.resize(2, 2);
  system.F << rho * std::cos(theta), -rho * std::sin(theta),
              rho * std::sin(theta), rho * std::cos(theta);
  system.Q = Eigen::MatrixXd::Identity(2, 2);
  return system;
}

inline SensorSuite desk_suite(double obs_noise = 0.04) {
  SensorSuite suite;
  Sensor s1, s2, s3;
  s1.C.resize(1, 2);
  s1.C << 1, 0;
  s2.C.resize(1, 2);
  s2.C << 0, 1;
  s3.C.resize(1, 2);
  s3.C << std::sqrt(0.5), std::sqrt(0.5);
  s1.R = s2.R = s3.R = obs_noise * Eigen::MatrixXd::Identity(1, 1);
  suite.sensors = {s1, s2, s3};
  return suite;
}

inline LinearSystem scalar_system(double f, double q) {
  LinearSystem system;
  system.F = f * Eigen::MatrixXd::Identity(1, 1);
  system.Q = q * Eigen::MatrixXd::Identity(1, 1);
  return system;
}

inline SensorSuite scalar_suite(double c, double r, int count = 1) {
  SensorSuite suite;
  for (int i = 0; i < count; ++i) {
    Sensor s;
    s.C = c * Eigen::MatrixXd::Identity(1, 1);
    s.R = r * Eigen::MatrixXd::Identity(1, 1);
    suite.sensors.push_back(s);
  }
  return suite;
}

inline Eigen::MatrixXd random_psd(int dim, RngStream& rng, double scale = 1.0) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.gaussian();
  return scale * (a * a.transpose());
}

inline double min_eigenvalue(const Eigen::MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// The 5-cycle matching distribution with a closed-form mean adjacency:
// ring edge weight 0.4, self weight 0.2.
inline MatchingDistribution ring5_matchings(const GossipTopology& ring) {
  std::vector<Matching> support;
  for (int shift = 0; shift < 5; ++shift) {
    Matching m = Matching::identity(5);
    const int a = shift, b = (shift + 1) % 5, c = (shift + 2) % 5, d = (shift + 3) % 5;
    m.partner[static_cast<std::size_t>(a)] = b;
    m.partner[static_cast<std::size_t>(b)] = a;
    m.partner[static_cast<std::size_t>(c)] = d;
    m.partner[static_cast<std::size_t>(d)] = c;
    support.push_back(m);
  }
  return MatchingDistribution(support, std::vector<double>(5, 0.2), ring);
}

}  // namespace rre::testing
