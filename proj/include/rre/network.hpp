#pragma once

#include <iosfwd>
#include <utility>

#include "rre/model.hpp"

namespace rre {

/// Undirected communication graph over N sensors. The maximal adjacency has a
/// unit diagonal: a sensor can always communicate with itself.
struct GossipTopology {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based, first < second

  Eigen::MatrixXd max_adjacency() const;
  bool has_edge(int a, int b) const;
  void validate() const;

  static GossipTopology complete(int n);
  static GossipTopology path(int n);
  static GossipTopology ring(int n);
  /// Text format: node count on the first line, one "u v" edge per line,
  /// 1-based node ids.
  static GossipTopology from_stream(std::istream& in);
};

/// Perfect matching with self-loops: an involutive permutation.
struct Matching {
  std::vector<int> partner;

  static Matching identity(int n);
  int size() const { return static_cast<int>(partner.size()); }
  bool is_identity() const;
  Eigen::MatrixXd matrix() const;
  void validate(const GossipTopology& topology) const;
};

class MatchingDistribution {
 public:
  MatchingDistribution(std::vector<Matching> support, std::vector<double> probabilities,
                       const GossipTopology& topology);

  /// Uniform distribution over the distinct maximal matchings discovered by a
  /// randomized greedy matcher.
  static MatchingDistribution uniform_greedy(const GossipTopology& topology, int trials,
                                             RngStream& rng);

  const Matching& sample(RngStream& rng) const;
  Eigen::MatrixXd mean_adjacency() const;  // A-bar, doubly stochastic
  const std::vector<Matching>& support() const { return support_; }
  const std::vector<double>& probabilities() const { return probs_; }

 private:
  std::vector<Matching> support_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

struct ChainCheckReport {
  bool irreducible = false;
  bool aperiodic = false;
  std::string detail;
  bool ok() const { return irreducible && aperiodic; }
};

ChainCheckReport check_irreducible_aperiodic(const Eigen::MatrixXd& chain);

/// Single-particle transition matrix of the dissemination protocol: the mean
/// of the edge-activation permutations, (1/|E|) sum E^{nl}.
Eigen::MatrixXd dissemination_chain(const GossipTopology& topology);

/// tails(k, i) = P(T_i > k) for the hitting time of `target` from i, computed
/// by the exact substochastic dynamic program; rows k = 0..k_max.
Eigen::MatrixXd hitting_tail(const Eigen::MatrixXd& chain, int target, int k_max);

struct HittingConstants {
  double alpha = 0.0;
  double beta = 0.0;
  int window = 0;  // L
};

/// alpha = max, beta = min of the L-step tail over all targets and starts.
/// Requires 0 < alpha < 1 at the chosen window.
HittingConstants hitting_constants(const Eigen::MatrixXd& chain, int window);

/// Smallest L (up to max_window, default 10 N) with 0 < alpha < 1.
int default_hitting_window(const Eigen::MatrixXd& chain, int max_window = 0);

struct QBounds {
  double upper = 0.0;  // q-bar_n(j)
  double lower = 0.0;  // q-underbar_n(j)
};

/// Exponent bounds q-bar = -ln(alpha)/L and q-underbar = (N-m)(-ln(beta))/L
/// for a member sensor; infinite for non-members, zero lower bound for the
/// full set.
QBounds q_exponent_bounds(double alpha, double beta, int window, int sensor_count,
                          const SubsetIndex& subset, int sensor);

}  // namespace rre
