#pragma once

#include <unordered_map>

#include "rre/network.hpp"

namespace rre {

/// Poisson(gamma_bar) message count for one epoch; gamma_bar = 0 draws nothing.
long sample_message_count(double gamma_bar, RngStream& rng);

/// One epoch of the pairwise observation dissemination protocol.
struct DisseminationRound {
  long message_count = 0;
  std::vector<SubsetIndex> index_sets;              // I^n per sensor
  std::vector<std::pair<int, int>> activations;     // audit only
  std::vector<std::vector<int>> ownership_trace;    // s^i rows, audit only
  bool no_edge_warning = false;
};

/// Draws the message count, activates that many uniformly random links, and
/// tracks which observation indices pass through every position.
DisseminationRound run_dissemination(const GossipTopology& topology, double gamma_bar,
                                     RngStream& rng, bool audit = false);

/// Same propagation with a forced activation sequence (test hook).
DisseminationRound replay_dissemination(const GossipTopology& topology,
                                        const std::vector<std::pair<int, int>>& activations,
                                        bool audit = false);

/// Union-over-trace evaluation of the index sets; the oracle for the
/// incremental bookkeeping in run_dissemination.
std::vector<SubsetIndex> index_sets_from_trace(const std::vector<std::vector<int>>& trace);

class EmpiricalQ {
 public:
  EmpiricalQ(int sensor_count, long trials);

  double q_hat(int sensor, const SubsetIndex& subset) const;
  double q_hat_full(int sensor) const;
  long count(int sensor, const SubsetIndex& subset) const;
  long trials() const { return trials_; }
  int sensor_count() const { return n_; }
  void record(int sensor, const SubsetIndex& subset, long count = 1);
  void merge(const EmpiricalQ& other);

 private:
  int n_;
  long trials_;
  std::vector<std::unordered_map<std::uint32_t, long>> counts_;
};

/// Monte Carlo frequencies of the realized index sets over independent rounds.
/// Per-trial seeds derive from `seed`, so results do not depend on `workers`.
EmpiricalQ estimate_q(const GossipTopology& topology, double gamma_bar, long trials,
                      std::uint64_t seed, int workers = 1);

/// Empirical decay exponents (1/gamma) ln q_hat_n(j) over a grid of positive
/// rates; -infinity marks cells with zero observed count.
std::vector<double> exponent_estimate(const GossipTopology& topology,
                                      const std::vector<double>& gamma_grid,
                                      const SubsetIndex& subset, int sensor, long trials,
                                      std::uint64_t seed, int workers = 1);

}  // namespace rre
