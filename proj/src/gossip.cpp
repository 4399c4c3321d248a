#include "rre/gossip.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rre {

long sample_message_count(double gamma_bar, RngStream& rng) {
  if (gamma_bar < 0.0) throw std::domain_error("sample_message_count: negative rate");
  return rng.poisson(gamma_bar);
}

namespace {

DisseminationRound propagate(const GossipTopology& topology,
                             const std::vector<std::pair<int, int>>& activations, bool audit) {
  const int n = topology.node_count;
  DisseminationRound round;
  round.message_count = static_cast<long>(activations.size());

  std::vector<int> ownership(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ownership[static_cast<std::size_t>(i)] = i;
  round.index_sets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) round.index_sets.push_back(SubsetIndex::singleton(i, n));
  if (audit) {
    round.activations = activations;
    round.ownership_trace.push_back(ownership);
  }

  for (const auto& [u, v] : activations) {
    std::swap(ownership[static_cast<std::size_t>(u)], ownership[static_cast<std::size_t>(v)]);
    round.index_sets[static_cast<std::size_t>(u)].insert(ownership[static_cast<std::size_t>(u)]);
    round.index_sets[static_cast<std::size_t>(v)].insert(ownership[static_cast<std::size_t>(v)]);
    if (audit) round.ownership_trace.push_back(ownership);
  }
  return round;
}

}  // namespace

DisseminationRound run_dissemination(const GossipTopology& topology, double gamma_bar,
                                     RngStream& rng, bool audit) {
  const long count = sample_message_count(gamma_bar, rng);
  if (topology.edges.empty()) {
    DisseminationRound round = propagate(topology, {}, audit);
    round.message_count = count;
    round.no_edge_warning = count > 0;
    return round;
  }
  std::vector<std::pair<int, int>> activations;
  activations.reserve(static_cast<std::size_t>(count));
  const int edge_count = static_cast<int>(topology.edges.size());
  for (long i = 0; i < count; ++i)
    activations.push_back(topology.edges[static_cast<std::size_t>(rng.uniform_int(edge_count))]);
  return propagate(topology, activations, audit);
}

DisseminationRound replay_dissemination(const GossipTopology& topology,
                                        const std::vector<std::pair<int, int>>& activations,
                                        bool audit) {
  for (const auto& [u, v] : activations)
    if (u == v || !topology.has_edge(u, v))
      throw std::invalid_argument("replay_dissemination: activation is not a network link");
  return propagate(topology, activations, audit);
}

std::vector<SubsetIndex> index_sets_from_trace(const std::vector<std::vector<int>>& trace) {
  if (trace.empty()) throw std::invalid_argument("index_sets_from_trace: empty trace");
  const int n = static_cast<int>(trace.front().size());
  std::vector<SubsetIndex> sets;
  sets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sets.push_back(SubsetIndex::empty_set(n));
  for (const auto& row : trace)
    for (int i = 0; i < n; ++i) sets[static_cast<std::size_t>(i)].insert(row[static_cast<std::size_t>(i)]);
  return sets;
}

EmpiricalQ::EmpiricalQ(int sensor_count, long trials)
    : n_(sensor_count), trials_(trials), counts_(static_cast<std::size_t>(sensor_count)) {
  if (sensor_count < 1) throw std::invalid_argument("EmpiricalQ: sensor count must be positive");
}

double EmpiricalQ::q_hat(int sensor, const SubsetIndex& subset) const {
  return static_cast<double>(count(sensor, subset)) / static_cast<double>(trials_);
}

double EmpiricalQ::q_hat_full(int sensor) const {
  return q_hat(sensor, SubsetIndex::full_set(n_));
}

long EmpiricalQ::count(int sensor, const SubsetIndex& subset) const {
  const auto& map = counts_[static_cast<std::size_t>(sensor)];
  const auto it = map.find(subset.bits());
  return it == map.end() ? 0 : it->second;
}

void EmpiricalQ::record(int sensor, const SubsetIndex& subset, long count) {
  counts_[static_cast<std::size_t>(sensor)][subset.bits()] += count;
}

void EmpiricalQ::merge(const EmpiricalQ& other) {
  for (int sensor = 0; sensor < n_; ++sensor)
    for (const auto& [bits, count] : other.counts_[static_cast<std::size_t>(sensor)])
      counts_[static_cast<std::size_t>(sensor)][bits] += count;
}

EmpiricalQ estimate_q(const GossipTopology& topology, double gamma_bar, long trials,
                      std::uint64_t seed, int workers) {
  if (trials < 1) throw std::invalid_argument("estimate_q: trials must be >= 1");
  topology.validate();
  EmpiricalQ total(topology.node_count, trials);

#ifdef _OPENMP
  const int thread_count = workers > 0 ? workers : omp_get_max_threads();
#else
  const int thread_count = 1;
#endif

  if (thread_count == 1) {
    for (long t = 0; t < trials; ++t) {
      RngStream rng(mix_seed(seed, static_cast<std::uint64_t>(t), kStreamDissemination));
      const DisseminationRound round = run_dissemination(topology, gamma_bar, rng);
      for (int n = 0; n < topology.node_count; ++n)
        total.record(n, round.index_sets[static_cast<std::size_t>(n)]);
    }
    return total;
  }

#ifdef _OPENMP
#pragma omp parallel num_threads(thread_count)
  {
    EmpiricalQ local(topology.node_count, trials);
#pragma omp for schedule(static)
    for (long t = 0; t < trials; ++t) {
      RngStream rng(mix_seed(seed, static_cast<std::uint64_t>(t), kStreamDissemination));
      const DisseminationRound round = run_dissemination(topology, gamma_bar, rng);
      for (int n = 0; n < topology.node_count; ++n)
        local.record(n, round.index_sets[static_cast<std::size_t>(n)]);
    }
#pragma omp critical
    total.merge(local);
  }
#endif
  return total;
}

std::vector<double> exponent_estimate(const GossipTopology& topology,
                                      const std::vector<double>& gamma_grid,
                                      const SubsetIndex& subset, int sensor, long trials,
                                      std::uint64_t seed, int workers) {
  if (subset.is_full())
    throw std::domain_error("exponent_estimate: the full set carries no decay exponent");
  std::vector<double> out;
  out.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    if (gamma <= 0.0) throw std::domain_error("exponent_estimate: grid rates must be positive");
    const EmpiricalQ q = estimate_q(topology, gamma, trials, mix_seed(seed, 17, 0), workers);
    const double q_hat = q.q_hat(sensor, subset);
    out.push_back(q_hat > 0.0 ? std::log(q_hat) / gamma
                              : -std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace rre
