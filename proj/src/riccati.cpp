#include "rre/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <unordered_map>

#include "rre/network.hpp"

namespace rre {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

Eigen::MatrixXd lyapunov_op(const LinearSystem& system, const Eigen::MatrixXd& X) {
  return symmetrize(system.F * X * system.F.transpose() + system.Q);
}

Eigen::MatrixXd riccati_op(const LinearSystem& system, const SensorSuite& suite,
                           const SubsetIndex& subset, const Eigen::MatrixXd& X) {
  if (subset.is_empty()) return lyapunov_op(system, X);
  const StackedObservation obs = stack_subset(suite, subset);
  const Eigen::MatrixXd cxct = obs.C * X * obs.C.transpose();
  const Eigen::MatrixXd innovation = symmetrize(cxct + obs.R);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(innovation);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("riccati_op: innovation matrix not positive definite");
  const Eigen::MatrixXd fxct = system.F * X * obs.C.transpose();
  const Eigen::MatrixXd gain = ldlt.solve(fxct.transpose());
  return symmetrize(system.F * X * system.F.transpose() + system.Q -
                    fxct * gain);
}

Eigen::MatrixXd riccati_op_sum_form(const LinearSystem& system, const SensorSuite& suite,
                                    const SubsetIndex& subset, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out = system.F * X * system.F.transpose() + system.Q;
  for (int n : subset.members()) {
    const Sensor& s = suite.sensors[static_cast<std::size_t>(n)];
    const Eigen::MatrixXd innovation = symmetrize(s.C * X * s.C.transpose() + s.R);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(innovation);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw std::runtime_error("riccati_op_sum_form: innovation matrix not positive definite");
    const Eigen::MatrixXd fxct = system.F * X * s.C.transpose();
    out -= fxct * ldlt.solve(fxct.transpose());
  }
  return symmetrize(out);
}

FixedPoint centralized_fixed_point(const LinearSystem& system, const SensorSuite& suite,
                                   double tol, int max_iter) {
  const SubsetIndex full = SubsetIndex::full_set(suite.count());
  Eigen::MatrixXd X = symmetrize(system.Q);
  double step = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd next = riccati_op(system, suite, full, X);
    step = (next - X).norm();
    X = std::move(next);
    if (step <= tol * (1.0 + X.norm())) {
      const double residual = (riccati_op(system, suite, full, X) - X).norm();
      return {X, it, residual};
    }
  }
  throw std::runtime_error("centralized_fixed_point: no convergence after " +
                           std::to_string(max_iter) + " iterations (last step " +
                           std::to_string(step) + "); check detectability/stabilizability");
}

std::string RiccatiString::ops_to_string() const {
  std::string out;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    out += "f";
    out += it->to_string();
    out += " ";
  }
  out += "P0";
  return out;
}

Eigen::MatrixXd evaluate_string(const RiccatiString& str, const LinearSystem& system,
                                const SensorSuite& suite) {
  Eigen::MatrixXd X = str.initial;
  for (const SubsetIndex& j : str.ops) X = riccati_op(system, suite, j, X);
  return X;
}

int count_non_centralized(const RiccatiString& str) {
  int count = 0;
  for (const SubsetIndex& j : str.ops)
    if (!j.is_full()) ++count;
  return count;
}

WeightTable::WeightTable(int sensor_count) : n_(sensor_count) {
  if (sensor_count < 1 || sensor_count > 16)
    throw std::invalid_argument("WeightTable: sensor count out of range");
  const std::size_t cells = static_cast<std::size_t>(n_) << n_;
  upper_.assign(cells, kInfWeight);
  lower_.assign(cells, kInfWeight);
}

std::size_t WeightTable::at(int sensor, const SubsetIndex& subset) const {
  if (sensor < 0 || sensor >= n_ || subset.sensor_count() != n_)
    throw std::invalid_argument("WeightTable: sensor/subset out of range");
  return (static_cast<std::size_t>(sensor) << n_) + subset.bits();
}

double WeightTable::upper(int sensor, const SubsetIndex& subset) const {
  return upper_[at(sensor, subset)];
}

double WeightTable::lower(int sensor, const SubsetIndex& subset) const {
  return lower_[at(sensor, subset)];
}

void WeightTable::set(int sensor, const SubsetIndex& subset, double upper, double lower) {
  upper_[at(sensor, subset)] = upper;
  lower_[at(sensor, subset)] = lower;
}

WeightTable WeightTable::from_hitting_constants(double alpha, double beta, int window,
                                                int sensor_count) {
  WeightTable table(sensor_count);
  for (std::uint32_t bits = 1; bits < (1u << sensor_count); ++bits) {
    const SubsetIndex subset(bits, sensor_count);
    for (int n = 0; n < sensor_count; ++n) {
      if (!subset.contains(n)) continue;  // stays infinite
      const QBounds q = q_exponent_bounds(alpha, beta, window, sensor_count, subset, n);
      table.set(n, subset, q.upper, q.lower);
    }
  }
  return table;
}

namespace {

// One DP layer of the path-minimized weight: d'(v) = min_{u ~ v} d(u) + step(v).
Eigen::VectorXd advance_weight_layer(const Eigen::VectorXd& d, const Eigen::MatrixXd& adjacency,
                                     const std::function<double(int)>& step_cost) {
  const int n = static_cast<int>(d.size());
  Eigen::VectorXd next(n);
  for (int v = 0; v < n; ++v) {
    double best = kInfWeight;
    for (int u = 0; u < n; ++u)
      if (adjacency(u, v) > 0.0) best = std::min(best, d(u));
    next(v) = best + step_cost(v);
  }
  return next;
}

double weight_step(const WeightTable& table, WeightKind kind, int sensor,
                   const SubsetIndex& subset) {
  if (subset.is_full()) return 0.0;  // indicator excludes the full set
  return kind == WeightKind::Upper ? table.upper(sensor, subset) : table.lower(sensor, subset);
}

std::string matrix_key(const Eigen::MatrixXd& X) {
  std::string key;
  key.reserve(static_cast<std::size_t>(X.size()) * 14);
  char buf[24];
  for (int i = 0; i < X.rows(); ++i)
    for (int j = i; j < X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9e;", X(i, j));
      key += buf;
    }
  return key;
}

}  // namespace

StringWeights string_weights(const RiccatiString& str, const WeightTable& table,
                             const Eigen::MatrixXd& path_adjacency) {
  const int r = str.length();
  if (r == 0) return {0.0, 0.0};
  const int n = table.sensor_count();
  if (path_adjacency.rows() != n || path_adjacency.cols() != n)
    throw std::invalid_argument("string_weights: adjacency size mismatch");

  StringWeights out;
  for (WeightKind kind : {WeightKind::Upper, WeightKind::Lower}) {
    Eigen::VectorXd d(n);
    for (int v = 0; v < n; ++v) d(v) = weight_step(table, kind, v, str.ops[0]);
    for (int i = 1; i < r; ++i) {
      const SubsetIndex& j = str.ops[static_cast<std::size_t>(i)];
      d = advance_weight_layer(d, path_adjacency,
                               [&](int v) { return weight_step(table, kind, v, j); });
    }
    const double w = d.minCoeff();
    (kind == WeightKind::Upper ? out.upper : out.lower) = w;
  }
  return out;
}

WeightSearchResult search_min_weight(const Eigen::MatrixXd& initial,
                                     const std::function<bool(const Eigen::MatrixXd&)>& target,
                                     WeightKind kind, const WeightTable& table,
                                     const Eigen::MatrixXd& path_adjacency,
                                     const LinearSystem& system, const SensorSuite& suite,
                                     const SearchCaps& caps) {
  const int n = suite.count();
  if (table.sensor_count() != n)
    throw std::invalid_argument("search_min_weight: table/suite mismatch");

  // Candidate subsets, full set and large subsets first so a tight
  // max_subsets_per_step cap keeps the cheap information-rich steps.
  std::vector<SubsetIndex> alphabet;
  for (std::uint32_t bits = 1; bits < (1u << n); ++bits) alphabet.emplace_back(bits, n);
  std::stable_sort(alphabet.begin(), alphabet.end(),
                   [](const SubsetIndex& a, const SubsetIndex& b) { return a.size() > b.size(); });
  if (caps.max_subsets_per_step > 0 &&
      static_cast<int>(alphabet.size()) > caps.max_subsets_per_step)
    alphabet.resize(static_cast<std::size_t>(caps.max_subsets_per_step));

  struct Node {
    Eigen::MatrixXd value;
    Eigen::VectorXd path_cost;  // per current path-end sensor; empty for length 0
    std::vector<SubsetIndex> ops;
    double priority = 0.0;
  };
  struct Compare {
    bool operator()(const std::pair<double, std::size_t>& a,
                    const std::pair<double, std::size_t>& b) const {
      return a.first > b.first;
    }
  };

  std::vector<Node> nodes;
  std::priority_queue<std::pair<double, std::size_t>, std::vector<std::pair<double, std::size_t>>,
                      Compare>
      frontier;
  std::unordered_map<std::string, double> seen;

  nodes.push_back({initial, Eigen::VectorXd(), {}, 0.0});
  frontier.push({0.0, 0});
  seen.emplace(matrix_key(initial), 0.0);

  WeightSearchResult result;
  double pruned_min = kInfWeight;  // cheapest branch the caps cut off

  while (!frontier.empty()) {
    const auto [priority, idx] = frontier.top();
    frontier.pop();
    if (priority >= result.weight) break;  // frontier can only get costlier
    Node node = nodes[static_cast<std::size_t>(idx)];

    if (target(node.value)) {
      result.weight = priority;
      result.witness = {node.ops, initial};
      continue;
    }
    if (static_cast<int>(node.ops.size()) >= caps.max_len) {
      pruned_min = std::min(pruned_min, priority);
      continue;
    }
    if (result.expansions >= caps.max_expansions) {
      pruned_min = std::min(pruned_min, priority);
      continue;
    }
    ++result.expansions;

    for (const SubsetIndex& j : alphabet) {
      Eigen::VectorXd cost(n);
      if (node.ops.empty()) {
        for (int v = 0; v < n; ++v) cost(v) = weight_step(table, kind, v, j);
      } else {
        cost = advance_weight_layer(node.path_cost, path_adjacency,
                                    [&](int v) { return weight_step(table, kind, v, j); });
      }
      const double child_priority = cost.minCoeff();
      if (!(child_priority < result.weight) || std::isinf(child_priority)) continue;

      Eigen::MatrixXd value = riccati_op(system, suite, j, node.value);
      const std::string key = matrix_key(value);
      auto it = seen.find(key);
      if (it != seen.end() && it->second <= child_priority) continue;
      seen[key] = child_priority;

      Node child;
      child.value = std::move(value);
      child.path_cost = std::move(cost);
      child.ops = node.ops;
      child.ops.push_back(j);
      child.priority = child_priority;
      nodes.push_back(std::move(child));
      frontier.push({child_priority, nodes.size() - 1});
    }
  }

  // A cut branch cheaper than the best witness could still hide the optimum.
  result.capped = pruned_min < result.weight;
  return result;
}

RateFunctionResult rate_function(const Eigen::MatrixXd& X, double target_tol,
                                 const SearchCaps& caps, const WeightTable& table,
                                 const Eigen::MatrixXd& path_adjacency,
                                 const LinearSystem& system, const SensorSuite& suite,
                                 const Eigen::MatrixXd& Pstar) {
  const auto in_ball = [&](const Eigen::MatrixXd& Y) { return (Y - X).norm() <= target_tol; };
  const WeightSearchResult up = search_min_weight(Pstar, in_ball, WeightKind::Upper, table,
                                                  path_adjacency, system, suite, caps);
  const WeightSearchResult low = search_min_weight(Pstar, in_ball, WeightKind::Lower, table,
                                                   path_adjacency, system, suite, caps);
  RateFunctionResult out;
  out.upper = up.weight;
  out.lower = low.weight;
  out.upper_witness = up.witness;
  out.lower_witness = low.witness;
  out.capped = up.capped || low.capped;
  return out;
}

}  // namespace rre
