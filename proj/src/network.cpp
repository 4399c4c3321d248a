#include "rre/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <set>
#include <limits>
#include <sstream>

namespace rre {

Eigen::MatrixXd GossipTopology::max_adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(node_count, node_count);
  for (const auto& [u, v] : edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

bool GossipTopology::has_edge(int a, int b) const {
  if (a == b) return true;
  const auto e = std::minmax(a, b);
  return std::find(edges.begin(), edges.end(), std::make_pair(e.first, e.second)) != edges.end();
}

void GossipTopology::validate() const {
  if (node_count < 1) throw ConfigError("GossipTopology: node count must be positive");
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= node_count || v >= node_count)
      throw ConfigError("GossipTopology: edge endpoint out of range");
    if (u >= v) throw ConfigError("GossipTopology: edges must be stored as (min, max)");
    if (!seen.insert({u, v}).second) throw ConfigError("GossipTopology: duplicate edge");
  }
}

GossipTopology GossipTopology::complete(int n) {
  GossipTopology t;
  t.node_count = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) t.edges.emplace_back(i, j);
  t.validate();
  return t;
}

GossipTopology GossipTopology::path(int n) {
  GossipTopology t;
  t.node_count = n;
  for (int i = 0; i + 1 < n; ++i) t.edges.emplace_back(i, i + 1);
  t.validate();
  return t;
}

GossipTopology GossipTopology::ring(int n) {
  GossipTopology t = path(n);
  if (n > 2) t.edges.emplace_back(0, n - 1);
  t.validate();
  return t;
}

GossipTopology GossipTopology::from_stream(std::istream& in) {
  GossipTopology t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("graph: missing node count line");
  {
    std::istringstream head(line);
    if (!(head >> t.node_count)) throw ConfigError("graph: unparseable node count");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    int u = 0, v = 0;
    if (!(row >> u)) continue;  // blank line
    if (!(row >> v))
      throw ConfigError("graph: line " + std::to_string(line_no) + ": expected 'u v'");
    if (u < 1 || v < 1 || u > t.node_count || v > t.node_count)
      throw ConfigError("graph: line " + std::to_string(line_no) + ": node id out of range");
    if (u == v) continue;  // self-loops are implicit
    t.edges.emplace_back(std::min(u, v) - 1, std::max(u, v) - 1);
  }
  std::sort(t.edges.begin(), t.edges.end());
  t.edges.erase(std::unique(t.edges.begin(), t.edges.end()), t.edges.end());
  t.validate();
  return t;
}

Matching Matching::identity(int n) {
  Matching m;
  m.partner.resize(static_cast<std::size_t>(n));
  std::iota(m.partner.begin(), m.partner.end(), 0);
  return m;
}

bool Matching::is_identity() const {
  for (int i = 0; i < size(); ++i)
    if (partner[static_cast<std::size_t>(i)] != i) return false;
  return true;
}

Eigen::MatrixXd Matching::matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i) a(i, partner[static_cast<std::size_t>(i)]) = 1.0;
  return a;
}

void Matching::validate(const GossipTopology& topology) const {
  if (size() != topology.node_count) throw ConfigError("Matching: size mismatch with topology");
  for (int i = 0; i < size(); ++i) {
    const int p = partner[static_cast<std::size_t>(i)];
    if (p < 0 || p >= size()) throw ConfigError("Matching: partner out of range");
    if (partner[static_cast<std::size_t>(p)] != i)
      throw ConfigError("Matching: not an involution");
    if (p != i && !topology.has_edge(i, p))
      throw ConfigError("Matching: pair (" + std::to_string(i + 1) + "," + std::to_string(p + 1) +
                        ") is not an allowed edge");
  }
}

MatchingDistribution::MatchingDistribution(std::vector<Matching> support,
                                           std::vector<double> probabilities,
                                           const GossipTopology& topology)
    : support_(std::move(support)), probs_(std::move(probabilities)) {
  if (support_.empty()) throw ConfigError("MatchingDistribution: empty support");
  if (support_.size() != probs_.size())
    throw ConfigError("MatchingDistribution: support/probability size mismatch");
  double total = 0.0;
  for (double p : probs_) {
    if (p < 0.0) throw ConfigError("MatchingDistribution: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("MatchingDistribution: probabilities must sum to 1");
  for (const Matching& m : support_) m.validate(topology);
  cumulative_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

MatchingDistribution MatchingDistribution::uniform_greedy(const GossipTopology& topology,
                                                          int trials, RngStream& rng) {
  topology.validate();
  std::set<std::vector<int>> seen;
  std::vector<Matching> support;
  std::vector<std::size_t> order(topology.edges.size());
  std::iota(order.begin(), order.end(), 0u);
  for (int t = 0; t < trials; ++t) {
    // Fisher-Yates shuffle driven by the caller's stream.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    Matching m = Matching::identity(topology.node_count);
    for (std::size_t idx : order) {
      const auto& [u, v] = topology.edges[idx];
      if (m.partner[static_cast<std::size_t>(u)] == u &&
          m.partner[static_cast<std::size_t>(v)] == v) {
        m.partner[static_cast<std::size_t>(u)] = v;
        m.partner[static_cast<std::size_t>(v)] = u;
      }
    }
    if (seen.insert(m.partner).second) support.push_back(std::move(m));
  }
  if (support.empty()) support.push_back(Matching::identity(topology.node_count));
  std::vector<double> probs(support.size(), 1.0 / static_cast<double>(support.size()));
  return MatchingDistribution(std::move(support), std::move(probs), topology);
}

const Matching& MatchingDistribution::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t idx = std::min(static_cast<std::size_t>(it - cumulative_.begin()),
                                   support_.size() - 1);
  return support_[idx];
}

Eigen::MatrixXd MatchingDistribution::mean_adjacency() const {
  const int n = support_.front().size();
  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < support_.size(); ++i) abar += probs_[i] * support_[i].matrix();
  return abar;
}

namespace {

std::vector<int> reachable(const Eigen::MatrixXd& chain, int start, bool transpose) {
  const int n = static_cast<int>(chain.rows());
  std::vector<int> mark(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{start};
  mark[static_cast<std::size_t>(start)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      const double w = transpose ? chain(v, u) : chain(u, v);
      if (w > 0.0 && !mark[static_cast<std::size_t>(v)]) {
        mark[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return mark;
}

}  // namespace

ChainCheckReport check_irreducible_aperiodic(const Eigen::MatrixXd& chain) {
  ChainCheckReport rep;
  const int n = static_cast<int>(chain.rows());
  if (n == 0 || chain.cols() != n) {
    rep.detail = "empty or non-square matrix";
    return rep;
  }
  const std::vector<int> fwd = reachable(chain, 0, false);
  const std::vector<int> bwd = reachable(chain, 0, true);
  rep.irreducible = true;
  for (int v = 0; v < n; ++v) {
    if (!fwd[static_cast<std::size_t>(v)] || !bwd[static_cast<std::size_t>(v)]) {
      rep.irreducible = false;
      rep.detail = "node " + std::to_string(v + 1) + " not in the communicating class of node 1";
      break;
    }
  }
  if (!rep.irreducible) return rep;

  // Period = gcd over edges (u,v) of level(u) + 1 - level(v) from a BFS tree.
  std::vector<int> level(static_cast<std::size_t>(n), -1);
  std::vector<int> queue{0};
  level[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v = 0; v < n; ++v)
      if (chain(u, v) > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
  }
  int period = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (chain(u, v) > 0.0)
        period = std::gcd(period, level[static_cast<std::size_t>(u)] + 1 -
                                      level[static_cast<std::size_t>(v)]);
  rep.aperiodic = (period == 1);
  if (!rep.aperiodic) rep.detail = "chain has period " + std::to_string(std::abs(period));
  return rep;
}

Eigen::MatrixXd dissemination_chain(const GossipTopology& topology) {
  topology.validate();
  const int n = topology.node_count;
  if (topology.edges.empty()) return Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(n, n);
  const double p = 1.0 / static_cast<double>(topology.edges.size());
  for (const auto& [u, v] : topology.edges) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n);
    e(u, u) = 0.0;
    e(v, v) = 0.0;
    e(u, v) = 1.0;
    e(v, u) = 1.0;
    chain += p * e;
  }
  return chain;
}

Eigen::MatrixXd hitting_tail(const Eigen::MatrixXd& chain, int target, int k_max) {
  const int n = static_cast<int>(chain.rows());
  if (target < 0 || target >= n) throw std::invalid_argument("hitting_tail: target out of range");
  if (k_max < 0) throw std::invalid_argument("hitting_tail: negative horizon");
  Eigen::MatrixXd tails = Eigen::MatrixXd::Zero(k_max + 1, n);
  for (int i = 0; i < n; ++i) tails(0, i) = (i == target) ? 0.0 : 1.0;
  for (int k = 1; k <= k_max; ++k)
    for (int i = 0; i < n; ++i) {
      if (i == target) continue;
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != target) acc += chain(i, j) * tails(k - 1, j);
      tails(k, i) = acc;
    }
  return tails;
}

HittingConstants hitting_constants(const Eigen::MatrixXd& chain, int window) {
  if (window < 1) throw std::invalid_argument("hitting_constants: window must be >= 1");
  const ChainCheckReport rep = check_irreducible_aperiodic(chain);
  if (!rep.irreducible)
    throw std::invalid_argument("hitting_constants: chain not irreducible (" + rep.detail + ")");
  const int n = static_cast<int>(chain.rows());
  double alpha = 0.0;
  double beta = 1.0;
  for (int target = 0; target < n; ++target) {
    const Eigen::MatrixXd tails = hitting_tail(chain, target, window);
    for (int i = 0; i < n; ++i) {
      if (i == target) continue;
      alpha = std::max(alpha, tails(window, i));
      beta = std::min(beta, tails(window, i));
    }
  }
  if (alpha >= 1.0)
    throw std::runtime_error(
        "hitting_constants: alpha = 1 at window " + std::to_string(window) +
        "; geometric domination needs a larger window");
  if (alpha <= 0.0)
    throw std::runtime_error(
        "hitting_constants: alpha = 0 at window " + std::to_string(window) +
        "; hitting is certain and no geometric envelope applies");
  return {alpha, beta, window};
}

int default_hitting_window(const Eigen::MatrixXd& chain, int max_window) {
  const int n = static_cast<int>(chain.rows());
  if (max_window <= 0) max_window = 10 * n;
  for (int window = 1; window <= max_window; ++window) {
    try {
      hitting_constants(chain, window);
      return window;
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  throw std::runtime_error("default_hitting_window: no window up to " +
                           std::to_string(max_window) + " gives 0 < alpha < 1");
}

QBounds q_exponent_bounds(double alpha, double beta, int window, int sensor_count,
                          const SubsetIndex& subset, int sensor) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("q_exponent_bounds: alpha not in (0,1)");
  if (!(beta > 0.0 && beta <= alpha))
    throw std::domain_error("q_exponent_bounds: beta not in (0, alpha]");
  if (window < 1) throw std::domain_error("q_exponent_bounds: window must be >= 1");
  const int m = subset.size();
  if (m < 1 || m > sensor_count)
    throw std::domain_error("q_exponent_bounds: subset size out of range");

  constexpr double inf = std::numeric_limits<double>::infinity();
  // An index set always contains the owning sensor, so non-member cells carry
  // infinite exponents on both sides.
  if (!subset.contains(sensor)) return {inf, inf};
  if (m == sensor_count) return {0.0, 0.0};  // full set: excluded by the weight indicator
  const double l = static_cast<double>(window);
  return {-std::log(alpha) / l,
          static_cast<double>(sensor_count - m) * (-std::log(beta)) / l};
}

}  // namespace rre
