#include "rre/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rre {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Splits a bracketed array "[a, b, [c, d]]" into its top-level elements.
std::vector<std::string> split_array(const std::string& raw, const std::string& key) {
  const std::string body = trim(raw);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']')
    throw ConfigError("config: key '" + key + "' is not an array");
  std::vector<std::string> items;
  int depth = 0;
  std::string current;
  for (std::size_t i = 1; i + 1 < body.size(); ++i) {
    const char c = body[i];
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!trim(current).empty()) items.push_back(trim(current));
  return items;
}

double parse_number(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a number: '" + text + "'");
  }
}

}  // namespace

ConfigDocument ConfigDocument::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

ConfigDocument ConfigDocument::parse_text(const std::string& text, const std::string& origin) {
  ConfigDocument doc;
  doc.hash_ = fnv1a(text);
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  std::string pending_key;  // multi-line array continuation
  std::string pending_value;
  int pending_depth = 0;

  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;

    if (!pending_key.empty()) {
      pending_value += " " + line;
      for (char c : line) {
        if (c == '[') ++pending_depth;
        if (c == ']') --pending_depth;
      }
      if (pending_depth <= 0) {
        doc.values_[pending_key] = trim(pending_value);
        pending_key.clear();
        pending_value.clear();
      }
      continue;
    }

    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;

    int depth = 0;
    for (char c : value) {
      if (c == '[') ++depth;
      if (c == ']') --depth;
    }
    if (depth > 0) {
      pending_key = full;
      pending_value = value;
      pending_depth = depth;
      continue;
    }
    if (value.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty value for '" + full + "'");
    doc.values_[full] = value;
  }
  if (!pending_key.empty())
    throw ConfigError(origin + ": unterminated array for '" + pending_key + "'");
  return doc;
}

bool ConfigDocument::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& ConfigDocument::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

std::string ConfigDocument::get_string(const std::string& key,
                                       std::optional<std::string> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing key '" + key + "'");
  }
  std::string v = raw(key);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

double ConfigDocument::get_number(const std::string& key, std::optional<double> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing key '" + key + "'");
  }
  return parse_number(raw(key), key);
}

long ConfigDocument::get_integer(const std::string& key, std::optional<long> fallback) const {
  const double v = has(key) ? get_number(key)
                            : (fallback ? static_cast<double>(*fallback)
                                        : throw ConfigError("config: missing key '" + key + "'"));
  if (std::abs(v - std::round(v)) > 1e-9)
    throw ConfigError("config: key '" + key + "' must be an integer");
  return static_cast<long>(std::llround(v));
}

std::uint64_t ConfigDocument::get_u64(const std::string& key,
                                      std::optional<std::uint64_t> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing key '" + key + "'");
  }
  const std::string& v = raw(key);
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an unsigned integer: '" + v + "'");
  }
}

bool ConfigDocument::get_bool(const std::string& key, std::optional<bool> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing key '" + key + "'");
  }
  const std::string& v = raw(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> ConfigDocument::get_number_array(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_array(raw(key), key)) out.push_back(parse_number(item, key));
  return out;
}

Eigen::MatrixXd ConfigDocument::get_matrix(const std::string& key) const {
  const std::vector<std::string> rows = split_array(raw(key), key);
  if (rows.empty()) throw ConfigError("config: key '" + key + "' is an empty matrix");
  std::vector<std::vector<double>> parsed;
  for (const std::string& row : rows) {
    std::vector<double> values;
    for (const std::string& item : split_array(row, key)) values.push_back(parse_number(item, key));
    if (!parsed.empty() && values.size() != parsed.front().size())
      throw ConfigError("config: key '" + key + "' has ragged rows");
    parsed.push_back(std::move(values));
  }
  Eigen::MatrixXd m(parsed.size(), parsed.front().size());
  for (std::size_t i = 0; i < parsed.size(); ++i)
    for (std::size_t j = 0; j < parsed[i].size(); ++j)
      m(static_cast<long>(i), static_cast<long>(j)) = parsed[i][j];
  return m;
}

std::vector<std::string> ConfigDocument::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_)
    if (key.rfind(prefix, 0) == 0) out.push_back(key);
  return out;
}

LinearSystem rotation_chain_system(int state_dim, double spectral_radius, double angle) {
  if (state_dim < 1) throw ConfigError("rotation_chain: state dimension must be positive");
  LinearSystem system;
  system.F = Eigen::MatrixXd::Zero(state_dim, state_dim);
  const double c = std::cos(angle), s = std::sin(angle);
  int at = 0;
  while (at + 1 < state_dim) {
    system.F(at, at) = spectral_radius * c;
    system.F(at, at + 1) = -spectral_radius * s;
    system.F(at + 1, at) = spectral_radius * s;
    system.F(at + 1, at + 1) = spectral_radius * c;
    at += 2;
  }
  if (at < state_dim) system.F(at, at) = spectral_radius;
  system.Q = Eigen::MatrixXd::Identity(state_dim, state_dim);
  system.validate();
  return system;
}

SensorSuite rotation_chain_sensors(int state_dim, int sensor_count, double obs_noise) {
  if (sensor_count < 1) throw ConfigError("rotation_chain: sensor count must be positive");
  if (obs_noise <= 0.0) throw ConfigError("rotation_chain: observation noise must be positive");
  SensorSuite suite;
  // Distinct coordinate groups, cycling when sensors outnumber groups.
  const int group = std::max(1, state_dim / sensor_count);
  for (int n = 0; n < sensor_count; ++n) {
    const int first = (n * group) % state_dim;
    const int rows = std::min(group, state_dim - first);
    Sensor sensor;
    sensor.C = Eigen::MatrixXd::Zero(rows, state_dim);
    for (int r = 0; r < rows; ++r) sensor.C(r, first + r) = 1.0;
    sensor.R = obs_noise * Eigen::MatrixXd::Identity(rows, rows);
    suite.sensors.push_back(std::move(sensor));
  }
  return suite;
}

namespace {

GossipTopology topology_from_config(const ConfigDocument& doc, int sensor_count) {
  const std::string kind = doc.get_string("network.topology", std::string("complete"));
  if (kind == "complete") return GossipTopology::complete(sensor_count);
  if (kind == "path") return GossipTopology::path(sensor_count);
  if (kind == "ring") return GossipTopology::ring(sensor_count);
  if (kind == "file") {
    const std::string path = doc.get_string("network.file");
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open graph file '" + path + "'");
    GossipTopology t = GossipTopology::from_stream(in);
    if (t.node_count != sensor_count)
      throw ConfigError("config: graph node count differs from the sensor count");
    return t;
  }
  throw ConfigError("config: unknown topology '" + kind + "'");
}

std::unique_ptr<MatchingDistribution> matchings_from_config(const ConfigDocument& doc,
                                                            const GossipTopology& topology,
                                                            std::uint64_t seed) {
  const std::string kind = doc.get_string("network.matching", std::string("uniform"));
  if (kind == "uniform") {
    RngStream rng(mix_seed(seed, 0x6d61746368ULL));
    return std::make_unique<MatchingDistribution>(
        MatchingDistribution::uniform_greedy(topology, 64 * topology.node_count, rng));
  }
  if (kind == "explicit") {
    std::vector<Matching> support;
    std::vector<double> probs;
    for (int i = 1;; ++i) {
      const std::string base = "matching." + std::to_string(i);
      if (!doc.has(base + ".partners")) break;
      const std::vector<double> partners = doc.get_number_array(base + ".partners");
      Matching m;
      for (double p : partners) m.partner.push_back(static_cast<int>(p) - 1);  // 1-based input
      support.push_back(std::move(m));
      probs.push_back(doc.get_number(base + ".probability"));
    }
    if (support.empty())
      throw ConfigError("config: matching = explicit requires [matching.N] tables");
    return std::make_unique<MatchingDistribution>(std::move(support), std::move(probs), topology);
  }
  throw ConfigError("config: unknown matching distribution '" + kind + "'");
}

}  // namespace

Experiment build_experiment(const ConfigDocument& doc,
                            std::optional<std::uint64_t> seed_override) {
  Experiment exp;
  exp.config_hash = doc.content_hash();

  const std::string generator = doc.get_string("system.generator", std::string("rotation_chain"));
  const int sensor_count = static_cast<int>(doc.get_integer("sensors.count", 5));
  if (generator == "rotation_chain") {
    const int state_dim = static_cast<int>(doc.get_integer("system.state_dim", 10));
    exp.system = rotation_chain_system(state_dim,
                                       doc.get_number("system.spectral_radius", 1.02),
                                       doc.get_number("system.rotation_angle", 0.7));
    exp.suite = rotation_chain_sensors(state_dim, sensor_count,
                                       doc.get_number("sensors.obs_noise", 0.25));
  } else if (generator == "explicit") {
    exp.system.F = doc.get_matrix("system.F");
    exp.system.Q = doc.get_matrix("system.Q");
    exp.system.validate();
    for (int n = 1; n <= sensor_count; ++n) {
      const std::string base = "sensor." + std::to_string(n);
      Sensor sensor;
      sensor.C = doc.get_matrix(base + ".C");
      sensor.R = doc.get_matrix(base + ".R");
      exp.suite.sensors.push_back(std::move(sensor));
    }
  } else {
    throw ConfigError("config: unknown system generator '" + generator + "'");
  }
  exp.suite.validate(exp.system);

  exp.topology = topology_from_config(doc, sensor_count);

  exp.seed = seed_override ? *seed_override : doc.get_u64("run.seed", 0);
  exp.matchings = matchings_from_config(doc, exp.topology, exp.seed);

  exp.gamma_grid = doc.has("run.gamma_grid") ? doc.get_number_array("run.gamma_grid")
                                             : std::vector<double>{30, 40, 50, 60};
  exp.burn_in = static_cast<int>(doc.get_integer("run.burn_in", 10000));
  exp.n_samples = static_cast<int>(doc.get_integer("run.n_samples", 5000));
  exp.workers = static_cast<int>(doc.get_integer("run.workers", 0));
  exp.out_dir = doc.get_string("run.out", std::string("out"));

  exp.epsilon_fraction = doc.get_number("event.epsilon_fraction", 0.5);
  if (exp.epsilon_fraction <= 0.0)
    throw ConfigError("config: event.epsilon_fraction must be positive");

  exp.ld_caps.max_len = static_cast<int>(doc.get_integer("ld.max_len", 8));
  exp.ld_caps.max_expansions =
      static_cast<std::size_t>(doc.get_integer("ld.max_expansions", 200000));
  exp.ld_caps.max_subsets_per_step =
      static_cast<int>(doc.get_integer("ld.max_subsets_per_step", 0));
  exp.ld_paths_use_mean_adjacency =
      doc.get_string("ld.path_graph", std::string("maximal")) == "mean";

  if (exp.burn_in < 1) throw ConfigError("config: run.burn_in must be >= 1");
  if (exp.n_samples < 1) throw ConfigError("config: run.n_samples must be >= 1");
  return exp;
}

}  // namespace rre
