#pragma once

#include <map>
#include <memory>
#include <optional>

#include "rre/analysis.hpp"

namespace rre {

/// Flat key/value + nested-table experiment document. Section heads `[name]`
/// group keys; values are numbers, booleans, quoted strings, bare words, or
/// (nested) arrays. `#` starts a comment. See README for the schema.
class ConfigDocument {
 public:
  static ConfigDocument parse_file(const std::string& path);
  static ConfigDocument parse_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, std::optional<std::string> fallback = {}) const;
  double get_number(const std::string& key, std::optional<double> fallback = {}) const;
  long get_integer(const std::string& key, std::optional<long> fallback = {}) const;
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = {}) const;
  bool get_bool(const std::string& key, std::optional<bool> fallback = {}) const;
  std::vector<double> get_number_array(const std::string& key) const;
  Eigen::MatrixXd get_matrix(const std::string& key) const;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  std::uint64_t content_hash() const { return hash_; }

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> raw value text
  std::uint64_t hash_ = 0;
  const std::string& raw(const std::string& key) const;
};

/// Fully assembled experiment: model, network, run parameters.
struct Experiment {
  LinearSystem system;
  SensorSuite suite;
  GossipTopology topology;
  std::unique_ptr<MatchingDistribution> matchings;

  std::vector<double> gamma_grid;
  int burn_in = 10000;
  int n_samples = 5000;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir = "out";

  // Rare-event definition: radius as a fraction of the P* statistic.
  double epsilon_fraction = 0.5;

  // LD search caps and path-graph choice (maximal adjacency vs A-bar support).
  SearchCaps ld_caps;
  bool ld_paths_use_mean_adjacency = false;

  std::uint64_t config_hash = 0;
};

/// Builds the experiment from a parsed document. The optional seed override
/// (CLI flag or RRE_GOSSIP_SEED) wins over the document value.
Experiment build_experiment(const ConfigDocument& doc,
                            std::optional<std::uint64_t> seed_override = {});

/// Block-rotation system generator: M/⌈M/2⌉ rotation blocks scaled slightly
/// above 1, Q = I, sensors selecting distinct coordinate groups.
LinearSystem rotation_chain_system(int state_dim, double spectral_radius, double angle);
SensorSuite rotation_chain_sensors(int state_dim, int sensor_count, double obs_noise);

}  // namespace rre
