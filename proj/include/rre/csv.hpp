#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace rre {

std::string format_double(double v);  // shortest round-trip form, locale-free

/// CSV with a header row and a trailing metadata comment carrying the config
/// hash and seed; output is byte-stable for fixed inputs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  void row(const std::vector<std::string>& cells);
  void finish(std::uint64_t config_hash, std::uint64_t seed);

 private:
  std::ofstream out_;
  std::size_t columns_;
  bool finished_ = false;
};

}  // namespace rre
