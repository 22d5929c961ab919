#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lgss {

// Flat dotted-key configuration. Precedence is CLI override > config file >
// built-in default; the resolved map is written into each run's output
// directory so runs are reproducible from one record.
class Config {
 public:
  static Config defaults();

  // "key = value" lines; '#' starts a comment.
  static Config from_file(const std::filesystem::path& path);

  void merge(const Config& overrides);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;

  // "name:dim,name:dim" pairs
  std::vector<std::pair<std::string, int>> get_modality_dims(const std::string& key) const;

  std::string dump() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace lgss
