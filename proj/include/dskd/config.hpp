#pragma once

#include <map>
#include <string>
#include <vector>

#include "dskd/common.hpp"

namespace dskd {

// Flat key-value run configuration: `key = value` lines, '#' comments, and
// `include <path>` directives resolved relative to the including file.
// Later assignments override earlier ones.
class FlatConfig {
 public:
  static FlatConfig load(const std::string& path);
  static FlatConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value) {
    kv_[key] = value;
  }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  u64 get_u64(const std::string& key, u64 def) const;
  bool get_bool(const std::string& key, bool def) const;
  // Comma-separated list.
  std::vector<double> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  void parse(const std::string& text, const std::string& dir,
             const std::string& name, int depth);
  std::map<std::string, std::string> kv_;
};

}  // namespace dskd
