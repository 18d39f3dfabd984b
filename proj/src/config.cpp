#include "dskd/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace dskd {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open config: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

void FlatConfig::parse(const std::string& text, const std::string& dir,
                       const std::string& name, int depth) {
  if (depth > 16)
    throw validation_error(name + ": include depth exceeds 16, cycle likely");
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = strip(line);
    if (t.empty()) continue;
    if (t.rfind("include ", 0) == 0) {
      std::string inc = strip(t.substr(8));
      std::filesystem::path p(inc);
      if (p.is_relative() && !dir.empty()) p = std::filesystem::path(dir) / p;
      parse(read_file(p.string()), p.parent_path().string(), p.string(),
            depth + 1);
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw validation_error(name + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
    std::string key = strip(t.substr(0, eq));
    std::string value = strip(t.substr(eq + 1));
    if (key.empty())
      throw validation_error(name + ":" + std::to_string(lineno) +
                             ": empty key");
    kv_[key] = value;
  }
}

FlatConfig FlatConfig::load(const std::string& path) {
  FlatConfig cfg;
  std::filesystem::path p(path);
  cfg.parse(read_file(path), p.parent_path().string(), path, 0);
  return cfg;
}

FlatConfig FlatConfig::from_string(const std::string& text) {
  FlatConfig cfg;
  cfg.parse(text, "", "<string>", 0);
  return cfg;
}

std::string FlatConfig::get_str(const std::string& key,
                                const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double FlatConfig::get_double(const std::string& key, double def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw validation_error("config key '" + key + "': bad number '" +
                           it->second + "'");
  }
}

int FlatConfig::get_int(const std::string& key, int def) const {
  double v = get_double(key, static_cast<double>(def));
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw validation_error("config key '" + key + "': expected integer");
  return i;
}

u64 FlatConfig::get_u64(const std::string& key, u64 def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    u64 v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw validation_error("config key '" + key + "': bad unsigned '" +
                           it->second + "'");
  }
}

bool FlatConfig::get_bool(const std::string& key, bool def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw validation_error("config key '" + key + "': bad boolean '" + v + "'");
}

std::vector<double> FlatConfig::get_list(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return {};
  std::vector<double> out;
  std::istringstream ss(it->second);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = strip(part);
    if (part.empty()) continue;
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw validation_error("config key '" + key + "': bad list entry '" +
                             part + "'");
    }
  }
  return out;
}

}  // namespace dskd
