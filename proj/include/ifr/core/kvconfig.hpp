#pragma once

#include <map>
#include <string>
#include <vector>

namespace ifr {

// Flat key=value configuration text. Lines starting with '#' (after optional
// whitespace) and blank lines are ignored. Keys keep file order so snapshots
// are reproducible.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  void set(const std::string& key, const std::string& value);

  const std::vector<std::string>& keys() const { return order_; }

  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// Conversion helpers shared by config consumers; throw std::invalid_argument
// naming the key on malformed input.
long parse_long(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
std::string format_double(double v);

}  // namespace ifr
