#pragma once

#include <map>
#include <string>
#include <vector>

namespace mixflow {

// Flat key = value configuration with dotted section names, e.g.
//
//   target.name = banana
//   flow.epsilon = 0.05, 0.1
//   seed = 42
//
// Blank lines and lines starting with # are skipped. Values are stored as
// strings; typed getters parse on access and throw InvalidArgument with the
// offending key on malformed or missing values. A .json file (such as an
// emitted run_meta.json, whose "config" object holds the resolved settings)
// can be loaded the same way.
class ConfigMap {
 public:
  ConfigMap() = default;

  // Parses key = value text. Malformed lines throw InvalidArgument.
  static ConfigMap parse(const std::string& text);

  // Loads from a file; dispatches on extension (.json vs key = value).
  // Throws IoError if the file cannot be read.
  static ConfigMap load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated lists; a single scalar parses as a one-element list.
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<long> get_long_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const {
    return values_;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mixflow
