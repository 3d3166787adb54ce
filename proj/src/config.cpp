#include "mixflow/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixflow/errors.hpp"
#include "mixflow/io.hpp"

namespace mixflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string json_scalar_to_string(const nlohmann::json& v,
                                  const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) {
    return std::to_string(v.get<unsigned long long>());
  }
  if (v.is_number_float()) return format_double(v.get<double>());
  throw InvalidArgument("config: unsupported JSON value for key '" + key +
                        "'");
}

void flatten_json(const nlohmann::json& obj, const std::string& prefix,
                  ConfigMap& out) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const nlohmann::json& v = it.value();
    if (v.is_object()) {
      flatten_json(v, key, out);
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& elem : v) {
        if (!joined.empty()) joined += ", ";
        joined += json_scalar_to_string(elem, key);
      }
      out.set(key, joined);
    } else {
      out.set(key, json_scalar_to_string(v, key));
    }
  }
}

double parse_double_token(const std::string& raw, const std::string& key) {
  std::string s = trim(raw);
  if (s.empty()) {
    throw InvalidArgument("config: empty numeric value for key '" + key + "'");
  }
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw InvalidArgument("config: cannot parse '" + s +
                          "' as a number for key '" + key + "'");
  }
  return v;
}

long parse_long_token(const std::string& raw, const std::string& key) {
  std::string s = trim(raw);
  if (s.empty()) {
    throw InvalidArgument("config: empty integer value for key '" + key + "'");
  }
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw InvalidArgument("config: cannot parse '" + s +
                          "' as an integer for key '" + key + "'");
  }
  return v;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config: line " + std::to_string(line_no) +
                            " has no '=': " + t);
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw InvalidArgument("config: line " + std::to_string(line_no) +
                            " has an empty key");
    }
    cfg.set(key, value);
  }
  return cfg;
}

ConfigMap ConfigMap::load_file(const std::string& path) {
  std::string text = read_text_file(path);
  bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (!is_json) return parse(text);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config: invalid JSON in " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw InvalidArgument("config: JSON root of " + path +
                          " must be an object");
  }
  ConfigMap cfg;
  // A run_meta.json keeps the resolved settings under "config"; re-ingest
  // that object directly so an emitted metadata file works as a config.
  if (doc.contains("config") && doc["config"].is_object()) {
    flatten_json(doc["config"], "", cfg);
  } else {
    flatten_json(doc, "", cfg);
  }
  return cfg;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool ConfigMap::has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string ConfigMap::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw InvalidArgument("config: missing required key '" + key + "'");
  }
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key) const {
  return parse_double_token(get_string(key), key);
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double_token(it->second, key);
}

long ConfigMap::get_long(const std::string& key) const {
  return parse_long_token(get_string(key), key);
}

long ConfigMap::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_long_token(it->second, key);
}

namespace {
bool parse_bool_token(const std::string& raw, const std::string& key) {
  std::string s = trim(raw);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw InvalidArgument("config: cannot parse '" + s +
                        "' as a bool for key '" + key + "'");
}
}  // namespace

bool ConfigMap::get_bool(const std::string& key) const {
  return parse_bool_token(get_string(key), key);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_bool_token(it->second, key);
}

std::vector<double> ConfigMap::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& tok : split_commas(get_string(key))) {
    out.push_back(parse_double_token(tok, key));
  }
  return out;
}

std::vector<long> ConfigMap::get_long_list(const std::string& key) const {
  std::vector<long> out;
  for (const std::string& tok : split_commas(get_string(key))) {
    out.push_back(parse_long_token(tok, key));
  }
  return out;
}

}  // namespace mixflow
