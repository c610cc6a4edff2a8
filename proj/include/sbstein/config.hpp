#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chains.hpp"
#include "errors.hpp"
#include "poisson.hpp"

// JSON chain descriptions:
//   {"family": "reflected_srw", "params": {"p": 0.75}, "description": "..."}
//   {"family": "mm1_embedded",  "params": {"rho": 0.5}}
//   {"family": "birth_death",   "params": {"b": [...], "d": [0, ...]}}
//   {"family": "explicit",      "params": {"rows": [[...], ...]}}
// Rejections carry the offending field and its line in the source text.

namespace sbstein {

namespace detail {

inline long line_of_offset(const std::string& text, size_t byte) {
  long line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Best-effort line of a key's first occurrence, for anchoring semantic errors.
inline long line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return -1;
  return line_of_offset(text, pos);
}

[[noreturn]] inline void reject(const std::string& text, const std::string& key,
                                const std::string& why) {
  const long line = line_of_key(text, key);
  std::string msg = "chain config: " + why;
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(msg, line);
}

}  // namespace detail

inline SingleBirthChain load_chain(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const long line = detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("chain config: not valid JSON (line " + std::to_string(line) +
                      "): " + e.what(), line);
  }
  if (!j.is_object()) detail::reject(text, "family", "top level must be an object");
  if (!j.contains("family") || !j["family"].is_string())
    detail::reject(text, "family", "missing string field 'family'");
  if (!j.contains("params") || !j["params"].is_object())
    detail::reject(text, "params", "missing object field 'params'");
  const std::string family = j["family"].get<std::string>();
  const auto& params = j["params"];
  std::string desc = j.value("description", std::string{});

  auto need_number = [&](const char* key) {
    if (!params.contains(key) || !params[key].is_number())
      detail::reject(text, key, std::string("params.") + key + " must be a number");
    return params[key].get<double>();
  };
  auto need_number_array = [&](const char* key) {
    if (!params.contains(key) || !params[key].is_array())
      detail::reject(text, key, std::string("params.") + key + " must be an array");
    std::vector<double> out;
    for (const auto& v : params[key]) {
      if (!v.is_number())
        detail::reject(text, key, std::string("params.") + key + " must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  };

  try {
    if (family == "reflected_srw")
      return SingleBirthChain::reflected_srw(need_number("p"),
                                             desc.empty() ? "" : desc);
    if (family == "mm1_embedded")
      return SingleBirthChain::mm1_embedded(need_number("rho"),
                                            desc.empty() ? "" : desc);
    if (family == "birth_death")
      return SingleBirthChain::birth_death(need_number_array("b"),
                                           need_number_array("d"),
                                           desc.empty() ? "birth_death" : desc);
    if (family == "explicit") {
      if (!params.contains("rows") || !params["rows"].is_array())
        detail::reject(text, "rows", "params.rows must be an array of rows");
      std::vector<std::vector<double>> rows;
      for (const auto& r : params["rows"]) {
        if (!r.is_array())
          detail::reject(text, "rows", "params.rows must hold arrays of numbers");
        std::vector<double> row;
        for (const auto& v : r) {
          if (!v.is_number())
            detail::reject(text, "rows", "params.rows must hold numbers");
          row.push_back(v.get<double>());
        }
        rows.push_back(std::move(row));
      }
      return SingleBirthChain::explicit_chain(std::move(rows),
                                              desc.empty() ? "explicit" : desc);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    // Parameter rejected by the chain itself; anchor it to the params block.
    const long line = detail::line_of_key(text, "params");
    throw ConfigError("chain config: " + std::string(e.what()) +
                      (line > 0 ? " (line " + std::to_string(line) + ")" : ""), line);
  }
  detail::reject(text, "family", "unknown family '" + family + "'");
}

inline SingleBirthChain load_chain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("chain config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_chain(ss.str());
}

// Test functions: {"values": {"0": 1.0, "3": -0.5}, "default": 0.0, "bound": 1.0}
// Sparse keys fill a dense prefix; unspecified states take the default.
inline TestFunction load_test_function(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const long line = detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("test function: not valid JSON (line " + std::to_string(line) +
                      "): " + e.what(), line);
  }
  if (!j.is_object() || !j.contains("values") || !j["values"].is_object())
    throw ConfigError("test function: missing object field 'values'",
                      detail::line_of_key(text, "values"));
  const double dflt = j.value("default", 0.0);
  const double bound = j.value("bound", 1.0);
  long max_key = -1;
  for (const auto& [key, val] : j["values"].items()) {
    size_t used = 0;
    long k = -1;
    try {
      k = std::stol(key, &used);
    } catch (...) {
    }
    if (k < 0 || used != key.size() || !val.is_number())
      throw ConfigError("test function: values keys must be nonnegative integers "
                        "with numeric entries (offender '" + key + "')",
                        detail::line_of_key(text, key));
    max_key = std::max(max_key, k);
  }
  std::vector<double> vals(static_cast<size_t>(max_key + 1), dflt);
  for (const auto& [key, val] : j["values"].items())
    vals[static_cast<size_t>(std::stol(key))] = val.get<double>();
  try {
    return TestFunction(std::move(vals), dflt, bound);
  } catch (const Error& e) {
    throw ConfigError("test function: " + std::string(e.what()),
                      detail::line_of_key(text, "bound"));
  }
}

}  // namespace sbstein
