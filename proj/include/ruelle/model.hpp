#pragma once

// JSON model files: a subshift plus named potentials and roofs, and suspension observables.
//
// {
//   "name": "bernoulli-sqrt2",
//   "alphabet_size": 2,
//   "transition": [[1, 1], [1, 1]],
//   "theta": 0.5,
//   "functions": {
//     "f":   {"type": "constant", "value": -0.6931471805599453},
//     "tau": {"type": "first_symbol", "values": [1.0, 1.4142135623730951]},
//     "g":   {"type": "first_symbol_log", "values": [0.3, 0.7]},
//     "t2":  {"type": "table", "depth": 2, "values": {"00": 1.0, "01": 1.2, "10": 0.9, "11": 1.1}},
//     "ti":  {"type": "interaction", "depth": 10, "base": [1.0, 1.4], "amplitude": 0.25, "decay": 0.5}
//   },
//   "potential": "f",
//   "roof": "tau"
// }
//
// Optional "word_cap" bounds the number of words any enumeration may produce.
// Table keys list one symbol per character, or separate symbols with commas when alphabet_size > 10.
// "interaction" is base[x0] + amplitude * sum_{j=1}^{depth-1} decay^j [x0 = x_j].

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ruelle/correlator.hpp"

namespace ruelle {

struct Model {
  std::string name;
  Subshift shift = Subshift::full(2);
  double theta = 0.5;
  std::map<std::string, DepthFn<double>> functions;
  std::string potential;  ///< default potential name (may be empty)
  std::string roof;       ///< default roof name (may be empty)
  std::string source;     ///< canonical JSON text the model was read from

  const DepthFn<double>& function(const std::string& key, const std::string& what = "function") const {
    auto it = functions.find(key);
    if (it == functions.end()) {
      std::string known;
      for (const auto& [k, v] : functions) known += (known.empty() ? "" : ", ") + k;
      throw SchemaError("$.functions." + key, what + " '" + key + "' is not defined (known: " + known + ")");
    }
    return it->second;
  }
  const DepthFn<double>& potential_fn(const std::string& key = "") const {
    const std::string k = key.empty() ? potential : key;
    if (k.empty()) throw SchemaError("$.potential", "no potential named and no default given");
    return function(k, "potential");
  }
  const DepthFn<double>& roof_fn(const std::string& key = "") const {
    const std::string k = key.empty() ? roof : key;
    if (k.empty()) throw SchemaError("$.roof", "no roof named and no default given");
    return function(k, "roof");
  }
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "missing required field");
  return *it;
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

inline int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<int>();
}

inline std::vector<double> as_numbers(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  if (j.size() != n) throw SchemaError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline Word parse_word_key(const std::string& key, int k, const std::string& path) {
  std::vector<int> s;
  if (k <= 10 && key.find(',') == std::string::npos) {
    for (char c : key) {
      if (c < '0' || c > '9') throw SchemaError(path, "bad symbol '" + std::string(1, c) + "' in word key");
      s.push_back(c - '0');
    }
  } else {
    std::stringstream ss(key);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        s.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw SchemaError(path, "bad symbol '" + tok + "' in word key");
      }
    }
  }
  for (int x : s)
    if (x < 0 || x >= k) throw SchemaError(path, "symbol " + std::to_string(x) + " outside the alphabet");
  return Word(std::move(s));
}

inline DepthFn<double> parse_function(const json& j, const Subshift& shift, const std::string& path) {
  const int k = shift.alphabet_size();
  const auto& type_j = require(j, "type", path);
  if (!type_j.is_string()) throw SchemaError(path + ".type", "expected a string");
  const auto type = type_j.get<std::string>();
  if (type == "constant") {
    const int depth = j.contains("depth") ? as_int(j["depth"], path + ".depth") : 1;
    if (depth < 1) throw SchemaError(path + ".depth", "depth must be >= 1");
    return DepthFn<double>::constant(shift, depth, as_number(require(j, "value", path), path + ".value"));
  }
  if (type == "first_symbol")
    return DepthFn<double>(shift, 1, as_numbers(require(j, "values", path), path + ".values", static_cast<std::size_t>(k)));
  if (type == "first_symbol_log") {
    auto p = as_numbers(require(j, "values", path), path + ".values", static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!(p[i] > 0)) throw SchemaError(path + ".values[" + std::to_string(i) + "]", "log needs a positive value");
    for (auto& v : p) v = std::log(v);
    return DepthFn<double>(shift, 1, std::move(p));
  }
  if (type == "table") {
    const int depth = as_int(require(j, "depth", path), path + ".depth");
    if (depth < 1) throw SchemaError(path + ".depth", "depth must be >= 1");
    const auto& vals = require(j, "values", path);
    if (!vals.is_object()) throw SchemaError(path + ".values", "expected an object mapping words to numbers");
    auto sp = shift.space(depth);
    std::vector<double> v(sp->size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [key, val] : vals.items()) {
      const std::string vp = path + ".values." + key;
      const Word w = parse_word_key(key, k, vp);
      if (static_cast<int>(w.size()) != depth) throw SchemaError(vp, "word length differs from depth " + std::to_string(depth));
      const auto idx = sp->index_of(w);
      if (idx == WordSpace::npos) throw SchemaError(vp, "word is not admissible");
      v[idx] = as_number(val, vp);
    }
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::isnan(v[i])) throw SchemaError(path + ".values", "missing admissible word " + sp->word(i).str());
    return DepthFn<double>(shift, depth, std::move(v));
  }
  if (type == "interaction") {
    const int depth = as_int(require(j, "depth", path), path + ".depth");
    if (depth < 1) throw SchemaError(path + ".depth", "depth must be >= 1");
    const auto base = as_numbers(require(j, "base", path), path + ".base", static_cast<std::size_t>(k));
    const double A = as_number(require(j, "amplitude", path), path + ".amplitude");
    const double decay = as_number(require(j, "decay", path), path + ".decay");
    return DepthFn<double>::from_function(shift, depth, [&](const Word& w) {
      double v = base[static_cast<std::size_t>(w[0])];
      double p = 1;
      for (int i = 1; i < depth; ++i) {
        p *= decay;
        if (w[static_cast<std::size_t>(i)] == w[0]) v += A * p;
      }
      return v;
    });
  }
  throw SchemaError(path + ".type", "unknown function type '" + type + "' (constant, first_symbol, first_symbol_log, table, interaction)");
}

inline Model parse_model(const json& j, const std::string& source, std::size_t word_cap_override = 0) {
  Model m;
  if (!j.is_object()) throw SchemaError("$", "model must be a JSON object");
  m.name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "";
  const int k = as_int(require(j, "alphabet_size", "$"), "$.alphabet_size");
  if (k < 1) throw SchemaError("$.alphabet_size", "must be >= 1");
  std::vector<std::vector<int>> rows;
  if (j.contains("transition")) {
    const auto& t = j["transition"];
    if (!t.is_array() || t.size() != static_cast<std::size_t>(k))
      throw SchemaError("$.transition", "expected " + std::to_string(k) + " rows");
    for (std::size_t r = 0; r < t.size(); ++r) {
      const std::string rp = "$.transition[" + std::to_string(r) + "]";
      if (!t[r].is_array() || t[r].size() != static_cast<std::size_t>(k))
        throw SchemaError(rp, "expected " + std::to_string(k) + " entries");
      std::vector<int> row;
      for (std::size_t c = 0; c < t[r].size(); ++c) {
        const int v = as_int(t[r][c], rp + "[" + std::to_string(c) + "]");
        if (v != 0 && v != 1) throw SchemaError(rp + "[" + std::to_string(c) + "]", "entries must be 0 or 1");
        row.push_back(v);
      }
      rows.push_back(std::move(row));
    }
  } else {
    rows.assign(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(k), 1));
  }
  std::size_t word_cap = kDefaultWordCap;
  if (j.contains("word_cap")) {
    const double c = as_number(j["word_cap"], "$.word_cap");
    if (!(c >= 1)) throw SchemaError("$.word_cap", "must be >= 1");
    word_cap = static_cast<std::size_t>(c);
  }
  if (word_cap_override > 0) word_cap = word_cap_override;
  try {
    m.shift = Subshift(k, rows, word_cap);
  } catch (const Error& e) {
    throw SchemaError("$.transition", e.what());
  }
  if (j.contains("theta")) {
    m.theta = as_number(j["theta"], "$.theta");
    if (!(m.theta > 0 && m.theta < 1)) throw SchemaError("$.theta", "theta must lie in (0, 1)");
  }
  const auto& fns = require(j, "functions", "$");
  if (!fns.is_object()) throw SchemaError("$.functions", "expected an object");
  for (const auto& [key, val] : fns.items()) m.functions.emplace(key, parse_function(val, m.shift, "$.functions." + key));
  for (const char* field : {"potential", "roof"}) {
    if (!j.contains(field)) continue;
    if (!j[field].is_string()) throw SchemaError(std::string("$.") + field, "expected a function name");
    const auto name = j[field].get<std::string>();
    if (!m.functions.count(name)) throw SchemaError(std::string("$.") + field, "names undefined function '" + name + "'");
    (std::string(field) == "potential" ? m.potential : m.roof) = name;
  }
  if (!m.roof.empty()) {
    const auto& r = m.functions.at(m.roof);
    if (!(detail::min_value(r) > 0)) throw SchemaError("$.functions." + m.roof, "roof must be positive");
  }
  m.source = source;
  return m;
}

inline json builtin_model_json(const std::string& name) {
  const double log_half = std::log(0.5);
  const double sqrt2 = std::numbers::sqrt2;
  if (name == "bernoulli-sqrt2")
    return {{"name", name}, {"alphabet_size", 2}, {"transition", {{1, 1}, {1, 1}}}, {"theta", 0.5},
            {"functions", {{"f", {{"type", "constant"}, {"value", log_half}}},
                           {"tau", {{"type", "first_symbol"}, {"values", {1.0, sqrt2}}}},
                           {"one", {{"type", "constant"}, {"value", 1.0}}}}},
            {"potential", "f"}, {"roof", "tau"}};
  if (name == "constant-roof")
    return {{"name", name}, {"alphabet_size", 2}, {"transition", {{1, 1}, {1, 1}}}, {"theta", 0.5},
            {"functions", {{"f", {{"type", "constant"}, {"value", log_half}}}, {"tau", {{"type", "constant"}, {"value", 1.0}}}}},
            {"potential", "f"}, {"roof", "tau"}};
  if (name == "golden-mean")
    return {{"name", name}, {"alphabet_size", 2}, {"transition", {{1, 1}, {1, 0}}}, {"theta", 0.5},
            {"functions", {{"f", {{"type", "constant"}, {"value", 0.0}}},
                           {"tau", {{"type", "constant"}, {"value", 1.0}}},
                           {"tau2", {{"type", "first_symbol"}, {"values", {1.0, sqrt2}}}}}},
            {"potential", "f"}, {"roof", "tau"}};
  if (name == "bernoulli-37")
    return {{"name", name}, {"alphabet_size", 2}, {"transition", {{1, 1}, {1, 1}}}, {"theta", 0.5},
            {"functions", {{"g", {{"type", "first_symbol_log"}, {"values", {0.3, 0.7}}}},
                           {"tau", {{"type", "constant"}, {"value", 1.0}}}}},
            {"potential", "g"}, {"roof", "tau"}};
  if (name == "interaction")
    return {{"name", name}, {"alphabet_size", 2}, {"transition", {{1, 1}, {1, 1}}}, {"theta", 0.5},
            {"functions", {{"f", {{"type", "constant"}, {"value", log_half}}},
                           {"tau", {{"type", "interaction"}, {"depth", 10}, {"base", {1.0, sqrt2}}, {"amplitude", 0.25}, {"decay", 0.5}}}}},
            {"potential", "f"}, {"roof", "tau"}};
  throw SchemaError("builtin:" + name, "unknown built-in model (bernoulli-sqrt2, constant-roof, golden-mean, bernoulli-37, interaction)");
}

}  // namespace detail

inline const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names{"bernoulli-sqrt2", "constant-roof", "golden-mean", "bernoulli-37", "interaction"};
  return names;
}

inline Model parse_model_text(const std::string& text, std::size_t word_cap = 0) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return detail::parse_model(j, j.dump(), word_cap);
}

/// Reads a model file, or a built-in model given as "builtin:<name>". A nonzero word_cap overrides the
/// model's own cap on enumerated words.
inline Model load_model(const std::string& where, std::size_t word_cap = 0) {
  if (where.rfind("builtin:", 0) == 0) {
    const auto j = detail::builtin_model_json(where.substr(8));
    return detail::parse_model(j, j.dump(), word_cap);
  }
  std::ifstream in(where);
  if (!in) throw SchemaError(where, "cannot open model file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_model_text(ss.str(), word_cap);
  } catch (const SchemaError& e) {
    throw SchemaError(where + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  }
}

/// Observable file: {"base": <function>, "profile": {"breaks": [...], "coeffs": [[...], ...]}}; the profile
/// defaults to the constant 1.
inline SuspensionObservable parse_observable(const nlohmann::json& j, const Subshift& shift, const std::string& path = "$") {
  SuspensionObservable A{detail::parse_function(detail::require(j, "base", path), shift, path + ".base"), Profile()};
  if (j.contains("profile")) {
    const auto& p = j["profile"];
    const std::string pp = path + ".profile";
    const auto& br = detail::require(p, "breaks", pp);
    if (!br.is_array()) throw SchemaError(pp + ".breaks", "expected an array");
    std::vector<double> breaks;
    for (std::size_t i = 0; i < br.size(); ++i) breaks.push_back(detail::as_number(br[i], pp + ".breaks[" + std::to_string(i) + "]"));
    const auto& cf = detail::require(p, "coeffs", pp);
    if (!cf.is_array()) throw SchemaError(pp + ".coeffs", "expected an array of coefficient arrays");
    std::vector<std::vector<double>> coeffs;
    for (std::size_t i = 0; i < cf.size(); ++i) {
      const std::string cp = pp + ".coeffs[" + std::to_string(i) + "]";
      if (!cf[i].is_array()) throw SchemaError(cp, "expected an array");
      coeffs.push_back(detail::as_numbers(cf[i], cp, cf[i].size()));
    }
    try {
      A.profile = Profile(std::move(breaks), std::move(coeffs));
    } catch (const InvalidArgument& e) {
      throw SchemaError(pp, e.what());
    }
  }
  return A;
}

inline SuspensionObservable load_observable(const std::string& path, const Subshift& shift) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open observable file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path, std::string("invalid JSON: ") + e.what());
  }
  try {
    return parse_observable(j, shift);
  } catch (const SchemaError& e) {
    throw SchemaError(path + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  }
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string model_hash(const Model& m) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(m.source);
  return os.str();
}

}  // namespace ruelle
