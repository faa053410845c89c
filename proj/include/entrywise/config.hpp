#pragma once

// Text configuration format:
//
//   # comment
//   [section]
//   key = value
//
// Sections are [model], [experiment] and [output]. Blank lines and lines
// starting with '#' are ignored. Keys are unique within a section, unknown
// sections or keys are errors, and omitted keys keep their defaults. Vertex
// pairs are written 1-based as "i-j" separated by commas.

#include <cctype>
#include <cstdint>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "entrywise/csv.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/mc_harness.hpp"

namespace entrywise {

struct OutputConfig {
  std::string dir = "out";
  bool records = true;
  bool histogram = true;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  ExperimentConfig experiment;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  long long out = 0;
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-') throw ConfigError("config: '" + key + "' expects an unsigned integer");
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  std::uint64_t out = 0;
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + v + "'");
}

inline std::vector<VertexPair> parse_pairs(const std::string& key, const std::string& v) {
  std::vector<VertexPair> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw ConfigError("config: '" + key + "' entries look like i-j");
    const long long i = parse_int(key, trim(item.substr(0, dash)));
    const long long j = parse_int(key, trim(item.substr(dash + 1)));
    if (i < 1 || j < 1) throw ConfigError("config: '" + key + "' vertices are 1-based");
    out.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1)});
  }
  return out;
}

inline std::string emit_pairs(const std::vector<VertexPair>& pairs) {
  std::string s;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(pairs[k].i + 1) + "-" + std::to_string(pairs[k].j + 1);
  }
  return s;
}

inline const char* emit_bool(bool b) { return b ? "true" : "false"; }

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  ExperimentConfig& e = cfg.experiment;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::vector<std::string> seen;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = " (line " + std::to_string(lineNo) + ")";
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("config: malformed section header" + where);
      section = detail::trim(t.substr(1, t.size() - 2));
      if (section != "model" && section != "experiment" && section != "output") {
        throw ConfigError("config: unknown section [" + section + "]" + where);
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key = value" + where);
    if (section.empty()) throw ConfigError("config: key outside any section" + where);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string v = detail::trim(t.substr(eq + 1));
    const std::string full = section + "." + key;
    for (const auto& s : seen) {
      if (s == full) throw ConfigError("config: duplicate key '" + full + "'" + where);
    }
    seen.push_back(full);

    if (section == "model") {
      if (key == "n") e.n = detail::parse_int(full, v);
      else if (key == "a") e.a = detail::parse_double(full, v);
      else if (key == "b") e.b = detail::parse_double(full, v);
      else if (key == "p") e.p = detail::parse_double(full, v);
      else if (key == "q") e.q = detail::parse_double(full, v);
      else if (key == "tau") e.tau = detail::parse_double(full, v);
      else if (key == "n0") e.n0 = detail::parse_int(full, v);
      else if (key == "sparsity_c") e.sparsityC = detail::parse_double(full, v);
      else if (key == "sparsity_k") e.sparsityK = detail::parse_double(full, v);
      else if (key == "hollow") e.hollow = detail::parse_bool(full, v);
      else throw ConfigError("config: unknown key '" + full + "'" + where);
    } else if (section == "experiment") {
      if (key == "kind") e.kind = parse_experiment_kind(v);
      else if (key == "replicates") e.replicates = detail::parse_int(full, v);
      else if (key == "base_seed") e.baseSeed = detail::parse_uint(full, v);
      else if (key == "n_pos") e.nPos = detail::parse_int(full, v);
      else if (key == "n_neg") e.nNeg = detail::parse_int(full, v);
      else if (key == "vertex") e.vertex = detail::parse_int(full, v) - 1;
      else if (key == "pairs") e.pairs = detail::parse_pairs(full, v);
      else if (key == "alpha") e.alpha = detail::parse_double(full, v);
      else if (key == "eta") e.eta = detail::parse_double(full, v);
      else if (key == "eps_clip") e.epsClip = detail::parse_double(full, v);
      else if (key == "symmetric_plugin") e.symmetricPlugin = detail::parse_bool(full, v);
      else if (key == "workers") e.workers = detail::parse_int(full, v);
      else if (key == "reverse_order") e.reverseOrder = detail::parse_bool(full, v);
      else if (key == "histogram_bins") e.histogramBins = detail::parse_int(full, v);
      else throw ConfigError("config: unknown key '" + full + "'" + where);
    } else {
      if (key == "dir") cfg.output.dir = v;
      else if (key == "records") cfg.output.records = detail::parse_bool(full, v);
      else if (key == "histogram") cfg.output.histogram = detail::parse_bool(full, v);
      else throw ConfigError("config: unknown key '" + full + "'" + where);
    }
  }
  e.validate();
  return cfg;
}

/// Canonical text for a config; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  std::ostringstream s;
  s.imbue(std::locale::classic());
  const auto d = [](double v) { return format_double(v); };
  s << "[model]\n";
  s << "n = " << e.n << "\n";
  s << "a = " << d(e.a) << "\n";
  s << "b = " << d(e.b) << "\n";
  s << "p = " << d(e.p) << "\n";
  s << "q = " << d(e.q) << "\n";
  s << "tau = " << d(e.tau) << "\n";
  s << "n0 = " << e.n0 << "\n";
  s << "sparsity_c = " << d(e.sparsityC) << "\n";
  s << "sparsity_k = " << d(e.sparsityK) << "\n";
  s << "hollow = " << detail::emit_bool(e.hollow) << "\n";
  s << "\n[experiment]\n";
  s << "kind = " << to_string(e.kind) << "\n";
  s << "replicates = " << e.replicates << "\n";
  s << "base_seed = " << e.baseSeed << "\n";
  s << "n_pos = " << e.nPos << "\n";
  s << "n_neg = " << e.nNeg << "\n";
  s << "vertex = " << e.vertex + 1 << "\n";
  s << "pairs = " << detail::emit_pairs(e.pairs) << "\n";
  s << "alpha = " << d(e.alpha) << "\n";
  s << "eta = " << d(e.eta) << "\n";
  s << "eps_clip = " << d(e.epsClip) << "\n";
  s << "symmetric_plugin = " << detail::emit_bool(e.symmetricPlugin) << "\n";
  s << "workers = " << e.workers << "\n";
  s << "reverse_order = " << detail::emit_bool(e.reverseOrder) << "\n";
  s << "histogram_bins = " << e.histogramBins << "\n";
  s << "\n[output]\n";
  s << "dir = " << cfg.output.dir << "\n";
  s << "records = " << detail::emit_bool(cfg.output.records) << "\n";
  s << "histogram = " << detail::emit_bool(cfg.output.histogram) << "\n";
  return s.str();
}

inline RunConfig default_run_config(ExperimentKind kind = ExperimentKind::TwoBlockSbm) {
  RunConfig c;
  c.experiment = default_config(kind);
  return c;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical form, so formatting differences do not matter. The
/// output directory is left out: it names where results go, not what they are.
inline std::uint64_t config_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.output.dir.clear();
  return fnv1a(emit_config(c));
}

}  // namespace entrywise
