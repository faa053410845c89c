#pragma once

// Observation files:
//
//   # entrywise observation v1
//   n,<n>
//   row,col,value
//   <i>,<j>,<a_ij>        one line per nonzero with i <= j, 1-based
//
// Entries not listed are zero.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>
#include <string>
#include <unistd.h>

#include "entrywise/csv.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/model.hpp"
#include "entrywise/types.hpp"

namespace entrywise {

inline constexpr const char* kObservationHeader = "# entrywise observation v1";

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Writes to a sibling temporary file and renames it over the target, so the
/// target is either absent, the old content, or the complete new content.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp, ec);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

inline std::string observation_text(const DenseSymMatrix& a) {
  CsvWriter w(kObservationHeader);
  w.row("n", a.n());
  w.row("row", "col", "value");
  for (Index j = 0; j < a.n(); ++j) {
    for (Index i = 0; i <= j; ++i) {
      if (a(i, j) != 0.0) w.row(i + 1, j + 1, a(i, j));
    }
  }
  return w.str();
}

inline DenseSymMatrix parse_observation(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kObservationHeader) {
    throw ConfigError("observation: missing '" + std::string(kObservationHeader) + "' header");
  }
  if (!std::getline(in, line) || line.rfind("n,", 0) != 0) throw ConfigError("observation: missing n line");
  long long n = 0;
  try {
    n = std::stoll(line.substr(2));
  } catch (const std::exception&) {
    throw ConfigError("observation: bad n line '" + line + "'");
  }
  if (n < 1) throw ConfigError("observation: n must be positive");
  if (!std::getline(in, line) || line != "row,col,value") throw ConfigError("observation: missing column header");
  Matrix m = Matrix::Zero(n, n);
  int lineNo = 3;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    long long i = 0;
    long long j = 0;
    double v = 0.0;
    char c1 = 0;
    char c2 = 0;
    ls >> i >> c1 >> j >> c2 >> v;
    if (ls.fail() || c1 != ',' || c2 != ',' || i < 1 || j < 1 || i > n || j > n) {
      throw ConfigError("observation: bad entry on line " + std::to_string(lineNo));
    }
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = v;
  }
  return DenseSymMatrix::from_symmetric(std::move(m));
}

inline DenseSymMatrix read_observation(const std::filesystem::path& path) {
  return parse_observation(read_text_file(path));
}

}  // namespace entrywise
