#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tagrank/core.hpp"

namespace tagrank::detail {

// Shortest representation that round-trips a double exactly.
inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fixed two decimals, for human-facing metric tables.
inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream iss(line);
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

inline double to_double(const std::string& tok, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
    throw ValidationError(ctx + ": bad number '" + tok + "'");
  return v;
}

inline long long to_ll(const std::string& tok, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
    throw ValidationError(ctx + ": bad integer '" + tok + "'");
  return v;
}

inline int to_int(const std::string& tok, const std::string& ctx) {
  const long long v = to_ll(tok, ctx);
  if (v < -2147483648LL || v > 2147483647LL)
    throw ValidationError(ctx + ": integer '" + tok + "' out of range");
  return static_cast<int>(v);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Writes content to a temp file in the destination directory, then renames
// it into place, so readers never observe a half-written file.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError(tmp + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw ValidationError(tmp + ": write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw ValidationError(path + ": rename failed: " + ec.message());
  }
}

// Sequential line consumer with positional error messages ("path:line: ...").
class LineReader {
 public:
  LineReader(std::string path, std::vector<std::string> lines)
      : path_(std::move(path)), lines_(std::move(lines)) {}

  static LineReader open(const std::string& path) {
    return LineReader(path, read_lines(path));
  }

  bool done() const { return next_ >= lines_.size(); }
  std::size_t line_number() const { return next_; }  // 1-based after next()

  const std::string& next(const std::string& expect) {
    if (done()) fail("unexpected end of file, expected " + expect);
    return lines_[next_++];
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(path_ + ":" + std::to_string(next_) + ": " + msg);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
};

}  // namespace tagrank::detail
