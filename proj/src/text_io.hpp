#pragma once

// Shared helpers for the line-oriented text formats.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "daug/env.hpp"
#include "daug/errors.hpp"

namespace daug {
namespace text_io {

inline void put_vector(std::ostream& out, const Vec& v) {
  char buf[40];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) out << ' ';
    out << buf;
  }
  out << '\n';
}

// key=value tokens after a fixed prefix.
inline std::vector<std::pair<std::string, std::string>> split_fields(const std::string& line, std::size_t skip) {
  std::istringstream in(line);
  std::string tok;
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < skip && in >> tok; ++i) {
  }
  while (in >> tok) {
    const auto eq = tok.find('=');
    out.emplace_back(tok.substr(0, eq), eq == std::string::npos ? std::string() : tok.substr(eq + 1));
  }
  return out;
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++lineno_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::string require(const char* what) {
    std::string line;
    if (!next(line)) fail(std::string("unexpected end of file, expected ") + what);
    return line;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(origin_, lineno_, what); }

  Vec numbers(const std::string& line, int expected) {
    Vec v(expected);
    const char* p = line.data();
    const char* end = p + line.size();
    int count = 0;
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p >= end) break;
      const char* tok_end = p;
      while (tok_end < end && *tok_end != ' ' && *tok_end != '\t') ++tok_end;
      std::string tok(p, tok_end);
      char* conv_end = nullptr;
      const double x = std::strtod(tok.c_str(), &conv_end);
      if (conv_end == tok.c_str() || *conv_end != '\0') fail("bad number '" + tok + "'");
      if (!std::isfinite(x)) fail("non-finite value '" + tok + "'");
      if (count < expected) v[count] = x;
      ++count;
      p = tok_end;
    }
    if (count != expected)
      fail("expected " + std::to_string(expected) + " values, found " + std::to_string(count));
    return v;
  }

  std::size_t lineno() const { return lineno_; }

 private:
  std::istream& in_;
  std::string origin_;
  std::size_t lineno_ = 0;
};

template <typename T>
T parse_int(LineReader& r, const std::string& key, const std::string& value) {
  T v{};
  const auto* end = value.data() + value.size();
  const auto [p, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || p != end || value.empty()) r.fail("bad value for " + key + ": '" + value + "'");
  return v;
}

}  // namespace text_io

}  // namespace daug
