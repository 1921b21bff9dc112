#include "qfsl/text.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace qfsl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

LineReader::LineReader(std::istream& in, std::string source, bool skip_comments)
    : in_(in), source_(std::move(source)), skip_comments_(skip_comments) {}

bool LineReader::has_next() {
  if (has_pending_) return true;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (skip_comments_ && line.front() == '#') continue;
    pending_ = std::move(line);
    has_pending_ = true;
    return true;
  }
  return false;
}

std::string LineReader::next() {
  if (!has_next()) fail(DataIssue::Truncated, "unexpected end of input");
  has_pending_ = false;
  return std::move(pending_);
}

void LineReader::fail(DataIssue issue, const std::string& what) const {
  throw DataError(issue, source_ + " line " + std::to_string(line_no_) + ": " + what);
}

std::uint64_t parse_u64(const std::string& text, const LineReader& at) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    at.fail(DataIssue::Malformed, "expected a non-negative integer, found '" + text + "'");
  }
  errno = 0;
  const auto v = std::strtoull(text.c_str(), nullptr, 10);
  if (errno == ERANGE) at.fail(DataIssue::Malformed, "integer out of range: " + text);
  return v;
}

std::size_t parse_count(const std::string& text, const LineReader& at) {
  return static_cast<std::size_t>(parse_u64(text, at));
}

double parse_double(const std::string& text, const LineReader& at) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    at.fail(DataIssue::Malformed, "expected a finite number, found '" + text + "'");
  }
  return v;
}

}  // namespace qfsl
