#pragma once

// Line-oriented parsing helpers shared by the model and dataset file formats.

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "qfsl/error.hpp"

namespace qfsl {

/// Shortest text that round-trips: 17 significant digits.
std::string format_double(double v);

std::vector<std::string> split_ws(std::string_view line);
std::vector<std::string> split_tabs(std::string_view line);

std::uint64_t fnv1a(std::string_view bytes);

/// Yields non-blank lines, optionally skipping `#` comments, and tracks
/// line numbers for diagnostics.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source, bool skip_comments = false);

  bool has_next();
  /// Throws DataError(Truncated) at end of input.
  std::string next();
  std::size_t line_number() const { return line_no_; }

  [[noreturn]] void fail(DataIssue issue, const std::string& what) const;

 private:
  std::istream& in_;
  std::string source_;
  bool skip_comments_;
  std::size_t line_no_ = 0;
  std::string pending_;
  bool has_pending_ = false;
};

std::size_t parse_count(const std::string& text, const LineReader& at);
std::uint64_t parse_u64(const std::string& text, const LineReader& at);
double parse_double(const std::string& text, const LineReader& at);

}  // namespace qfsl
