#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dfaprint {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line the problem was found on.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message, const std::string& source = {});

  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

using FamilyLabel = std::string;

// Shortest decimal string that parses back to exactly `value`.
std::string format_real(double value);

// Strict: the whole of `text` must be a decimal real. No surrounding blanks.
std::optional<double> parse_real(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char separator);
std::vector<std::string_view> split_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace dfaprint
