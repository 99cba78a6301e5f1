#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace figrl {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RowIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct SchemaError : std::runtime_error {
  SchemaError(std::string what, std::vector<RowIssue> row_issues)
      : std::runtime_error(std::move(what)), issues(std::move(row_issues)) {}
  std::vector<RowIssue> issues;
};

// Whole file as lines, without trailing newlines. Throws IoError.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes content atomically-ish (temp file + rename) so partially
// written artifacts never carry a final name.
void write_file(const std::filesystem::path& path, std::string_view content);

// "sha256:<hex>" of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

// FNV-1a, used for stable scripting fingerprints and id-keyed draws.
std::uint64_t fnv1a64(std::string_view bytes);

std::string base64_encode(std::string_view bytes);

}  // namespace figrl
