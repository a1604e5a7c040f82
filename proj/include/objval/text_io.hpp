#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace objval {

/// Shortest decimal text that parses back to the same double; "inf",
/// "-inf" and "nan" for non-finite values.
std::string format_double(double value);

/// Inverse of format_double. Throws FormatError on malformed text.
double parse_double(std::string_view text);

/// FNV-1a 64-bit hash, rendered as 16 lowercase hex digits by hash_hex.
std::uint64_t fnv1a64(std::string_view data);
std::string hash_hex(std::string_view data);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Regular files in `dir` whose name ends with `suffix`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::string_view suffix);

}  // namespace objval

namespace objval {

/// Line-oriented artifact text: a "<format> <config_hash>" header, then one
/// "<key> <token>..." line per field. Doubles use format_double.
class RecordWriter {
 public:
  RecordWriter(std::string_view format, std::string_view config_hash);

  void put(std::string_view key, const std::vector<double>& values);
  void put(std::string_view key, std::string_view token);
  void put(std::string_view key, long value);

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

class RecordReader {
 public:
  /// Throws FormatError when the header names a different format.
  RecordReader(std::string_view text, std::string_view expected_format);

  const std::string& config_hash() const { return config_hash_; }
  bool has(std::string_view key) const;
  /// Throws FormatError for missing keys or malformed values.
  std::vector<double> doubles(std::string_view key) const;
  std::string token(std::string_view key) const;
  long integer(std::string_view key) const;

 private:
  const std::vector<std::string>& tokens(std::string_view key) const;

  std::string config_hash_;
  std::vector<std::pair<std::string, std::vector<std::string>>> fields_;
};

}  // namespace objval
