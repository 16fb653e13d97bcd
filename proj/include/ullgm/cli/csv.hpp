#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ullgm::cli {

/// Malformed input or an unreadable/unwritable file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  int find(std::string_view name) const;
  /// Column index by name; throws InputError naming the missing column.
  int require(std::string_view name) const;
};

/// RFC-4180-style parsing: comma separated, first line is the header,
/// double-quoted fields may contain commas and doubled quotes. Every row
/// must have as many fields as the header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double v);

/// Strict numeric parsing; throws InputError naming row (1-based data row)
/// and column on failure.
double parse_double(std::string_view text, long row, std::string_view column);
int parse_count(std::string_view text, long row, std::string_view column);

/// 64-bit FNV-1a of a byte string, used as a dataset fingerprint.
std::uint64_t fnv1a64(std::string_view bytes);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t width_;
  std::filesystem::path path_;
};

}  // namespace ullgm::cli
