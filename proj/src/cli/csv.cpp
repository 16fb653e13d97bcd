#include "ullgm/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace ullgm::cli {

int CsvTable::find(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<int>(j);
  }
  return -1;
}

int CsvTable::require(std::string_view name) const {
  const int j = find(name);
  if (j < 0) throw InputError("column '" + std::string(name) + "' not found in header");
  return j;
}

namespace {

std::vector<std::string> split_record(std::string_view text, std::size_t& pos, long line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      ++pos;
      continue;
    }
    if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n' || c == '\r') {
      ++pos;
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      fields.push_back(std::move(field));
      return fields;
    } else {
      field.push_back(c);
    }
    ++pos;
  }
  if (quoted) throw InputError("unterminated quoted field on line " + std::to_string(line));
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  long line = 1;
  if (pos >= text.size()) throw InputError("empty CSV input");
  t.header = split_record(text, pos, line);
  for (auto& h : t.header) h = trim(h);
  while (pos < text.size()) {
    ++line;
    auto rec = split_record(text, pos, line);
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;  // blank line
    if (rec.size() != t.header.size()) {
      throw InputError("line " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                       " fields, header has " + std::to_string(t.header.size()));
    }
    for (auto& f : rec) f = trim(f);
    t.rows.push_back(std::move(rec));
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, long row, std::string_view column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last) {
    throw InputError("row " + std::to_string(row) + ", column '" + std::string(column) +
                     "': cannot parse '" + std::string(text) + "' as a number");
  }
  return v;
}

int parse_count(std::string_view text, long row, std::string_view column) {
  const double v = parse_double(text, row, column);
  if (!(v >= 0.0) || v != std::floor(v) || v > 2147483647.0) {
    throw InputError("row " + std::to_string(row) + ", column '" + std::string(column) +
                     "': expected a non-negative integer count, got '" + std::string(text) + "'");
  }
  return static_cast<int>(v);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()), path_(path) {
  if (!out_) throw InputError("cannot write '" + path.string() + "'");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("CSV row width mismatch in " + path_.string());
  for (std::size_t j = 0; j < fields.size(); ++j) {
    if (j) out_ << ',';
    const std::string& f = fields[j];
    if (f.find_first_of(",\"\n\r") != std::string::npos) {
      out_ << '"';
      for (char c : f) {
        if (c == '"') out_ << '"';
        out_ << c;
      }
      out_ << '"';
    } else {
      out_ << f;
    }
  }
  out_ << '\n';
  if (!out_) throw InputError("write failed for '" + path_.string() + "'");
}

}  // namespace ullgm::cli
