#pragma once

// Minimal RFC 4180 reader/writer for the fixture and artifact files.

#include <filesystem>
#include <string>
#include <vector>

namespace prodnet {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index of `name`; throws ParseError naming the file and field.
  std::size_t column(const std::string& name) const;
  std::string source;  ///< file name, for error messages
};

/// Throws DataError if the file cannot be opened, ParseError on malformed rows.
CsvTable read_csv(const std::filesystem::path& path);
/// RFC 4180 fields; leading lines starting with "#" are skipped.
CsvTable parse_csv(const std::string& text, const std::string& source);

std::string csv_escape(const std::string& field);
/// Shortest round-trip decimal representation.
std::string format_double(double x);
/// Parses a finite double; throws ParseError mentioning `context` otherwise.
double parse_double(const std::string& s, const std::string& context);
int parse_int(const std::string& s, const std::string& context);

}  // namespace prodnet
