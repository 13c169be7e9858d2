#include "prodnet/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prodnet/errors.hpp"

namespace prodnet {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  throw ParseError(source + ": missing required column '" + name + "'");
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  std::size_t start = 0;
  // Leading "#" lines carry provenance comments.
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) start = 3;
  while (start < text.size() && text[start] == '#') {
    const auto nl = text.find('\n', start);
    start = nl == std::string::npos ? text.size() : nl + 1;
    ++line;
  }
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) {
      if (t.header.empty()) {
        t.header = row;
      } else {
        if (row.size() != t.header.size())
          throw ParseError(source + ": line " + std::to_string(line) + " has " + std::to_string(row.size()) +
                           " fields, expected " + std::to_string(t.header.size()));
        t.rows.push_back(row);
      }
    }
    row.clear();
  };
  for (std::size_t k = start; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
      ++line;
    } else if (c != '\r') {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ParseError(source + ": unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  if (t.header.empty()) throw ParseError(source + ": empty file");
  // Strip a UTF-8 byte-order mark from the first header field.
  if (t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0] = t.header[0].substr(3);
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.filename().string());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) throw ParseError(context + ": empty numeric field");
  const std::string t = s.substr(b, e - b + 1);
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ParseError(context + ": '" + s + "' is not a finite number");
  return v;
}

int parse_int(const std::string& s, const std::string& context) {
  const double v = parse_double(s, context);
  if (v != std::floor(v)) throw ParseError(context + ": '" + s + "' is not an integer");
  return static_cast<int>(v);
}

}  // namespace prodnet
