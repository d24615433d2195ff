#pragma once

#include <string>
#include <vector>

namespace fairlds::csv {

/// RFC-4180-style table: quoted fields, embedded commas/quotes, CRLF.
/// Lines starting with '#' outside quotes are skipped (provenance headers).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

Table read_file(const std::string& path);
Table parse(const std::string& text);

std::string escape(const std::string& field);

}  // namespace fairlds::csv
