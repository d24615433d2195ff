#include "fairlds/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fairlds::csv {

int Table::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

Table parse(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    if (record.empty() && !field_started && field.empty()) return;
    end_field();
    // comment lines begin with '#'
    if (!(record.size() >= 1 && !record[0].empty() && record[0][0] == '#'))
      records.push_back(record);
    record.clear();
  };

  for (size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;  // next field exists even if empty
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field += ch;
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();

  Table t;
  if (!records.empty()) {
    t.header = records.front();
    t.rows.assign(records.begin() + 1, records.end());
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string escape(const std::string& field) {
  bool need = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!need) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace fairlds::csv
