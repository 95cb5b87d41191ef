#include "equity/csv.hpp"

#include <cmath>
#include <cstdio>

namespace equity::csv {

namespace {

void strip_bom(std::string& line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void split_line(const std::string& line, char delim, std::vector<std::string>& out) {
  out.clear();
  std::string cell;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"' && cell.empty()) {
      in_quotes = true;
    } else if (ch == delim) {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  out.push_back(std::move(cell));
}

Reader::Reader(std::istream& in, char delimiter) : in_(in), delim_(delimiter) {
  std::string line;
  while (std::getline(in_, line)) {
    strip_cr(line);
    strip_bom(line);
    if (line.empty()) continue;
    split_line(line, delim_, header_);
    break;
  }
}

int Reader::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

bool Reader::read_record(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    split_line(line, delim_, fields);
    return true;
  }
  return false;
}

bool Reader::next(std::vector<std::string>& fields) {
  if (!read_record(fields)) return false;
  ++rows_read_;
  return true;
}

std::string quote_field(const std::string& field, char delim) {
  bool needs = false;
  for (char ch : field) {
    if (ch == delim || ch == '"' || ch == '\n' || ch == '\r') {
      needs = true;
      break;
    }
  }
  if (!needs) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace equity::csv
