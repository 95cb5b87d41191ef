#pragma once

#include <istream>
#include <string>
#include <vector>

namespace equity::csv {

// Minimal delimited-text reader: header row, configurable delimiter, quoted
// fields with doubled-quote escapes inside one physical line, CRLF and a
// leading UTF-8 BOM tolerated. Blank lines are skipped.
class Reader {
public:
  Reader(std::istream& in, char delimiter = ',');

  const std::vector<std::string>& header() const { return header_; }
  // Column index for `name`, -1 when absent.
  int column(const std::string& name) const;

  // Fills `fields` with the next row; false at end of stream.
  bool next(std::vector<std::string>& fields);

  std::size_t rows_read() const { return rows_read_; }

private:
  std::istream& in_;
  char delim_;
  std::vector<std::string> header_;
  std::size_t rows_read_ = 0;
  bool read_record(std::vector<std::string>& fields);
};

void split_line(const std::string& line, char delim, std::vector<std::string>& out);

// Field quoting for writers: wraps in quotes when the field contains the
// delimiter, a quote, or a newline.
std::string quote_field(const std::string& field, char delim = ',');

// Fixed formatting used by every exporter: shortest form at 9 significant
// digits, so table round-trips reproduce values exactly at that precision.
std::string format_value(double v);

}  // namespace equity::csv
