#pragma once

#include <string>
#include <vector>

namespace stablerules {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 reader: quoted fields, doubled quotes, CR/LF line ends.
// Header row is required.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

void write_csv(const std::string& path, const CsvTable& table);
std::string csv_escape(const std::string& field);

// Shortest round-trip style formatting (%.17g); used everywhere a double
// lands in a file so identical runs produce identical bytes.
std::string format_double(double v);
double parse_double(const std::string& s, bool* ok);

}  // namespace stablerules
