#pragma once

#include <string>
#include <vector>

namespace fintwit {

// Minimal RFC-4180 reader: quoted fields, embedded commas/newlines, "" escapes.
// Returns one vector of fields per record.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

// Split a single CSV line (no embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line);

std::string csv_escape(const std::string& field);

}  // namespace fintwit
