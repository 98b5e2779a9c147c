#include "fintwit/csv.hpp"

#include <fstream>
#include <sstream>

#include "fintwit/common.hpp"

namespace fintwit {

namespace {

// Parses the whole buffer; handles quoted fields spanning newlines.
std::vector<std::vector<std::string>> parse_buffer(const std::string& buf) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // Skip blank lines (a single empty field).
        if (!(record.size() == 1 && record[0].empty())) records.push_back(record);
        record.clear();
    };

    for (std::size_t i = 0; i < buf.size(); ++i) {
        const char c = buf[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < buf.size() && buf[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (field_started || !field.empty() || !record.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_record();
    }
    return records;
}

}  // namespace

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_buffer(ss.str());
}

std::vector<std::string> split_csv_line(const std::string& line) {
    auto records = parse_buffer(line);
    if (records.empty()) return {};
    return records.front();
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace fintwit
