#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace vibrancy {

// Minimal RFC 4180 reader: comma separation, optional double-quote quoting with
// "" escapes, \n or \r\n line ends. Quoted fields may contain commas and newlines.
class CsvReader {
public:
    explicit CsvReader(const std::string& path);

    // Reads the next record into `fields`. Returns false at end of input.
    // `line()` reports the 1-based line the record started on.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const { return record_line_; }

    // Header handling: call once after construction.
    // Throws ParseError naming the file when a required column is missing.
    void read_header(const std::vector<std::string>& required);
    bool has_column(const std::string& name) const;
    const std::string& field(const std::vector<std::string>& fields, const std::string& name) const;

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 1;
    std::unordered_map<std::string, std::size_t> columns_;
    std::string empty_;
};

// Escapes a field per RFC 4180 when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

// Joins and escapes one record, no trailing newline.
std::string csv_join(const std::vector<std::string>& fields);

}  // namespace vibrancy
