#include "vibrancy/csv.hpp"

#include "vibrancy/errors.hpp"

namespace vibrancy {

CsvReader::CsvReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ParseError("cannot open file: " + path);
}

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    record_line_ = line_;
    std::string cur;
    bool quoted = false;
    bool any = false;
    while (true) {
        if (c == EOF) {
            fields.push_back(cur);
            return true;
        }
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                int peek = in_.peek();
                if (peek == '"') {
                    cur.push_back('"');
                    in_.get();
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_;
                cur.push_back(ch);
            }
        } else if (ch == '"' && cur.empty() && !any) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
            any = false;
        } else if (ch == '\n') {
            ++line_;
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            fields.push_back(cur);
            return true;
        } else {
            cur.push_back(ch);
            any = true;
        }
        c = in_.get();
    }
}

void CsvReader::read_header(const std::vector<std::string>& required) {
    std::vector<std::string> fields;
    if (!next(fields)) throw ParseError(path_ + ": empty file, expected a header row");
    for (std::size_t i = 0; i < fields.size(); ++i) columns_[fields[i]] = i;
    for (const auto& name : required) {
        if (!columns_.count(name)) {
            throw ParseError(path_ + ": missing required column '" + name + "'");
        }
    }
}

bool CsvReader::has_column(const std::string& name) const { return columns_.count(name) > 0; }

const std::string& CsvReader::field(const std::vector<std::string>& fields,
                                    const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end() || it->second >= fields.size()) return empty_;
    return fields[it->second];
}

std::string csv_escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    return out;
}

}  // namespace vibrancy
