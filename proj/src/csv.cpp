#include "xhate/csv.hpp"

#include <fstream>
#include <sstream>

#include "xhate/errors.hpp"

namespace xhate {

Table parse_csv(const std::string& content) {
    Table table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any_field = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        any_field = true;
    };
    auto end_record = [&] {
        if (!any_field && field.empty() && record.empty()) return;  // blank line
        end_field();
        if (table.header.empty()) {
            table.header = record;
        } else {
            table.rows.push_back(record);
        }
        record.clear();
        any_field = false;
    };

    std::size_t i = 0;
    const std::size_t n = content.size();
    while (i < n) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallow; record ends at the following '\n'
        } else if (c == '\n') {
            end_record();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    if (in_quotes) throw SchemaError("csv: unterminated quoted field");
    if (any_field || !field.empty()) end_record();
    return table;
}

Table read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("csv: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace xhate
