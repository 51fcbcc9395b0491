#include "nowcast/csv.hpp"

#include <istream>

namespace nowcast {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
            cell.remove_prefix(1);
        }
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
            cell.remove_suffix(1);
        }
        out.push_back(cell);
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::size_t CsvDocument::require(const std::string& name) const {
    const auto it = columns.find(name);
    if (it == columns.end()) {
        throw Error(origin + ": missing mandatory column '" + name + "'");
    }
    return it->second;
}

Error CsvDocument::error(const Record& r, const std::string& what) const {
    return Error(origin + ":" + std::to_string(r.line) + ": " + what);
}

CsvDocument read_csv(std::istream& in, const std::string& origin) {
    CsvDocument doc;
    doc.origin = origin;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv(line);
        if (!have_header) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                doc.columns.emplace(std::string(cells[i]), i);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != doc.columns.size()) {
            throw Error(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(doc.columns.size()) +
                        " fields, found " + std::to_string(cells.size()));
        }
        CsvDocument::Record rec;
        rec.line = line_no;
        rec.cells.assign(cells.begin(), cells.end());
        doc.records.push_back(std::move(rec));
    }
    if (!have_header) {
        throw Error(origin + ": empty file, expected a header row");
    }
    return doc;
}

} // namespace nowcast
