#pragma once

#include "nowcast/error.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nowcast {

/// Splits on commas and trims blanks around each cell. No quoting.
std::vector<std::string_view> split_csv(std::string_view line);

/// A small header-addressed CSV document; blank lines are skipped.
struct CsvDocument {
    struct Record {
        std::size_t line = 0;
        std::vector<std::string> cells;
    };

    std::string origin;
    std::unordered_map<std::string, std::size_t> columns;
    std::vector<Record> records;

    /// Column index; throws naming the missing column.
    std::size_t require(const std::string& name) const;
    bool has(const std::string& name) const { return columns.count(name) > 0; }
    Error error(const Record& r, const std::string& what) const;
};

CsvDocument read_csv(std::istream& in, const std::string& origin);

} // namespace nowcast
