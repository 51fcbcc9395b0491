#pragma once

#include "nowcast/period.hpp"
#include "nowcast/schema.hpp"

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nowcast {

/// A wage increase strictly above 10% counts as a positive label.
inline constexpr double kWageRatioThreshold = 1.1;

inline int binary_from_ratio(double ratio) { return ratio > kWageRatioThreshold ? 1 : 0; }

/// Either a 0/1 survey label or a post/pre wage ratio from agency data.
class LabelValue {
public:
    static LabelValue binary(int b);
    static LabelValue ratio(double r);

    bool is_ratio() const { return std::holds_alternative<double>(value_); }
    /// 0/1 view; ratios map through binary_from_ratio.
    int binary_view() const;
    std::optional<double> ratio_value() const;

private:
    explicit LabelValue(std::variant<int, double> v) : value_(v) {}
    std::variant<int, double> value_;
};

struct WagePair {
    double before = 0.0;
    double after = 0.0;
};

/// One sample. `attributes` is aligned with the table schema: categorical
/// fields store the level index, numeric fields the value, NaN marks missing.
struct Row {
    std::vector<double> attributes;
    std::string channel;
    double weight = 1.0;
    std::optional<LabelValue> label;
    std::optional<WagePair> wages;
    bool part_time = false; ///< written with emp_type part_time; such rows are dropped on load
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double cell) { return std::isnan(cell); }

enum class Source { survey, agency };

struct SampleTable {
    AttributeSchema schema;
    HalfYearPeriod period;
    Source source = Source::survey;
    std::vector<Row> rows;

    std::size_t size() const { return rows.size(); }
    double total_weight() const;
};

/// Reads a survey or agency CSV. Part-time rows are dropped. Errors name the
/// offending line.
SampleTable load_table(const std::filesystem::path& path, Source source, const AttributeSchema& schema);
SampleTable parse_table(std::istream& in, Source source, const AttributeSchema& schema,
                        const std::string& origin = "<stream>");

void write_table(std::ostream& out, const SampleTable& table);
void save_table(const std::filesystem::path& path, const SampleTable& table);

/// Integer apportionment of `quotas` by largest remainder: floors first, the
/// remaining units go to the largest fractional parts, lower index first on
/// ties. The result sums to round(sum(quotas)).
std::vector<std::size_t> largest_remainder(std::span<const double> quotas);

/// Expands each row into round_lr(weight * scale) unit-weight copies.
SampleTable replicate_by_weight(const SampleTable& table, double scale);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

} // namespace nowcast
