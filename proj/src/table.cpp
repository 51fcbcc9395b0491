#include "nowcast/table.hpp"

#include "nowcast/csv.hpp"
#include "nowcast/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace nowcast {

LabelValue LabelValue::binary(int b) {
    if (b != 0 && b != 1) {
        throw Error("binary label must be 0 or 1");
    }
    return LabelValue(std::variant<int, double>(std::in_place_index<0>, b));
}

LabelValue LabelValue::ratio(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw Error("wage ratio must be positive and finite");
    }
    return LabelValue(std::variant<int, double>(std::in_place_index<1>, r));
}

int LabelValue::binary_view() const {
    if (const auto* r = std::get_if<double>(&value_)) {
        return binary_from_ratio(*r);
    }
    return std::get<int>(value_);
}

std::optional<double> LabelValue::ratio_value() const {
    if (const auto* r = std::get_if<double>(&value_)) {
        return *r;
    }
    return std::nullopt;
}

double SampleTable::total_weight() const {
    double s = 0.0;
    for (const auto& r : rows) {
        s += r.weight;
    }
    return s;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw Error("not a number: '" + std::string(text) + "'");
    }
    return v;
}

namespace {

constexpr std::string_view kPartTime = "part_time";

} // namespace

SampleTable parse_table(std::istream& in, Source source, const AttributeSchema& schema, const std::string& origin) {
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& what) {
        return Error(origin + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            break;
        }
    }
    if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) {
        throw Error(origin + ": empty file, expected a header row");
    }

    std::unordered_map<std::string, std::size_t> col;
    {
        const auto header = split_csv(line);
        for (std::size_t i = 0; i < header.size(); ++i) {
            col.emplace(std::string(header[i]), i);
        }
    }
    const auto require = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end()) {
            throw fail("missing mandatory column '" + name + "'");
        }
        return it->second;
    };
    const auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = col.find(name);
        if (it == col.end()) {
            return std::nullopt;
        }
        return it->second;
    };

    const std::size_t c_period = require("period");
    std::vector<std::size_t> c_fields;
    for (const auto& f : schema.fields()) {
        c_fields.push_back(require(f.name));
    }
    const auto c_emp_after = optional_col("emp_type_after");
    const auto c_emp_before = optional_col("emp_type_before");
    std::optional<std::size_t> c_channel, c_weight, c_label, c_wage_before, c_wage_after;
    if (source == Source::survey) {
        c_channel = require("channel");
        c_weight = require("weight");
        c_label = require("wage_up_10pct");
    } else {
        c_channel = optional_col("channel");
        c_wage_before = require("wage_before");
        c_wage_after = require("wage_after");
    }
    const std::size_t n_cols = col.size();

    SampleTable table;
    table.schema = schema;
    table.source = source;
    bool have_period = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != n_cols) {
            throw fail("malformed row: expected " + std::to_string(n_cols) + " fields, got " +
                       std::to_string(cells.size()));
        }
        HalfYearPeriod period;
        try {
            period = HalfYearPeriod::parse(cells[c_period]);
        } catch (const Error& e) {
            throw fail(e.what());
        }
        if (!have_period) {
            table.period = period;
            have_period = true;
        } else if (period != table.period) {
            throw fail("row period " + period.to_string() + " differs from table period " +
                       table.period.to_string());
        }

        if ((c_emp_after && cells[*c_emp_after] == kPartTime) ||
            (c_emp_before && cells[*c_emp_before] == kPartTime)) {
            continue;
        }

        Row row;
        row.attributes.resize(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto cell = cells[c_fields[j]];
            const auto& field = schema[j];
            if (cell.empty()) {
                row.attributes[j] = kMissing;
            } else if (field.is_categorical()) {
                const auto lvl = field.level_index(cell);
                if (!lvl) {
                    throw fail("unknown level '" + std::string(cell) + "' for field '" + field.name + "'");
                }
                row.attributes[j] = static_cast<double>(*lvl);
            } else {
                try {
                    row.attributes[j] = parse_double(cell);
                } catch (const Error& e) {
                    throw fail("field '" + field.name + "': " + e.what());
                }
            }
        }

        try {
            if (source == Source::survey) {
                row.channel = std::string(cells[*c_channel]);
                row.weight = parse_double(cells[*c_weight]);
                if (!(row.weight >= 0.0) || !std::isfinite(row.weight)) {
                    throw Error("negative or non-finite weight '" + std::string(cells[*c_weight]) + "'");
                }
                const auto lab = cells[*c_label];
                if (lab == "1") {
                    row.label = LabelValue::binary(1);
                } else if (lab == "0") {
                    row.label = LabelValue::binary(0);
                } else if (!lab.empty()) {
                    throw Error("wage_up_10pct must be 0, 1 or empty");
                }
            } else {
                row.channel = c_channel ? std::string(cells[*c_channel]) : std::string(kAgencyChannel);
                const double before = parse_double(cells[*c_wage_before]);
                const double after = parse_double(cells[*c_wage_after]);
                if (!(before > 0.0) || !(after > 0.0)) {
                    throw Error("wages must be positive");
                }
                row.wages = WagePair{before, after};
                row.label = LabelValue::ratio(after / before);
            }
        } catch (const Error& e) {
            throw fail(e.what());
        }
        if (row.channel.empty()) {
            throw fail("empty channel");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

SampleTable load_table(const std::filesystem::path& path, Source source, const AttributeSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return parse_table(in, source, schema, path.string());
}

void write_table(std::ostream& out, const SampleTable& table) {
    const auto& schema = table.schema;
    out << "period,channel";
    if (table.source == Source::survey) {
        out << ",weight";
    }
    for (const auto& f : schema.fields()) {
        out << ',' << f.name;
    }
    out << ",emp_type_after,emp_type_before";
    out << (table.source == Source::survey ? ",wage_up_10pct" : ",wage_before,wage_after");
    out << '\n';

    const std::string period = table.period.to_string();
    for (const auto& row : table.rows) {
        out << period << ',' << row.channel;
        if (table.source == Source::survey) {
            out << ',' << format_double(row.weight);
        }
        for (std::size_t j = 0; j < schema.size(); ++j) {
            out << ',';
            const double v = row.attributes[j];
            if (is_missing(v)) {
                continue;
            }
            if (schema[j].is_categorical()) {
                out << schema[j].levels()[static_cast<std::size_t>(v)];
            } else {
                out << format_double(v);
            }
        }
        out << (row.part_time ? ",part_time,part_time" : ",full_time,full_time");
        if (table.source == Source::survey) {
            out << ',';
            if (row.label) {
                out << row.label->binary_view();
            }
        } else {
            WagePair w{1.0, 1.0};
            if (row.wages) {
                w = *row.wages;
            } else if (row.label && row.label->ratio_value()) {
                w.after = *row.label->ratio_value();
            }
            out << ',' << format_double(w.before) << ',' << format_double(w.after);
        }
        out << '\n';
    }
}

void save_table(const std::filesystem::path& path, const SampleTable& table) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    write_table(out, table);
}

std::vector<std::size_t> largest_remainder(std::span<const double> quotas) {
    std::vector<std::size_t> counts(quotas.size(), 0);
    std::vector<double> rem(quotas.size(), 0.0);
    double total = 0.0;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < quotas.size(); ++i) {
        const double q = quotas[i];
        if (!std::isfinite(q) || q < 0.0) {
            throw Error("apportionment quotas must be finite and nonnegative");
        }
        total += q;
        const double f = std::floor(q);
        counts[i] = static_cast<std::size_t>(f);
        rem[i] = q - f;
        assigned += counts[i];
    }
    const auto target = static_cast<std::size_t>(std::llround(total));
    std::size_t extra = target > assigned ? target - assigned : 0;
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; k < order.size() && extra > 0; ++k, --extra) {
        ++counts[order[k]];
    }
    return counts;
}

SampleTable replicate_by_weight(const SampleTable& table, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw Error("replication scale must be positive");
    }
    std::vector<double> quotas;
    quotas.reserve(table.size());
    for (const auto& r : table.rows) {
        quotas.push_back(r.weight * scale);
    }
    const auto counts = largest_remainder(quotas);
    SampleTable out;
    out.schema = table.schema;
    out.period = table.period;
    out.source = table.source;
    out.rows.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t k = 0; k < counts[i]; ++k) {
            Row r = table.rows[i];
            r.weight = 1.0;
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace nowcast
