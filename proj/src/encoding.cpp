#include "nowcast/encoding.hpp"

#include "nowcast/error.hpp"

#include <cmath>

namespace nowcast {

EncodingParams fit_encoding(const SampleTable& table, std::span<const std::string> fields) {
    EncodingParams p;
    p.schema = fields.empty() ? table.schema : table.schema.subset(fields);
    const std::size_t nf = p.schema.size();
    p.mean.assign(nf, 0.0);
    p.sd.assign(nf, 1.0);
    p.missing_column.assign(nf, false);

    for (std::size_t j = 0; j < nf; ++j) {
        const auto& field = p.schema[j];
        const std::size_t src = table.schema.index_of(field.name);
        double sum = 0.0;
        double sq = 0.0;
        std::size_t n = 0;
        for (const auto& r : table.rows) {
            const double v = r.attributes[src];
            if (is_missing(v)) {
                p.missing_column[j] = true;
                continue;
            }
            if (!field.is_categorical()) {
                sum += v;
                sq += v * v;
                ++n;
            }
        }
        if (!field.is_categorical() && n > 0) {
            const double m = sum / static_cast<double>(n);
            const double var = std::max(0.0, sq / static_cast<double>(n) - m * m);
            p.mean[j] = m;
            const double sd = std::sqrt(var);
            p.sd[j] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? sd : 1.0;
        }
    }

    for (std::size_t j = 0; j < nf; ++j) {
        const auto& field = p.schema[j];
        if (field.is_categorical()) {
            const auto lv = field.levels();
            for (std::size_t l = 0; l < lv.size(); ++l) {
                p.columns.push_back({j, ColumnRole::one_hot, l, field.name + "=" + lv[l]});
            }
            if (p.missing_column[j]) {
                p.columns.push_back({j, ColumnRole::missing_level, 0, field.name + "=missing"});
            }
        } else {
            p.columns.push_back({j, ColumnRole::numeric, 0, field.name});
            if (p.missing_column[j]) {
                p.columns.push_back({j, ColumnRole::missing_indicator, 0, field.name + "_missing"});
            }
        }
    }
    return p;
}

EncodedMatrix encode(const SampleTable& table, const EncodingParams& params) {
    const std::size_t nf = params.schema.size();

    // Per params field: source column in the table, and a level translation.
    std::vector<std::size_t> src(nf);
    std::vector<std::vector<long>> level_map(nf);
    std::vector<std::size_t> offset(nf, 0);
    for (std::size_t c = params.columns.size(); c-- > 0;) {
        offset[params.columns[c].field] = c;
    }
    for (std::size_t j = 0; j < nf; ++j) {
        const auto& field = params.schema[j];
        const auto idx = table.schema.find(field.name);
        if (!idx) {
            throw Error("field '" + field.name + "' absent from table schema");
        }
        src[j] = *idx;
        const auto& tfield = table.schema[*idx];
        if (tfield.is_categorical() != field.is_categorical()) {
            throw Error("field '" + field.name + "' has a different kind than the encoding");
        }
        for (const auto& lvl : tfield.levels()) {
            const auto k = field.level_index(lvl);
            level_map[j].push_back(k ? static_cast<long>(*k) : -1L);
        }
    }

    EncodedMatrix out;
    out.params = params;
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.size()),
                                       static_cast<Eigen::Index>(params.width()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& attrs = table.rows[i].attributes;
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < nf; ++j) {
            const auto& field = params.schema[j];
            const double v = attrs[src[j]];
            const auto base = static_cast<Eigen::Index>(offset[j]);
            if (field.is_categorical()) {
                if (is_missing(v)) {
                    if (params.missing_column[j]) {
                        out.values(r, base + static_cast<Eigen::Index>(field.levels().size())) = 1.0;
                    }
                    continue;
                }
                // Level indices outside the table's own schema are unknown too.
                const auto& map = level_map[j];
                const long k = v >= 0.0 && v < static_cast<double>(map.size()) ? map[static_cast<std::size_t>(v)] : -1L;
                if (k >= 0) {
                    out.values(r, base + k) = 1.0;
                }
            } else {
                if (is_missing(v)) {
                    // Mean imputation: z-score 0.
                    if (params.missing_column[j]) {
                        out.values(r, base + 1) = 1.0;
                    }
                    continue;
                }
                out.values(r, base) = (v - params.mean[j]) / params.sd[j];
            }
        }
    }
    return out;
}

EncodedMatrix encode(const SampleTable& table, const std::optional<EncodingParams>& params) {
    return encode(table, params ? *params : fit_encoding(table));
}

std::vector<double> decode_row(const EncodingParams& params, std::span<const double> encoded) {
    if (encoded.size() != params.width()) {
        throw Error("encoded row width does not match encoding");
    }
    const std::size_t nf = params.schema.size();
    std::vector<double> out(nf, kMissing);
    std::vector<double> best(nf, 0.0);
    for (std::size_t c = 0; c < params.columns.size(); ++c) {
        const auto& col = params.columns[c];
        const double v = encoded[c];
        switch (col.role) {
        case ColumnRole::one_hot:
            if (v > best[col.field]) {
                best[col.field] = v;
                out[col.field] = static_cast<double>(col.level);
            }
            break;
        case ColumnRole::numeric:
            out[col.field] = v * params.sd[col.field] + params.mean[col.field];
            break;
        case ColumnRole::missing_level:
            if (v > best[col.field]) {
                best[col.field] = v;
                out[col.field] = kMissing;
            }
            break;
        case ColumnRole::missing_indicator:
            if (v > 0.5) {
                out[col.field] = kMissing;
            }
            break;
        }
    }
    return out;
}

} // namespace nowcast
