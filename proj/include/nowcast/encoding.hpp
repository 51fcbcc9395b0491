#pragma once

#include "nowcast/schema.hpp"
#include "nowcast/table.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nowcast {

enum class ColumnRole { one_hot, numeric, missing_level, missing_indicator };

/// Maps an encoded column back to the schema field (and level) it came from.
struct EncodedColumn {
    std::size_t field = 0;
    ColumnRole role = ColumnRole::numeric;
    std::size_t level = 0;
    std::string name;
};

/// Everything needed to encode further tables the same way: the selected
/// fields, z-score parameters for numerics, and which fields got an extra
/// missing-value column because the fitting table contained gaps.
struct EncodingParams {
    AttributeSchema schema;
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<bool> missing_column;
    std::vector<EncodedColumn> columns;

    std::size_t width() const { return columns.size(); }
};

struct EncodedMatrix {
    Eigen::MatrixXd values;
    EncodingParams params;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Fits encoding parameters on `table`, restricted to `fields` (all schema
/// fields when empty). Constant numeric columns get sd 1.
EncodingParams fit_encoding(const SampleTable& table, std::span<const std::string> fields = {});

/// One-hot categoricals, z-scored numerics. Levels unknown to `params`
/// encode as an all-zero block; a field missing from the table is an error.
EncodedMatrix encode(const SampleTable& table, const EncodingParams& params);
EncodedMatrix encode(const SampleTable& table, const std::optional<EncodingParams>& params = std::nullopt);

/// Inverse of the row encoding: level index (argmax of the one-hot block) or
/// de-standardized numeric per field of params.schema; NaN when missing.
std::vector<double> decode_row(const EncodingParams& params, std::span<const double> encoded);

} // namespace nowcast
