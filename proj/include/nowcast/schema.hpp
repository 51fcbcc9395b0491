#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nowcast {

struct Categorical {
    std::vector<std::string> levels;
};

struct Numeric {
    std::string unit;
};

struct FieldSpec {
    std::string name;
    std::variant<Categorical, Numeric> kind;

    bool is_categorical() const { return std::holds_alternative<Categorical>(kind); }
    /// Levels of a categorical field; empty for numeric fields.
    std::span<const std::string> levels() const;
    std::optional<std::size_t> level_index(std::string_view level) const;
};

/// Ordered list of attribute fields shared by survey and agency tables.
class AttributeSchema {
public:
    AttributeSchema() = default;
    /// Throws nowcast::Error on duplicate names or empty level lists.
    explicit AttributeSchema(std::vector<FieldSpec> fields);

    const std::vector<FieldSpec>& fields() const { return fields_; }
    std::size_t size() const { return fields_.size(); }
    const FieldSpec& operator[](std::size_t i) const { return fields_[i]; }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    /// Schema restricted to `names`, in the order given.
    AttributeSchema subset(std::span<const std::string> names) const;

    friend bool operator==(const AttributeSchema& a, const AttributeSchema& b);

private:
    std::vector<FieldSpec> fields_;
};

/// Job-changer items: age, gender, education and the location / industry /
/// size of the company after and before the change.
AttributeSchema canonical_schema();

/// The reduced item set used by the "three items" density-ratio variant.
std::vector<std::string> three_item_fields();
std::vector<std::string> all_item_fields(const AttributeSchema& schema);

/// Hiring channels. Any non-empty channel string is accepted; these are the
/// ones the tooling knows about and the order used for seeded resampling.
inline constexpr std::array<std::string_view, 5> kChannels = {
    "public_agency", "private_agency", "advertisement", "referral", "other"};
inline constexpr std::string_view kPublicChannel = "public_agency";
inline constexpr std::string_view kAgencyChannel = "private_agency";

} // namespace nowcast
