#include "nowcast/schema.hpp"

#include "nowcast/error.hpp"

#include <algorithm>
#include <unordered_set>

namespace nowcast {

std::span<const std::string> FieldSpec::levels() const {
    if (const auto* c = std::get_if<Categorical>(&kind)) {
        return c->levels;
    }
    return {};
}

std::optional<std::size_t> FieldSpec::level_index(std::string_view level) const {
    const auto lv = levels();
    const auto it = std::find(lv.begin(), lv.end(), level);
    if (it == lv.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - lv.begin());
}

AttributeSchema::AttributeSchema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
    std::unordered_set<std::string> seen;
    for (const auto& f : fields_) {
        if (f.name.empty()) {
            throw Error("schema field with empty name");
        }
        if (!seen.insert(f.name).second) {
            throw Error("duplicate schema field '" + f.name + "'");
        }
        if (f.is_categorical()) {
            const auto lv = f.levels();
            if (lv.empty()) {
                throw Error("categorical field '" + f.name + "' has no levels");
            }
            std::unordered_set<std::string> levels(lv.begin(), lv.end());
            if (levels.size() != lv.size()) {
                throw Error("categorical field '" + f.name + "' has duplicate levels");
            }
        }
    }
}

std::optional<std::size_t> AttributeSchema::find(std::string_view name) const {
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        if (fields_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t AttributeSchema::index_of(std::string_view name) const {
    if (auto i = find(name)) {
        return *i;
    }
    throw Error("unknown schema field '" + std::string(name) + "'");
}

AttributeSchema AttributeSchema::subset(std::span<const std::string> names) const {
    std::vector<FieldSpec> out;
    out.reserve(names.size());
    for (const auto& n : names) {
        out.push_back(fields_[index_of(n)]);
    }
    return AttributeSchema(std::move(out));
}

bool operator==(const AttributeSchema& a, const AttributeSchema& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& fa = a[i];
        const auto& fb = b[i];
        if (fa.name != fb.name || fa.is_categorical() != fb.is_categorical()) {
            return false;
        }
        const auto la = fa.levels();
        const auto lb = fb.levels();
        if (!std::equal(la.begin(), la.end(), lb.begin(), lb.end())) {
            return false;
        }
    }
    return true;
}

AttributeSchema canonical_schema() {
    const std::vector<std::string> regions = {"hokkaido", "tohoku", "kanto",    "chubu",
                                              "kinki",    "chugoku", "shikoku", "kyushu"};
    const std::vector<std::string> industries = {"manufacturing", "construction", "it_telecom",
                                                 "finance",       "wholesale_retail", "medical_welfare",
                                                 "services",      "other"};
    const std::vector<std::string> sizes = {"under30", "30to99", "100to299", "300to999", "1000plus"};
    return AttributeSchema({
        {"age", Numeric{"years"}},
        {"gender", Categorical{{"male", "female"}}},
        {"education", Categorical{{"junior_high", "high_school", "vocational", "junior_college", "university",
                                   "graduate"}}},
        {"loc_after", Categorical{regions}},
        {"ind_after", Categorical{industries}},
        {"size_after", Categorical{sizes}},
        {"loc_before", Categorical{regions}},
        {"ind_before", Categorical{industries}},
        {"size_before", Categorical{sizes}},
    });
}

std::vector<std::string> three_item_fields() { return {"age", "education", "size_before"}; }

std::vector<std::string> all_item_fields(const AttributeSchema& schema) {
    std::vector<std::string> out;
    for (const auto& f : schema.fields()) {
        out.push_back(f.name);
    }
    return out;
}

} // namespace nowcast
