#include "nowcast/period.hpp"

#include "nowcast/error.hpp"

#include <charconv>

namespace nowcast {

std::string HalfYearPeriod::to_string() const {
    return std::to_string(year) + (half == Half::H1 ? "H1" : "H2");
}

HalfYearPeriod HalfYearPeriod::parse(std::string_view text) {
    const auto bad = [&] { return Error("malformed half-year period '" + std::string(text) + "'"); };
    if (text.size() != 6) {
        throw bad();
    }
    const char h = text[text.size() - 2];
    const char n = text.back();
    if ((h != 'H' && h != 'h') || (n != '1' && n != '2')) {
        throw bad();
    }
    int year = 0;
    const auto digits = text.substr(0, text.size() - 2);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), year);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
        throw bad();
    }
    return {year, n == '1' ? Half::H1 : Half::H2};
}

} // namespace nowcast
