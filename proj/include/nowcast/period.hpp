#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace nowcast {

enum class Half : std::uint8_t { H1 = 0, H2 = 1 };

/// A half-year period such as 2018H1. Periods are totally ordered and
/// spaced one unit apart, so (y, H2) + 1 == (y + 1, H1).
struct HalfYearPeriod {
    int year = 2000;
    Half half = Half::H1;

    /// Monotone integer index: year * 2 + half.
    constexpr int index() const { return year * 2 + static_cast<int>(half); }

    static constexpr HalfYearPeriod from_index(int idx) {
        const int y = idx >= 0 ? idx / 2 : -((-idx + 1) / 2);
        return {y, (idx - 2 * y) == 0 ? Half::H1 : Half::H2};
    }

    constexpr HalfYearPeriod next() const { return from_index(index() + 1); }
    constexpr HalfYearPeriod prev() const { return from_index(index() - 1); }
    constexpr HalfYearPeriod shifted(int halves) const { return from_index(index() + halves); }

    /// Signed number of half-years from `a` to `b`.
    friend constexpr int distance(HalfYearPeriod a, HalfYearPeriod b) { return b.index() - a.index(); }

    friend constexpr bool operator==(HalfYearPeriod a, HalfYearPeriod b) { return a.index() == b.index(); }
    friend constexpr std::strong_ordering operator<=>(HalfYearPeriod a, HalfYearPeriod b) {
        return a.index() <=> b.index();
    }

    std::string to_string() const;

    /// Parses "2018H1" / "2018h2". Throws nowcast::Error on malformed input.
    static HalfYearPeriod parse(std::string_view text);
};

} // namespace nowcast
