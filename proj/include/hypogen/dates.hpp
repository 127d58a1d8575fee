#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace hypogen {

/// Calendar date; day == 0 means "day not given" (month precision).
/// Orders as year, month, day, so a day-less date sorts before any
/// dated record in the same month.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    std::string to_string() const;
};

/// Month granularity, used by the model-visibility gate and the unseen window.
struct YearMonth {
    int year = 0;
    int month = 0;

    auto operator<=>(const YearMonth&) const = default;

    std::string to_string() const;
};

/// Parses "YYYY-MM-DD", "YYYY-MM", "YYYY/MM/DD" or "YYYY/MM". A trailing '*'
/// (annotation carried over from the registry source table) is ignored.
/// Throws InvalidInput on anything else, including impossible dates.
Date parse_date(std::string_view text);

/// Parses "YYYY-MM" or "YYYY/MM" (trailing '*' ignored).
YearMonth parse_year_month(std::string_view text);

inline YearMonth year_month_of(const Date& d) { return {d.year, d.month}; }

}  // namespace hypogen
