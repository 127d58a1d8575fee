#include "hypogen/dates.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <vector>

#include "hypogen/errors.hpp"

namespace hypogen {

namespace {

bool is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr std::array<int, 13> kDays = {0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return kDays[static_cast<std::size_t>(month)];
}

int parse_int(std::string_view text, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InvalidInput("bad " + std::string(what) + " in date: '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split_date_fields(std::string_view text) {
    while (!text.empty() && (text.back() == '*' || std::isspace(static_cast<unsigned char>(text.back())))) {
        text.remove_suffix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '-' || text[i] == '/') {
            fields.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

}  // namespace

std::string Date::to_string() const {
    char buf[32];
    if (day > 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    }
    return buf;
}

std::string YearMonth::to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

Date parse_date(std::string_view text) {
    auto fields = split_date_fields(text);
    if (fields.size() < 2 || fields.size() > 3) {
        throw InvalidInput("unparseable date: '" + std::string(text) + "'");
    }
    Date d;
    d.year = parse_int(fields[0], "year");
    d.month = parse_int(fields[1], "month");
    if (fields.size() == 3) d.day = parse_int(fields[2], "day");
    if (d.year < 1 || d.month < 1 || d.month > 12) {
        throw InvalidInput("invalid date: '" + std::string(text) + "'");
    }
    if (d.day != 0 && (d.day < 1 || d.day > days_in_month(d.year, d.month))) {
        throw InvalidInput("invalid day of month: '" + std::string(text) + "'");
    }
    return d;
}

YearMonth parse_year_month(std::string_view text) {
    auto fields = split_date_fields(text);
    if (fields.size() != 2) {
        throw InvalidInput("unparseable year-month: '" + std::string(text) + "'");
    }
    YearMonth ym{parse_int(fields[0], "year"), parse_int(fields[1], "month")};
    if (ym.year < 1 || ym.month < 1 || ym.month > 12) {
        throw InvalidInput("invalid year-month: '" + std::string(text) + "'");
    }
    return ym;
}

}  // namespace hypogen
