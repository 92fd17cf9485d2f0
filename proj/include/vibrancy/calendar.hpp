#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace vibrancy {

// Calendar date. Proleptic Gregorian, validated on construction from text.
struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;
};

// Minutes-resolution time of day ("HH:MM" or "HH:MM:SS" on input, seconds ignored).
struct TimeOfDay {
    int hour = 0;
    int minute = 0;

    auto operator<=>(const TimeOfDay&) const = default;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);
bool is_valid_date(const Date& d);

// Days since 1970-01-01 (civil-days algorithm), negative before the epoch.
std::int64_t to_serial_day(const Date& d);
Date from_serial_day(std::int64_t days);

// Strict ISO-8601 "YYYY-MM-DD". Returns nullopt on any malformation.
std::optional<Date> parse_date(const std::string& text);
std::optional<TimeOfDay> parse_time(const std::string& text);

std::string format_date(const Date& d);

// Inclusive date interval used for study-window filtering.
struct DateWindow {
    Date begin;
    Date end;

    bool contains(const Date& d) const { return begin <= d && d <= end; }
};

}  // namespace vibrancy
