#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mobprof {

using Seconds = std::int64_t;  // UTC seconds since the Unix epoch

std::optional<Seconds> parse_iso_timestamp(std::string_view text);
std::optional<std::chrono::sys_days> parse_iso_date(std::string_view text);
std::string format_timestamp(Seconds ts);
std::string format_date(std::chrono::sys_days day);

/// The single calendar year all analysis is restricted to. Days are 1-based day-of-year.
class AnalysisYear {
public:
    explicit AnalysisYear(int year);

    int year() const noexcept { return year_; }
    int days() const noexcept { return days_; }
    std::chrono::sys_days first_day() const noexcept { return first_; }
    Seconds start() const noexcept;
    Seconds end() const noexcept;  // exclusive

    bool contains(Seconds ts) const noexcept { return ts >= start() && ts < end(); }
    bool contains(std::chrono::sys_days d) const noexcept;

    /// Day-of-year (1-based) of an in-year timestamp.
    int day_of(Seconds ts) const noexcept;
    int day_of(std::chrono::sys_days d) const noexcept;
    std::chrono::sys_days date_of(int day_of_year) const noexcept;
    /// Month 1..12 of a day-of-year.
    int month_of_day(int day_of_year) const noexcept;
    /// Inclusive day-of-year range of a month.
    int first_day_of_month(int month) const noexcept;
    int last_day_of_month(int month) const noexcept;

private:
    int year_;
    int days_;
    std::chrono::sys_days first_;
};

}  // namespace mobprof
