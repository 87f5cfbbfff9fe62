#include "mobprof/dates.hpp"

#include <charconv>
#include <cstdio>

namespace mobprof {

namespace chr = std::chrono;

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

std::optional<chr::sys_days> date_prefix(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!read_digits(s, 0, 4, y) || !read_digits(s, 5, 2, m) || !read_digits(s, 8, 2, d))
        return std::nullopt;
    chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                            chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return chr::sys_days{ymd};
}

}  // namespace

std::optional<chr::sys_days> parse_iso_date(std::string_view text) {
    if (text.size() != 10) return std::nullopt;
    return date_prefix(text);
}

// Accepts YYYY-MM-DDTHH:MM:SS with 'T' or ' ' separator and an optional trailing 'Z'.
std::optional<Seconds> parse_iso_timestamp(std::string_view text) {
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    if (text.size() != 19) return std::nullopt;
    auto day = date_prefix(text);
    if (!day) return std::nullopt;
    if ((text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':')
        return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!read_digits(text, 11, 2, hh) || !read_digits(text, 14, 2, mm) ||
        !read_digits(text, 17, 2, ss))
        return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    return static_cast<Seconds>(day->time_since_epoch().count()) * 86400 + hh * 3600 + mm * 60 +
           ss;
}

std::string format_date(chr::sys_days day) {
    chr::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_timestamp(Seconds ts) {
    Seconds days = ts >= 0 ? ts / 86400 : (ts - 86399) / 86400;
    Seconds rem = ts - days * 86400;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d",
                  format_date(chr::sys_days{chr::days{days}}).c_str(), static_cast<int>(rem / 3600),
                  static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
    return buf;
}

AnalysisYear::AnalysisYear(int year)
    : year_(year),
      days_(chr::year{year}.is_leap() ? 366 : 365),
      first_(chr::sys_days{chr::year{year} / 1 / 1}) {}

Seconds AnalysisYear::start() const noexcept {
    return static_cast<Seconds>(first_.time_since_epoch().count()) * 86400;
}

Seconds AnalysisYear::end() const noexcept { return start() + static_cast<Seconds>(days_) * 86400; }

bool AnalysisYear::contains(chr::sys_days d) const noexcept {
    return d >= first_ && d < first_ + chr::days{days_};
}

int AnalysisYear::day_of(Seconds ts) const noexcept {
    return static_cast<int>((ts - start()) / 86400) + 1;
}

int AnalysisYear::day_of(chr::sys_days d) const noexcept {
    return static_cast<int>((d - first_).count()) + 1;
}

chr::sys_days AnalysisYear::date_of(int day_of_year) const noexcept {
    return first_ + chr::days{day_of_year - 1};
}

int AnalysisYear::month_of_day(int day_of_year) const noexcept {
    chr::year_month_day ymd{date_of(day_of_year)};
    return static_cast<int>(static_cast<unsigned>(ymd.month()));
}

int AnalysisYear::first_day_of_month(int month) const noexcept {
    return day_of(chr::sys_days{chr::year{year_} / chr::month{static_cast<unsigned>(month)} / 1});
}

int AnalysisYear::last_day_of_month(int month) const noexcept {
    return day_of(chr::sys_days{chr::year{year_} / chr::month{static_cast<unsigned>(month)} /
                                chr::last});
}

}  // namespace mobprof
