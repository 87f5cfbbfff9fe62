#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mobprof/calendar.hpp"
#include "mobprof/dates.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/io.hpp"

namespace mobprof {

enum class EventKind : std::uint8_t { call, text };
const char* to_string(EventKind k);

/// One anonymized communication event.
struct CdrEvent {
    std::string user_id;
    Seconds timestamp = 0;
    std::string antenna_id;
    EventKind kind = EventKind::call;
};

/// Columnar event store with interned user and antenna ids. Rows are sorted by
/// (user_id, timestamp, antenna_id, kind); interned indices follow lexicographic order,
/// so index comparisons agree with string comparisons.
class EventStore {
public:
    struct Row {
        std::uint32_t user;
        std::uint32_t antenna;
        Seconds timestamp;
        EventKind kind;
        bool operator==(const Row&) const = default;
    };

    class Builder {
    public:
        void reserve(std::size_t rows) { rows_.reserve(rows); }
        /// Pre-registers antenna ids so they appear in the table even without events.
        void add_antenna(std::string_view antenna_id);
        void add(std::string_view user_id, Seconds timestamp, std::string_view antenna_id,
                 EventKind kind);
        void add_user(std::string_view user_id);
        EventStore build() &&;

    private:
        std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& table,
                             std::vector<std::string>& names, std::string_view id);
        std::unordered_map<std::string, std::uint32_t> user_table_, antenna_table_;
        std::vector<std::string> users_, antennas_;
        std::vector<Row> rows_;
    };

    const std::vector<std::string>& users() const noexcept { return users_; }
    const std::vector<std::string>& antennas() const noexcept { return antennas_; }
    const std::vector<Row>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    std::span<const Row> user_rows(std::size_t user) const;
    CdrEvent event(std::size_t row) const;

    /// Mutable access for generators; call normalize() after edits.
    std::vector<Row>& mutable_rows() noexcept { return rows_; }
    void normalize();

    void write_csv(std::ostream& out) const;
    void write_csv(const std::filesystem::path& path) const;

private:
    std::vector<std::string> users_, antennas_;
    std::vector<Row> rows_;
    std::vector<std::size_t> offsets_;  // users_.size() + 1 entries
};

struct IngestConfig {
    int analysis_year = 2013;
    double max_reject_fraction = 0.10;
};

struct Rejection {
    std::size_t line = 0;  // 1-based line number in the file
    std::string reason;
};

struct DateCoverage {
    std::string first_day;
    std::string last_day;
    int active_days = 0;
};

struct IngestReport {
    std::size_t total_rows = 0;
    std::size_t accepted = 0;
    std::map<std::string, std::size_t> rejected_by_reason;
    std::vector<Rejection> rejections;
    std::size_t distinct_users = 0;
    std::map<std::string, DateCoverage> coverage;

    std::size_t rejected() const noexcept { return total_rows - accepted; }
    Json to_json(bool include_rows = false) const;
};

struct IngestResult {
    EventStore store;
    IngestReport report;
};

/// Parses a CDR file (user_id,timestamp,antenna_id,kind). Malformed rows are rejected
/// with one reason each; too many rejections abort with InputError. With a geography,
/// events at unknown antennas are rejected too.
IngestResult parse_events(const std::filesystem::path& path, const IngestConfig& config,
                          const Geography* geography = nullptr);
IngestResult parse_events(std::istream& in, const IngestConfig& config,
                          const Geography* geography = nullptr);

/// Calendar JSON: array of {zone_id, activity, category, start_month, end_month}.
std::vector<CalendarInterval> parse_calendar(const std::filesystem::path& path,
                                             const Geography& geography);
std::vector<CalendarInterval> parse_calendar(const Json& doc, const Geography& geography);

}  // namespace mobprof
