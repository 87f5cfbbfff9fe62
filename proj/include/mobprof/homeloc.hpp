#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobprof/dates.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/ingest.hpp"
#include "mobprof/types.hpp"

namespace mobprof {

struct HomeParams {
    int d_min = 1;
    /// When set, events between 19:00 and 07:00 count double.
    bool night_weighting = false;
};

struct LocatedEvent {
    Seconds timestamp = 0;
    RegionId arrondissement = 0;
};

struct DailyHome {
    std::string user_id;
    int day = 0;  // day-of-year
    std::optional<RegionId> arrondissement;
};

struct MonthlyHome {
    std::string user_id;
    int month = 0;
    std::optional<RegionId> arrondissement;
    int support_days = 0;  // days whose daily home equals the monthly home
};

double event_weight(Seconds timestamp, const HomeParams& params);

/// Arrondissement with the most (weighted) events that day. Ties go to the arrondissement
/// holding the latest event, then to the lowest id. No events gives a missing home.
std::optional<RegionId> daily_home(std::span<const LocatedEvent> day_events,
                                   const HomeParams& params = {});

struct MonthVote {
    std::optional<RegionId> arrondissement;
    int support_days = 0;
};

/// Modal daily home over the month's non-missing days, if there are at least d_min of them.
/// Ties go to the arrondissement with more (weighted) events in the month, then the lowest id.
MonthVote monthly_home(std::span<const std::optional<RegionId>> daily_homes,
                       const std::map<RegionId, double>& month_event_weight, int d_min);

std::optional<ZoneId> monthly_home_lz(const std::optional<RegionId>& home, const Geography& geography);

/// Daily and monthly homes of every user, indexed by the store's user order.
class HomeTable {
public:
    HomeTable() = default;
    HomeTable(std::vector<std::string> users, int days);

    const std::vector<std::string>& users() const noexcept { return users_; }
    int days() const noexcept { return days_; }

    std::span<const std::optional<RegionId>> daily(std::size_t user) const;
    std::span<std::optional<RegionId>> daily(std::size_t user);
    const MonthSlots<RegionId>& monthly(std::size_t user) const { return monthly_[user]; }
    MonthSlots<RegionId>& monthly(std::size_t user) { return monthly_[user]; }
    const std::array<int, kMonths>& support(std::size_t user) const { return support_[user]; }
    std::array<int, kMonths>& support(std::size_t user) { return support_[user]; }

    std::vector<MonthlyHome> monthly_records(std::size_t user) const;

    void write_daily_csv(const std::filesystem::path& path) const;
    void write_monthly_csv(const std::filesystem::path& path) const;
    /// Reads both caches; user order must agree.
    static HomeTable read_csv(const std::filesystem::path& daily, const std::filesystem::path& monthly);

private:
    std::vector<std::string> users_;
    int days_ = 0;
    std::vector<std::optional<RegionId>> daily_;
    std::vector<MonthSlots<RegionId>> monthly_;
    std::vector<std::array<int, kMonths>> support_;
};

/// Maps each antenna of the store to its arrondissement; throws InputError on unknown antennas.
std::vector<RegionId> antenna_arrondissements(const EventStore& store, const Geography& geography);

HomeTable estimate_homes(const EventStore& store, const Geography& geography, const AnalysisYear& year,
                         const HomeParams& params);

}  // namespace mobprof
