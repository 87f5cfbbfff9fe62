#pragma once

#include <array>
#include <bitset>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mobprof/calendar.hpp"
#include "mobprof/dates.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/homeloc.hpp"
#include "mobprof/io.hpp"
#include "mobprof/types.hpp"

namespace mobprof {

/// Monthly home arrondissements of one user.
struct Hauv {
    std::string user_id;
    MonthSlots<RegionId> months{};
};

/// Monthly home livelihood zones of one user.
struct Hlzuv {
    std::string user_id;
    MonthSlots<ZoneId> months{};
};

struct FeatureVectors {
    std::vector<Hauv> hauv;
    std::vector<Hlzuv> hlzuv;
};

FeatureVectors build_vectors(const HomeTable& homes, const Geography& geography);
FeatureVectors build_vectors(std::span<const Hauv> hauv, const Geography& geography);

/// Presence of one user in a target zone, bit m-1 for month m. Missing months are 0.
struct BinaryOccupancy {
    std::string user_id;
    ZoneId target = 0;
    MonthMask bits;

    std::string to_string() const { return mask_string(bits); }
};

BinaryOccupancy binarize(const Hlzuv& vector, ZoneId target);

enum class Indicator { call_count, active_days, radius_of_gyration_km, total_distance_km };
inline constexpr std::array<Indicator, 4> kIndicators{Indicator::call_count, Indicator::active_days,
                                                      Indicator::radius_of_gyration_km,
                                                      Indicator::total_distance_km};
const char* to_string(Indicator i);
std::optional<Indicator> parse_indicator(std::string_view name);

/// Monthly values of one behavioural indicator for one user.
struct Buv {
    std::string user_id;
    Indicator indicator = Indicator::call_count;
    MonthSlots<double> values{};
};

struct EventPoint {
    Seconds timestamp = 0;
    GeoPoint location;
};

/// The four indicators for one user's time-sorted events. Months without events are missing.
std::array<Buv, 4> compute_buv(const std::string& user_id, std::span<const EventPoint> events,
                               const AnalysisYear& year);
/// compute_buv for every user of a store, grouped as [user][indicator].
std::vector<std::array<Buv, 4>> compute_all_buv(const EventStore& store, const Geography& geography,
                                                const AnalysisYear& year);

/// Distance from a reference arrondissement's centroid, per month.
struct Dhv {
    std::string user_id;
    RegionId reference = 0;
    MonthSlots<double> km{};
};

Dhv build_dhv(const Hauv& vector, RegionId reference, const Geography& geography);

struct OccupancyHistogram {
    int class_id = 0;
    std::map<RegionId, std::array<std::uint32_t, kMonths>> counts;

    std::uint32_t count(RegionId region, int month) const;
    std::array<std::uint32_t, kMonths> month_totals() const;
    Json to_json() const;
};

OccupancyHistogram occupancy_histogram(int class_id, std::span<const std::string> members,
                                       std::span<const Hauv> vectors);

struct Moments {
    double mean = 0.0;
    double std = 0.0;  // population convention
    std::size_t n = 0;
};

struct ClassCharacterization {
    std::map<Indicator, std::array<std::optional<Moments>, kMonths>> indicators;
    Json to_json() const;
};

/// Per-indicator per-month mean and std over the members' BUVs.
ClassCharacterization characterize_class(std::span<const std::string> members, std::span<const Buv> buvs);

/// Neumaier-compensated mean and population std; nullopt for no values.
std::optional<Moments> moments(std::span<const double> values);

// Delimited-text exports: user_id then 12 month columns.
void write_hauv_csv(const std::filesystem::path& path, std::span<const Hauv> v);
void write_hlzuv_csv(const std::filesystem::path& path, std::span<const Hlzuv> v);
std::vector<Hauv> read_hauv_csv(const std::filesystem::path& path);
std::vector<Hlzuv> read_hlzuv_csv(const std::filesystem::path& path);
/// user_id, indicator, m1..m12.
void write_buv_csv(const std::filesystem::path& path, std::span<const Buv> v);
std::vector<Buv> read_buv_csv(const std::filesystem::path& path);
void write_dhv_csv(const std::filesystem::path& path, std::span<const Dhv> v);

}  // namespace mobprof
