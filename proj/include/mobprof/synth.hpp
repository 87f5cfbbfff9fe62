#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mobprof/calendar.hpp"
#include "mobprof/dates.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/ingest.hpp"
#include "mobprof/io.hpp"

namespace mobprof {

struct WorldSpec {
    int n_arr = 16;
    int n_zones = 4;
    int antennas_per_arr = 2;
    double origin_lon = -17.0;
    double origin_lat = 12.5;
    double cell_deg = 0.5;
};

/// Square-cell grid. Arrondissement ids run row-major from the south-west corner;
/// zones are contiguous runs of cells in serpentine (boustrophedon) order.
struct World {
    WorldSpec spec;
    int rows = 0;
    int cols = 0;
    Geography geography;
};

World generate_world(const WorldSpec& spec, std::uint64_t seed);

Json geography_to_json(const Geography& geography);
void write_antennas_csv(const std::filesystem::path& path, const Geography& geography);

enum class ArchetypeKind { sedentary, seasonal, commuter, random };
const char* to_string(ArchetypeKind k);

struct ArchetypeSpec {
    ArchetypeKind kind = ArchetypeKind::sedentary;
    double weight = 0.0;
    std::string label;  // defaults to the kind name
    // seasonal
    ZoneId home_zone = 0;
    ZoneId dest_zone = 0;
    int out_month = 0;     // first month away; 0 means "month after the last wet month"
    int return_month = 0;  // first month back home
    // commuter
    RegionId arr_a = 0;
    RegionId arr_b = 0;
    int period = 1;  // months spent at each end before switching
    // random
    double move_probability = 0.0;

    /// Seasonal only: whether the user is at the destination in month m (1-based, circular).
    bool away(int month) const;
    static ArchetypeSpec from_json(const Json& j);
    Json to_json() const;
};

/// Fills derived fields and checks weights, zones and arrondissements against the world.
void resolve_archetypes(std::vector<ArchetypeSpec>& specs, const Geography& geography, MonthMask wet);

/// Month after the last month of the (circular) wet season.
int month_after_wet(MonthMask wet);

struct PopulationSpec {
    std::size_t n_users = 1000;
    double events_per_day = 2.0;
    double p_noise = 0.05;
    int analysis_year = 2013;
    std::vector<ArchetypeSpec> archetypes;
};

struct UserTruth {
    std::string user_id;
    std::size_t archetype = 0;  // index into the archetype list
    std::array<RegionId, kMonths> homes{};
};

struct Population {
    EventStore events;
    std::vector<UserTruth> truth;
};

/// Archetypes must already be resolved.
Population generate_population(const World& world, const PopulationSpec& spec, std::uint64_t seed);

struct RainSpec {
    MonthMask wet;
    double peak_mm = 10.0;
    double resolution_deg = 0.25;
};

/// Daily grid over the world's extent; wet-month values ~ max(0, N(peak, peak/4)), dry months 0.
std::vector<RainGridReading> generate_rain(const World& world, const RainSpec& spec, int year,
                                           std::uint64_t seed);
void write_rain_csv(const std::filesystem::path& path, std::span<const RainGridReading> readings);

struct PlantedEvent {
    int day = 355;
    RegionId destination = 0;
    double fraction = 0.3;
    int duration = 2;
    Json to_json() const;
};

/// Each user joins with probability `fraction`; a participant's events on days
/// [day, day + duration) move to antennas of the destination. Returns participant ids.
std::vector<std::string> plant_event(EventStore& store, const Geography& geography, const PlantedEvent& event,
                                     const AnalysisYear& year, std::uint64_t seed);

/// Intervals tied to the archetypes: a labor interval over each seasonal archetype's
/// away months in its destination zone, and a planting interval over the wet season
/// in every zone.
std::vector<CalendarInterval> synthetic_calendar(std::span<const ArchetypeSpec> archetypes, MonthMask wet,
                                                 const Geography& geography);

struct GroundTruthInfo {
    std::uint64_t seed = 0;
    int analysis_year = 2013;
    std::span<const ArchetypeSpec> archetypes;
    std::span<const UserTruth> users;
    MonthMask wet;
    double rain_peak_mm = 0.0;
    std::span<const PlantedEvent> events;
    std::span<const std::size_t> event_participants;
    std::span<const CalendarInterval> calendar;
};

Json ground_truth_json(const GroundTruthInfo& info);

}  // namespace mobprof
