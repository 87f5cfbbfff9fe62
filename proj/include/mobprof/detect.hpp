#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mobprof/calendar.hpp"
#include "mobprof/homeloc.hpp"
#include "mobprof/io.hpp"

namespace mobprof {

/// Users whose daily home changed from one arrondissement to another between day-1 and day.
struct FlowMatrix {
    int day = 0;  // day-of-year of the destination day
    std::map<std::pair<RegionId, RegionId>, std::uint32_t> counts;

    std::uint64_t total() const;
    std::map<RegionId, std::uint64_t> inflow() const;
    std::map<RegionId, std::uint64_t> outflow() const;
};

/// One matrix per day from day 2 to the end of the year.
std::vector<FlowMatrix> daily_flows(const HomeTable& homes);

struct RegionFlowSeries {
    int first_day = 2;
    std::map<RegionId, std::vector<double>> inflow;
    std::map<RegionId, std::vector<double>> outflow;
};

/// Dense per-region inflow/outflow series over all flow days; regions without flows are zero.
RegionFlowSeries flow_series(std::span<const FlowMatrix> flows, std::span<const RegionId> regions);

enum class Direction { inflow, outflow };
const char* to_string(Direction d);

inline constexpr int kMinSeriesDays = 30;
inline constexpr double kMadScale = 1.4826;

struct SpikeDetection {
    std::size_t index = 0;  // position in the series of the alerting value
    std::optional<double> score;  // robust z-score; empty for the zero-MAD fallback
    double gradient = 0.0;
};

/// Alerts where the first difference g_t = x_t - x_{t-1} has a robust z-score above k.
/// If MAD(g) is zero, alerts on any g_t exceeding every earlier |g|.
std::vector<SpikeDetection> detect_spikes(std::span<const double> series, double k);

struct EventAlert {
    int day = 0;
    std::optional<RegionId> region;  // empty means country level
    Direction direction = Direction::inflow;
    std::optional<double> score;
    double count = 0.0;
};

/// detect_spikes on one region's series, with day labels starting at first_day.
std::vector<EventAlert> detect_events(std::span<const double> series, int first_day,
                                      std::optional<RegionId> region, Direction direction, double k);

std::vector<EventAlert> detect_all_events(const RegionFlowSeries& series, double k, bool include_outflow,
                                          bool include_country);

Json to_json(const EventAlert& alert);
/// Per day: top-N origin-destination pairs and per-region marginals.
Json flows_to_json(std::span<const FlowMatrix> flows, std::size_t top_n);

inline constexpr double kDefaultPeriodThreshold = 0.2;

/// Months m in 2..12 with |profile[m] - profile[m-1]| >= theta.
std::vector<int> select_periods(const Profile& profile, double theta = kDefaultPeriodThreshold);

}  // namespace mobprof
