#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobprof/features.hpp"
#include "mobprof/geo.hpp"

namespace mobprof {

struct FilterParams {
    int m_min = 2;      // longest run of consecutive months in the target zone
    int m_max = 10;     // total months in the target zone
    int m_outmin = 1;   // months with a known home in another zone
    std::optional<MonthMask> window;  // when set, at least one month in the zone must fall here
    double rho = 1.0;   // regular-traveler ratio against the radius of gyration
    int drop_missing_over = 3;

    /// Throws InputError on out-of-range values.
    void validate() const;
};

/// All non-missing entries equal, and at least one present.
template <class Id>
bool is_non_mover(const MonthSlots<Id>& v) {
    std::optional<Id> first;
    for (const auto& s : v) {
        if (!s) continue;
        if (!first)
            first = s;
        else if (*s != *first)
            return false;
    }
    return first.has_value();
}

enum class TravelVerdict { flagged, not_flagged, undetermined };

/// Flags users whose largest month-to-month home displacement does not exceed rho times
/// their mean monthly radius of gyration.
TravelVerdict is_regular_traveler(const Hauv& vector, const Geography& geography, const Buv& radius,
                                  double rho);

enum class RejectReason {
    none,
    missing_data,
    non_mover,
    regular_traveler,
    m_min,
    m_max,
    m_outmin,
    window,
};
const char* to_string(RejectReason r);

int longest_run(MonthMask bits);

/// Temporal-consistency constraints on one binarized vector. The HLZUV supplies months
/// spent in other zones. Runs do not wrap from December to January.
RejectReason temporal_consistency(const BinaryOccupancy& occupancy, const Hlzuv& zones,
                                  const FilterParams& params);

struct FilterCandidate {
    const Hauv* hauv = nullptr;
    const Hlzuv* hlzuv = nullptr;
    const Buv* radius = nullptr;  // radius_of_gyration_km; may be null
};

enum class FilterStage { missing_data, non_mover, regular_traveler, temporal_consistency };
inline constexpr std::array<FilterStage, 4> kDefaultFilterOrder{
    FilterStage::missing_data, FilterStage::non_mover, FilterStage::regular_traveler,
    FilterStage::temporal_consistency};

struct FilterOutcome {
    ZoneId target = 0;
    std::vector<std::string> kept;  // sorted user ids
    std::map<std::string, std::size_t> tally;  // one reason per rejected user
    std::size_t traveler_undetermined = 0;
    std::vector<std::pair<std::string, RejectReason>> per_user;  // sorted by user id

    std::size_t rejected() const;
    Json to_json(bool include_users = false) const;
};

/// Applies the filters to every candidate for one target zone. Each rejected user is
/// attributed to the first failing stage in `order`.
FilterOutcome apply_filters(std::span<const FilterCandidate> population, ZoneId target,
                            const Geography& geography, const FilterParams& params,
                            const std::array<FilterStage, 4>& order = kDefaultFilterOrder);

}  // namespace mobprof
