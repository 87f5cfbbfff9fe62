#include "mobprof/filters.hpp"

#include <algorithm>

#include "mobprof/error.hpp"

namespace mobprof {

void FilterParams::validate() const {
    if (m_min < 1 || m_min > m_max || m_max > kMonths)
        throw InputError("filters: need 1 <= m_min <= m_max <= 12");
    if (m_outmin < 0) throw InputError("filters: m_outmin must be >= 0");
    if (!(rho > 0.0)) throw InputError("filters: rho must be > 0");
    if (drop_missing_over < 0 || drop_missing_over > kMonths)
        throw InputError("filters: drop_missing_over must be in 0..12");
}

TravelVerdict is_regular_traveler(const Hauv& vector, const Geography& geography, const Buv& radius,
                                  double rho) {
    double radius_sum = 0;
    int radius_n = 0;
    for (const auto& v : radius.values)
        if (v) radius_sum += *v, ++radius_n;
    int present = 0;
    for (const auto& m : vector.months) present += m ? 1 : 0;
    if (present < 2 || radius_n == 0) return TravelVerdict::undetermined;

    double max_step = 0;
    bool any_pair = false;
    for (int m = 0; m + 1 < kMonths; ++m) {
        const auto &a = vector.months[m], &b = vector.months[m + 1];
        if (!a || !b) continue;
        any_pair = true;
        if (*a != *b)
            max_step = std::max(max_step, haversine_km(geography.arrondissement(*a).centroid,
                                                       geography.arrondissement(*b).centroid));
    }
    if (!any_pair) return TravelVerdict::undetermined;
    return max_step <= rho * (radius_sum / radius_n) ? TravelVerdict::flagged : TravelVerdict::not_flagged;
}

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "kept";
        case RejectReason::missing_data: return "missing_data";
        case RejectReason::non_mover: return "non_mover";
        case RejectReason::regular_traveler: return "regular_traveler";
        case RejectReason::m_min: return "temporal_m_min";
        case RejectReason::m_max: return "temporal_m_max";
        case RejectReason::m_outmin: return "temporal_m_outmin";
        case RejectReason::window: return "temporal_window";
    }
    return "?";
}

int longest_run(MonthMask bits) {
    int best = 0, run = 0;
    for (int m = 0; m < kMonths; ++m) {
        run = bits.test(m) ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

RejectReason temporal_consistency(const BinaryOccupancy& occupancy, const Hlzuv& zones,
                                  const FilterParams& params) {
    if (longest_run(occupancy.bits) < params.m_min) return RejectReason::m_min;
    if (static_cast<int>(occupancy.bits.count()) > params.m_max) return RejectReason::m_max;
    int elsewhere = 0;
    for (const auto& z : zones.months)
        if (z && *z != occupancy.target) ++elsewhere;
    if (elsewhere < params.m_outmin) return RejectReason::m_outmin;
    if (params.window && (occupancy.bits & *params.window).none()) return RejectReason::window;
    return RejectReason::none;
}

std::size_t FilterOutcome::rejected() const {
    std::size_t n = 0;
    for (const auto& [k, v] : tally) n += v;
    return n;
}

Json FilterOutcome::to_json(bool include_users) const {
    Json j{{"zone", target},
           {"kept", kept.size()},
           {"rejected", rejected()},
           {"tally", tally},
           {"regular_traveler_undetermined", traveler_undetermined}};
    if (include_users) {
        Json users = Json::object();
        for (const auto& [id, r] : per_user) users[id] = to_string(r);
        j["per_user"] = std::move(users);
    }
    return j;
}

FilterOutcome apply_filters(std::span<const FilterCandidate> population, ZoneId target,
                            const Geography& geography, const FilterParams& params,
                            const std::array<FilterStage, 4>& order) {
    params.validate();
    FilterOutcome out;
    out.target = target;
    for (RejectReason r : {RejectReason::missing_data, RejectReason::non_mover, RejectReason::regular_traveler,
                           RejectReason::m_min, RejectReason::m_max, RejectReason::m_outmin,
                           RejectReason::window})
        out.tally[to_string(r)] = 0;

    for (const FilterCandidate& c : population) {
        if (!c.hauv || !c.hlzuv) throw InvariantError("filter candidate without feature vectors");
        RejectReason reason = RejectReason::none;
        bool undetermined = false;
        for (FilterStage stage : order) {
            switch (stage) {
                case FilterStage::missing_data:
                    if (count_missing(c.hauv->months) > params.drop_missing_over)
                        reason = RejectReason::missing_data;
                    break;
                case FilterStage::non_mover:
                    if (is_non_mover(c.hlzuv->months)) reason = RejectReason::non_mover;
                    break;
                case FilterStage::regular_traveler: {
                    TravelVerdict v = c.radius ? is_regular_traveler(*c.hauv, geography, *c.radius, params.rho)
                                               : TravelVerdict::undetermined;
                    if (v == TravelVerdict::flagged) reason = RejectReason::regular_traveler;
                    undetermined = v == TravelVerdict::undetermined;
                    break;
                }
                case FilterStage::temporal_consistency:
                    reason = temporal_consistency(binarize(*c.hlzuv, target), *c.hlzuv, params);
                    break;
            }
            if (reason != RejectReason::none) break;
        }
        if (undetermined) ++out.traveler_undetermined;
        out.per_user.emplace_back(c.hauv->user_id, reason);
        if (reason == RejectReason::none)
            out.kept.push_back(c.hauv->user_id);
        else
            ++out.tally[to_string(reason)];
    }
    std::sort(out.kept.begin(), out.kept.end());
    std::sort(out.per_user.begin(), out.per_user.end());
    return out;
}

}  // namespace mobprof
