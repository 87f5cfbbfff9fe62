#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobprof/error.hpp"
#include "mobprof/io.hpp"
#include "mobprof/types.hpp"

namespace mobprof {

/// Bit m-1 is month m.
using MonthMask = std::bitset<kMonths>;
using Profile = std::array<double, kMonths>;

/// Twelve characters, January first, e.g. "000001110000".
std::string mask_string(MonthMask mask);
MonthMask parse_mask(std::string_view bits);

enum class Category { planting, weeding, harvest, sales, labor, other };
const char* to_string(Category c);
std::optional<Category> parse_category(std::string_view text);

struct CalendarInterval {
    ZoneId zone_id = 0;
    std::string activity;
    Category category = Category::other;
    int start_month = 1;
    int end_month = 12;
    MonthMask months;  // circular: Nov-Feb covers {11, 12, 1, 2}
};

/// Throws InputError if a month is outside 1..12.
CalendarInterval make_interval(ZoneId zone, std::string activity, Category category, int start_month,
                               int end_month);
Profile interval_indicator(const CalendarInterval& interval);
Json to_json(const CalendarInterval& interval);

/// out[m] = in[(m - lag) mod 12].
Profile shift_circular(const Profile& in, int lag);

struct LagRange {
    int min = -3;
    int max = 3;
};

class ZeroVarianceError : public InputError {
public:
    using InputError::InputError;
};

struct LagCoefficient {
    int lag;
    double r;
};

struct CorrelationResult {
    int best_lag = 0;
    double r = 0.0;
    std::vector<LagCoefficient> by_lag;
};

/// Pearson correlation; throws ZeroVarianceError when either input is constant.
double pearson(const Profile& a, const Profile& b);

/// Pearson r of profile against the target shifted by each lag in range. The best lag
/// maximises r; ties go to the smaller |lag|, then to the negative lag.
CorrelationResult lagged_correlation(const Profile& profile, const Profile& target, LagRange lags = {});

/// One-sided permutation p-value of r at a fixed lag: (1 + #{r_shuffled >= r}) / (1 + shuffles).
double permutation_p_value(const Profile& profile, const Profile& target, int lag, int shuffles,
                           std::uint64_t seed);

struct ClassProfile {
    int class_id = 0;
    std::size_t size = 0;
    Profile mean{};
};

struct ZoneReportParams {
    LagRange lags;
    int permutations = 1000;
    std::uint64_t seed = 0;
};

struct ReportCell {
    std::string target;  // activity label, or "rainfall"
    bool is_rainfall = false;
    std::optional<CorrelationResult> correlation;
    std::optional<double> p_value;
    std::string undefined_reason;
};

struct ZoneReport {
    ZoneId zone = 0;
    std::vector<ClassProfile> classes;
    std::vector<CalendarInterval> intervals;
    std::optional<MonthSlots<double>> rainfall;
    /// cells[c][t]: class c against target t (intervals in order, then rainfall).
    std::vector<std::vector<ReportCell>> cells;

    Json to_json() const;
};

inline constexpr const char* kSingleYearDisclaimer =
    "Single-year data cannot separate calendar-driven from shock-driven migration; "
    "correlations are descriptive and require multi-year observation to confirm.";

ZoneReport zone_report(ZoneId zone, std::span<const ClassProfile> classes,
                       std::span<const CalendarInterval> intervals,
                       const std::optional<MonthSlots<double>>& monthly_rain,
                       const ZoneReportParams& params);

}  // namespace mobprof
