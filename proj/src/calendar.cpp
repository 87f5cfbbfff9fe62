#include "mobprof/calendar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mobprof/rng.hpp"

namespace mobprof {

namespace {
constexpr double kTieEps = 1e-12;
}

std::string mask_string(MonthMask mask) {
    std::string s(kMonths, '0');
    for (int m = 0; m < kMonths; ++m)
        if (mask.test(m)) s[m] = '1';
    return s;
}

MonthMask parse_mask(std::string_view bits) {
    if (bits.size() != kMonths) throw InputError("month mask must have 12 characters");
    MonthMask mask;
    for (int m = 0; m < kMonths; ++m) {
        if (bits[m] == '1')
            mask.set(m);
        else if (bits[m] != '0')
            throw InputError("month mask must contain only 0 and 1");
    }
    return mask;
}

const char* to_string(Category c) {
    switch (c) {
        case Category::planting: return "planting";
        case Category::weeding: return "weeding";
        case Category::harvest: return "harvest";
        case Category::sales: return "sales";
        case Category::labor: return "labor";
        case Category::other: return "other";
    }
    return "other";
}

std::optional<Category> parse_category(std::string_view text) {
    for (Category c : {Category::planting, Category::weeding, Category::harvest, Category::sales,
                       Category::labor, Category::other})
        if (text == to_string(c)) return c;
    return std::nullopt;
}

CalendarInterval make_interval(ZoneId zone, std::string activity, Category category, int start_month,
                               int end_month) {
    if (start_month < 1 || start_month > 12 || end_month < 1 || end_month > 12)
        throw InputError("calendar interval '" + activity + "': months must be in 1..12");
    CalendarInterval iv{zone, std::move(activity), category, start_month, end_month, {}};
    for (int m = start_month;; m = m % 12 + 1) {
        iv.months.set(m - 1);
        if (m == end_month) break;
    }
    return iv;
}

Profile interval_indicator(const CalendarInterval& interval) {
    Profile p{};
    for (int m = 0; m < kMonths; ++m) p[m] = interval.months.test(m) ? 1.0 : 0.0;
    return p;
}

Json to_json(const CalendarInterval& iv) {
    return {{"zone_id", iv.zone_id},         {"activity", iv.activity},
            {"category", to_string(iv.category)}, {"start_month", iv.start_month},
            {"end_month", iv.end_month},     {"months", mask_string(iv.months)}};
}

Profile shift_circular(const Profile& in, int lag) {
    Profile out{};
    for (int m = 0; m < kMonths; ++m) out[m] = in[((m - lag) % kMonths + kMonths) % kMonths];
    return out;
}

double pearson(const Profile& a, const Profile& b) {
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / kMonths;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / kMonths;
    double sab = 0, saa = 0, sbb = 0, scale_a = 0, scale_b = 0;
    for (int m = 0; m < kMonths; ++m) {
        scale_a += a[m] * a[m];
        scale_b += b[m] * b[m];
        sab += (a[m] - ma) * (b[m] - mb);
        saa += (a[m] - ma) * (a[m] - ma);
        sbb += (b[m] - mb) * (b[m] - mb);
    }
    if (saa <= 1e-24 * (1.0 + scale_a)) throw ZeroVarianceError("constant profile");
    if (sbb <= 1e-24 * (1.0 + scale_b)) throw ZeroVarianceError("constant target (year-round activity)");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationResult lagged_correlation(const Profile& profile, const Profile& target, LagRange lags) {
    if (lags.min > lags.max) throw InputError("lag range is empty");
    CorrelationResult res;
    bool first = true;
    for (int lag = lags.min; lag <= lags.max; ++lag) {
        double r = pearson(profile, shift_circular(target, lag));
        res.by_lag.push_back({lag, r});
        bool better = first || r > res.r + kTieEps;
        if (!better && std::abs(r - res.r) <= kTieEps) {
            int a = std::abs(lag), b = std::abs(res.best_lag);
            better = a < b || (a == b && lag < res.best_lag);
        }
        if (better) {
            res.r = r;
            res.best_lag = lag;
        }
        first = false;
    }
    return res;
}

double permutation_p_value(const Profile& profile, const Profile& target, int lag, int shuffles,
                           std::uint64_t seed) {
    const Profile shifted = shift_circular(target, lag);
    const double observed = pearson(profile, shifted);
    Rng rng(seed);
    int at_least = 0;
    Profile p = profile;
    for (int i = 0; i < shuffles; ++i) {
        p = profile;
        rng.shuffle(std::span<double>(p));
        if (pearson(p, shifted) >= observed - kTieEps) ++at_least;
    }
    return (1.0 + at_least) / (1.0 + shuffles);
}

namespace {

Json cell_json(const ReportCell& c) {
    Json j{{"target", c.target}, {"is_rainfall", c.is_rainfall}};
    if (c.correlation) {
        j["best_lag"] = c.correlation->best_lag;
        j["r"] = c.correlation->r;
        Json lags = Json::array();
        for (const auto& l : c.correlation->by_lag) lags.push_back({{"lag", l.lag}, {"r", l.r}});
        j["by_lag"] = std::move(lags);
        j["p_value"] = c.p_value ? Json(*c.p_value) : Json(nullptr);
    } else {
        j["undefined_reason"] = c.undefined_reason;
    }
    return j;
}

}  // namespace

Json ZoneReport::to_json() const {
    Json j;
    j["zone"] = zone;
    j["disclaimer"] = kSingleYearDisclaimer;
    Json cls = Json::array();
    for (const auto& c : classes) cls.push_back({{"class_id", c.class_id}, {"size", c.size}, {"profile", c.mean}});
    j["classes"] = std::move(cls);
    Json ivs = Json::array();
    for (const auto& iv : intervals) {
        Json x = mobprof::to_json(iv);
        x["indicator"] = interval_indicator(iv);
        ivs.push_back(std::move(x));
    }
    j["intervals"] = std::move(ivs);
    if (rainfall) {
        Json r = Json::array();
        for (const auto& v : *rainfall) r.push_back(v ? Json(*v) : Json(nullptr));
        j["rainfall_mm"] = std::move(r);
    } else {
        j["rainfall_mm"] = nullptr;
    }

    Json matrix = Json::array();
    struct Ranked {
        double abs_r;
        std::size_t c, t;
    };
    std::vector<Ranked> ranked;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        Json row = Json::array();
        for (std::size_t t = 0; t < cells[c].size(); ++t) {
            row.push_back(cell_json(cells[c][t]));
            if (cells[c][t].correlation) ranked.push_back({std::abs(cells[c][t].correlation->r), c, t});
        }
        matrix.push_back({{"class_id", classes[c].class_id}, {"cells", std::move(row)}});
    }
    j["matrix"] = std::move(matrix);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.abs_r > b.abs_r; });
    Json ranking = Json::array();
    for (const auto& r : ranked) {
        const ReportCell& cell = cells[r.c][r.t];
        ranking.push_back({{"class_id", classes[r.c].class_id},
                           {"target", cell.target},
                           {"best_lag", cell.correlation->best_lag},
                           {"r", cell.correlation->r},
                           {"p_value", cell.p_value ? Json(*cell.p_value) : Json(nullptr)}});
    }
    j["ranking"] = std::move(ranking);
    return j;
}

ZoneReport zone_report(ZoneId zone, std::span<const ClassProfile> classes,
                       std::span<const CalendarInterval> intervals,
                       const std::optional<MonthSlots<double>>& monthly_rain,
                       const ZoneReportParams& params) {
    ZoneReport rep;
    rep.zone = zone;
    rep.classes.assign(classes.begin(), classes.end());
    for (const auto& iv : intervals)
        if (iv.zone_id == zone) rep.intervals.push_back(iv);
    rep.rainfall = monthly_rain;

    struct Target {
        std::string label;
        bool rain;
        std::optional<Profile> values;
        std::string missing_reason;
    };
    std::vector<Target> targets;
    for (const auto& iv : rep.intervals) targets.push_back({iv.activity, false, interval_indicator(iv), {}});
    if (monthly_rain) {
        Target t{"rainfall", true, std::nullopt, {}};
        if (count_missing(*monthly_rain) == 0) {
            Profile p{};
            for (int m = 0; m < kMonths; ++m) p[m] = *(*monthly_rain)[m];
            t.values = p;
        } else {
            t.missing_reason = "rainfall has missing months";
        }
        targets.push_back(std::move(t));
    }

    for (std::size_t c = 0; c < rep.classes.size(); ++c) {
        std::vector<ReportCell> row;
        for (std::size_t t = 0; t < targets.size(); ++t) {
            ReportCell cell{targets[t].label, targets[t].rain, std::nullopt, std::nullopt, {}};
            if (!targets[t].values) {
                cell.undefined_reason = targets[t].missing_reason;
            } else {
                try {
                    cell.correlation = lagged_correlation(rep.classes[c].mean, *targets[t].values, params.lags);
                    if (params.permutations > 0)
                        cell.p_value = permutation_p_value(
                            rep.classes[c].mean, *targets[t].values, cell.correlation->best_lag,
                            params.permutations,
                            splitmix64(params.seed ^ splitmix64(c * 1000003ULL + t)));
                } catch (const ZeroVarianceError& e) {
                    cell.correlation.reset();
                    cell.undefined_reason = e.what();
                }
            }
            row.push_back(std::move(cell));
        }
        rep.cells.push_back(std::move(row));
    }
    return rep;
}

}  // namespace mobprof
