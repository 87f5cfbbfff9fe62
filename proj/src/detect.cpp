#include "mobprof/detect.hpp"

#include <algorithm>
#include <cmath>

#include "mobprof/error.hpp"

namespace mobprof {

std::uint64_t FlowMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& [k, v] : counts) t += v;
    return t;
}

std::map<RegionId, std::uint64_t> FlowMatrix::inflow() const {
    std::map<RegionId, std::uint64_t> m;
    for (const auto& [k, v] : counts) m[k.second] += v;
    return m;
}

std::map<RegionId, std::uint64_t> FlowMatrix::outflow() const {
    std::map<RegionId, std::uint64_t> m;
    for (const auto& [k, v] : counts) m[k.first] += v;
    return m;
}

std::vector<FlowMatrix> daily_flows(const HomeTable& homes) {
    std::vector<FlowMatrix> flows;
    for (int day = 2; day <= homes.days(); ++day) flows.push_back({day, {}});
    for (std::size_t u = 0; u < homes.users().size(); ++u) {
        auto daily = homes.daily(u);
        for (int day = 2; day <= homes.days(); ++day) {
            const auto &prev = daily[day - 2], &cur = daily[day - 1];
            if (prev && cur && *prev != *cur) ++flows[day - 2].counts[{*prev, *cur}];
        }
    }
    return flows;
}

RegionFlowSeries flow_series(std::span<const FlowMatrix> flows, std::span<const RegionId> regions) {
    RegionFlowSeries s;
    s.first_day = flows.empty() ? 2 : flows.front().day;
    for (RegionId r : regions) {
        s.inflow[r].assign(flows.size(), 0.0);
        s.outflow[r].assign(flows.size(), 0.0);
    }
    for (std::size_t i = 0; i < flows.size(); ++i) {
        for (const auto& [pair, n] : flows[i].counts) {
            auto out = s.outflow.find(pair.first);
            auto in = s.inflow.find(pair.second);
            if (out == s.outflow.end() || in == s.inflow.end())
                throw InputError("flow references a region outside the region list");
            out->second[i] += n;
            in->second[i] += n;
        }
    }
    return s;
}

const char* to_string(Direction d) { return d == Direction::inflow ? "inflow" : "outflow"; }

namespace {

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + n / 2);
    return (lo + hi) / 2.0;
}

}  // namespace

std::vector<SpikeDetection> detect_spikes(std::span<const double> series, double k) {
    if (series.size() < static_cast<std::size_t>(kMinSeriesDays))
        throw InputError("detect_events: series shorter than " + std::to_string(kMinSeriesDays) + " days");
    std::vector<double> g(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) g[t - 1] = series[t] - series[t - 1];
    const double med = median(g);
    std::vector<double> dev(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dev[i] = std::abs(g[i] - med);
    const double mad = median(dev);

    std::vector<SpikeDetection> out;
    if (mad > 0.0) {
        const double scale = kMadScale * mad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double z = (g[i] - med) / scale;
            if (z > k) out.push_back({i + 1, z, g[i]});
        }
    } else {
        double max_abs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (i > 0 && g[i] > max_abs) out.push_back({i + 1, std::nullopt, g[i]});
            max_abs = std::max(max_abs, std::abs(g[i]));
        }
    }
    return out;
}

std::vector<EventAlert> detect_events(std::span<const double> series, int first_day,
                                      std::optional<RegionId> region, Direction direction, double k) {
    std::vector<EventAlert> out;
    for (const auto& s : detect_spikes(series, k))
        out.push_back({first_day + static_cast<int>(s.index), region, direction, s.score, series[s.index]});
    return out;
}

std::vector<EventAlert> detect_all_events(const RegionFlowSeries& series, double k, bool include_outflow,
                                          bool include_country) {
    std::vector<EventAlert> out;
    auto append = [&](std::vector<EventAlert> v) { out.insert(out.end(), v.begin(), v.end()); };
    for (const auto& [region, s] : series.inflow)
        append(detect_events(s, series.first_day, region, Direction::inflow, k));
    if (include_outflow)
        for (const auto& [region, s] : series.outflow)
            append(detect_events(s, series.first_day, region, Direction::outflow, k));
    if (include_country && !series.inflow.empty()) {
        std::vector<double> total(series.inflow.begin()->second.size(), 0.0);
        for (const auto& [region, s] : series.inflow)
            for (std::size_t i = 0; i < s.size(); ++i) total[i] += s[i];
        append(detect_events(total, series.first_day, std::nullopt, Direction::inflow, k));
    }
    std::stable_sort(out.begin(), out.end(), [](const EventAlert& a, const EventAlert& b) {
        if (a.day != b.day) return a.day < b.day;
        if (a.region != b.region) return a.region < b.region;
        return a.direction < b.direction;
    });
    return out;
}

Json to_json(const EventAlert& a) {
    Json j{{"day", a.day},
           {"region", a.region ? Json(*a.region) : Json("country")},
           {"direction", to_string(a.direction)},
           {"count", a.count}};
    if (a.score)
        j["score"] = *a.score;
    else
        j["score"] = nullptr, j["mad_fallback"] = true;
    return j;
}

Json flows_to_json(std::span<const FlowMatrix> flows, std::size_t top_n) {
    Json days = Json::array();
    for (const FlowMatrix& f : flows) {
        std::vector<std::pair<std::pair<RegionId, RegionId>, std::uint32_t>> pairs(f.counts.begin(), f.counts.end());
        std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        if (pairs.size() > top_n) pairs.resize(top_n);
        Json top = Json::array();
        for (const auto& [od, n] : pairs) top.push_back({{"from", od.first}, {"to", od.second}, {"count", n}});
        Json in = Json::object(), out = Json::object();
        for (const auto& [r, n] : f.inflow()) in[std::to_string(r)] = n;
        for (const auto& [r, n] : f.outflow()) out[std::to_string(r)] = n;
        days.push_back({{"day", f.day}, {"total", f.total()}, {"top_pairs", std::move(top)}, {"inflow", std::move(in)},
                        {"outflow", std::move(out)}});
    }
    return days;
}

std::vector<int> select_periods(const Profile& profile, double theta) {
    std::vector<int> months;
    for (int m = 1; m < kMonths; ++m)
        if (std::abs(profile[m] - profile[m - 1]) >= theta) months.push_back(m + 1);
    return months;
}

}  // namespace mobprof
