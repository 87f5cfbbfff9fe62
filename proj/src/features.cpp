#include "mobprof/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mobprof/error.hpp"

namespace mobprof {

FeatureVectors build_vectors(std::span<const Hauv> hauv, const Geography& geography) {
    FeatureVectors out;
    out.hauv.assign(hauv.begin(), hauv.end());
    out.hlzuv.reserve(hauv.size());
    for (const Hauv& h : hauv) {
        Hlzuv z{h.user_id, {}};
        for (int m = 0; m < kMonths; ++m) z.months[m] = monthly_home_lz(h.months[m], geography);
        out.hlzuv.push_back(std::move(z));
    }
    return out;
}

FeatureVectors build_vectors(const HomeTable& homes, const Geography& geography) {
    std::vector<Hauv> hauv;
    hauv.reserve(homes.users().size());
    for (std::size_t u = 0; u < homes.users().size(); ++u) hauv.push_back({homes.users()[u], homes.monthly(u)});
    return build_vectors(hauv, geography);
}

BinaryOccupancy binarize(const Hlzuv& vector, ZoneId target) {
    BinaryOccupancy b{vector.user_id, target, {}};
    for (int m = 0; m < kMonths; ++m)
        if (vector.months[m] && *vector.months[m] == target) b.bits.set(m);
    return b;
}

const char* to_string(Indicator i) {
    switch (i) {
        case Indicator::call_count: return "call_count";
        case Indicator::active_days: return "active_days";
        case Indicator::radius_of_gyration_km: return "radius_of_gyration_km";
        case Indicator::total_distance_km: return "total_distance_km";
    }
    return "?";
}

std::optional<Indicator> parse_indicator(std::string_view name) {
    for (Indicator i : kIndicators)
        if (name == to_string(i)) return i;
    return std::nullopt;
}

std::array<Buv, 4> compute_buv(const std::string& user_id, std::span<const EventPoint> events,
                               const AnalysisYear& year) {
    std::array<Buv, 4> out;
    for (std::size_t i = 0; i < kIndicators.size(); ++i) out[i] = {user_id, kIndicators[i], {}};

    std::size_t i = 0;
    while (i < events.size()) {
        const int month = year.month_of_day(year.day_of(events[i].timestamp));
        std::size_t j = i;
        while (j < events.size() && year.month_of_day(year.day_of(events[j].timestamp)) == month) ++j;
        auto month_events = events.subspan(i, j - i);

        int active_days = 0, last_day = -1;
        double lon = 0, lat = 0, total = 0;
        for (std::size_t k = 0; k < month_events.size(); ++k) {
            int d = year.day_of(month_events[k].timestamp);
            if (d != last_day) ++active_days;
            last_day = d;
            lon += month_events[k].location.lon;
            lat += month_events[k].location.lat;
            if (k > 0) total += haversine_km(month_events[k - 1].location, month_events[k].location);
        }
        const double n = static_cast<double>(month_events.size());
        const GeoPoint centre{lon / n, lat / n};
        double sq = 0;
        for (const auto& e : month_events) {
            double d = haversine_km(e.location, centre);
            sq += d * d;
        }
        out[0].values[month - 1] = n;
        out[1].values[month - 1] = active_days;
        out[2].values[month - 1] = std::sqrt(sq / n);
        out[3].values[month - 1] = total;
        i = j;
    }
    return out;
}

std::vector<std::array<Buv, 4>> compute_all_buv(const EventStore& store, const Geography& geography,
                                                const AnalysisYear& year) {
    std::vector<GeoPoint> where;
    where.reserve(store.antennas().size());
    for (const auto& id : store.antennas()) {
        const Antenna* a = geography.find_antenna(id);
        if (!a) throw InputError("event references unknown antenna " + id);
        where.push_back(a->location);
    }
    std::vector<std::array<Buv, 4>> out;
    out.reserve(store.users().size());
    std::vector<EventPoint> pts;
    for (std::size_t u = 0; u < store.users().size(); ++u) {
        pts.clear();
        for (const auto& r : store.user_rows(u)) pts.push_back({r.timestamp, where[r.antenna]});
        out.push_back(compute_buv(store.users()[u], pts, year));
    }
    return out;
}

Dhv build_dhv(const Hauv& vector, RegionId reference, const Geography& geography) {
    const GeoPoint ref = geography.arrondissement(reference).centroid;
    Dhv d{vector.user_id, reference, {}};
    for (int m = 0; m < kMonths; ++m) {
        if (!vector.months[m]) continue;
        d.km[m] = *vector.months[m] == reference
                      ? 0.0
                      : haversine_km(geography.arrondissement(*vector.months[m]).centroid, ref);
    }
    return d;
}

std::uint32_t OccupancyHistogram::count(RegionId region, int month) const {
    auto it = counts.find(region);
    return it == counts.end() ? 0 : it->second[month - 1];
}

std::array<std::uint32_t, kMonths> OccupancyHistogram::month_totals() const {
    std::array<std::uint32_t, kMonths> t{};
    for (const auto& [region, row] : counts)
        for (int m = 0; m < kMonths; ++m) t[m] += row[m];
    return t;
}

Json OccupancyHistogram::to_json() const {
    Json rows = Json::object();
    for (const auto& [region, row] : counts) rows[std::to_string(region)] = row;
    return {{"class_id", class_id}, {"counts", std::move(rows)}, {"month_totals", month_totals()}};
}

OccupancyHistogram occupancy_histogram(int class_id, std::span<const std::string> members,
                                       std::span<const Hauv> vectors) {
    std::unordered_map<std::string_view, const Hauv*> by_id;
    for (const Hauv& h : vectors) by_id.emplace(h.user_id, &h);
    OccupancyHistogram hist{class_id, {}};
    for (const auto& id : members) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw InputError("class member " + id + " has no HAUV");
        for (int m = 0; m < kMonths; ++m)
            if (const auto& a = it->second->months[m]) ++hist.counts[*a][m];
    }
    return hist;
}

std::optional<Moments> moments(std::span<const double> values) {
    if (values.empty()) return std::nullopt;
    auto neumaier = [](auto&& term, std::size_t n) {
        double sum = 0, comp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = term(i), t = sum + x;
            comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
            sum = t;
        }
        return sum + comp;
    };
    const std::size_t n = values.size();
    const double mean = neumaier([&](std::size_t i) { return values[i]; }, n) / n;
    const double var = neumaier([&](std::size_t i) { return (values[i] - mean) * (values[i] - mean); }, n) / n;
    return Moments{mean, std::sqrt(var), n};
}

Json ClassCharacterization::to_json() const {
    Json j = Json::object();
    for (const auto& [ind, months] : indicators) {
        Json mean = Json::array(), sd = Json::array();
        for (const auto& m : months) {
            mean.push_back(m ? Json(m->mean) : Json(nullptr));
            sd.push_back(m ? Json(m->std) : Json(nullptr));
        }
        j[to_string(ind)] = {{"mean", std::move(mean)}, {"std", std::move(sd)}};
    }
    return j;
}

ClassCharacterization characterize_class(std::span<const std::string> members, std::span<const Buv> buvs) {
    std::unordered_map<std::string_view, std::vector<const Buv*>> by_id;
    for (const Buv& b : buvs) by_id[b.user_id].push_back(&b);
    ClassCharacterization out;
    std::map<Indicator, std::array<std::vector<double>, kMonths>> values;
    for (Indicator ind : kIndicators) values[ind];
    for (const auto& id : members) {
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        for (const Buv* b : it->second)
            for (int m = 0; m < kMonths; ++m)
                if (b->values[m]) values[b->indicator][m].push_back(*b->values[m]);
    }
    for (auto& [ind, months] : values)
        for (int m = 0; m < kMonths; ++m) out.indicators[ind][m] = moments(months[m]);
    return out;
}

namespace {

template <class T, class Fmt>
void write_month_rows(const std::filesystem::path& path, const std::string& extra_header,
                      std::span<const T> rows, Fmt&& row_writer) {
    std::ostringstream out;
    out << "user_id" << extra_header;
    for (int m = 1; m <= kMonths; ++m) out << ",m" << m;
    out << '\n';
    for (const T& r : rows) row_writer(out, r), out << '\n';
    write_file(path, out.str());
}

template <class V>
void put_slots(std::ostream& out, const MonthSlots<V>& s) {
    for (const auto& v : s) {
        out << ',';
        if (v) {
            if constexpr (std::is_floating_point_v<V>)
                out << format_double(*v);
            else
                out << *v;
        }
    }
}

template <class V>
MonthSlots<V> get_slots(std::span<const std::string_view> f, const std::filesystem::path& path) {
    MonthSlots<V> s{};
    for (int m = 0; m < kMonths; ++m) {
        if (f[m].empty()) continue;
        if constexpr (std::is_floating_point_v<V>) {
            double v = 0;
            if (!parse_double(f[m], v)) throw InputError(path.string() + ": bad value");
            s[m] = v;
        } else {
            long long v = 0;
            if (!parse_int(f[m], v)) throw InputError(path.string() + ": bad value");
            s[m] = static_cast<V>(v);
        }
    }
    return s;
}

template <class Fn>
void for_each_row(const std::filesystem::path& path, std::size_t columns, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_fields(line);
        if (f.size() != columns) throw InputError(path.string() + ": wrong column count");
        fn(f);
    }
}

}  // namespace

void write_hauv_csv(const std::filesystem::path& path, std::span<const Hauv> v) {
    write_month_rows(path, "", v, [](std::ostream& o, const Hauv& h) { o << h.user_id, put_slots(o, h.months); });
}

void write_hlzuv_csv(const std::filesystem::path& path, std::span<const Hlzuv> v) {
    write_month_rows(path, "", v, [](std::ostream& o, const Hlzuv& h) { o << h.user_id, put_slots(o, h.months); });
}

void write_buv_csv(const std::filesystem::path& path, std::span<const Buv> v) {
    write_month_rows(path, ",indicator", v, [](std::ostream& o, const Buv& b) {
        o << b.user_id << ',' << to_string(b.indicator);
        put_slots(o, b.values);
    });
}

void write_dhv_csv(const std::filesystem::path& path, std::span<const Dhv> v) {
    write_month_rows(path, ",reference", v, [](std::ostream& o, const Dhv& d) {
        o << d.user_id << ',' << d.reference;
        put_slots(o, d.km);
    });
}

std::vector<Hauv> read_hauv_csv(const std::filesystem::path& path) {
    std::vector<Hauv> out;
    for_each_row(path, kMonths + 1, [&](const std::vector<std::string_view>& f) {
        out.push_back({std::string(f[0]), get_slots<RegionId>(std::span(f).subspan(1), path)});
    });
    return out;
}

std::vector<Hlzuv> read_hlzuv_csv(const std::filesystem::path& path) {
    std::vector<Hlzuv> out;
    for_each_row(path, kMonths + 1, [&](const std::vector<std::string_view>& f) {
        out.push_back({std::string(f[0]), get_slots<ZoneId>(std::span(f).subspan(1), path)});
    });
    return out;
}

std::vector<Buv> read_buv_csv(const std::filesystem::path& path) {
    std::vector<Buv> out;
    for_each_row(path, kMonths + 2, [&](const std::vector<std::string_view>& f) {
        auto ind = parse_indicator(f[1]);
        if (!ind) throw InputError(path.string() + ": unknown indicator " + std::string(f[1]));
        out.push_back({std::string(f[0]), *ind, get_slots<double>(std::span(f).subspan(2), path)});
    });
    return out;
}

}  // namespace mobprof
