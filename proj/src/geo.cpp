#include "mobprof/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include "mobprof/dates.hpp"
#include "mobprof/error.hpp"
#include "mobprof/io.hpp"

namespace mobprof {

namespace chr = std::chrono;

GeoPoint GeoPoint::make(double lon, double lat) {
    if (!std::isfinite(lon) || !std::isfinite(lat) || lon < -180.0 || lon > 180.0 ||
        lat < -90.0 || lat > 90.0)
        throw InputError("coordinate out of range: lon=" + std::to_string(lon) +
                         " lat=" + std::to_string(lat));
    return GeoPoint{lon, lat};
}

double haversine_km(GeoPoint a, GeoPoint b) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * deg;
    const double dlon = (b.lon - a.lon) * deg;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    double h = s1 * s1 + std::cos(a.lat * deg) * std::cos(b.lat * deg) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

namespace {

constexpr double kEdgeEps = 1e-12;

double cross(GeoPoint o, GeoPoint a, GeoPoint b) {
    return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool on_segment(GeoPoint p, GeoPoint a, GeoPoint b) {
    if (std::abs(cross(a, b, p)) > kEdgeEps) return false;
    return p.lon >= std::min(a.lon, b.lon) - kEdgeEps && p.lon <= std::max(a.lon, b.lon) + kEdgeEps &&
           p.lat >= std::min(a.lat, b.lat) - kEdgeEps && p.lat <= std::max(a.lat, b.lat) + kEdgeEps;
}

int orientation(GeoPoint a, GeoPoint b, GeoPoint c) {
    double v = cross(a, b, c);
    if (std::abs(v) <= kEdgeEps) return 0;
    return v > 0 ? 1 : -1;
}

bool segments_intersect(GeoPoint p1, GeoPoint p2, GeoPoint q1, GeoPoint q2) {
    int o1 = orientation(p1, p2, q1), o2 = orientation(p1, p2, q2);
    int o3 = orientation(q1, q2, p1), o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(q1, p1, p2)) return true;
    if (o2 == 0 && on_segment(q2, p1, p2)) return true;
    if (o3 == 0 && on_segment(p1, q1, q2)) return true;
    if (o4 == 0 && on_segment(p2, q1, q2)) return true;
    return false;
}

void validate_ring(Ring& ring, RegionId id) {
    if (ring.size() >= 2 && !(ring.front() == ring.back())) ring.push_back(ring.front());
    if (ring.size() < 4)
        throw InputError("arrondissement " + std::to_string(id) + ": ring has fewer than 3 vertices");
    const std::size_t edges = ring.size() - 1;
    for (std::size_t i = 0; i < edges; ++i) {
        for (std::size_t j = i + 2; j < edges; ++j) {
            if (i == 0 && j == edges - 1) continue;  // first and last edges share a vertex
            if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]))
                throw InputError("arrondissement " + std::to_string(id) +
                                 ": boundary ring self-intersects");
        }
    }
}

}  // namespace

bool Arrondissement::contains(GeoPoint p) const {
    bool inside = false;
    for (const Ring& ring : boundary) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const GeoPoint a = ring[i], b = ring[i + 1];
            if (on_segment(p, a, b)) return true;
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (p.lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

BoundingBox Arrondissement::bounds() const {
    BoundingBox box{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                    std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Ring& ring : boundary)
        for (GeoPoint p : ring) {
            box.min_lon = std::min(box.min_lon, p.lon);
            box.min_lat = std::min(box.min_lat, p.lat);
            box.max_lon = std::max(box.max_lon, p.lon);
            box.max_lat = std::max(box.max_lat, p.lat);
        }
    return box;
}

Geography::Geography(std::vector<LivelihoodZone> zones, std::vector<Arrondissement> arrondissements)
    : zones_(std::move(zones)), arrondissements_(std::move(arrondissements)) {
    std::sort(zones_.begin(), zones_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < zones_.size(); ++i)
        if (zones_[i].id != static_cast<ZoneId>(i + 1))
            throw InputError("livelihood-zone ids must be dense and unique, starting at 1");
    std::sort(arrondissements_.begin(), arrondissements_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < arrondissements_.size(); ++i)
        if (arrondissements_[i].id == arrondissements_[i - 1].id)
            throw InputError("duplicate arrondissement id " + std::to_string(arrondissements_[i].id));
    bounds_.reserve(arrondissements_.size());
    for (Arrondissement& a : arrondissements_) {
        if (!has_zone(a.lz_id))
            throw InputError("arrondissement " + std::to_string(a.id) + " references unknown zone " +
                             std::to_string(a.lz_id));
        if (a.boundary.empty())
            throw InputError("arrondissement " + std::to_string(a.id) + " has no boundary");
        for (Ring& ring : a.boundary) validate_ring(ring, a.id);
        a.synthetic_centroid = !a.contains(a.centroid);
        bounds_.push_back(a.bounds());
    }
}

namespace {

GeoPoint point_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InputError("expected [lon, lat] pair");
    return GeoPoint::make(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

Geography Geography::load(const std::filesystem::path& arrondissements_path,
                          const std::optional<std::filesystem::path>& antennas_path) {
    Json doc = read_json(arrondissements_path);
    Json arr_list = doc.is_array() ? doc : doc.value("arrondissements", Json::array());
    std::vector<Arrondissement> arrs;
    std::set<ZoneId> zone_ids;
    try {
        for (const Json& j : arr_list) {
            Arrondissement a;
            a.id = j.at("id").get<RegionId>();
            a.name = j.value("name", "");
            a.centroid = point_from_json(j.at("centroid"));
            for (const Json& ring : j.at("rings")) {
                Ring r;
                for (const Json& pt : ring) r.push_back(point_from_json(pt));
                a.boundary.push_back(std::move(r));
            }
            a.lz_id = j.at("lz_id").get<ZoneId>();
            zone_ids.insert(a.lz_id);
            arrs.push_back(std::move(a));
        }
    } catch (const Json::exception& e) {
        throw InputError(arrondissements_path.string() + ": " + e.what());
    }
    std::vector<LivelihoodZone> zones;
    if (doc.is_object() && doc.contains("livelihood_zones")) {
        for (const Json& z : doc["livelihood_zones"])
            zones.push_back({z.at("id").get<ZoneId>(), z.value("name", ""), z.value("tag", "")});
    } else {
        for (ZoneId z : zone_ids) zones.push_back({z, "LZ " + std::to_string(z), ""});
    }
    if (arrs.empty()) throw InputError(arrondissements_path.string() + ": no arrondissements");
    Geography g(std::move(zones), std::move(arrs));
    if (antennas_path) g.load_antennas(*antennas_path);
    return g;
}

void Geography::set_antennas(std::vector<Antenna> antennas) {
    antennas_ = std::move(antennas);
    antenna_index_.clear();
    for (std::size_t i = 0; i < antennas_.size(); ++i) {
        antennas_[i].arrondissement_id = locate(antennas_[i].location).id;
        if (!antenna_index_.emplace(antennas_[i].id, i).second)
            throw InputError("duplicate antenna id " + antennas_[i].id);
    }
}

void Geography::load_antennas(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": missing header");
    auto header = split_fields(line);
    if (header.size() != 3 || header[0] != "antenna_id" || header[1] != "lon" || header[2] != "lat")
        throw InputError(path.string() + ": expected header antenna_id,lon,lat");
    std::vector<Antenna> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_fields(line);
        double lon = 0, lat = 0;
        if (f.size() != 3 || f[0].empty() || !parse_double(f[1], lon) || !parse_double(f[2], lat))
            throw InputError(path.string() + ": malformed row " + std::to_string(row));
        out.push_back({std::string(f[0]), GeoPoint::make(lon, lat), 0});
    }
    set_antennas(std::move(out));
}

bool Geography::has_arrondissement(RegionId id) const {
    auto it = std::lower_bound(arrondissements_.begin(), arrondissements_.end(), id,
                               [](const Arrondissement& a, RegionId v) { return a.id < v; });
    return it != arrondissements_.end() && it->id == id;
}

const Arrondissement& Geography::arrondissement(RegionId id) const {
    auto it = std::lower_bound(arrondissements_.begin(), arrondissements_.end(), id,
                               [](const Arrondissement& a, RegionId v) { return a.id < v; });
    if (it == arrondissements_.end() || it->id != id)
        throw InputError("unknown arrondissement id " + std::to_string(id));
    return *it;
}

bool Geography::has_zone(ZoneId id) const {
    return id >= 1 && static_cast<std::size_t>(id) <= zones_.size();
}

ZoneId Geography::zone_of(RegionId id) const { return arrondissement(id).lz_id; }

std::vector<RegionId> Geography::arrondissements_in_zone(ZoneId zone) const {
    std::vector<RegionId> out;
    for (const auto& a : arrondissements_)
        if (a.lz_id == zone) out.push_back(a.id);
    return out;
}

const Antenna* Geography::find_antenna(std::string_view id) const {
    auto it = antenna_index_.find(std::string(id));
    return it == antenna_index_.end() ? nullptr : &antennas_[it->second];
}

std::optional<RegionId> Geography::containing(GeoPoint p) const {
    for (std::size_t i = 0; i < arrondissements_.size(); ++i)
        if (bounds_[i].contains(p) && arrondissements_[i].contains(p)) return arrondissements_[i].id;
    return std::nullopt;
}

Location Geography::locate(GeoPoint p) const {
    if (arrondissements_.empty()) throw InputError("empty geography");
    if (auto id = containing(p)) return {*id, false};
    RegionId best = arrondissements_.front().id;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : arrondissements_) {
        double d = haversine_km(p, a.centroid);
        if (d < best_d) {
            best_d = d;
            best = a.id;
        }
    }
    return {best, true};
}

Location locate_arrondissement(GeoPoint p, const Geography& geography) { return geography.locate(p); }

ZoneId arrondissement_to_lz(RegionId id, const Geography& geography) { return geography.zone_of(id); }

// --- series ------------------------------------------------------------------

const char* to_string(RegionKind kind) {
    return kind == RegionKind::arrondissement ? "arrondissement" : "livelihood_zone";
}

void RegionSeries::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && points[i].time <= points[i - 1].time)
            throw InvariantError("region series timestamps not strictly increasing");
        if (points[i].value && !std::isfinite(*points[i].value))
            throw InvariantError("region series value not finite");
    }
}

MonthSlots<double> RegionSeries::months_of(int year) const {
    if (resolution != TimeResolution::month)
        throw InputError("months_of requires a monthly series");
    MonthSlots<double> out{};
    for (const auto& p : points) {
        int m = p.time - month_key(year, 1);
        if (m >= 0 && m < kMonths) out[m] = p.value;
    }
    return out;
}

std::vector<RainGridReading> read_rain_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": missing header");
    auto header = split_fields(line);
    if (header.size() != 4 || header[0] != "date" || header[1] != "cell_lon" ||
        header[2] != "cell_lat" || header[3] != "mm")
        throw InputError(path.string() + ": expected header date,cell_lon,cell_lat,mm");
    std::vector<RainGridReading> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_fields(line);
        double lon = 0, lat = 0, mm = 0;
        std::optional<chr::sys_days> day;
        if (f.size() != 4 || !(day = parse_iso_date(f[0])) || !parse_double(f[1], lon) ||
            !parse_double(f[2], lat) || !parse_double(f[3], mm) || mm < 0.0)
            throw InputError(path.string() + ": malformed row " + std::to_string(row));
        out.push_back({*day, GeoPoint::make(lon, lat), mm});
    }
    return out;
}

std::vector<std::int32_t> target_regions(const Geography& geography, RegionKind target) {
    std::vector<std::int32_t> ids;
    if (target == RegionKind::arrondissement) {
        for (const auto& a : geography.arrondissements()) ids.push_back(a.id);
    } else {
        for (const auto& z : geography.zones()) ids.push_back(z.id);
    }
    return ids;
}

std::vector<CellWeight> cell_weights(GeoPoint cell_center, const Geography& geography,
                                     RegionKind target, const RainGridSpec& grid) {
    if (grid.supersample < 1) throw InputError("rain supersample must be >= 1");
    const auto regions = target_regions(geography, target);
    std::map<std::size_t, int> hits;
    const int s = grid.supersample;
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            GeoPoint p{cell_center.lon + ((i + 0.5) / s - 0.5) * grid.resolution_deg,
                       cell_center.lat + ((j + 0.5) / s - 0.5) * grid.resolution_deg};
            auto id = geography.containing(p);
            if (!id) continue;
            std::int32_t region = target == RegionKind::arrondissement ? *id : geography.zone_of(*id);
            auto it = std::lower_bound(regions.begin(), regions.end(), region);
            ++hits[static_cast<std::size_t>(it - regions.begin())];
        }
    }
    std::vector<CellWeight> out;
    for (auto [idx, n] : hits) out.push_back({idx, static_cast<double>(n) / (s * s)});
    return out;
}

std::vector<RegionSeries> aggregate_rain(std::span<const RainGridReading> readings,
                                         const Geography& geography, RegionKind target,
                                         const RainGridSpec& grid) {
    if (readings.empty()) throw InputError("no rain readings");
    const auto regions = target_regions(geography, target);
    if (regions.empty()) throw InputError("no regions to aggregate rain over");
    if (grid.resolution_deg <= 0.0) throw InputError("rain grid resolution must be positive");

    auto cell_key = [&](GeoPoint c) {
        double fx = c.lon / grid.resolution_deg - 0.5;
        double fy = c.lat / grid.resolution_deg - 0.5;
        long long ix = std::llround(fx), iy = std::llround(fy);
        if (std::abs(fx - ix) > 1e-6 || std::abs(fy - iy) > 1e-6)
            throw InputError("rain cell center off the " + std::to_string(grid.resolution_deg) +
                             " degree grid");
        return std::pair{ix, iy};
    };

    chr::sys_days first = readings.front().day, last = readings.front().day;
    for (const auto& r : readings) {
        first = std::min(first, r.day);
        last = std::max(last, r.day);
    }
    const std::size_t n_days = static_cast<std::size_t>((last - first).count()) + 1;

    std::map<std::pair<long long, long long>, std::vector<CellWeight>> weights;
    std::vector<double> num(n_days * regions.size(), 0.0), den(n_days * regions.size(), 0.0);
    std::vector<bool> day_seen(n_days, false);
    std::set<std::tuple<long long, long long, long long>> seen;
    for (const auto& r : readings) {
        auto key = cell_key(r.cell_center);
        auto d = static_cast<std::size_t>((r.day - first).count());
        if (!seen.emplace(key.first, key.second, static_cast<long long>(d)).second)
            throw InputError("duplicate rain reading for one cell and day");
        day_seen[d] = true;
        auto it = weights.find(key);
        if (it == weights.end())
            it = weights.emplace(key, cell_weights(r.cell_center, geography, target, grid)).first;
        for (const CellWeight& w : it->second) {
            num[d * regions.size() + w.region_index] += w.weight * r.mm;
            den[d * regions.size() + w.region_index] += w.weight;
        }
    }
    if (!std::all_of(day_seen.begin(), day_seen.end(), [](bool b) { return b; }))
        throw InputError("rain readings do not cover a contiguous date range");

    std::vector<RegionSeries> out;
    out.reserve(regions.size());
    for (std::size_t ri = 0; ri < regions.size(); ++ri) {
        RegionSeries s{regions[ri], target, "rain_mm", TimeResolution::day, {}};
        s.points.reserve(n_days);
        for (std::size_t d = 0; d < n_days; ++d) {
            SeriesPoint p;
            p.time = static_cast<std::int32_t>((first + chr::days{d}).time_since_epoch().count());
            double w = den[d * regions.size() + ri];
            if (w > 0.0) p.value = num[d * regions.size() + ri] / w;
            s.points.push_back(p);
        }
        out.push_back(std::move(s));
    }
    return out;
}

RegionSeries monthly_rain(const RegionSeries& daily) {
    if (daily.resolution != TimeResolution::day) throw InputError("monthly_rain needs a daily series");
    if (daily.points.empty()) throw InputError("monthly_rain: empty series");
    RegionSeries out{daily.region_id, daily.kind, daily.variable, TimeResolution::month, {}};
    for (const auto& p : daily.points) {
        chr::year_month_day ymd{chr::sys_days{chr::days{p.time}}};
        std::int32_t key = month_key(static_cast<int>(ymd.year()),
                                     static_cast<int>(static_cast<unsigned>(ymd.month())));
        if (out.points.empty() || out.points.back().time != key) {
            if (!out.points.empty() && key < out.points.back().time)
                throw InputError("monthly_rain: daily series not ordered");
            out.points.push_back({key, std::nullopt, 0});
        }
        SeriesPoint& m = out.points.back();
        if (p.value)
            m.value = m.value.value_or(0.0) + *p.value;
        else
            ++m.missing_days;
    }
    return out;
}

}  // namespace mobprof
