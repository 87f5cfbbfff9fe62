#include "mobprof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mobprof/error.hpp"
#include "mobprof/rng.hpp"

namespace mobprof {

namespace {

constexpr std::uint64_t kWorldStream = 1;
constexpr std::uint64_t kUserStream = 2;
constexpr std::uint64_t kRainStream = 3;
constexpr std::uint64_t kEventStream = 4;
constexpr double kAntennaMargin = 0.05;  // fraction of the cell kept clear of edges

std::string padded(const char* prefix, long long value, int width) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%0*lld", prefix, width, value);
    return buf;
}

bool on_grid(double value, double step) {
    const double q = value / step;
    return std::abs(q - std::round(q)) < 1e-9;
}

}  // namespace

World generate_world(const WorldSpec& spec, std::uint64_t seed) {
    if (spec.n_arr < 1) throw InputError("n_arr must be positive");
    if (spec.n_zones < 1 || spec.n_zones > spec.n_arr) throw InputError("n_zones must be in 1..n_arr");
    if (spec.antennas_per_arr < 1) throw InputError("antennas_per_arr must be positive");
    if (!(spec.cell_deg > 0)) throw InputError("cell_deg must be positive");

    World world;
    world.spec = spec;
    int rows = 1;
    for (int r = 1; r * r <= spec.n_arr; ++r)
        if (spec.n_arr % r == 0) rows = r;
    world.rows = rows;
    world.cols = spec.n_arr / rows;
    const int cols = world.cols;

    // Serpentine walk keeps consecutive cells adjacent, so equal chunks are contiguous.
    std::vector<int> zone_of_cell(static_cast<std::size_t>(spec.n_arr));
    const int base = spec.n_arr / spec.n_zones, extra = spec.n_arr % spec.n_zones;
    int pos = 0;
    for (int z = 0; z < spec.n_zones; ++z) {
        const int size = base + (z < extra ? 1 : 0);
        for (int i = 0; i < size; ++i, ++pos) {
            const int r = pos / cols, c = (r % 2 == 0) ? pos % cols : cols - 1 - pos % cols;
            zone_of_cell[static_cast<std::size_t>(r * cols + c)] = z + 1;
        }
    }

    std::vector<LivelihoodZone> zones;
    for (int z = 1; z <= spec.n_zones; ++z) zones.push_back({z, padded("LZ", z, 2), padded("zone", z, 2)});

    std::vector<Arrondissement> arrs;
    Rng rng = Rng::substream(seed, kWorldStream, 0);
    std::vector<Antenna> antennas;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c + 1;
            const double x0 = spec.origin_lon + c * spec.cell_deg, y0 = spec.origin_lat + r * spec.cell_deg;
            const double x1 = x0 + spec.cell_deg, y1 = y0 + spec.cell_deg;
            Arrondissement a;
            a.id = id;
            a.name = padded("ARR", id, 3);
            a.centroid = GeoPoint::make(x0 + spec.cell_deg / 2, y0 + spec.cell_deg / 2);
            a.boundary.push_back({GeoPoint::make(x0, y0), GeoPoint::make(x1, y0), GeoPoint::make(x1, y1),
                                  GeoPoint::make(x0, y1), GeoPoint::make(x0, y0)});
            a.lz_id = zone_of_cell[static_cast<std::size_t>(id - 1)];
            arrs.push_back(std::move(a));
            for (int k = 1; k <= spec.antennas_per_arr; ++k) {
                const double u = kAntennaMargin + (1 - 2 * kAntennaMargin) * rng.uniform();
                const double v = kAntennaMargin + (1 - 2 * kAntennaMargin) * rng.uniform();
                antennas.push_back({padded("T", id, 3) + padded("-", k, 2),
                                    GeoPoint::make(x0 + u * spec.cell_deg, y0 + v * spec.cell_deg), 0});
            }
        }
    }
    world.geography = Geography(std::move(zones), std::move(arrs));
    world.geography.set_antennas(std::move(antennas));
    return world;
}

Json geography_to_json(const Geography& geography) {
    Json zones = Json::array();
    for (const auto& z : geography.zones()) zones.push_back({{"id", z.id}, {"name", z.name}, {"tag", z.tag}});
    Json arrs = Json::array();
    for (const auto& a : geography.arrondissements()) {
        Json rings = Json::array();
        for (const auto& ring : a.boundary) {
            Json pts = Json::array();
            for (const auto& p : ring) pts.push_back({p.lon, p.lat});
            rings.push_back(std::move(pts));
        }
        arrs.push_back({{"id", a.id},
                        {"name", a.name},
                        {"centroid", {a.centroid.lon, a.centroid.lat}},
                        {"rings", std::move(rings)},
                        {"lz_id", a.lz_id}});
    }
    return {{"livelihood_zones", std::move(zones)}, {"arrondissements", std::move(arrs)}};
}

void write_antennas_csv(const std::filesystem::path& path, const Geography& geography) {
    std::string out = "antenna_id,lon,lat\n";
    for (const auto& a : geography.antennas())
        out += a.id + "," + format_double(a.location.lon) + "," + format_double(a.location.lat) + "\n";
    write_file(path, out);
}

const char* to_string(ArchetypeKind k) {
    switch (k) {
        case ArchetypeKind::sedentary: return "sedentary";
        case ArchetypeKind::seasonal: return "seasonal";
        case ArchetypeKind::commuter: return "commuter";
        case ArchetypeKind::random: return "random";
    }
    return "?";
}

bool ArchetypeSpec::away(int month) const {
    if (kind != ArchetypeKind::seasonal) return false;
    if (out_month < return_month) return month >= out_month && month < return_month;
    return month >= out_month || month < return_month;
}

ArchetypeSpec ArchetypeSpec::from_json(const Json& j) {
    static const std::set<std::string> known = {"kind",     "weight", "label",  "home_zone",       "dest_zone",
                                                "out_month", "return_month", "arr_a", "arr_b", "period",
                                                "move_probability"};
    if (!j.is_object()) throw InputError("archetype must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InputError("archetype: unknown key '" + key + "'");
    ArchetypeSpec s;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "sedentary") s.kind = ArchetypeKind::sedentary;
        else if (kind == "seasonal") s.kind = ArchetypeKind::seasonal;
        else if (kind == "commuter") s.kind = ArchetypeKind::commuter;
        else if (kind == "random") s.kind = ArchetypeKind::random;
        else throw InputError("archetype: unknown kind '" + kind + "'");
        s.weight = j.at("weight").get<double>();
        s.label = j.value("label", std::string(to_string(s.kind)));
        s.home_zone = j.value("home_zone", 0);
        s.dest_zone = j.value("dest_zone", 0);
        s.out_month = j.value("out_month", 0);
        s.return_month = j.value("return_month", 0);
        s.arr_a = j.value("arr_a", 0);
        s.arr_b = j.value("arr_b", 0);
        s.period = j.value("period", 1);
        s.move_probability = j.value("move_probability", 0.0);
    } catch (const Json::exception& e) {
        throw InputError(std::string("archetype: ") + e.what());
    }
    return s;
}

Json ArchetypeSpec::to_json() const {
    Json j = {{"kind", mobprof::to_string(kind)}, {"weight", weight}, {"label", label}};
    switch (kind) {
        case ArchetypeKind::sedentary: break;
        case ArchetypeKind::seasonal:
            j["home_zone"] = home_zone;
            j["dest_zone"] = dest_zone;
            j["out_month"] = out_month;
            j["return_month"] = return_month;
            break;
        case ArchetypeKind::commuter:
            j["arr_a"] = arr_a;
            j["arr_b"] = arr_b;
            j["period"] = period;
            break;
        case ArchetypeKind::random: j["move_probability"] = move_probability; break;
    }
    return j;
}

int month_after_wet(MonthMask wet) {
    if (wet.none() || wet.all()) throw InputError("wet season must cover some but not all months");
    int last = 0;
    for (int m = 1; m <= kMonths; ++m)
        if (wet[m - 1] && !wet[m % kMonths]) last = m;
    return last % kMonths + 1;
}

void resolve_archetypes(std::vector<ArchetypeSpec>& specs, const Geography& geography, MonthMask wet) {
    if (specs.empty()) throw InputError("at least one archetype is required");
    double total = 0;
    for (auto& s : specs) {
        if (!(s.weight >= 0)) throw InputError("archetype weight must be non-negative");
        total += s.weight;
        if (s.label.empty()) s.label = to_string(s.kind);
        switch (s.kind) {
            case ArchetypeKind::sedentary: break;
            case ArchetypeKind::seasonal:
                if (!geography.has_zone(s.home_zone) || !geography.has_zone(s.dest_zone))
                    throw InputError("seasonal archetype references an unknown zone");
                if (s.home_zone == s.dest_zone) throw InputError("seasonal archetype: home and destination coincide");
                if (s.out_month == 0) s.out_month = month_after_wet(wet);
                if (s.out_month < 1 || s.out_month > 12 || s.return_month < 1 || s.return_month > 12 ||
                    s.out_month == s.return_month)
                    throw InputError("seasonal archetype: out and return months must be distinct and in 1..12");
                break;
            case ArchetypeKind::commuter:
                if (!geography.has_arrondissement(s.arr_a) || !geography.has_arrondissement(s.arr_b) ||
                    s.arr_a == s.arr_b)
                    throw InputError("commuter archetype needs two distinct known arrondissements");
                if (s.period < 1 || s.period > 6) throw InputError("commuter period must be in 1..6");
                break;
            case ArchetypeKind::random:
                if (!(s.move_probability >= 0 && s.move_probability <= 1))
                    throw InputError("move_probability must be in [0, 1]");
                if (geography.arrondissements().size() < 2)
                    throw InputError("random archetype needs at least two arrondissements");
                break;
        }
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("archetype weights must sum to 1");
}

Population generate_population(const World& world, const PopulationSpec& spec, std::uint64_t seed) {
    if (!(spec.events_per_day >= 0)) throw InputError("events_per_day must be non-negative");
    if (!(spec.p_noise >= 0 && spec.p_noise <= 1)) throw InputError("p_noise must be in [0, 1]");
    if (spec.archetypes.empty()) throw InputError("no archetypes");
    const Geography& geo = world.geography;
    const auto& arrs = geo.arrondissements();
    const std::size_t n_arr = arrs.size();
    if (spec.p_noise > 0 && n_arr < 2) throw InputError("noise needs at least two arrondissements");

    // Antennas per arrondissement, in id order.
    std::vector<std::vector<const Antenna*>> antennas(n_arr);
    auto arr_index = [&](RegionId id) {
        return static_cast<std::size_t>(
            std::lower_bound(arrs.begin(), arrs.end(), id, [](const auto& a, RegionId v) { return a.id < v; }) -
            arrs.begin());
    };
    for (const auto& a : geo.antennas()) antennas[arr_index(a.arrondissement_id)].push_back(&a);
    for (std::size_t i = 0; i < n_arr; ++i)
        if (antennas[i].empty()) throw InputError("arrondissement " + std::to_string(arrs[i].id) + " has no antenna");

    std::vector<std::vector<RegionId>> zone_arrs(geo.zones().size() + 1);
    for (const auto& z : geo.zones()) zone_arrs[static_cast<std::size_t>(z.id)] = geo.arrondissements_in_zone(z.id);

    const AnalysisYear year(spec.analysis_year);
    std::vector<int> month_of_day(static_cast<std::size_t>(year.days()) + 1);
    for (int d = 1; d <= year.days(); ++d) month_of_day[static_cast<std::size_t>(d)] = year.month_of_day(d);

    Population pop;
    pop.truth.reserve(spec.n_users);
    EventStore::Builder builder;
    builder.reserve(static_cast<std::size_t>(static_cast<double>(spec.n_users) * spec.events_per_day * year.days()));
    for (const auto& a : geo.antennas()) builder.add_antenna(a.id);

    const int width = std::max(6, static_cast<int>(std::to_string(spec.n_users).size()));
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        Rng rng = Rng::substream(seed, kUserStream, u);
        UserTruth t;
        t.user_id = padded("u", static_cast<long long>(u + 1), width);

        const double pick = rng.uniform();
        double cum = 0;
        t.archetype = spec.archetypes.size() - 1;
        for (std::size_t i = 0; i < spec.archetypes.size(); ++i) {
            cum += spec.archetypes[i].weight;
            if (pick < cum) {
                t.archetype = i;
                break;
            }
        }
        const ArchetypeSpec& arch = spec.archetypes[t.archetype];
        auto any_arr = [&] { return arrs[rng.below(n_arr)].id; };
        auto in_zone = [&](ZoneId z) {
            const auto& list = zone_arrs[static_cast<std::size_t>(z)];
            return list[rng.below(list.size())];
        };
        switch (arch.kind) {
            case ArchetypeKind::sedentary: t.homes.fill(any_arr()); break;
            case ArchetypeKind::seasonal: {
                const RegionId home = in_zone(arch.home_zone), dest = in_zone(arch.dest_zone);
                for (int m = 1; m <= kMonths; ++m) t.homes[m - 1] = arch.away(m) ? dest : home;
                break;
            }
            case ArchetypeKind::commuter:
                for (int m = 1; m <= kMonths; ++m)
                    t.homes[m - 1] = ((m - 1) / arch.period) % 2 == 0 ? arch.arr_a : arch.arr_b;
                break;
            case ArchetypeKind::random: {
                const RegionId home = any_arr();
                for (int m = 0; m < kMonths; ++m) {
                    t.homes[m] = home;
                    if (rng.bernoulli(arch.move_probability)) {
                        const std::size_t skip = arr_index(home);
                        std::size_t k = rng.below(n_arr - 1);
                        if (k >= skip) ++k;
                        t.homes[m] = arrs[k].id;
                    }
                }
                break;
            }
        }

        builder.add_user(t.user_id);
        for (int d = 1; d <= year.days(); ++d) {
            const std::size_t home = arr_index(t.homes[month_of_day[static_cast<std::size_t>(d)] - 1]);
            const int n = rng.poisson(spec.events_per_day);
            const Seconds day_start = year.start() + static_cast<Seconds>(d - 1) * 86400;
            for (int e = 0; e < n; ++e) {
                std::size_t where = home;
                if (rng.bernoulli(spec.p_noise)) {
                    where = rng.below(n_arr - 1);
                    if (where >= home) ++where;
                }
                const auto& choices = antennas[where];
                const Antenna* ant = choices[rng.below(choices.size())];
                const Seconds ts = day_start + static_cast<Seconds>(rng.below(86400));
                const EventKind kind = rng.bernoulli(0.3) ? EventKind::text : EventKind::call;
                builder.add(t.user_id, ts, ant->id, kind);
            }
        }
        pop.truth.push_back(std::move(t));
    }
    pop.events = std::move(builder).build();
    return pop;
}

std::vector<RainGridReading> generate_rain(const World& world, const RainSpec& spec, int year_number,
                                           std::uint64_t seed) {
    const double res = spec.resolution_deg;
    const WorldSpec& w = world.spec;
    if (!(res > 0)) throw InputError("rain resolution must be positive");
    if (!(spec.peak_mm >= 0)) throw InputError("rain peak must be non-negative");
    if (!on_grid(w.origin_lon, res) || !on_grid(w.origin_lat, res) || !on_grid(w.cell_deg, res))
        throw InputError("world grid is not aligned with the rain grid resolution");
    const int nx = static_cast<int>(std::lround(world.cols * w.cell_deg / res));
    const int ny = static_cast<int>(std::lround(world.rows * w.cell_deg / res));
    const AnalysisYear year(year_number);

    std::vector<RainGridReading> out;
    out.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(year.days()));
    for (int d = 1; d <= year.days(); ++d) {
        const bool wet = spec.wet[static_cast<std::size_t>(year.month_of_day(d) - 1)];
        Rng rng = Rng::substream(seed, kRainStream, static_cast<std::uint64_t>(d));
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const GeoPoint center = GeoPoint::make(w.origin_lon + (ix + 0.5) * res, w.origin_lat + (iy + 0.5) * res);
                const double mm = wet ? std::max(0.0, rng.normal(spec.peak_mm, spec.peak_mm / 4)) : 0.0;
                out.push_back({year.date_of(d), center, mm});
            }
    }
    return out;
}

void write_rain_csv(const std::filesystem::path& path, std::span<const RainGridReading> readings) {
    std::string out = "date,cell_lon,cell_lat,mm\n";
    out.reserve(readings.size() * 40);
    for (const auto& r : readings) {
        out += format_date(r.day);
        out += ',';
        out += format_double(r.cell_center.lon);
        out += ',';
        out += format_double(r.cell_center.lat);
        out += ',';
        out += format_double(r.mm);
        out += '\n';
    }
    write_file(path, out);
}

Json PlantedEvent::to_json() const {
    return {{"day", day}, {"destination", destination}, {"fraction", fraction}, {"duration", duration}};
}

std::vector<std::string> plant_event(EventStore& store, const Geography& geography, const PlantedEvent& event,
                                     const AnalysisYear& year, std::uint64_t seed) {
    if (!geography.has_arrondissement(event.destination))
        throw InputError("event destination " + std::to_string(event.destination) + " is not an arrondissement");
    if (!(event.fraction >= 0 && event.fraction <= 1)) throw InputError("event fraction must be in [0, 1]");
    if (event.duration < 1) throw InputError("event duration must be at least one day");
    if (event.day < 1 || event.day > year.days()) throw InputError("event day outside the analysis year");

    std::vector<std::uint32_t> targets;
    const auto& names = store.antennas();
    for (const auto& a : geography.antennas()) {
        if (a.arrondissement_id != event.destination) continue;
        auto it = std::lower_bound(names.begin(), names.end(), a.id);
        if (it != names.end() && *it == a.id) targets.push_back(static_cast<std::uint32_t>(it - names.begin()));
    }
    if (targets.empty()) throw InputError("no antenna of the event destination appears in the event table");

    const Seconds from = year.start() + static_cast<Seconds>(event.day - 1) * 86400;
    const Seconds to = from + static_cast<Seconds>(event.duration) * 86400;
    std::vector<std::string> participants;
    auto& rows = store.mutable_rows();
    bool changed = false;
    for (std::size_t u = 0; u < store.users().size(); ++u) {
        Rng rng = Rng::substream(seed, kEventStream, u);
        if (!rng.bernoulli(event.fraction)) continue;
        participants.push_back(store.users()[u]);
        const auto span = store.user_rows(u);
        const std::size_t begin = static_cast<std::size_t>(span.data() - rows.data());
        for (std::size_t i = begin; i < begin + span.size(); ++i) {
            if (rows[i].timestamp < from || rows[i].timestamp >= to) continue;
            rows[i].antenna = targets[rng.below(targets.size())];
            changed = true;
        }
    }
    if (changed) store.normalize();
    return participants;
}

std::vector<CalendarInterval> synthetic_calendar(std::span<const ArchetypeSpec> archetypes, MonthMask wet,
                                                 const Geography& geography) {
    std::vector<CalendarInterval> out;
    for (const auto& a : archetypes) {
        if (a.kind != ArchetypeKind::seasonal) continue;
        const int end = (a.return_month + 10) % kMonths + 1;
        out.push_back(make_interval(a.dest_zone, a.label + " labor", Category::labor, a.out_month, end));
    }
    if (wet.any() && !wet.all()) {
        const int end = (month_after_wet(wet) + 10) % kMonths + 1;
        int start = end;
        while (wet[static_cast<std::size_t>((start + 10) % kMonths)]) start = (start + 10) % kMonths + 1;
        const CalendarInterval probe = make_interval(0, "", Category::planting, start, end);
        if (probe.months == wet)
            for (const auto& z : geography.zones())
                out.push_back(make_interval(z.id, "rainfed planting", Category::planting, start, end));
    }
    return out;
}

Json ground_truth_json(const GroundTruthInfo& info) {
    Json archetypes = Json::array();
    for (const auto& a : info.archetypes) archetypes.push_back(a.to_json());
    Json users = Json::array();
    for (const auto& u : info.users)
        users.push_back({{"user_id", u.user_id}, {"archetype", info.archetypes[u.archetype].label}, {"homes", u.homes}});
    Json wet = Json::array();
    for (int m = 1; m <= kMonths; ++m)
        if (info.wet[static_cast<std::size_t>(m - 1)]) wet.push_back(m);
    Json events = Json::array();
    for (std::size_t i = 0; i < info.events.size(); ++i) {
        Json e = info.events[i].to_json();
        if (i < info.event_participants.size()) e["participants"] = info.event_participants[i];
        events.push_back(std::move(e));
    }
    Json calendar = Json::array();
    for (const auto& c : info.calendar) calendar.push_back(to_json(c));
    return {{"prng", kPrngName},
            {"seed", info.seed},
            {"analysis_year", info.analysis_year},
            {"archetypes", std::move(archetypes)},
            {"wet_months", std::move(wet)},
            {"rain_peak_mm", info.rain_peak_mm},
            {"events", std::move(events)},
            {"calendar", std::move(calendar)},
            {"users", std::move(users)}};
}

}  // namespace mobprof
