#include "mobprof/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mobprof/detect.hpp"
#include "mobprof/error.hpp"
#include "mobprof/features.hpp"
#include "mobprof/markov.hpp"
#include "mobprof/rng.hpp"

namespace fs = std::filesystem;

namespace mobprof {

const char* to_string(Stage s) {
    switch (s) {
        case Stage::synth: return "synth";
        case Stage::ingest: return "ingest";
        case Stage::homes: return "homes";
        case Stage::features: return "features";
        case Stage::filter: return "filter";
        case Stage::cluster: return "cluster";
        case Stage::detect: return "detect";
        case Stage::markov: return "markov";
        case Stage::calendar: return "calendar";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
    for (Stage s : kAllStages)
        if (name == to_string(s)) return s;
    return std::nullopt;
}

// --- configuration -----------------------------------------------------------

namespace {

void check_keys(const Json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw InputError("config: '" + where + "' must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

template <class T>
T get(const Json& j, const char* key, T fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        if constexpr (is_optional<T>::value)
            return it->get<typename T::value_type>();
        else
            return it->get<T>();
    } catch (const Json::exception&) {
        throw InputError("config: '" + where + "." + key + "' has the wrong type");
    }
}

const Json& section(const Json& doc, const char* key) {
    static const Json empty = Json::object();
    auto it = doc.find(key);
    return it == doc.end() || it->is_null() ? empty : *it;
}

MonthMask months_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw InputError("config: '" + where + "' must be a list of months");
    MonthMask mask;
    for (const Json& m : j) {
        if (!m.is_number_integer() || m.get<int>() < 1 || m.get<int>() > 12)
            throw InputError("config: '" + where + "' months must be integers in 1..12");
        mask.set(static_cast<std::size_t>(m.get<int>() - 1));
    }
    return mask;
}

Json months_to_json(MonthMask mask) {
    Json out = Json::array();
    for (int m = 1; m <= kMonths; ++m)
        if (mask[static_cast<std::size_t>(m - 1)]) out.push_back(m);
    return out;
}

std::optional<fs::path> path_of(const Json& paths, const char* key, const fs::path& base) {
    auto p = get<std::optional<std::string>>(paths, key, std::nullopt, "paths");
    if (!p) return std::nullopt;
    fs::path out(*p);
    return out.is_relative() && !base.empty() ? base / out : out;
}

Json path_json(const std::optional<fs::path>& p) { return p ? Json(p->generic_string()) : Json(nullptr); }

ArchetypeSpec archetype(ArchetypeKind kind, double weight) {
    ArchetypeSpec s;
    s.kind = kind;
    s.weight = weight;
    s.label = to_string(kind);
    return s;
}

}  // namespace

SynthConfig default_synth_config() {
    SynthConfig c;
    c.population.n_users = 2000;
    auto seasonal = archetype(ArchetypeKind::seasonal, 0.3);
    seasonal.home_zone = 1;
    seasonal.dest_zone = 3;
    seasonal.return_month = 1;
    auto commuter = archetype(ArchetypeKind::commuter, 0.2);
    commuter.arr_a = 9;
    commuter.arr_b = 8;
    commuter.period = 2;
    auto random = archetype(ArchetypeKind::random, 0.1);
    random.move_probability = 0.08;
    c.population.archetypes = {archetype(ArchetypeKind::sedentary, 0.4), seasonal, commuter, random};
    c.rain.wet = MonthMask{}.set(5).set(6).set(7);
    c.rain.peak_mm = 10.0;
    c.events.push_back({355, 6, 0.3, 2});
    return c;
}

PipelineConfig PipelineConfig::from_json(const Json& doc, const fs::path& base) {
    check_keys(doc, "",
               {"seed", "analysis_year", "paths", "ingest", "homes", "features", "filters", "cluster", "detect",
                "markov", "calendar", "geo", "synth"});
    PipelineConfig c;
    c.seed = get<std::uint64_t>(doc, "seed", c.seed, "");
    c.analysis_year = get<int>(doc, "analysis_year", c.analysis_year, "");
    if (c.analysis_year < 1900 || c.analysis_year > 2100) throw InputError("config: analysis_year out of range");

    const Json& paths = section(doc, "paths");
    check_keys(paths, "paths", {"arrondissements", "antennas", "cdr", "rain", "calendar"});
    c.paths.arrondissements = path_of(paths, "arrondissements", base);
    c.paths.antennas = path_of(paths, "antennas", base);
    c.paths.cdr = path_of(paths, "cdr", base);
    c.paths.rain = path_of(paths, "rain", base);
    c.paths.calendar = path_of(paths, "calendar", base);
    if (c.paths.cdr && (!c.paths.arrondissements || !c.paths.antennas))
        throw InputError("config: paths.cdr requires paths.arrondissements and paths.antennas");
    if (!c.paths.cdr && (c.paths.arrondissements || c.paths.antennas || c.paths.rain || c.paths.calendar))
        throw InputError("config: external source paths require paths.cdr");

    const Json& ingest = section(doc, "ingest");
    check_keys(ingest, "ingest", {"max_reject_fraction", "export_rejections"});
    c.ingest.analysis_year = c.analysis_year;
    c.ingest.max_reject_fraction = get<double>(ingest, "max_reject_fraction", 0.10, "ingest");
    if (!(c.ingest.max_reject_fraction >= 0 && c.ingest.max_reject_fraction <= 1))
        throw InputError("config: ingest.max_reject_fraction must be in [0, 1]");
    c.export_rejections = get<bool>(ingest, "export_rejections", false, "ingest");

    const Json& homes = section(doc, "homes");
    check_keys(homes, "homes", {"d_min", "night_weighting"});
    c.homes.d_min = get<int>(homes, "d_min", 1, "homes");
    c.homes.night_weighting = get<bool>(homes, "night_weighting", false, "homes");
    if (c.homes.d_min < 1 || c.homes.d_min > 31) throw InputError("config: homes.d_min must be in 1..31");

    const Json& features = section(doc, "features");
    check_keys(features, "features", {"dhv_reference"});
    c.dhv_reference = get<std::optional<RegionId>>(features, "dhv_reference", std::nullopt, "features");

    const Json& filters = section(doc, "filters");
    check_keys(filters, "filters",
               {"m_min", "m_max", "m_outmin", "window", "rho", "drop_missing_over", "target_zones", "export_users"});
    c.filters.m_min = get<int>(filters, "m_min", 2, "filters");
    c.filters.m_max = get<int>(filters, "m_max", 10, "filters");
    c.filters.m_outmin = get<int>(filters, "m_outmin", 1, "filters");
    c.filters.rho = get<double>(filters, "rho", 1.0, "filters");
    c.filters.drop_missing_over = get<int>(filters, "drop_missing_over", 3, "filters");
    if (auto it = filters.find("window"); it != filters.end() && !it->is_null())
        c.filters.window = months_from_json(*it, "filters.window");
    c.filters.validate();
    c.target_zones = get<std::vector<ZoneId>>(filters, "target_zones", {}, "filters");
    c.export_filter_users = get<bool>(filters, "export_users", false, "filters");

    const Json& cluster = section(doc, "cluster");
    check_keys(cluster, "cluster", {"metric", "k", "max_vectors", "export_members"});
    c.metric = parse_metric(get<std::string>(cluster, "metric", "euclidean", "cluster"));
    c.k = get<int>(cluster, "k", 4, "cluster");
    if (c.k < 1) throw InputError("config: cluster.k must be positive");
    c.max_vectors = get<std::size_t>(cluster, "max_vectors", kDefaultMaxVectors, "cluster");
    c.export_members = get<bool>(cluster, "export_members", false, "cluster");

    const Json& detect = section(doc, "detect");
    check_keys(detect, "detect", {"k", "theta", "top_n", "include_outflow", "include_country"});
    c.detect_k = get<double>(detect, "k", 4.0, "detect");
    c.theta = get<double>(detect, "theta", 0.2, "detect");
    c.top_n = get<std::size_t>(detect, "top_n", 10, "detect");
    c.include_outflow = get<bool>(detect, "include_outflow", false, "detect");
    c.include_country = get<bool>(detect, "include_country", true, "detect");
    if (!(c.detect_k > 0) || !(c.theta > 0)) throw InputError("config: detect.k and detect.theta must be positive");

    const Json& markov = section(doc, "markov");
    check_keys(markov, "markov", {"simulations"});
    c.simulations = get<int>(markov, "simulations", 20, "markov");
    if (c.simulations < 2) throw InputError("config: markov.simulations must be at least 2");

    const Json& calendar = section(doc, "calendar");
    check_keys(calendar, "calendar", {"lag_min", "lag_max", "permutations"});
    c.lags.min = get<int>(calendar, "lag_min", -3, "calendar");
    c.lags.max = get<int>(calendar, "lag_max", 3, "calendar");
    c.permutations = get<int>(calendar, "permutations", 1000, "calendar");
    if (c.lags.min > c.lags.max || c.lags.min < -11 || c.lags.max > 11)
        throw InputError("config: calendar lag range must satisfy -11 <= lag_min <= lag_max <= 11");
    if (c.permutations < 1) throw InputError("config: calendar.permutations must be positive");

    const Json& geo = section(doc, "geo");
    check_keys(geo, "geo", {"rain_resolution", "rain_supersample"});
    c.rain_grid.resolution_deg = get<double>(geo, "rain_resolution", 0.25, "geo");
    c.rain_grid.supersample = get<int>(geo, "rain_supersample", 4, "geo");
    if (!(c.rain_grid.resolution_deg > 0) || c.rain_grid.supersample < 1)
        throw InputError("config: geo.rain_resolution and geo.rain_supersample must be positive");

    c.synth = default_synth_config();
    if (auto it = doc.find("synth"); it != doc.end() && !it->is_null()) {
        const Json& s = *it;
        check_keys(s, "synth", {"world", "population", "rain", "events"});
        const Json& w = section(s, "world");
        check_keys(w, "synth.world", {"n_arr", "n_zones", "antennas_per_arr", "origin_lon", "origin_lat", "cell_deg"});
        WorldSpec& ws = c.synth.world;
        ws.n_arr = get<int>(w, "n_arr", ws.n_arr, "synth.world");
        ws.n_zones = get<int>(w, "n_zones", ws.n_zones, "synth.world");
        ws.antennas_per_arr = get<int>(w, "antennas_per_arr", ws.antennas_per_arr, "synth.world");
        ws.origin_lon = get<double>(w, "origin_lon", ws.origin_lon, "synth.world");
        ws.origin_lat = get<double>(w, "origin_lat", ws.origin_lat, "synth.world");
        ws.cell_deg = get<double>(w, "cell_deg", ws.cell_deg, "synth.world");

        const Json& p = section(s, "population");
        check_keys(p, "synth.population", {"n_users", "events_per_day", "p_noise", "archetypes"});
        PopulationSpec& ps = c.synth.population;
        ps.n_users = get<std::size_t>(p, "n_users", ps.n_users, "synth.population");
        ps.events_per_day = get<double>(p, "events_per_day", ps.events_per_day, "synth.population");
        ps.p_noise = get<double>(p, "p_noise", ps.p_noise, "synth.population");
        if (auto a = p.find("archetypes"); a != p.end() && !a->is_null()) {
            if (!a->is_array()) throw InputError("config: synth.population.archetypes must be a list");
            ps.archetypes.clear();
            for (const Json& spec : *a) ps.archetypes.push_back(ArchetypeSpec::from_json(spec));
        }

        const Json& r = section(s, "rain");
        check_keys(r, "synth.rain", {"wet_months", "peak_mm"});
        if (auto wm = r.find("wet_months"); wm != r.end() && !wm->is_null())
            c.synth.rain.wet = months_from_json(*wm, "synth.rain.wet_months");
        c.synth.rain.peak_mm = get<double>(r, "peak_mm", c.synth.rain.peak_mm, "synth.rain");

        if (auto ev = s.find("events"); ev != s.end() && !ev->is_null()) {
            if (!ev->is_array()) throw InputError("config: synth.events must be a list");
            c.synth.events.clear();
            for (const Json& e : *ev) {
                check_keys(e, "synth.events[]", {"day", "destination", "fraction", "duration"});
                PlantedEvent pe;
                pe.day = get<int>(e, "day", pe.day, "synth.events[]");
                pe.destination = get<RegionId>(e, "destination", pe.destination, "synth.events[]");
                pe.fraction = get<double>(e, "fraction", pe.fraction, "synth.events[]");
                pe.duration = get<int>(e, "duration", pe.duration, "synth.events[]");
                c.synth.events.push_back(pe);
            }
        }
    }
    c.synth.population.analysis_year = c.analysis_year;
    c.synth.rain.resolution_deg = c.rain_grid.resolution_deg;
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    return from_json(read_json(path), path.parent_path());
}

Json PipelineConfig::to_json() const {
    Json window = filters.window ? months_to_json(*filters.window) : Json(nullptr);
    Json archetypes = Json::array();
    for (const auto& a : synth.population.archetypes) archetypes.push_back(a.to_json());
    Json events = Json::array();
    for (const auto& e : synth.events) events.push_back(e.to_json());
    return {
        {"seed", seed},
        {"analysis_year", analysis_year},
        {"paths",
         {{"arrondissements", path_json(paths.arrondissements)},
          {"antennas", path_json(paths.antennas)},
          {"cdr", path_json(paths.cdr)},
          {"rain", path_json(paths.rain)},
          {"calendar", path_json(paths.calendar)}}},
        {"ingest", {{"max_reject_fraction", ingest.max_reject_fraction}, {"export_rejections", export_rejections}}},
        {"homes", {{"d_min", homes.d_min}, {"night_weighting", homes.night_weighting}}},
        {"features", {{"dhv_reference", dhv_reference ? Json(*dhv_reference) : Json(nullptr)}}},
        {"filters",
         {{"m_min", filters.m_min},
          {"m_max", filters.m_max},
          {"m_outmin", filters.m_outmin},
          {"window", window},
          {"rho", filters.rho},
          {"drop_missing_over", filters.drop_missing_over},
          {"target_zones", target_zones},
          {"export_users", export_filter_users}}},
        {"cluster",
         {{"metric", mobprof::to_string(metric)},
          {"k", k},
          {"max_vectors", max_vectors},
          {"export_members", export_members}}},
        {"detect",
         {{"k", detect_k},
          {"theta", theta},
          {"top_n", top_n},
          {"include_outflow", include_outflow},
          {"include_country", include_country}}},
        {"markov", {{"simulations", simulations}}},
        {"calendar", {{"lag_min", lags.min}, {"lag_max", lags.max}, {"permutations", permutations}}},
        {"geo", {{"rain_resolution", rain_grid.resolution_deg}, {"rain_supersample", rain_grid.supersample}}},
        {"synth",
         {{"world",
           {{"n_arr", synth.world.n_arr},
            {"n_zones", synth.world.n_zones},
            {"antennas_per_arr", synth.world.antennas_per_arr},
            {"origin_lon", synth.world.origin_lon},
            {"origin_lat", synth.world.origin_lat},
            {"cell_deg", synth.world.cell_deg}}},
          {"population",
           {{"n_users", synth.population.n_users},
            {"events_per_day", synth.population.events_per_day},
            {"p_noise", synth.population.p_noise},
            {"archetypes", std::move(archetypes)}}},
          {"rain", {{"wet_months", months_to_json(synth.rain.wet)}, {"peak_mm", synth.rain.peak_mm}}},
          {"events", std::move(events)}}},
    };
}

// --- pipeline ----------------------------------------------------------------

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kToolVersion = MOBPROF_VERSION;

std::string stage_file(Stage s, const char* name) { return std::string(to_string(s)) + "/" + name; }

Json pick(const Json& full, std::initializer_list<const char*> keys) {
    Json out = Json::object();
    for (const char* key : keys) {
        std::string k(key);
        if (auto dot = k.find('.'); dot != std::string::npos)
            out[k] = full.at(k.substr(0, dot)).at(k.substr(dot + 1));
        else
            out[k] = full.at(k);
    }
    return out;
}

std::vector<RegionId> all_arrondissements(const Geography& geo) {
    std::vector<RegionId> out;
    for (const auto& a : geo.arrondissements()) out.push_back(a.id);
    return out;
}

Json profile_json(const Profile& p) { return std::vector<double>(p.begin(), p.end()); }

}  // namespace

Pipeline::Pipeline(PipelineConfig config, fs::path out_dir, Logger log)
    : config_(std::move(config)), out_(std::move(out_dir)), log_(std::move(log)) {}

void Pipeline::log(std::string_view message) const {
    if (log_) log_(message);
}

std::string Pipeline::config_hash(Stage s) const {
    const Json full = config_.to_json();
    Json subset;
    switch (s) {
        case Stage::synth: subset = pick(full, {"seed", "analysis_year", "synth", "geo.rain_resolution"}); break;
        case Stage::ingest: subset = pick(full, {"analysis_year", "ingest", "paths"}); break;
        case Stage::homes: subset = pick(full, {"analysis_year", "homes"}); break;
        case Stage::features: subset = pick(full, {"analysis_year", "features"}); break;
        case Stage::filter: subset = pick(full, {"filters"}); break;
        case Stage::cluster: subset = pick(full, {"cluster", "detect.theta"}); break;
        case Stage::detect: subset = pick(full, {"detect.k", "detect.top_n", "detect.include_outflow", "detect.include_country"}); break;
        case Stage::markov: subset = pick(full, {"seed", "markov"}); break;
        case Stage::calendar:
            subset = pick(full, {"seed", "analysis_year", "calendar", "geo", "paths.rain", "paths.calendar"});
            break;
    }
    subset["stage"] = to_string(s);
    return sha256_hex(subset.dump());
}

fs::path Pipeline::source(std::string_view synth_name, const std::optional<fs::path>& external) const {
    if (config_.paths.external()) return external ? *external : fs::path{};
    return stage_dir(Stage::synth) / synth_name;
}

Pipeline::Inputs Pipeline::inputs_for(Stage s) const {
    Inputs in;
    auto internal = [&](Stage from, const char* name) {
        in.files.emplace_back(stage_file(from, name), stage_dir(from) / name);
    };
    auto geography = [&] {
        internal(Stage::ingest, "geography.json");
        internal(Stage::ingest, "antennas.csv");
    };
    auto external_or_synth = [&](const char* name, const std::optional<fs::path>& ext) {
        if (config_.paths.external()) {
            if (ext) in.files.emplace_back("external:" + ext->generic_string(), *ext);
        } else {
            internal(Stage::synth, name);
        }
    };
    switch (s) {
        case Stage::synth: break;
        case Stage::ingest:
            external_or_synth("arrondissements.json", config_.paths.arrondissements);
            external_or_synth("antennas.csv", config_.paths.antennas);
            external_or_synth("cdr.csv", config_.paths.cdr);
            break;
        case Stage::homes:
            internal(Stage::ingest, "events.csv");
            geography();
            break;
        case Stage::features:
            internal(Stage::homes, "daily_homes.csv");
            internal(Stage::homes, "monthly_homes.csv");
            internal(Stage::ingest, "events.csv");
            geography();
            break;
        case Stage::filter:
            internal(Stage::features, "hauv.csv");
            internal(Stage::features, "hlzuv.csv");
            internal(Stage::features, "buv.csv");
            geography();
            break;
        case Stage::cluster:
            internal(Stage::features, "hauv.csv");
            internal(Stage::features, "hlzuv.csv");
            internal(Stage::features, "buv.csv");
            internal(Stage::filter, "kept.csv");
            break;
        case Stage::detect:
            internal(Stage::homes, "daily_homes.csv");
            internal(Stage::homes, "monthly_homes.csv");
            geography();
            break;
        case Stage::markov: internal(Stage::features, "hauv.csv"); break;
        case Stage::calendar:
            internal(Stage::cluster, "clusters.json");
            geography();
            external_or_synth("rain_grid.csv", config_.paths.rain);
            external_or_synth("calendar.json", config_.paths.calendar);
            break;
    }
    return in;
}

void Pipeline::require(Stage predecessor, Stage requester) const {
    if (!fs::exists(stage_dir(predecessor) / kManifest))
        throw MissingStageError(to_string(predecessor), std::string("stage '") + to_string(requester) +
                                                            "' needs the outputs of stage '" +
                                                            to_string(predecessor) + "'; run '" +
                                                            to_string(predecessor) + "' first");
}

StageResult Pipeline::run(Stage s) {
    const Inputs in = inputs_for(s);
    for (const auto& [key, path] : in.files) {
        if (key.rfind("external:", 0) == 0) {
            if (!fs::exists(path)) throw InputError("input file not found: " + path.string());
            continue;
        }
        require(*parse_stage(key.substr(0, key.find('/'))), s);
        if (!fs::exists(path)) throw InputError("missing intermediate " + path.string() + "; rerun its stage");
    }

    Json manifest = {{"stage", to_string(s)}, {"tool_version", kToolVersion}, {"config_hash", config_hash(s)}};
    Json inputs = Json::object();
    for (const auto& [key, path] : in.files) inputs[key] = sha256_file(path);
    manifest["inputs"] = std::move(inputs);

    const fs::path dir = stage_dir(s);
    const fs::path manifest_path = dir / kManifest;
    if (fs::exists(manifest_path)) {
        Json old;
        try {
            old = read_json(manifest_path);
        } catch (const InputError&) {
            old = Json();
        }
        if (old.is_object() && old.contains("outputs")) {
            Json header = old;
            header.erase("outputs");
            bool fresh = header == manifest;
            std::vector<std::string> names;
            for (const auto& [name, hash] : old["outputs"].items()) {
                names.push_back(name);
                if (fresh && (!fs::exists(dir / name) || sha256_file(dir / name) != hash.get<std::string>()))
                    fresh = false;
            }
            if (fresh) {
                log(std::string(to_string(s)) + ": up to date");
                return {s, true, names};
            }
        }
    }

    log(std::string(to_string(s)) + ": running");
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs = execute(s);
    std::sort(outputs.begin(), outputs.end());
    Json out_hashes = Json::object();
    for (const auto& name : outputs) out_hashes[name] = sha256_file(dir / name);
    manifest["outputs"] = std::move(out_hashes);
    write_json(manifest_path, manifest);
    return {s, false, outputs};
}

std::vector<StageResult> Pipeline::run_all() {
    std::vector<StageResult> results;
    for (Stage s : kAllStages) {
        if (s == Stage::synth && config_.paths.external()) continue;
        results.push_back(run(s));
    }
    return results;
}

Geography Pipeline::load_geography() const {
    const fs::path dir = stage_dir(Stage::ingest);
    return Geography::load(dir / "geography.json", dir / "antennas.csv");
}

std::vector<std::string> Pipeline::execute(Stage s) {
    const fs::path dir = stage_dir(s);
    const AnalysisYear year(config_.analysis_year);
    std::vector<std::string> out;
    auto emit_json = [&](const char* name, const Json& value) {
        write_json(dir / name, value);
        out.emplace_back(name);
    };

    switch (s) {
        case Stage::synth: {
            const SynthConfig& sc = config_.synth;
            World world = generate_world(sc.world, config_.seed);
            std::vector<ArchetypeSpec> archetypes = sc.population.archetypes;
            resolve_archetypes(archetypes, world.geography, sc.rain.wet);
            PopulationSpec ps = sc.population;
            ps.archetypes = archetypes;
            Population pop = generate_population(world, ps, config_.seed);
            std::vector<std::size_t> participants;
            for (std::size_t i = 0; i < sc.events.size(); ++i)
                participants.push_back(
                    plant_event(pop.events, world.geography, sc.events[i], year, splitmix64(config_.seed + i)).size());
            const auto rain = generate_rain(world, sc.rain, config_.analysis_year, config_.seed);
            const auto calendar = synthetic_calendar(archetypes, sc.rain.wet, world.geography);

            emit_json("arrondissements.json", geography_to_json(world.geography));
            write_antennas_csv(dir / "antennas.csv", world.geography);
            out.emplace_back("antennas.csv");
            pop.events.write_csv(dir / "cdr.csv");
            out.emplace_back("cdr.csv");
            write_rain_csv(dir / "rain_grid.csv", rain);
            out.emplace_back("rain_grid.csv");
            Json cal = Json::array();
            for (const auto& c : calendar) cal.push_back(to_json(c));
            emit_json("calendar.json", cal);
            emit_json("ground_truth.json",
                      ground_truth_json({config_.seed, config_.analysis_year, archetypes, pop.truth, sc.rain.wet,
                                         sc.rain.peak_mm, sc.events, participants, calendar}));
            log("synth: " + std::to_string(pop.truth.size()) + " users, " + std::to_string(pop.events.size()) +
                " events");
            break;
        }
        case Stage::ingest: {
            const Geography geo = Geography::load(source("arrondissements.json", config_.paths.arrondissements),
                                                  source("antennas.csv", config_.paths.antennas));
            IngestResult res = parse_events(source("cdr.csv", config_.paths.cdr), config_.ingest, &geo);
            res.store.write_csv(dir / "events.csv");
            out.emplace_back("events.csv");
            emit_json("geography.json", geography_to_json(geo));
            write_antennas_csv(dir / "antennas.csv", geo);
            out.emplace_back("antennas.csv");
            emit_json("ingest_report.json", res.report.to_json(config_.export_rejections));
            log("ingest: accepted " + std::to_string(res.report.accepted) + " of " +
                std::to_string(res.report.total_rows) + " rows");
            break;
        }
        case Stage::homes: {
            const Geography geo = load_geography();
            const IngestResult res = parse_events(stage_dir(Stage::ingest) / "events.csv", config_.ingest, &geo);
            const HomeTable homes = estimate_homes(res.store, geo, year, config_.homes);
            homes.write_daily_csv(dir / "daily_homes.csv");
            homes.write_monthly_csv(dir / "monthly_homes.csv");
            out = {"daily_homes.csv", "monthly_homes.csv"};
            break;
        }
        case Stage::features: {
            const Geography geo = load_geography();
            const HomeTable homes = HomeTable::read_csv(stage_dir(Stage::homes) / "daily_homes.csv",
                                                        stage_dir(Stage::homes) / "monthly_homes.csv");
            const FeatureVectors fv = build_vectors(homes, geo);
            write_hauv_csv(dir / "hauv.csv", fv.hauv);
            write_hlzuv_csv(dir / "hlzuv.csv", fv.hlzuv);
            const IngestResult res = parse_events(stage_dir(Stage::ingest) / "events.csv", config_.ingest, &geo);
            std::vector<Buv> flat;
            for (const auto& user : compute_all_buv(res.store, geo, year))
                for (const auto& b : user) flat.push_back(b);
            write_buv_csv(dir / "buv.csv", flat);
            out = {"hauv.csv", "hlzuv.csv", "buv.csv"};
            if (config_.dhv_reference) {
                if (!geo.has_arrondissement(*config_.dhv_reference))
                    throw InputError("features.dhv_reference is not a known arrondissement");
                std::vector<Dhv> dhv;
                for (const auto& h : fv.hauv) dhv.push_back(build_dhv(h, *config_.dhv_reference, geo));
                write_dhv_csv(dir / "dhv.csv", dhv);
                out.emplace_back("dhv.csv");
            }
            break;
        }
        case Stage::filter: {
            const Geography geo = load_geography();
            const fs::path fdir = stage_dir(Stage::features);
            const auto hauv = read_hauv_csv(fdir / "hauv.csv");
            const auto hlzuv = read_hlzuv_csv(fdir / "hlzuv.csv");
            const auto buv = read_buv_csv(fdir / "buv.csv");
            if (hauv.size() != hlzuv.size()) throw InvariantError("HAUV and HLZUV user counts differ");
            std::map<std::string, const Buv*> radius;
            for (const auto& b : buv)
                if (b.indicator == Indicator::radius_of_gyration_km) radius[b.user_id] = &b;
            std::vector<FilterCandidate> population;
            for (std::size_t i = 0; i < hauv.size(); ++i) {
                if (hauv[i].user_id != hlzuv[i].user_id) throw InvariantError("HAUV and HLZUV user order differs");
                auto it = radius.find(hauv[i].user_id);
                population.push_back({&hauv[i], &hlzuv[i], it == radius.end() ? nullptr : it->second});
            }
            std::vector<ZoneId> targets = config_.target_zones;
            if (targets.empty())
                for (const auto& z : geo.zones()) targets.push_back(z.id);
            Json report = Json::array();
            std::string kept = "zone,user_id\n";
            for (ZoneId z : targets) {
                if (!geo.has_zone(z)) throw InputError("filters.target_zones: unknown zone " + std::to_string(z));
                const FilterOutcome outcome = apply_filters(population, z, geo, config_.filters);
                report.push_back(outcome.to_json(config_.export_filter_users));
                for (const auto& u : outcome.kept) kept += std::to_string(z) + "," + u + "\n";
            }
            emit_json("filters.json", {{"population", hauv.size()}, {"targets", std::move(report)}});
            write_file(dir / "kept.csv", kept);
            out.emplace_back("kept.csv");
            break;
        }
        case Stage::cluster: {
            const fs::path fdir = stage_dir(Stage::features);
            const auto hauv = read_hauv_csv(fdir / "hauv.csv");
            const auto hlzuv = read_hlzuv_csv(fdir / "hlzuv.csv");
            const auto buv = read_buv_csv(fdir / "buv.csv");
            std::map<std::string, std::size_t> index;
            for (std::size_t i = 0; i < hlzuv.size(); ++i) index[hlzuv[i].user_id] = i;

            std::map<ZoneId, std::vector<std::string>> kept;
            {
                std::istringstream in(read_file(stage_dir(Stage::filter) / "kept.csv"));
                std::string line;
                std::getline(in, line);
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    auto f = split_fields(line);
                    long long z = 0;
                    if (f.size() != 2 || !parse_int(f[0], z)) throw InputError("kept.csv: malformed row");
                    kept[static_cast<ZoneId>(z)].emplace_back(f[1]);
                }
            }
            std::vector<ZoneId> zones = config_.target_zones;
            if (zones.empty())
                for (const auto& [z, _] : kept) zones.push_back(z);
            // Zones absent from kept.csv had no kept users; keep them in the report.
            std::sort(zones.begin(), zones.end());

            Json report = Json::array();
            std::string assignments = "zone,user_id,class\n";
            for (ZoneId z : zones) {
                const auto& users = kept[z];
                Json entry = {{"zone", z},
                              {"users", users.size()},
                              {"metric", mobprof::to_string(config_.metric)},
                              {"k", config_.k}};
                if (users.size() < 2 || users.size() < static_cast<std::size_t>(config_.k)) {
                    entry["status"] = "insufficient_users";
                    entry["classes"] = Json::array();
                    report.push_back(std::move(entry));
                    continue;
                }
                std::vector<BinaryOccupancy> vectors;
                for (const auto& u : users) {
                    auto it = index.find(u);
                    if (it == index.end()) throw InvariantError("kept user " + u + " has no feature vector");
                    vectors.push_back(binarize(hlzuv[it->second], z));
                }
                const DistanceMatrix d = pairwise_distance(vectors, config_.metric, config_.max_vectors);
                const Dendrogram tree = upgma(d);
                const std::vector<int> labels = cut(tree, static_cast<std::size_t>(config_.k));
                const auto classes = build_classes(labels, vectors, buv);
                Json cls = Json::array();
                for (const auto& c : classes) {
                    Json cj = {{"id", c.id},
                               {"size", c.size()},
                               {"mean_profile", profile_json(c.mean_profile)},
                               {"std_profile", profile_json(c.std_profile)},
                               {"relevant_periods", select_periods(c.mean_profile, config_.theta)},
                               {"occupancy", occupancy_histogram(c.id, c.members, hauv).to_json()},
                               {"bandicoot", c.bandicoot.to_json()}};
                    if (config_.export_members) cj["members"] = c.members;
                    cls.push_back(std::move(cj));
                }
                std::vector<double> heights;
                for (std::size_t i = tree.merges.size() - std::min<std::size_t>(tree.merges.size(), 10);
                     i < tree.merges.size(); ++i)
                    heights.push_back(tree.merges[i].height);
                entry["status"] = "ok";
                entry["top_merge_heights"] = heights;
                entry["classes"] = std::move(cls);
                report.push_back(std::move(entry));
                for (std::size_t i = 0; i < users.size(); ++i)
                    assignments += std::to_string(z) + "," + users[i] + "," + std::to_string(labels[i]) + "\n";
            }
            emit_json("clusters.json", {{"zones", std::move(report)}});
            write_file(dir / "assignments.csv", assignments);
            out.emplace_back("assignments.csv");
            break;
        }
        case Stage::detect: {
            const Geography geo = load_geography();
            const HomeTable homes = HomeTable::read_csv(stage_dir(Stage::homes) / "daily_homes.csv",
                                                        stage_dir(Stage::homes) / "monthly_homes.csv");
            const auto flows = daily_flows(homes);
            const auto regions = all_arrondissements(geo);
            const auto series = flow_series(flows, regions);
            Json alerts = Json::array();
            if (flows.size() >= static_cast<std::size_t>(kMinSeriesDays)) {
                for (const auto& a : detect_all_events(series, config_.detect_k, config_.include_outflow,
                                                       config_.include_country))
                    alerts.push_back(to_json(a));
            } else {
                log("detect: series shorter than " + std::to_string(kMinSeriesDays) + " days, no detection");
            }
            emit_json("alerts.json", {{"k", config_.detect_k}, {"alerts", std::move(alerts)}});
            emit_json("flows.json", flows_to_json(flows, config_.top_n));
            break;
        }
        case Stage::markov: {
            const auto hauv = read_hauv_csv(stage_dir(Stage::features) / "hauv.csv");
            const TransitionModel model = fit_stationary(hauv);
            const auto report = nonstationarity_report(hauv, model, config_.seed, config_.simulations);
            Json v = Json::array();
            for (int a = 1; a <= kMonths; ++a) {
                Json row = Json::array();
                for (int b = 1; b <= kMonths; ++b) {
                    auto ag = month_agreement(hauv, a, b);
                    row.push_back(ag.cramers_v ? Json(*ag.cramers_v) : Json(nullptr));
                }
                v.push_back(std::move(row));
            }
            Json j = report.to_json();
            j["observed_cramers_v"] = std::move(v);
            j["model"] = model.to_json();
            emit_json("markov.json", j);
            break;
        }
        case Stage::calendar: {
            const Geography geo = load_geography();
            const Json clusters = read_json(stage_dir(Stage::cluster) / "clusters.json");
            std::vector<CalendarInterval> intervals;
            const fs::path cal_path = source("calendar.json", config_.paths.calendar);
            if (!cal_path.empty()) intervals = parse_calendar(cal_path, geo);

            std::map<ZoneId, MonthSlots<double>> rain;
            const fs::path rain_path = source("rain_grid.csv", config_.paths.rain);
            if (!rain_path.empty()) {
                const auto readings = read_rain_grid(rain_path);
                for (const auto& series :
                     aggregate_rain(readings, geo, RegionKind::livelihood_zone, config_.rain_grid))
                    rain[series.region_id] = monthly_rain(series).months_of(config_.analysis_year);
            }
            Json zones = Json::array();
            for (const Json& z : clusters.at("zones")) {
                const ZoneId zone = z.at("zone").get<ZoneId>();
                std::vector<ClassProfile> classes;
                for (const Json& c : z.at("classes")) {
                    ClassProfile p;
                    p.class_id = c.at("id").get<int>();
                    p.size = c.at("size").get<std::size_t>();
                    const auto mean = c.at("mean_profile").get<std::vector<double>>();
                    std::copy(mean.begin(), mean.end(), p.mean.begin());
                    classes.push_back(p);
                }
                std::optional<MonthSlots<double>> zone_rain;
                if (auto it = rain.find(zone); it != rain.end()) zone_rain = it->second;
                ZoneReportParams params{config_.lags, config_.permutations, splitmix64(config_.seed ^ static_cast<std::uint64_t>(zone))};
                zones.push_back(zone_report(zone, classes, intervals, zone_rain, params).to_json());
            }
            emit_json("calendar.json", {{"zones", std::move(zones)}});
            break;
        }
    }
    return out;
}

}  // namespace mobprof
