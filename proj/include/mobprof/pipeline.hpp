#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobprof/calendar.hpp"
#include "mobprof/cluster.hpp"
#include "mobprof/filters.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/homeloc.hpp"
#include "mobprof/ingest.hpp"
#include "mobprof/io.hpp"
#include "mobprof/synth.hpp"

namespace mobprof {

enum class Stage { synth, ingest, homes, features, filter, cluster, detect, markov, calendar };
inline constexpr std::array<Stage, 9> kAllStages{Stage::synth,  Stage::ingest,  Stage::homes,
                                                 Stage::features, Stage::filter, Stage::cluster,
                                                 Stage::detect, Stage::markov,  Stage::calendar};
const char* to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

struct SourcePaths {
    std::optional<std::filesystem::path> arrondissements;
    std::optional<std::filesystem::path> antennas;
    std::optional<std::filesystem::path> cdr;
    std::optional<std::filesystem::path> rain;
    std::optional<std::filesystem::path> calendar;

    /// With no CDR path the pipeline reads the synth stage's outputs instead.
    bool external() const { return cdr.has_value(); }
};

struct SynthConfig {
    WorldSpec world;
    PopulationSpec population;
    RainSpec rain;
    std::vector<PlantedEvent> events;
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    int analysis_year = 2013;
    SourcePaths paths;
    IngestConfig ingest;
    bool export_rejections = false;
    HomeParams homes;
    std::optional<RegionId> dhv_reference;
    FilterParams filters;
    std::vector<ZoneId> target_zones;  // empty: every zone
    bool export_filter_users = false;
    Metric metric = Metric::euclidean;
    int k = 4;
    std::size_t max_vectors = kDefaultMaxVectors;
    bool export_members = false;  // member ids are personal data
    double detect_k = 4.0;
    double theta = 0.2;
    std::size_t top_n = 10;
    bool include_outflow = false;
    bool include_country = true;
    int simulations = 20;
    LagRange lags;
    int permutations = 1000;
    RainGridSpec rain_grid;
    SynthConfig synth;

    /// Validates and fills defaults; unknown keys are rejected. Relative paths resolve
    /// against base_dir.
    static PipelineConfig from_json(const Json& doc, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);
    /// Fully expanded configuration, defaults included.
    Json to_json() const;
};

/// Default synthetic scenario used when a config has no "synth" section.
SynthConfig default_synth_config();

struct StageResult {
    Stage stage;
    bool skipped = false;  // manifest matched: nothing to do
    std::vector<std::string> outputs;
};

class Pipeline {
public:
    using Logger = std::function<void(std::string_view)>;

    Pipeline(PipelineConfig config, std::filesystem::path out_dir, Logger log = {});

    StageResult run(Stage stage);
    /// Every stage in order.
    std::vector<StageResult> run_all();

    const PipelineConfig& config() const noexcept { return config_; }
    std::filesystem::path stage_dir(Stage s) const { return out_ / to_string(s); }
    /// Hash of the configuration subset a stage depends on.
    std::string config_hash(Stage s) const;

private:
    struct Inputs {
        std::vector<std::pair<std::string, std::filesystem::path>> files;  // manifest key, location
    };
    Inputs inputs_for(Stage s) const;
    void require(Stage predecessor, Stage requester) const;
    std::vector<std::string> execute(Stage s);
    void log(std::string_view message) const;

    std::filesystem::path source(std::string_view synth_name,
                                 const std::optional<std::filesystem::path>& external) const;
    Geography load_geography() const;

    PipelineConfig config_;
    std::filesystem::path out_;
    Logger log_;
};

}  // namespace mobprof
