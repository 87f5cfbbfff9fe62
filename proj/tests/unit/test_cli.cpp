#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mobprof/error.hpp"
#include "mobprof/io.hpp"
#include "mobprof/pipeline.hpp"

using namespace mobprof;
namespace fs = std::filesystem;

namespace {

Json small_config() {
    return Json::parse(R"({
      "seed": 11,
      "filters": {"target_zones": [3]},
      "cluster": {"k": 3},
      "markov": {"simulations": 5},
      "calendar": {"permutations": 50},
      "synth": {
        "population": {
          "n_users": 150,
          "archetypes": [
            {"kind": "sedentary", "weight": 0.5},
            {"kind": "seasonal", "weight": 0.3, "home_zone": 1, "dest_zone": 3, "return_month": 1},
            {"kind": "commuter", "weight": 0.2, "arr_a": 9, "arr_b": 8, "period": 2}
          ]
        },
        "rain": {"wet_months": [6, 7, 8]}
      }
    })");
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("mobprof_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("run all, then rerun") {
    const auto out = scratch("all");
    Pipeline p(PipelineConfig::from_json(small_config()), out);
    const auto first = p.run_all();
    CHECK(first.size() == 9);
    for (const auto* f : {"ingest/ingest_report.json", "filter/filters.json", "cluster/clusters.json",
                          "detect/alerts.json", "detect/flows.json", "markov/markov.json", "calendar/calendar.json",
                          "synth/ground_truth.json"})
        CHECK_MESSAGE(fs::exists(out / f), f);
    for (Stage s : kAllStages) CHECK(fs::exists(p.stage_dir(s) / "manifest.json"));

    std::map<Stage, std::string> manifests;
    for (Stage s : kAllStages) manifests[s] = slurp(p.stage_dir(s) / "manifest.json");
    Pipeline again(PipelineConfig::from_json(small_config()), out);
    for (const auto& r : again.run_all()) {
        CHECK(r.skipped);
        CHECK(slurp(again.stage_dir(r.stage) / "manifest.json") == manifests[r.stage]);
    }

    // Tampering with an output forces that stage to run again.
    { std::ofstream(out / "markov" / "markov.json") << "{}"; }
    CHECK_FALSE(again.run(Stage::markov).skipped);
    CHECK(again.run(Stage::markov).skipped);
    fs::remove_all(out);
}

TEST_CASE("missing predecessor") {
    const auto out = scratch("missing");
    Pipeline p(PipelineConfig::from_json(small_config()), out);
    p.run(Stage::synth);
    p.run(Stage::ingest);
    p.run(Stage::homes);
    try {
        p.run(Stage::cluster);
        FAIL("expected MissingStageError");
    } catch (const MissingStageError& e) {
        CHECK(e.stage() == "features");
    }
    fs::remove_all(out);
}

TEST_CASE("configuration") {
    Json bad = small_config();
    bad["clustr"] = Json::object();
    CHECK_THROWS_AS(PipelineConfig::from_json(bad), InputError);
    Json bad2 = small_config();
    bad2["cluster"]["linkage"] = "single";
    CHECK_THROWS_AS(PipelineConfig::from_json(bad2), InputError);
    Json no_geo = small_config();
    no_geo["paths"] = {{"cdr", "x.csv"}};
    CHECK_THROWS_AS(PipelineConfig::from_json(no_geo), InputError);

    const auto cfg = PipelineConfig::from_json(small_config());
    CHECK(cfg.metric == Metric::euclidean);
    CHECK_FALSE(cfg.export_members);
    CHECK(PipelineConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

    const auto out = scratch("hash");
    Pipeline a(cfg, out);
    Json edited = small_config();
    edited["calendar"]["permutations"] = 60;
    Pipeline b(PipelineConfig::from_json(edited), out);
    for (Stage s : {Stage::synth, Stage::ingest, Stage::homes, Stage::features, Stage::filter, Stage::cluster,
                    Stage::detect, Stage::markov})
        CHECK(a.config_hash(s) == b.config_hash(s));
    CHECK(a.config_hash(Stage::calendar) != b.config_hash(Stage::calendar));

    Json seeded = small_config();
    seeded["seed"] = 12;
    Pipeline c(PipelineConfig::from_json(seeded), out);
    CHECK(a.config_hash(Stage::synth) != c.config_hash(Stage::synth));
    CHECK(a.config_hash(Stage::filter) == c.config_hash(Stage::filter));
    CHECK(parse_stage("markov") == Stage::markov);
    CHECK_FALSE(parse_stage("plot").has_value());
}
