#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mobprof/calendar.hpp"
#include "mobprof/cluster.hpp"
#include "mobprof/detect.hpp"
#include "mobprof/error.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/markov.hpp"
#include "mobprof/pipeline.hpp"

namespace py = pybind11;
using namespace mobprof;

namespace {

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    PipelineConfig c = PipelineConfig::load(path);
    if (seed) c.seed = *seed;
    return c;
}

std::vector<BinaryOccupancy> occupancies(const std::vector<std::string>& masks) {
    std::vector<BinaryOccupancy> v;
    for (std::size_t i = 0; i < masks.size(); ++i) v.push_back({std::to_string(i), 1, parse_mask(masks[i])});
    return v;
}

std::vector<Hauv> to_hauv(const std::vector<std::vector<std::optional<RegionId>>>& rows) {
    std::vector<Hauv> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != kMonths) throw InputError("each vector needs 12 monthly entries");
        Hauv h{std::to_string(i), {}};
        std::copy(rows[i].begin(), rows[i].end(), h.months.begin());
        out.push_back(std::move(h));
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.attr("__version__") = MOBPROF_VERSION;

    static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
    static py::exception<MissingStageError> missing_stage(m, "MissingStageError", input_error.ptr());
    static py::exception<InvariantError> invariant_error(m, "InvariantError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const MissingStageError& e) {
            PyErr_SetString(missing_stage.ptr(), e.what());
        } catch (const InputError& e) {
            PyErr_SetString(input_error.ptr(), e.what());
        } catch (const InvariantError& e) {
            PyErr_SetString(invariant_error.ptr(), e.what());
        }
    });

    m.def(
        "run",
        [](const std::string& config, const std::string& out, const std::string& stage,
           std::optional<std::uint64_t> seed) {
            Pipeline p(load_config(config, seed), out);
            std::vector<StageResult> results;
            if (stage == "all") {
                results = p.run_all();
            } else {
                const auto s = parse_stage(stage);
                if (!s) throw InputError("unknown stage '" + stage + "'");
                results.push_back(p.run(*s));
            }
            py::list rows;
            for (const auto& r : results)
                rows.append(py::dict(py::arg("stage") = to_string(r.stage), py::arg("skipped") = r.skipped,
                                     py::arg("outputs") = r.outputs));
            return rows;
        },
        py::arg("config"), py::arg("out"), py::arg("stage") = "all", py::arg("seed") = py::none());

    m.def(
        "expanded_config",
        [](const std::string& config, std::optional<std::uint64_t> seed) {
            return load_config(config, seed).to_json().dump();
        },
        py::arg("config"), py::arg("seed") = py::none());

    m.def(
        "haversine_km",
        [](double lon1, double lat1, double lon2, double lat2) {
            return haversine_km(GeoPoint::make(lon1, lat1), GeoPoint::make(lon2, lat2));
        },
        py::arg("lon1"), py::arg("lat1"), py::arg("lon2"), py::arg("lat2"));

    m.def(
        "bit_distance",
        [](const std::string& a, const std::string& b, const std::string& metric) {
            return bit_distance(parse_mask(a), parse_mask(b), parse_metric(metric));
        },
        py::arg("a"), py::arg("b"), py::arg("metric") = "euclidean");

    m.def(
        "upgma",
        [](std::size_t n, std::vector<double> condensed) {
            const Dendrogram t = upgma(DistanceMatrix::from_condensed(n, std::move(condensed)));
            std::vector<std::tuple<std::size_t, std::size_t, double, std::size_t>> out;
            for (const auto& mg : t.merges) out.emplace_back(mg.left, mg.right, mg.height, mg.size);
            return out;
        },
        py::arg("n"), py::arg("condensed"));

    m.def(
        "cluster",
        [](const std::vector<std::string>& masks, std::size_t k, const std::string& metric) {
            return cut(upgma(pairwise_distance(occupancies(masks), parse_metric(metric))), k);
        },
        py::arg("masks"), py::arg("k"), py::arg("metric") = "euclidean");

    m.def(
        "detect_spikes",
        [](const std::vector<double>& series, double k) {
            std::vector<std::tuple<std::size_t, std::optional<double>, double>> out;
            for (const auto& s : detect_spikes(series, k)) out.emplace_back(s.index, s.score, s.gradient);
            return out;
        },
        py::arg("series"), py::arg("k") = 4.0);

    m.def(
        "select_periods", [](const Profile& p, double theta) { return select_periods(p, theta); }, py::arg("profile"),
        py::arg("theta") = kDefaultPeriodThreshold);

    m.def(
        "lagged_correlation",
        [](const Profile& profile, const Profile& target, int lag_min, int lag_max) {
            const auto r = lagged_correlation(profile, target, {lag_min, lag_max});
            std::vector<std::pair<int, double>> by_lag;
            for (const auto& l : r.by_lag) by_lag.emplace_back(l.lag, l.r);
            return py::make_tuple(r.best_lag, r.r, by_lag);
        },
        py::arg("profile"), py::arg("target"), py::arg("lag_min") = -3, py::arg("lag_max") = 3);

    m.def("permutation_p_value", &permutation_p_value, py::arg("profile"), py::arg("target"), py::arg("lag") = 0,
          py::arg("shuffles") = 1000, py::arg("seed") = 0);

    m.def(
        "fit_markov", [](const std::vector<std::vector<std::optional<RegionId>>>& rows) {
            return fit_stationary(to_hauv(rows)).to_json().dump();
        },
        py::arg("vectors"));

    m.def(
        "nonstationarity_report",
        [](const std::vector<std::vector<std::optional<RegionId>>>& rows, std::uint64_t seed, int simulations) {
            const auto v = to_hauv(rows);
            return nonstationarity_report(v, fit_stationary(v), seed, simulations).to_json().dump();
        },
        py::arg("vectors"), py::arg("seed") = 0, py::arg("simulations") = kDefaultSimulations);
}
