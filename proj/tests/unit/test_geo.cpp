#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mobprof/error.hpp"
#include "mobprof/geo.hpp"
#include "mobprof/rng.hpp"
#include "mobprof/synth.hpp"
#include "oracles.hpp"

using namespace mobprof;

TEST_CASE("haversine basics") {
    const GeoPoint o = GeoPoint::make(0, 0);
    CHECK(haversine_km(o, o) == 0.0);
    // On the equator the great-circle distance is R times the longitude difference in radians.
    const double expected = 6371.0 * std::numbers::pi / 180.0;
    CHECK(haversine_km(o, GeoPoint::make(1, 0)) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(haversine_km(o, GeoPoint::make(1, 0)) == doctest::Approx(111.19).epsilon(0.0001));

    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        auto p = [&] { return GeoPoint::make(rng.uniform() * 360 - 180, rng.uniform() * 180 - 90); };
        const GeoPoint a = p(), b = p(), c = p();
        CHECK(haversine_km(a, b) == haversine_km(b, a));
        CHECK(haversine_km(a, c) <= haversine_km(a, b) + haversine_km(b, c) + 1e-9);
    }
}

TEST_CASE("GeoPoint validation") {
    CHECK_THROWS_AS(GeoPoint::make(181, 0), InputError);
    CHECK_THROWS_AS(GeoPoint::make(0, -91), InputError);
    CHECK_THROWS_AS(GeoPoint::make(std::nan(""), 0), InputError);
}

TEST_CASE("geography construction rejects bad input") {
    auto zones = fixture::zones(2);
    SUBCASE("unknown zone") {
        CHECK_THROWS_AS(Geography(zones, {fixture::square(1, 0, 0, 1, 3)}), InputError);
    }
    SUBCASE("duplicate id") {
        CHECK_THROWS_AS(Geography(zones, {fixture::square(1, 0, 0, 1, 1), fixture::square(1, 1, 0, 1, 2)}), InputError);
    }
    SUBCASE("self-intersecting ring") {
        Arrondissement a = fixture::square(1, 0, 0, 1, 1);
        a.boundary[0] = {GeoPoint::make(0, 0), GeoPoint::make(1, 1), GeoPoint::make(1, 0), GeoPoint::make(0, 1),
                         GeoPoint::make(0, 0)};
        CHECK_THROWS_AS(Geography(zones, {a}), InputError);
    }
    SUBCASE("sparse zone ids") {
        CHECK_THROWS_AS(Geography({{1, "a", ""}, {3, "b", ""}}, {fixture::square(1, 0, 0, 1, 1)}), InputError);
    }
}

TEST_CASE("locate_arrondissement") {
    const Geography geo = fixture::strip({1, 1, 2}, 2);
    for (const auto& a : geo.arrondissements()) {
        const Location loc = locate_arrondissement(a.centroid, geo);
        CHECK(loc.id == a.id);
        CHECK_FALSE(loc.fallback);
    }
    const Location outside = locate_arrondissement(GeoPoint::make(2.6, 5.0), geo);
    CHECK(outside.id == 3);
    CHECK(outside.fallback);
    // Shared edge between 1 and 2 resolves to the lower id.
    CHECK(locate_arrondissement(GeoPoint::make(1.0, 0.5), geo).id == 1);
    CHECK_THROWS_AS(locate_arrondissement(GeoPoint::make(0, 0), Geography{}), InputError);
}

TEST_CASE("polygon with a hole uses the even-odd rule") {
    Arrondissement a = fixture::square(1, 0, 0, 4, 1);
    a.centroid = GeoPoint::make(0.5, 0.5);
    a.boundary.push_back({GeoPoint::make(1, 1), GeoPoint::make(3, 1), GeoPoint::make(3, 3), GeoPoint::make(1, 3),
                          GeoPoint::make(1, 1)});
    CHECK(a.contains(GeoPoint::make(0.5, 0.5)));
    CHECK_FALSE(a.contains(GeoPoint::make(2, 2)));
}

TEST_CASE("arrondissement_to_lz") {
    const Geography geo = fixture::strip({2, 1, 2}, 2);
    CHECK(arrondissement_to_lz(1, geo) == 2);
    CHECK(arrondissement_to_lz(2, geo) == 1);
    CHECK_THROWS_AS(arrondissement_to_lz(9, geo), InputError);
}

TEST_CASE("synthetic world round trip") {
    WorldSpec spec;
    spec.n_arr = 12;
    spec.n_zones = 3;
    spec.antennas_per_arr = 3;
    const World w = generate_world(spec, 5);
    REQUIRE(w.rows * w.cols == 12);
    for (const auto& ant : w.geography.antennas()) {
        const RegionId generated = std::stoi(ant.id.substr(1, 3));
        const Location loc = locate_arrondissement(ant.location, w.geography);
        CHECK(loc.id == generated);
        CHECK_FALSE(loc.fallback);
    }
    // Serpentine order: position p along the walk belongs to zone p / 4 + 1.
    for (int pos = 0; pos < 12; ++pos) {
        const int r = pos / w.cols;
        const int c = r % 2 == 0 ? pos % w.cols : w.cols - 1 - pos % w.cols;
        CHECK(arrondissement_to_lz(r * w.cols + c + 1, w.geography) == pos / 4 + 1);
    }
}

namespace {

std::vector<RainGridReading> field(const std::vector<std::pair<GeoPoint, double>>& cells, int days = 1) {
    std::vector<RainGridReading> out;
    const auto first = *parse_iso_date("2013-01-01");
    for (int d = 0; d < days; ++d)
        for (const auto& [c, v] : cells) out.push_back({first + std::chrono::days(d), c, v});
    return out;
}

}  // namespace

TEST_CASE("aggregate_rain: constant field and coextensive cell") {
    std::vector<Arrondissement> arrs{fixture::square(1, 0, 0, 0.25, 1), fixture::square(2, 0.25, 0, 0.5, 1)};
    arrs[1].centroid = GeoPoint::make(0.5, 0.25);
    const Geography geo(fixture::zones(1), arrs);
    std::vector<std::pair<GeoPoint, double>> cells;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) cells.push_back({GeoPoint::make(0.125 + 0.25 * i, 0.125 + 0.25 * j), 7.5});
    for (int s : {1, 3, 4}) {
        RainGridSpec grid{0.25, s};
        for (const auto& series : aggregate_rain(field(cells), geo, RegionKind::arrondissement, grid))
            CHECK(*series.points[0].value == doctest::Approx(7.5));
    }
    cells[0].second = 2.0;  // the cell exactly covering arrondissement 1
    const auto series = aggregate_rain(field(cells), geo, RegionKind::arrondissement, {0.25, 4});
    CHECK(*series[0].points[0].value == doctest::Approx(2.0));
}

TEST_CASE("aggregate_rain: region straddling two cells against the clipping oracle") {
    // Diamond centred on the shared edge x = 0 of cells [-0.25, 0] and [0, 0.25].
    const std::vector<oracle::Pt> diamond{{-0.12, 0.125}, {0.0, 0.01}, {0.12, 0.125}, {0.0, 0.24}};
    Arrondissement a;
    a.id = 1;
    a.centroid = GeoPoint::make(0, 0.125);
    a.lz_id = 1;
    Ring ring;
    for (auto p : diamond) ring.push_back(GeoPoint::make(p.x, p.y));
    ring.push_back(ring.front());
    a.boundary = {ring};
    const Geography geo(fixture::zones(1), {a});

    const double left = oracle::polygon_area(oracle::clip_to_box(diamond, -0.25, 0, 0, 0.25));
    const double right = oracle::polygon_area(oracle::clip_to_box(diamond, 0, 0, 0.25, 0.25));
    const double exact = (2.0 * left + 4.0 * right) / (left + right);
    CHECK(exact == doctest::Approx(3.0));

    const auto readings = field({{GeoPoint::make(-0.125, 0.125), 2.0}, {GeoPoint::make(0.125, 0.125), 4.0}});
    const auto s8 = aggregate_rain(readings, geo, RegionKind::arrondissement, {0.25, 8});
    CHECK(std::abs(*s8[0].points[0].value - exact) <= 0.1);

    // Asymmetric variant: shift the diamond right so the split is no longer even.
    std::vector<oracle::Pt> shifted = diamond;
    for (auto& p : shifted) p.x += 0.05;
    Ring ring2;
    for (auto p : shifted) ring2.push_back(GeoPoint::make(p.x, p.y));
    ring2.push_back(ring2.front());
    a.boundary = {ring2};
    a.centroid = GeoPoint::make(0.05, 0.125);
    const Geography geo2(fixture::zones(1), {a});
    const double l2 = oracle::polygon_area(oracle::clip_to_box(shifted, -0.25, 0, 0, 0.25));
    const double r2 = oracle::polygon_area(oracle::clip_to_box(shifted, 0, 0, 0.25, 0.25));
    const double exact2 = (2.0 * l2 + 4.0 * r2) / (l2 + r2);
    double previous_error = 1e9;
    for (int s : {8, 32, 128}) {
        const double err =
            std::abs(*aggregate_rain(readings, geo2, RegionKind::arrondissement, {0.25, s})[0].points[0].value - exact2);
        CHECK(err <= 0.1);
        if (s > 8) CHECK(err <= previous_error + 1e-12);
        previous_error = err;
    }
}

TEST_CASE("cell weights sum to one when regions tile the cell") {
    const Geography geo = [] {
        std::vector<Arrondissement> arrs;
        for (int i = 0; i < 4; ++i) arrs.push_back(fixture::square(i + 1, 0.125 * (i % 2), 0.125 * (i / 2), 0.125, 1));
        return Geography(fixture::zones(1), arrs);
    }();
    for (int s : {1, 2, 4, 7}) {
        double total = 0;
        for (const auto& w : cell_weights(GeoPoint::make(0.125, 0.125), geo, RegionKind::arrondissement, {0.25, s}))
            total += w.weight;
        CHECK(total == doctest::Approx(1.0));
    }
    double partial = 0;
    for (const auto& w : cell_weights(GeoPoint::make(0.375, 0.125), geo, RegionKind::arrondissement, {0.25, 4}))
        partial += w.weight;
    CHECK(partial <= 1.0);
}

TEST_CASE("aggregate_rain input errors") {
    const Geography geo = fixture::strip({1}, 1);
    CHECK_THROWS_AS(aggregate_rain({}, geo, RegionKind::arrondissement), InputError);
    auto off_grid = field({{GeoPoint::make(0.1, 0.1), 1.0}});
    CHECK_THROWS_AS(aggregate_rain(off_grid, geo, RegionKind::arrondissement), InputError);
    auto gap = field({{GeoPoint::make(0.125, 0.125), 1.0}}, 3);
    gap.erase(gap.begin() + 1);
    CHECK_THROWS_AS(aggregate_rain(gap, geo, RegionKind::arrondissement), InputError);
}

TEST_CASE("regions without weight report missing values") {
    const Geography geo = fixture::strip({1, 1}, 1);
    const auto series = aggregate_rain(field({{GeoPoint::make(0.125, 0.125), 3.0}}), geo, RegionKind::arrondissement);
    REQUIRE(series.size() == 2);
    CHECK(series[0].points[0].value.has_value());
    CHECK_FALSE(series[1].points[0].value.has_value());
}

TEST_CASE("monthly_rain") {
    RegionSeries daily;
    daily.resolution = TimeResolution::day;
    const auto first = *parse_iso_date("2013-04-01");
    for (int d = 0; d < 30; ++d)
        daily.points.push_back({static_cast<std::int32_t>((first + std::chrono::days(d)).time_since_epoch().count()), 1.0, 0});
    for (int d = 30; d < 61; ++d)
        daily.points.push_back({static_cast<std::int32_t>((first + std::chrono::days(d)).time_since_epoch().count()),
                                std::nullopt, 0});
    const RegionSeries monthly = monthly_rain(daily);
    REQUIRE(monthly.points.size() == 2);
    CHECK(*monthly.points[0].value == doctest::Approx(30.0));
    CHECK_FALSE(monthly.points[1].value.has_value());
    CHECK(monthly.points[1].missing_days == 31);
    const auto months = monthly.months_of(2013);
    CHECK(months[3].has_value());
    CHECK_FALSE(months[0].has_value());
    CHECK_THROWS_AS(monthly_rain(RegionSeries{}), InputError);
}

TEST_CASE("synthetic wet season aggregates to zero outside wet months") {
    WorldSpec spec;
    spec.n_arr = 4;
    spec.n_zones = 2;
    const World w = generate_world(spec, 3);
    RainSpec rain;
    for (int m = 6; m <= 10; ++m) rain.wet.set(static_cast<std::size_t>(m - 1));
    rain.peak_mm = 8;
    const auto readings = generate_rain(w, rain, 2013, 9);
    for (const auto& series : aggregate_rain(readings, w.geography, RegionKind::livelihood_zone)) {
        const auto months = monthly_rain(series).months_of(2013);
        for (int m = 1; m <= 12; ++m) {
            REQUIRE(months[m - 1].has_value());
            if (m >= 6 && m <= 10)
                CHECK(*months[m - 1] > 0);
            else
                CHECK(*months[m - 1] == 0.0);
        }
    }
}
