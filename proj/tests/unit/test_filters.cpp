#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "mobprof/error.hpp"
#include "mobprof/filters.hpp"
#include "mobprof/homeloc.hpp"
#include "mobprof/rng.hpp"
#include "mobprof/synth.hpp"

using namespace mobprof;

namespace {

Hlzuv zones_from(const std::string& bits, ZoneId in, ZoneId out, std::string id = "u") {
    Hlzuv h{std::move(id), {}};
    for (int m = 0; m < kMonths; ++m) h.months[m] = bits[m] == '1' ? in : out;
    return h;
}

RejectReason check(const std::string& bits, const FilterParams& p = {}) {
    const Hlzuv z = zones_from(bits, 5, 2);
    return temporal_consistency(binarize(z, 5), z, p);
}

}  // namespace

TEST_CASE("is_non_mover") {
    MonthSlots<int> v{};
    CHECK_FALSE(is_non_mover(v));
    v.fill(3);
    CHECK(is_non_mover(v));
    v[4] = 4;
    CHECK_FALSE(is_non_mover(v));
    v[4] = std::nullopt;
    CHECK(is_non_mover(v));
}

TEST_CASE("is_regular_traveler") {
    // Two arrondissements whose centroids are 50 km apart along the equator.
    const double deg = 50.0 / (6371.0 * std::numbers::pi / 180.0);
    const Geography geo(fixture::zones(1), {fixture::square(1, 0, -0.5, deg, 1), fixture::square(2, deg, -0.5, deg, 1)});
    Hauv h{"u", {}};
    h.months.fill(1);
    Buv radius{"u", Indicator::radius_of_gyration_km, {}};
    radius.values.fill(5.0);
    CHECK(is_regular_traveler(h, geo, radius, 1.0) == TravelVerdict::flagged);
    h.months[6] = 2;
    CHECK(is_regular_traveler(h, geo, radius, 1.0) == TravelVerdict::not_flagged);
    radius.values.fill(60.0);
    CHECK(is_regular_traveler(h, geo, radius, 1.0) == TravelVerdict::flagged);
    radius.values.fill(std::nullopt);
    CHECK(is_regular_traveler(h, geo, radius, 1.0) == TravelVerdict::undetermined);
    radius.values[0] = 1.0;
    Hauv sparse{"u", {}};
    sparse.months[0] = 1;
    CHECK(is_regular_traveler(sparse, geo, radius, 1.0) == TravelVerdict::undetermined);
}

TEST_CASE("temporal_consistency examples") {
    CHECK(check("001110000000") == RejectReason::none);
    CHECK(check("111111111111") == RejectReason::m_max);
    FilterParams loose;
    loose.m_max = 12;
    CHECK(check("111111111111", loose) == RejectReason::m_outmin);
    CHECK(check("101010101010") == RejectReason::m_min);
    CHECK(check("000000000000") == RejectReason::m_min);
    FilterParams win;
    win.window = MonthMask{}.set(10).set(11);
    CHECK(check("001110000000", win) == RejectReason::window);
    CHECK(check("000000000011", win) == RejectReason::none);
    CHECK(longest_run(parse_mask("100000000001")) == 1);
    CHECK(longest_run(parse_mask("011101111000")) == 4);
}

TEST_CASE("temporal_consistency monotonicity") {
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        std::string bits;
        for (int m = 0; m < kMonths; ++m) bits += rng.bernoulli(0.5) ? '1' : '0';
        for (int lo = 1; lo <= 12; ++lo)
            for (int hi = lo; hi < 12; ++hi) {
                FilterParams a, b;
                a.m_min = b.m_min = lo;
                a.m_max = hi;
                b.m_max = hi + 1;
                if (check(bits, a) == RejectReason::none) CHECK(check(bits, b) == RejectReason::none);
                if (lo > 1) {
                    FilterParams c = a;
                    c.m_min = lo - 1;
                    if (check(bits, a) == RejectReason::none) CHECK(check(bits, c) == RejectReason::none);
                }
            }
    }
}

TEST_CASE("filter parameter validation") {
    FilterParams p;
    p.m_min = 0;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = {};
    p.m_max = 1;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = {};
    p.rho = 0;
    CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("apply_filters on a generated population") {
    WorldSpec ws;
    const World w = generate_world(ws, 31);
    PopulationSpec ps;
    ps.n_users = 1500;
    ArchetypeSpec sed, sea, com;
    sed.weight = 0.5;
    sea.kind = ArchetypeKind::seasonal;
    sea.weight = 0.3;
    sea.home_zone = 1;
    sea.dest_zone = 3;
    sea.out_month = 9;
    sea.return_month = 1;
    com.kind = ArchetypeKind::commuter;
    com.weight = 0.2;
    com.arr_a = 9;
    com.arr_b = 8;
    com.period = 2;
    ps.archetypes = {sed, sea, com};
    resolve_archetypes(ps.archetypes, w.geography, {});
    const Population pop = generate_population(w, ps, 32);
    const AnalysisYear year(2013);
    const HomeTable homes = estimate_homes(pop.events, w.geography, year, {});
    const FeatureVectors fv = build_vectors(homes, w.geography);
    const auto buvs = compute_all_buv(pop.events, w.geography, year);

    std::vector<FilterCandidate> cands;
    for (std::size_t i = 0; i < fv.hauv.size(); ++i) cands.push_back({&fv.hauv[i], &fv.hlzuv[i], &buvs[i][2]});

    std::size_t planted_sedentary = 0, non_movers = 0;
    for (const auto& t : pop.truth) planted_sedentary += t.archetype == 0 ? 1 : 0;
    for (const auto& h : fv.hauv) non_movers += is_non_mover(h.months) ? 1 : 0;
    const double n = static_cast<double>(pop.truth.size());
    CHECK(std::abs(static_cast<double>(non_movers) / n - static_cast<double>(planted_sedentary) / n) <= 0.02);

    const FilterOutcome base = apply_filters(cands, 3, w.geography, {});
    CHECK(base.kept.size() + base.rejected() == cands.size());
    CHECK(base.tally.at("non_mover") >= planted_sedentary * 98 / 100);

    const std::array<FilterStage, 4> reversed{FilterStage::temporal_consistency, FilterStage::regular_traveler,
                                              FilterStage::non_mover, FilterStage::missing_data};
    const FilterOutcome rev = apply_filters(cands, 3, w.geography, {}, reversed);
    CHECK(rev.kept == base.kept);
    CHECK(rev.kept.size() + rev.rejected() == cands.size());

    const FilterOutcome empty = apply_filters({}, 3, w.geography, {});
    CHECK(empty.kept.empty());
    CHECK(empty.rejected() == 0);
}
