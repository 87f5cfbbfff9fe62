#include <cmath>
#include <map>

#include "doctest.h"
#include "mobprof/error.hpp"
#include "mobprof/markov.hpp"
#include "mobprof/rng.hpp"

using namespace mobprof;

namespace {

Hauv seq(std::initializer_list<RegionId> months, std::string id = "u") {
    Hauv h{std::move(id), {}};
    int m = 0;
    for (auto v : months) h.months[m++] = v;
    return h;
}

Hauv constant(RegionId r, std::string id = "u") {
    Hauv h{std::move(id), {}};
    h.months.fill(r);
    return h;
}

TransitionModel three_state() {
    TransitionModel t;
    t.states = {1, 2, 3};
    t.matrix = {0.7, 0.2, 0.1, 0.3, 0.5, 0.2, 0.0, 0.4, 0.6};
    t.initial = {0.5, 0.3, 0.2};
    return t;
}

}  // namespace

TEST_CASE("fit_stationary hand counts") {
    const std::vector<Hauv> v{constant(1, "a"), seq({1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2}, "b"), constant(2, "c")};
    const auto t = fit_stationary(v);
    REQUIRE(t.states == std::vector<RegionId>{1, 2});
    CHECK(t.p(0, 1) == doctest::Approx(6.0 / 17.0));
    CHECK(t.p(0, 0) == doctest::Approx(11.0 / 17.0));
    CHECK(t.p(1, 0) == doctest::Approx(5.0 / 16.0));
    CHECK(t.initial[0] == doctest::Approx(2.0 / 3.0));
    CHECK_NOTHROW(t.validate());
}

TEST_CASE("fit_stationary special cases") {
    const std::vector<Hauv> same{constant(4, "a"), constant(4, "b")};
    const auto id = fit_stationary(same);
    CHECK(id.size() == 1);
    CHECK(id.p(0, 0) == 1.0);

    const std::vector<Hauv> alt{seq({1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2})};
    const auto a = fit_stationary(alt);
    CHECK(a.p(0, 1) == 1.0);
    CHECK(a.p(1, 0) == 1.0);
    const auto sim = simulate(a, 3, 1);
    for (const auto& h : sim)
        for (int m = 1; m < kMonths; ++m) CHECK(*h.months[m] != *h.months[m - 1]);

    // Region 3 only appears as a last month: its row becomes a self-loop.
    Hauv gap{"g", {}};
    gap.months[10] = 1;
    gap.months[11] = 3;
    const std::vector<Hauv> end{gap};
    const auto e = fit_stationary(end);
    CHECK(e.p(*e.index_of(3), *e.index_of(3)) == 1.0);
    CHECK(e.initial[*e.index_of(1)] == doctest::Approx(0.5));

    Hauv lonely{"l", {}};
    lonely.months[0] = 1;
    lonely.months[5] = 2;
    const std::vector<Hauv> none{lonely};
    CHECK_THROWS_AS(fit_stationary(none), InputError);
}

TEST_CASE("simulate") {
    const auto t = three_state();
    CHECK(simulate(t, 50, 9)[17].months == simulate(t, 50, 9)[17].months);
    CHECK(simulate(t, 1, 9)[0].user_id == "sim000001");
    const auto big = simulate(t, 100000, 10);
    const auto refit = fit_stationary(big);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(refit.initial[i] - t.initial[i]) <= 0.01);
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(refit.p(i, j) - t.p(i, j)) <= 0.01);
    }
}

TEST_CASE("month_agreement") {
    SUBCASE("same month") {
        const std::vector<Hauv> v{constant(1, "a"), constant(2, "b"), constant(3, "c")};
        const auto a = month_agreement(v, 4, 4);
        CHECK(*a.agreement == 1.0);
        CHECK(*a.cramers_v == doctest::Approx(1.0));
    }
    SUBCASE("hand-computed 2x2") {
        std::vector<Hauv> v;
        const std::vector<std::pair<RegionId, RegionId>> cells{{1, 1}, {1, 1}, {1, 1}, {1, 2},
                                                               {2, 1}, {2, 2}, {2, 2}, {2, 2}};
        for (auto [x, y] : cells) {
            Hauv h{"u", {}};
            h.months[2] = x;
            h.months[7] = y;
            v.push_back(h);
        }
        const auto a = month_agreement(v, 3, 8);
        CHECK(a.n == 8);
        CHECK(*a.agreement == doctest::Approx(0.75));
        CHECK(*a.cramers_v == doctest::Approx(0.5));
        const auto b = month_agreement(v, 8, 3);
        CHECK(*b.agreement == *a.agreement);
        CHECK(*b.cramers_v == doctest::Approx(*a.cramers_v));
    }
    SUBCASE("independent uniform") {
        Rng rng(12);
        std::vector<Hauv> v;
        for (int i = 0; i < 40000; ++i) {
            Hauv h{"u", {}};
            for (auto& s : h.months) s = static_cast<RegionId>(rng.below(4));
            v.push_back(h);
        }
        const auto a = month_agreement(v, 1, 2);
        CHECK(std::abs(*a.agreement - 0.25) <= 0.01);
        CHECK(*a.cramers_v < 0.03);
    }
    SUBCASE("undetermined") {
        Hauv h{"u", {}};
        h.months[0] = 1;
        const std::vector<Hauv> v{h};
        const auto a = month_agreement(v, 1, 2);
        CHECK(a.n == 0);
        CHECK_FALSE(a.agreement.has_value());
        CHECK_FALSE(month_agreement(v, 1, 1).cramers_v.has_value());
        CHECK_THROWS_AS(month_agreement(v, 0, 1), InputError);
    }
}

TEST_CASE("nonstationarity report") {
    const auto t = three_state();
    const auto observed = simulate(t, 3000, 21);
    const auto rep = nonstationarity_report(observed, t, 5);
    CHECK(rep.pairs.size() == 66);
    CHECK(rep.simulations == kDefaultSimulations);
    CHECK(rep.flagged_count() <= 10);
    const auto& p = rep.pair(9, 2);
    CHECK(p.m1 == 2);
    CHECK(p.band_lo <= p.sim_mean);
    CHECK(p.band_hi >= p.sim_mean);
    const Json j = rep.to_json();
    CHECK(j.at("observed_agreement").size() == 12);
    CHECK(j.at("observed_agreement")[3][3] == 1.0);
    CHECK(nonstationarity_report(observed, t, 5).to_json() == j);

    // A population that moves in July and returns in September departs from any
    // stationary chain on the affected pairs.
    std::vector<Hauv> shifted;
    for (int i = 0; i < 3000; ++i) {
        Hauv h = constant(1 + i % 2, "s" + std::to_string(i));
        if (i % 3 == 0)
            for (int m = 6; m < 8; ++m) h.months[m] = 3;
        shifted.push_back(h);
    }
    const auto fitted = fit_stationary(shifted);
    const auto rep2 = nonstationarity_report(shifted, fitted, 5);
    CHECK(rep2.pair(1, 2).flagged);
    CHECK(rep2.pair(1, 7).flagged);
}
