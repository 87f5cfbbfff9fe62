#include <cmath>

#include "doctest.h"
#include "mobprof/detect.hpp"
#include "mobprof/error.hpp"
#include "mobprof/rng.hpp"

using namespace mobprof;

namespace {

HomeTable table(const std::vector<std::vector<std::optional<RegionId>>>& rows) {
    std::vector<std::string> users;
    for (std::size_t i = 0; i < rows.size(); ++i) users.push_back("u" + std::to_string(i));
    HomeTable t(users, 365);
    for (std::size_t u = 0; u < rows.size(); ++u) {
        auto d = t.daily(u);
        for (std::size_t i = 0; i < rows[u].size(); ++i) d[i] = rows[u][i];
    }
    return t;
}

}  // namespace

TEST_CASE("daily_flows") {
    const auto t = table({{1, 1, 2, 2, std::nullopt, 3}, {4, 5, 5, 4}});
    const auto flows = daily_flows(t);
    REQUIRE(flows.size() == 364);
    CHECK(flows[0].day == 2);
    CHECK(flows[0].counts.at({4, 5}) == 1);
    CHECK(flows[0].total() == 1);
    CHECK(flows[1].counts.at({1, 2}) == 1);
    CHECK(flows[2].counts.at({5, 4}) == 1);
    CHECK(flows[3].total() == 0);  // 2 -> missing
    CHECK(flows[4].total() == 0);  // missing -> 3
    std::uint64_t total = 0;
    for (const auto& f : flows) {
        std::uint64_t in = 0, out = 0;
        for (auto [r, c] : f.inflow()) in += c;
        for (auto [r, c] : f.outflow()) out += c;
        CHECK(in == f.total());
        CHECK(out == f.total());
        total += f.total();
    }
    CHECK(total == 3);
}

TEST_CASE("detect_spikes") {
    SUBCASE("constant series") {
        const std::vector<double> x(60, 5.0);
        CHECK(detect_spikes(x, 4).empty());
    }
    SUBCASE("single spike on noise") {
        Rng rng(3);
        std::vector<double> x(100);
        for (auto& v : x) v = 50 + rng.normal(0, 2);
        x[70] = 120;
        const auto s = detect_spikes(x, 4);
        REQUIRE(s.size() == 1);
        CHECK(s[0].index == 70);
        REQUIRE(s[0].score);
        CHECK(*s[0].score > 4);
        // Scale invariance of the robust score.
        std::vector<double> y(x);
        for (auto& v : y) v = 3 * v + 11;
        const auto s2 = detect_spikes(y, 4);
        REQUIRE(s2.size() == 1);
        CHECK(*s2[0].score == doctest::Approx(*s[0].score).epsilon(1e-9));
    }
    SUBCASE("zero MAD fallback") {
        std::vector<double> x(40, 0.0);
        x[10] = 1;
        x[30] = 5;
        const auto s = detect_spikes(x, 4);
        REQUIRE(s.size() == 2);
        CHECK(s[0].index == 10);
        CHECK_FALSE(s[0].score.has_value());
        CHECK(s[1].index == 30);
    }
    SUBCASE("too short") {
        const std::vector<double> x(kMinSeriesDays - 1, 1.0);
        CHECK_THROWS_AS(detect_spikes(x, 4), InputError);
    }
}

TEST_CASE("detect_events labels days") {
    std::vector<double> x(100, 10.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += static_cast<double>(i % 3);
    x[50] = 90;
    const auto a = detect_events(x, 2, 7, Direction::inflow, 4);
    REQUIRE(a.size() == 1);
    CHECK(a[0].day == 52);
    CHECK(a[0].region == 7);
    CHECK(a[0].count == 90);
}

TEST_CASE("select_periods") {
    Profile p{};
    CHECK(select_periods(p).empty());
    p = {0, 0, 0, 0, 0, 0.5, 0.6, 0.9, 0.2, 0, 0, 0};
    CHECK(select_periods(p, 0.2) == std::vector<int>{6, 8, 9, 10});
    CHECK(select_periods(p, 0.9).empty());
    p.fill(0);
    p[0] = 1;  // December to January does not count
    CHECK(select_periods(p, 0.2) == std::vector<int>{2});
}
