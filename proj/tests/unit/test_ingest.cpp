#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "mobprof/error.hpp"
#include "mobprof/ingest.hpp"
#include "mobprof/rng.hpp"
#include "mobprof/synth.hpp"

using namespace mobprof;

namespace {

IngestResult parse(const std::string& text, const Geography* geo = nullptr, double max_reject = 0.5) {
    std::istringstream in(text);
    IngestConfig cfg;
    cfg.max_reject_fraction = max_reject;
    return parse_events(in, cfg, geo);
}

std::string dump(const EventStore& s) {
    std::ostringstream out;
    s.write_csv(out);
    return out.str();
}

}  // namespace

TEST_CASE("empty input") {
    auto r = parse("");
    CHECK(r.store.size() == 0);
    CHECK(r.report.total_rows == 0);
    auto h = parse("user_id,timestamp,antenna_id,kind\n");
    CHECK(h.report.total_rows == 0);
}

TEST_CASE("header is required") {
    CHECK_THROWS_AS(parse("user,time,antenna,kind\nu1,2013-01-01T00:00:00,a,call\n"), InputError);
}

TEST_CASE("rejection reasons") {
    const std::string text =
        "user_id,timestamp,antenna_id,kind\n"
        "u1,2013-01-01T10:00:00,T001-01,call\n"
        "u1,not-a-time,T001-01,call\n"
        "u1,2014-01-01T10:00:00,T001-01,call\n"
        ",2013-01-01T10:00:00,T001-01,call\n"
        "u1,2013-01-01T10:00:00,,call\n"
        "u1,2013-01-01T10:00:00,T001-01,fax\n"
        "u1,2013-01-01T10:00:00\n"
        "u2,2013-01-02T10:00:00,T001-01,text\n";
    auto r = parse(text, nullptr, 1.0);
    CHECK(r.report.total_rows == 8);
    CHECK(r.report.accepted == 2);
    CHECK(r.report.rejected_by_reason.at("bad_timestamp") == 1);
    CHECK(r.report.rejected_by_reason.at("out_of_year") == 1);
    CHECK(r.report.rejected_by_reason.at("empty_user") == 1);
    CHECK(r.report.rejected_by_reason.at("empty_antenna") == 1);
    CHECK(r.report.rejected_by_reason.at("bad_kind") == 1);
    CHECK(r.report.rejected_by_reason.at("bad_column_count") == 1);
    // Each rejected row appears exactly once.
    std::vector<std::size_t> lines;
    for (const auto& rej : r.report.rejections) lines.push_back(rej.line);
    std::sort(lines.begin(), lines.end());
    CHECK(std::adjacent_find(lines.begin(), lines.end()) == lines.end());
    CHECK(lines.size() == r.report.rejected());
    CHECK(r.report.distinct_users == 2);
}

TEST_CASE("too many rejections abort") {
    const std::string text = "user_id,timestamp,antenna_id,kind\nu1,bad,a,call\nu1,2013-01-01T00:00:00,a,call\n";
    CHECK_THROWS_AS(parse(text, nullptr, 0.10), InputError);
}

TEST_CASE("unknown antennas are rejected when a geography is given") {
    Geography geo = fixture::strip({1}, 1);
    geo.set_antennas({{"A", GeoPoint::make(0.5, 0.5), 0}});
    auto r = parse("user_id,timestamp,antenna_id,kind\nu1,2013-01-01T00:00:00,A,call\nu1,2013-01-01T00:00:01,B,call\n",
                   &geo, 1.0);
    CHECK(r.report.accepted == 1);
    CHECK(r.report.rejected_by_reason.at("unknown_antenna") == 1);
}

TEST_CASE("parsing is order-insensitive and idempotent") {
    WorldSpec ws;
    ws.n_arr = 4;
    ws.n_zones = 2;
    const World w = generate_world(ws, 1);
    PopulationSpec ps;
    ps.n_users = 40;
    ps.archetypes = {ArchetypeSpec{}};
    ps.archetypes[0].weight = 1.0;
    Population pop = generate_population(w, ps, 2);
    const std::string csv = dump(pop.events);

    auto first = parse(csv, &w.geography);
    CHECK(first.report.rejected() == 0);
    CHECK(first.report.distinct_users == 40);
    CHECK(dump(first.store) == csv);

    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    Rng rng(3);
    rng.shuffle(std::span<std::string>(rows));
    std::string shuffled = header + "\n";
    for (const auto& r : rows) shuffled += r + "\n";
    CHECK(dump(parse(shuffled, &w.geography).store) == csv);
}

TEST_CASE("calendar parsing") {
    std::vector<Arrondissement> arrs;
    for (int z = 1; z <= 13; ++z) arrs.push_back(fixture::square(z, z, 0, 1, z));
    const Geography geo(fixture::zones(13), arrs);
    const Json doc = Json::parse(R"([
        {"zone_id": 8, "activity": "planting", "category": "planting", "start_month": 6, "end_month": 8},
        {"zone_id": 2, "activity": "milk sales", "category": "sales", "start_month": 11, "end_month": 2}
    ])");
    const auto cal = parse_calendar(doc, geo);
    REQUIRE(cal.size() == 2);
    CHECK(mask_string(cal[0].months) == "000001110000");
    CHECK(mask_string(cal[1].months) == "110000000011");

    CHECK_THROWS_AS(parse_calendar(Json::parse(R"([{"zone_id": 99, "activity": "x", "category": "sales",
                                                    "start_month": 1, "end_month": 2}])"),
                                   geo),
                    InputError);
    CHECK_THROWS_AS(parse_calendar(Json::parse(R"([{"zone_id": 1, "activity": "x", "category": "sales",
                                                    "start_month": 0, "end_month": 2}])"),
                                   geo),
                    InputError);
    CHECK_THROWS_AS(parse_calendar(Json::parse(R"([{"zone_id": 1, "activity": "x", "category": "fishing",
                                                    "start_month": 1, "end_month": 2}])"),
                                   geo),
                    InputError);
}
