#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "mobprof/dates.hpp"
#include "mobprof/error.hpp"
#include "mobprof/io.hpp"
#include "mobprof/rng.hpp"

using namespace mobprof;

TEST_CASE("timestamps") {
    const auto ts = parse_iso_timestamp("2013-12-21T08:30:05");
    REQUIRE(ts);
    CHECK(format_timestamp(*ts) == "2013-12-21T08:30:05");
    CHECK(parse_iso_timestamp("2013-12-21 08:30:05Z") == ts);
    CHECK_FALSE(parse_iso_timestamp("2013-02-30T00:00:00"));
    CHECK_FALSE(parse_iso_timestamp("2013-12-21T24:00:00"));
    CHECK_FALSE(parse_iso_timestamp("yesterday"));
}

TEST_CASE("analysis year") {
    const AnalysisYear y(2013);
    CHECK(y.days() == 365);
    CHECK(AnalysisYear(2012).days() == 366);
    CHECK(y.day_of(*parse_iso_timestamp("2013-12-21T12:00:00")) == 355);
    CHECK(format_date(y.date_of(355)) == "2013-12-21");
    CHECK(y.month_of_day(59) == 2);
    CHECK(y.month_of_day(60) == 3);
    CHECK(y.first_day_of_month(3) == 60);
    CHECK(y.last_day_of_month(12) == 365);
    CHECK_FALSE(y.contains(*parse_iso_timestamp("2014-01-01T00:00:00")));
}

TEST_CASE("rng determinism and ranges") {
    Rng a = Rng::substream(1, 2, 3), b = Rng::substream(1, 2, 3), c = Rng::substream(1, 2, 4);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(a.next() != c.next());
    Rng r(5);
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        CHECK_UNARY(u >= 0.0 && u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 3 * std::sqrt(1.0 / 12 / n) + 1e-3);
    double psum = 0;
    for (int i = 0; i < n; ++i) psum += r.poisson(2.0);
    CHECK(std::abs(psum / n - 2.0) < 4 * std::sqrt(2.0 / n));
    std::vector<int> v(10);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 10; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 111.19492664455873, -17.125, 1e-300}) {
        double back = 0;
        REQUIRE(parse_double(format_double(x), back));
        CHECK(back == x);
    }
    double d = 0;
    CHECK_FALSE(parse_double("nan", d));
    CHECK_FALSE(parse_double("1.5x", d));
    long long i = 0;
    CHECK(parse_int("-42", i));
    CHECK(i == -42);
}

TEST_CASE("sha256 and json io") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto dir = std::filesystem::temp_directory_path() / "mobprof_io_test";
    std::filesystem::remove_all(dir);
    write_json(dir / "x" / "a.json", Json{{"b", 1}, {"a", 2.5}});
    CHECK(read_file(dir / "x" / "a.json") == "{\n  \"a\": 2.5,\n  \"b\": 1\n}\n");
    write_file(dir / "bad.json", "{");
    CHECK_THROWS_AS(read_json(dir / "bad.json"), InputError);
    CHECK_THROWS_AS(read_file(dir / "missing"), InputError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("field splitting") {
    const auto f = split_fields("a,b,,c\r");
    REQUIRE(f.size() == 4);
    CHECK(f[2].empty());
    CHECK(f[3] == "c");
}
