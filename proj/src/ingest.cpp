#include "mobprof/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "mobprof/error.hpp"

namespace mobprof {

const char* to_string(EventKind k) { return k == EventKind::call ? "call" : "text"; }

std::uint32_t EventStore::Builder::intern(std::unordered_map<std::string, std::uint32_t>& table,
                                          std::vector<std::string>& names, std::string_view id) {
    auto [it, inserted] = table.try_emplace(std::string(id), static_cast<std::uint32_t>(names.size()));
    if (inserted) names.emplace_back(id);
    return it->second;
}

void EventStore::Builder::add_antenna(std::string_view antenna_id) {
    intern(antenna_table_, antennas_, antenna_id);
}

void EventStore::Builder::add_user(std::string_view user_id) { intern(user_table_, users_, user_id); }

void EventStore::Builder::add(std::string_view user_id, Seconds timestamp,
                              std::string_view antenna_id, EventKind kind) {
    rows_.push_back({intern(user_table_, users_, user_id), intern(antenna_table_, antennas_, antenna_id),
                     timestamp, kind});
}

namespace {

// Returns names sorted and a map old index -> new index.
std::vector<std::uint32_t> sort_names(std::vector<std::string>& names) {
    std::vector<std::uint32_t> order(names.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return names[a] < names[b]; });
    std::vector<std::uint32_t> remap(names.size());
    std::vector<std::string> sorted;
    sorted.reserve(names.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) {
        remap[order[i]] = i;
        sorted.push_back(std::move(names[order[i]]));
    }
    names = std::move(sorted);
    return remap;
}

}  // namespace

EventStore EventStore::Builder::build() && {
    EventStore store;
    auto user_map = sort_names(users_);
    auto antenna_map = sort_names(antennas_);
    for (Row& r : rows_) {
        r.user = user_map[r.user];
        r.antenna = antenna_map[r.antenna];
    }
    store.users_ = std::move(users_);
    store.antennas_ = std::move(antennas_);
    store.rows_ = std::move(rows_);
    store.normalize();
    return store;
}

void EventStore::normalize() {
    std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
        if (a.user != b.user) return a.user < b.user;
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        if (a.antenna != b.antenna) return a.antenna < b.antenna;
        return a.kind < b.kind;
    });
    offsets_.assign(users_.size() + 1, 0);
    for (const Row& r : rows_) ++offsets_[r.user + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

std::span<const EventStore::Row> EventStore::user_rows(std::size_t user) const {
    return std::span<const Row>(rows_).subspan(offsets_[user], offsets_[user + 1] - offsets_[user]);
}

CdrEvent EventStore::event(std::size_t row) const {
    const Row& r = rows_.at(row);
    return {users_[r.user], r.timestamp, antennas_[r.antenna], r.kind};
}

void EventStore::write_csv(std::ostream& out) const {
    out << "user_id,timestamp,antenna_id,kind\n";
    for (const Row& r : rows_)
        out << users_[r.user] << ',' << format_timestamp(r.timestamp) << ',' << antennas_[r.antenna]
            << ',' << to_string(r.kind) << '\n';
}

void EventStore::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    write_csv(out);
}

Json IngestReport::to_json(bool include_rows) const {
    Json j;
    j["total_rows"] = total_rows;
    j["accepted"] = accepted;
    j["rejected"] = rejected();
    j["rejected_by_reason"] = rejected_by_reason;
    j["distinct_users"] = distinct_users;
    Json cov = Json::object();
    for (const auto& [user, c] : coverage)
        cov[user] = {{"first_day", c.first_day}, {"last_day", c.last_day}, {"active_days", c.active_days}};
    j["coverage"] = std::move(cov);
    if (include_rows) {
        Json rows = Json::array();
        for (const auto& r : rejections) rows.push_back({{"line", r.line}, {"reason", r.reason}});
        j["rejections"] = std::move(rows);
    }
    return j;
}

IngestResult parse_events(std::istream& in, const IngestConfig& config, const Geography* geography) {
    const AnalysisYear year(config.analysis_year);
    IngestReport report;
    EventStore::Builder builder;
    std::string line;
    std::size_t line_no = 0;

    if (std::getline(in, line)) {
        ++line_no;
        auto header = split_fields(line);
        if (header.size() != 4 || header[0] != "user_id" || header[1] != "timestamp" ||
            header[2] != "antenna_id" || header[3] != "kind")
            throw InputError("CDR file: expected header user_id,timestamp,antenna_id,kind");
    }

    auto reject = [&](const char* reason) {
        report.rejections.push_back({line_no, reason});
        ++report.rejected_by_reason[reason];
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        ++report.total_rows;
        auto f = split_fields(line);
        if (f.size() != 4) {
            reject("bad_column_count");
            continue;
        }
        if (f[0].empty()) {
            reject("empty_user");
            continue;
        }
        auto ts = parse_iso_timestamp(f[1]);
        if (!ts) {
            reject("bad_timestamp");
            continue;
        }
        if (!year.contains(*ts)) {
            reject("out_of_year");
            continue;
        }
        if (f[2].empty()) {
            reject("empty_antenna");
            continue;
        }
        EventKind kind;
        if (f[3] == "call")
            kind = EventKind::call;
        else if (f[3] == "text")
            kind = EventKind::text;
        else {
            reject("bad_kind");
            continue;
        }
        if (geography && !geography->find_antenna(f[2])) {
            reject("unknown_antenna");
            continue;
        }
        builder.add(f[0], *ts, f[2], kind);
        ++report.accepted;
    }

    if (report.total_rows > 0 &&
        static_cast<double>(report.rejected()) > config.max_reject_fraction * report.total_rows)
        throw InputError("CDR file: " + std::to_string(report.rejected()) + " of " +
                         std::to_string(report.total_rows) + " rows rejected, above the " +
                         std::to_string(config.max_reject_fraction * 100.0) + "% limit");

    EventStore store = std::move(builder).build();
    report.distinct_users = store.users().size();
    for (std::size_t u = 0; u < store.users().size(); ++u) {
        auto rows = store.user_rows(u);
        DateCoverage c;
        c.first_day = format_timestamp(rows.front().timestamp).substr(0, 10);
        c.last_day = format_timestamp(rows.back().timestamp).substr(0, 10);
        int last = -1;
        for (const auto& r : rows) {
            int d = year.day_of(r.timestamp);
            if (d != last) ++c.active_days;
            last = d;
        }
        report.coverage.emplace(store.users()[u], std::move(c));
    }
    return {std::move(store), std::move(report)};
}

IngestResult parse_events(const std::filesystem::path& path, const IngestConfig& config,
                          const Geography* geography) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_events(in, config, geography);
}

std::vector<CalendarInterval> parse_calendar(const Json& doc, const Geography& geography) {
    if (!doc.is_array()) throw InputError("calendar: expected a JSON array");
    std::vector<CalendarInterval> out;
    for (const Json& j : doc) {
        try {
            auto zone = j.at("zone_id").get<ZoneId>();
            if (!geography.has_zone(zone))
                throw InputError("calendar: unknown zone " + std::to_string(zone));
            auto category = parse_category(j.at("category").get<std::string>());
            if (!category)
                throw InputError("calendar: unknown category " + j.at("category").get<std::string>());
            out.push_back(make_interval(zone, j.at("activity").get<std::string>(), *category,
                                        j.at("start_month").get<int>(), j.at("end_month").get<int>()));
        } catch (const Json::exception& e) {
            throw InputError(std::string("calendar: ") + e.what());
        }
    }
    return out;
}

std::vector<CalendarInterval> parse_calendar(const std::filesystem::path& path,
                                             const Geography& geography) {
    return parse_calendar(read_json(path), geography);
}

}  // namespace mobprof
