#include "mobprof/homeloc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mobprof/error.hpp"
#include "mobprof/io.hpp"

namespace mobprof {

double event_weight(Seconds timestamp, const HomeParams& params) {
    if (!params.night_weighting) return 1.0;
    Seconds secs = ((timestamp % 86400) + 86400) % 86400;
    int hour = static_cast<int>(secs / 3600);
    return (hour >= 19 || hour < 7) ? 2.0 : 1.0;
}

std::optional<RegionId> daily_home(std::span<const LocatedEvent> day_events, const HomeParams& params) {
    if (day_events.empty()) return std::nullopt;
    struct Tally {
        double weight = 0;
        Seconds latest = 0;
    };
    std::map<RegionId, Tally> tally;
    for (const auto& e : day_events) {
        Tally& t = tally[e.arrondissement];
        if (t.weight == 0) t.latest = e.timestamp;
        t.weight += event_weight(e.timestamp, params);
        t.latest = std::max(t.latest, e.timestamp);
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
        // Map order is ascending id, so strict comparisons keep the lowest id on full ties.
        if (it->second.weight > best->second.weight ||
            (it->second.weight == best->second.weight && it->second.latest > best->second.latest))
            best = it;
    }
    return best->first;
}

MonthVote monthly_home(std::span<const std::optional<RegionId>> daily_homes,
                       const std::map<RegionId, double>& month_event_weight, int d_min) {
    std::map<RegionId, int> days;
    int observed = 0;
    for (const auto& d : daily_homes) {
        if (!d) continue;
        ++days[*d];
        ++observed;
    }
    if (observed == 0 || observed < d_min) return {};
    auto events_of = [&](RegionId id) {
        auto it = month_event_weight.find(id);
        return it == month_event_weight.end() ? 0.0 : it->second;
    };
    auto best = days.begin();
    for (auto it = std::next(days.begin()); it != days.end(); ++it) {
        if (it->second > best->second ||
            (it->second == best->second && events_of(it->first) > events_of(best->first)))
            best = it;
    }
    return {best->first, best->second};
}

std::optional<ZoneId> monthly_home_lz(const std::optional<RegionId>& home, const Geography& geography) {
    if (!home) return std::nullopt;
    return geography.zone_of(*home);
}

HomeTable::HomeTable(std::vector<std::string> users, int days)
    : users_(std::move(users)),
      days_(days),
      daily_(users_.size() * static_cast<std::size_t>(days)),
      monthly_(users_.size()),
      support_(users_.size(), std::array<int, kMonths>{}) {}

std::span<const std::optional<RegionId>> HomeTable::daily(std::size_t user) const {
    return std::span<const std::optional<RegionId>>(daily_).subspan(user * days_, days_);
}

std::span<std::optional<RegionId>> HomeTable::daily(std::size_t user) {
    return std::span<std::optional<RegionId>>(daily_).subspan(user * days_, days_);
}

std::vector<MonthlyHome> HomeTable::monthly_records(std::size_t user) const {
    std::vector<MonthlyHome> out;
    for (int m = 0; m < kMonths; ++m)
        out.push_back({users_[user], m + 1, monthly_[user][m], support_[user][m]});
    return out;
}

void HomeTable::write_daily_csv(const std::filesystem::path& path) const {
    std::ostringstream out;
    out << "user_id";
    for (int d = 1; d <= days_; ++d) out << ",d" << d;
    out << '\n';
    for (std::size_t u = 0; u < users_.size(); ++u) {
        out << users_[u];
        for (const auto& h : daily(u)) {
            out << ',';
            if (h) out << *h;
        }
        out << '\n';
    }
    write_file(path, out.str());
}

void HomeTable::write_monthly_csv(const std::filesystem::path& path) const {
    std::ostringstream out;
    out << "user_id";
    for (int m = 1; m <= kMonths; ++m) out << ",m" << m;
    out << '\n';
    for (std::size_t u = 0; u < users_.size(); ++u) {
        out << users_[u];
        for (const auto& h : monthly_[u]) {
            out << ',';
            if (h) out << *h;
        }
        out << '\n';
    }
    write_file(path, out.str());
}

namespace {

std::optional<RegionId> parse_slot(std::string_view f, const std::filesystem::path& path) {
    if (f.empty()) return std::nullopt;
    long long v = 0;
    if (!parse_int(f, v)) throw InputError(path.string() + ": bad region id '" + std::string(f) + "'");
    return static_cast<RegionId>(v);
}

}  // namespace

HomeTable HomeTable::read_csv(const std::filesystem::path& daily_path,
                              const std::filesystem::path& monthly_path) {
    std::ifstream din(daily_path), min(monthly_path);
    if (!din) throw InputError("cannot open " + daily_path.string());
    if (!min) throw InputError("cannot open " + monthly_path.string());
    std::string line;
    if (!std::getline(din, line)) throw InputError(daily_path.string() + ": missing header");
    const int days = static_cast<int>(split_fields(line).size()) - 1;
    std::vector<std::string> users;
    std::vector<std::vector<std::optional<RegionId>>> daily_rows;
    while (std::getline(din, line)) {
        if (line.empty()) continue;
        auto f = split_fields(line);
        if (static_cast<int>(f.size()) != days + 1) throw InputError(daily_path.string() + ": ragged row");
        users.emplace_back(f[0]);
        std::vector<std::optional<RegionId>> row;
        for (std::size_t i = 1; i < f.size(); ++i) row.push_back(parse_slot(f[i], daily_path));
        daily_rows.push_back(std::move(row));
    }
    HomeTable t(users, days);
    for (std::size_t u = 0; u < users.size(); ++u) std::copy(daily_rows[u].begin(), daily_rows[u].end(), t.daily(u).begin());

    if (!std::getline(min, line)) throw InputError(monthly_path.string() + ": missing header");
    std::size_t u = 0;
    while (std::getline(min, line)) {
        if (line.empty()) continue;
        auto f = split_fields(line);
        if (f.size() != kMonths + 1 || u >= users.size() || f[0] != users[u])
            throw InputError(monthly_path.string() + ": rows do not match the daily home cache");
        for (int m = 0; m < kMonths; ++m) t.monthly_[u][m] = parse_slot(f[m + 1], monthly_path);
        ++u;
    }
    if (u != users.size()) throw InputError(monthly_path.string() + ": missing users");
    return t;
}

std::vector<RegionId> antenna_arrondissements(const EventStore& store, const Geography& geography) {
    std::vector<RegionId> out;
    out.reserve(store.antennas().size());
    for (const auto& id : store.antennas()) {
        const Antenna* a = geography.find_antenna(id);
        if (!a) throw InputError("event references unknown antenna " + id);
        out.push_back(a->arrondissement_id);
    }
    return out;
}

HomeTable estimate_homes(const EventStore& store, const Geography& geography, const AnalysisYear& year,
                         const HomeParams& params) {
    if (params.d_min < 1) throw InputError("d_min must be >= 1");
    const auto arr_of = antenna_arrondissements(store, geography);
    HomeTable table(store.users(), year.days());
    std::vector<LocatedEvent> day_events;
    for (std::size_t u = 0; u < store.users().size(); ++u) {
        auto rows = store.user_rows(u);
        auto daily = table.daily(u);
        std::array<std::map<RegionId, double>, kMonths> month_weight;
        std::size_t i = 0;
        while (i < rows.size()) {
            if (!year.contains(rows[i].timestamp))
                throw InputError("event outside the analysis year for user " + store.users()[u]);
            const int day = year.day_of(rows[i].timestamp);
            day_events.clear();
            for (; i < rows.size() && year.day_of(rows[i].timestamp) == day; ++i) {
                RegionId a = arr_of[rows[i].antenna];
                day_events.push_back({rows[i].timestamp, a});
                month_weight[year.month_of_day(day) - 1][a] += event_weight(rows[i].timestamp, params);
            }
            daily[day - 1] = daily_home(day_events, params);
        }
        for (int m = 1; m <= kMonths; ++m) {
            const int first = year.first_day_of_month(m), last = year.last_day_of_month(m);
            auto vote = monthly_home(daily.subspan(first - 1, last - first + 1), month_weight[m - 1],
                                     params.d_min);
            table.monthly(u)[m - 1] = vote.arrondissement;
            table.support(u)[m - 1] = vote.support_days;
        }
    }
    return table;
}

}  // namespace mobprof
