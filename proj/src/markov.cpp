#include "mobprof/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "mobprof/error.hpp"
#include "mobprof/rng.hpp"

namespace mobprof {

namespace {
constexpr std::uint64_t kSimStream = 0x6d61726b6f76ULL;  // "markov"
}

std::optional<std::size_t> TransitionModel::index_of(RegionId id) const {
    auto it = std::lower_bound(states.begin(), states.end(), id);
    if (it == states.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - states.begin());
}

void TransitionModel::validate() const {
    const std::size_t n = states.size();
    if (matrix.size() != n * n || initial.size() != n) throw InvariantError("transition model: bad shape");
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(p(i, j) >= 0.0)) throw InvariantError("transition model: negative entry");
            row += p(i, j);
        }
        if (std::abs(row - 1.0) > 1e-9) throw InvariantError("transition model: row does not sum to 1");
    }
}

Json TransitionModel::to_json() const {
    Json rows = Json::array();
    for (std::size_t i = 0; i < size(); ++i)
        rows.push_back(std::vector<double>(matrix.begin() + i * size(), matrix.begin() + (i + 1) * size()));
    return {{"states", states}, {"matrix", std::move(rows)}, {"initial", initial}};
}

TransitionModel fit_stationary(std::span<const Hauv> vectors) {
    std::set<RegionId> seen;
    for (const auto& v : vectors)
        for (const auto& m : v.months)
            if (m) seen.insert(*m);
    TransitionModel model;
    model.states.assign(seen.begin(), seen.end());
    const std::size_t n = model.size();
    std::vector<double> counts(n * n, 0.0), january(n, 0.0), anytime(n, 0.0);
    std::size_t pairs = 0;
    for (const auto& v : vectors) {
        for (int m = 0; m < kMonths; ++m) {
            if (!v.months[m]) continue;
            const std::size_t i = *model.index_of(*v.months[m]);
            anytime[i] += 1;
            if (m == 0) january[i] += 1;
            if (m + 1 < kMonths && v.months[m + 1]) {
                counts[i * n + *model.index_of(*v.months[m + 1])] += 1;
                ++pairs;
            }
        }
    }
    if (pairs == 0) throw InputError("fit_stationary: no consecutive month pairs observed");
    model.matrix.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) row += counts[i * n + j];
        if (row == 0)
            model.matrix[i * n + i] = 1.0;
        else
            for (std::size_t j = 0; j < n; ++j) model.matrix[i * n + j] = counts[i * n + j] / row;
    }
    double jan_total = 0;
    for (double c : january) jan_total += c;
    const std::vector<double>& base = jan_total > 0 ? january : anytime;
    double total = 0;
    for (double c : base) total += c;
    model.initial.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.initial[i] = base[i] / total;
    model.validate();
    return model;
}

namespace {

std::size_t draw(Rng& rng, std::span<const double> weights) {
    const double u = rng.uniform();
    double cum = 0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0) continue;
        cum += weights[i];
        last = i;
        if (u < cum) return i;
    }
    return last;
}

}  // namespace

std::vector<Hauv> simulate(const TransitionModel& model, std::size_t n_users, std::uint64_t seed) {
    if (model.size() == 0) throw InputError("simulate: empty model");
    std::vector<Hauv> out;
    out.reserve(n_users);
    const std::size_t n = model.size();
    for (std::size_t u = 0; u < n_users; ++u) {
        Rng rng = Rng::substream(seed, kSimStream, u);
        char id[32];
        std::snprintf(id, sizeof id, "sim%06zu", u + 1);
        Hauv h{id, {}};
        std::size_t s = draw(rng, model.initial);
        h.months[0] = model.states[s];
        for (int m = 1; m < kMonths; ++m) {
            s = draw(rng, std::span<const double>(model.matrix).subspan(s * n, n));
            h.months[m] = model.states[s];
        }
        out.push_back(std::move(h));
    }
    return out;
}

Agreement month_agreement(std::span<const Hauv> vectors, int m, int m_other) {
    if (m < 1 || m > kMonths || m_other < 1 || m_other > kMonths) throw InputError("month_agreement: bad month");
    std::map<std::pair<RegionId, RegionId>, double> table;
    std::map<RegionId, double> rows, cols;
    Agreement a;
    std::size_t same = 0;
    for (const auto& v : vectors) {
        const auto &x = v.months[m - 1], &y = v.months[m_other - 1];
        if (!x || !y) continue;
        ++a.n;
        same += *x == *y ? 1 : 0;
        table[{*x, *y}] += 1;
        rows[*x] += 1;
        cols[*y] += 1;
    }
    if (a.n == 0) return a;
    const double n = static_cast<double>(a.n);
    a.agreement = static_cast<double>(same) / n;
    const std::size_t k = std::min(rows.size(), cols.size());
    if (k >= 2) {
        double chi2 = 0;
        for (const auto& [r, nr] : rows)
            for (const auto& [c, nc] : cols) {
                const double expected = nr * nc / n;
                auto it = table.find({r, c});
                const double o = it == table.end() ? 0.0 : it->second;
                chi2 += (o - expected) * (o - expected) / expected;
            }
        a.cramers_v = std::clamp(std::sqrt(chi2 / (n * static_cast<double>(k - 1))), 0.0, 1.0);
    }
    return a;
}

std::size_t NonstationarityReport::flagged_count() const {
    return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.flagged; }));
}

const PairComparison& NonstationarityReport::pair(int m1, int m2) const {
    if (m1 > m2) std::swap(m1, m2);
    for (const auto& p : pairs)
        if (p.m1 == m1 && p.m2 == m2) return p;
    throw InputError("no such month pair");
}

Json NonstationarityReport::to_json() const {
    Json observed = Json::array(), mean = Json::array(), lo = Json::array(), hi = Json::array();
    for (int a = 1; a <= kMonths; ++a) {
        Json ro = Json::array(), rm = Json::array(), rl = Json::array(), rh = Json::array();
        for (int b = 1; b <= kMonths; ++b) {
            if (a == b) {
                ro.push_back(1.0), rm.push_back(1.0), rl.push_back(1.0), rh.push_back(1.0);
                continue;
            }
            const auto& p = pair(a, b);
            ro.push_back(p.observed ? Json(*p.observed) : Json(nullptr));
            rm.push_back(p.sim_mean);
            rl.push_back(p.band_lo);
            rh.push_back(p.band_hi);
        }
        observed.push_back(std::move(ro)), mean.push_back(std::move(rm));
        lo.push_back(std::move(rl)), hi.push_back(std::move(rh));
    }
    Json flagged = Json::array(), undetermined = Json::array();
    for (const auto& p : pairs) {
        if (p.flagged) flagged.push_back({{"m1", p.m1}, {"m2", p.m2}, {"gap", *p.gap}});
        if (p.undetermined) undetermined.push_back({p.m1, p.m2});
    }
    return {{"population", population},
            {"simulations", simulations},
            {"observed_agreement", std::move(observed)},
            {"simulated_mean", std::move(mean)},
            {"band_low", std::move(lo)},
            {"band_high", std::move(hi)},
            {"flagged_pairs", std::move(flagged)},
            {"undetermined_pairs", std::move(undetermined)},
            {"flagged_count", flagged_count()}};
}

NonstationarityReport nonstationarity_report(std::span<const Hauv> observed, const TransitionModel& model,
                                             std::uint64_t seed, int simulations) {
    if (simulations < 2) throw InputError("nonstationarity_report needs at least 2 simulations");
    NonstationarityReport rep;
    rep.population = observed.size();
    rep.simulations = simulations;
    std::vector<std::vector<double>> sim(kMonths * kMonths);
    for (int b = 0; b < simulations; ++b) {
        auto pop = simulate(model, observed.size(), splitmix64(seed + static_cast<std::uint64_t>(b)));
        for (int m1 = 1; m1 <= kMonths; ++m1)
            for (int m2 = m1 + 1; m2 <= kMonths; ++m2) {
                auto a = month_agreement(pop, m1, m2);
                sim[(m1 - 1) * kMonths + (m2 - 1)].push_back(a.agreement.value_or(0.0));
            }
    }
    for (int m1 = 1; m1 <= kMonths; ++m1)
        for (int m2 = m1 + 1; m2 <= kMonths; ++m2) {
            PairComparison p;
            p.m1 = m1;
            p.m2 = m2;
            const auto& v = sim[(m1 - 1) * kMonths + (m2 - 1)];
            double mean = 0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0;
            for (double x : v) ss += (x - mean) * (x - mean);
            p.sim_mean = mean;
            p.sim_sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            p.band_lo = mean - kBandZ * p.sim_sd;
            p.band_hi = mean + kBandZ * p.sim_sd;
            p.observed = month_agreement(observed, m1, m2).agreement;
            if (!p.observed) {
                p.undetermined = true;
            } else {
                p.gap = *p.observed - mean;
                p.flagged = *p.observed < p.band_lo || *p.observed > p.band_hi;
            }
            rep.pairs.push_back(p);
        }
    return rep;
}

}  // namespace mobprof
