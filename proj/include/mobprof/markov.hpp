#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mobprof/features.hpp"
#include "mobprof/io.hpp"

namespace mobprof {

/// 1-step stationary Markov chain over arrondissements, month to month.
struct TransitionModel {
    std::vector<RegionId> states;  // sorted
    std::vector<double> matrix;    // row-major, states.size()^2, row-stochastic
    std::vector<double> initial;

    std::size_t size() const noexcept { return states.size(); }
    double p(std::size_t from, std::size_t to) const { return matrix[from * states.size() + to]; }
    std::optional<std::size_t> index_of(RegionId id) const;
    /// Throws InvariantError unless rows sum to 1 within 1e-9 and entries are non-negative.
    void validate() const;
    Json to_json() const;
};

/// Pools every non-missing (month m, month m+1) pair over all users. Rows without
/// observations become self-loops; the initial distribution is the empirical January one.
TransitionModel fit_stationary(std::span<const Hauv> vectors);

/// n_users complete 12-month chains; user i draws from its own seeded substream.
std::vector<Hauv> simulate(const TransitionModel& model, std::size_t n_users, std::uint64_t seed);

struct Agreement {
    std::size_t n = 0;  // users present in both months
    std::optional<double> agreement;   // P(A_m = A_m')
    std::optional<double> cramers_v;   // undefined with fewer than two categories on a side
};

/// Months are 1-based.
Agreement month_agreement(std::span<const Hauv> vectors, int m, int m_other);

struct PairComparison {
    int m1 = 0, m2 = 0;
    std::optional<double> observed;
    double sim_mean = 0, sim_sd = 0, band_lo = 0, band_hi = 0;
    std::optional<double> gap;
    bool flagged = false;
    bool undetermined = false;
};

struct NonstationarityReport {
    std::size_t population = 0;
    int simulations = 0;
    std::vector<PairComparison> pairs;  // m1 < m2, row-major

    std::size_t flagged_count() const;
    const PairComparison& pair(int m1, int m2) const;
    Json to_json() const;
};

inline constexpr int kDefaultSimulations = 20;
inline constexpr double kBandZ = 1.96;

/// Observed month-pair agreement against B populations simulated from the model; pairs
/// outside mean +/- 1.96 sd of the simulated agreements are flagged.
NonstationarityReport nonstationarity_report(std::span<const Hauv> observed, const TransitionModel& model,
                                             std::uint64_t seed, int simulations = kDefaultSimulations);

}  // namespace mobprof
