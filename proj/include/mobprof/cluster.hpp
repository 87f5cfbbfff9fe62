#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobprof/calendar.hpp"
#include "mobprof/features.hpp"

namespace mobprof {

/// Symmetric, zero-diagonal distances stored as the condensed upper triangle.
class DistanceMatrix {
public:
    explicit DistanceMatrix(std::size_t n = 0);
    /// Throws InputError unless the values are finite, non-negative and sized n(n-1)/2.
    static DistanceMatrix from_condensed(std::size_t n, std::vector<double> condensed);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const {
        return i == j ? 0.0 : d_[index(i < j ? i : j, i < j ? j : i)];
    }
    void set(std::size_t i, std::size_t j, double v) { d_[index(i < j ? i : j, i < j ? j : i)] = v; }
    const std::vector<double>& condensed() const noexcept { return d_; }

private:
    std::size_t index(std::size_t i, std::size_t j) const { return n_ * i - i * (i + 1) / 2 + (j - i - 1); }
    std::size_t n_;
    std::vector<double> d_;
};

enum class Metric { euclidean, manhattan, cosine };
const char* to_string(Metric m);
Metric parse_metric(std::string_view name);

/// Distance between two 12-bit presence vectors.
double bit_distance(MonthMask a, MonthMask b, Metric metric);

inline constexpr std::size_t kDefaultMaxVectors = 50000;

/// Throws InputError for fewer than two vectors, more than max_vectors, or a zero vector
/// under the cosine metric (the message names the user).
DistanceMatrix pairwise_distance(std::span<const BinaryOccupancy> vectors, Metric metric,
                                 std::size_t max_vectors = kDefaultMaxVectors);

/// Leaves are nodes 0..n-1; merge i creates node n+i.
struct Merge {
    std::size_t left = 0;   // smaller node index
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::size_t leaves = 0;
    std::vector<Merge> merges;
};

/// Relative tolerance under which two linkage distances count as tied.
inline constexpr double kLinkageTieTolerance = 1e-12;

/// True when (d1, key1) orders before (d2, key2): smaller distance, then smaller
/// (left, right) node pair when the distances tie.
bool linkage_before(double d1, std::pair<std::size_t, std::size_t> key1, double d2,
                    std::pair<std::size_t, std::size_t> key2);

/// Unweighted average linkage (UPGMA). Always merges the closest pair; ties go to the
/// smallest (left, right) node-index pair.
Dendrogram upgma(const DistanceMatrix& distances);

/// Undoes the last k-1 merges. Labels 0..k-1 follow ascending smallest member index.
std::vector<int> cut(const Dendrogram& tree, std::size_t k);

struct MobilityClass {
    int id = 0;
    std::vector<std::string> members;  // sorted
    Profile mean_profile{};
    Profile std_profile{};
    ClassCharacterization bandicoot;

    std::size_t size() const noexcept { return members.size(); }
};

std::vector<MobilityClass> build_classes(std::span<const int> assignments,
                                         std::span<const BinaryOccupancy> vectors,
                                         std::span<const Buv> buvs);

}  // namespace mobprof
