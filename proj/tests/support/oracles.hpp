#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

struct Merge {
    std::size_t left, right;
    double height;
    std::size_t size;
};

/// Average linkage by brute force: every step recomputes each candidate pair's mean
/// over all member pairs from the original matrix. `d` is a full n x n matrix.
std::vector<Merge> upgma(const std::vector<std::vector<double>>& d);

struct Pt {
    double x, y;
};

/// Area of a simple polygon (shoelace, absolute value).
double polygon_area(const std::vector<Pt>& poly);

/// Polygon clipped to an axis-aligned rectangle (Sutherland-Hodgman).
std::vector<Pt> clip_to_box(const std::vector<Pt>& poly, double x0, double y0, double x1, double y1);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace oracle
