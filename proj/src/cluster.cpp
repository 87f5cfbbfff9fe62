#include "mobprof/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mobprof/error.hpp"

namespace mobprof {

DistanceMatrix::DistanceMatrix(std::size_t n) : n_(n), d_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

DistanceMatrix DistanceMatrix::from_condensed(std::size_t n, std::vector<double> condensed) {
    DistanceMatrix m(n);
    if (condensed.size() != m.d_.size())
        throw InputError("condensed distance matrix has the wrong length for n=" + std::to_string(n));
    for (double v : condensed)
        if (!std::isfinite(v) || v < 0.0) throw InputError("distances must be finite and non-negative");
    m.d_ = std::move(condensed);
    return m;
}

const char* to_string(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::manhattan: return "manhattan";
        case Metric::cosine: return "cosine";
    }
    return "?";
}

Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::euclidean, Metric::manhattan, Metric::cosine})
        if (name == to_string(m)) return m;
    throw InputError("unknown metric '" + std::string(name) + "'");
}

double bit_distance(MonthMask a, MonthMask b, Metric metric) {
    switch (metric) {
        case Metric::manhattan: return static_cast<double>((a ^ b).count());
        case Metric::euclidean: return std::sqrt(static_cast<double>((a ^ b).count()));
        case Metric::cosine: {
            const double dot = static_cast<double>((a & b).count());
            const double norm = std::sqrt(static_cast<double>(a.count()) * static_cast<double>(b.count()));
            return std::max(0.0, 1.0 - dot / norm);
        }
    }
    return 0.0;
}

DistanceMatrix pairwise_distance(std::span<const BinaryOccupancy> vectors, Metric metric,
                                 std::size_t max_vectors) {
    const std::size_t n = vectors.size();
    if (n < 2) throw InputError("pairwise_distance needs at least 2 vectors");
    if (n > max_vectors)
        throw InputError("pairwise_distance: " + std::to_string(n) + " vectors exceed the cap of " +
                         std::to_string(max_vectors) + " (raise cluster.max_vectors to allow it)");
    if (metric == Metric::cosine)
        for (const auto& v : vectors)
            if (v.bits.none()) throw InputError("cosine distance undefined for zero vector of user " + v.user_id);
    DistanceMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, bit_distance(vectors[i].bits, vectors[j].bits, metric));
    return m;
}

bool linkage_before(double d1, std::pair<std::size_t, std::size_t> key1, double d2,
                    std::pair<std::size_t, std::size_t> key2) {
    const double tol = kLinkageTieTolerance * std::max({1.0, std::abs(d1), std::abs(d2)});
    if (d1 < d2 - tol) return true;
    if (d2 < d1 - tol) return false;
    return key1 < key2;
}

namespace {

using NodePair = std::pair<std::size_t, std::size_t>;

NodePair node_pair(std::size_t a, std::size_t b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }

// Indexed binary min-heap over slots, ordered by each slot's cached (distance, node pair).
class SlotHeap {
public:
    SlotHeap(const std::vector<double>& dist, const std::vector<NodePair>& key, std::size_t n)
        : dist_(dist), key_(key), pos_(n, npos) {}

    bool empty() const { return heap_.empty(); }
    std::size_t top() const { return heap_.front(); }

    void push(std::size_t slot) {
        pos_[slot] = heap_.size();
        heap_.push_back(slot);
        sift_up(heap_.size() - 1);
    }
    void update(std::size_t slot) {
        sift_up(pos_[slot]);
        sift_down(pos_[slot]);
    }
    void remove(std::size_t slot) {
        std::size_t i = pos_[slot];
        if (i == npos) return;
        swap_at(i, heap_.size() - 1);
        heap_.pop_back();
        pos_[slot] = npos;
        if (i < heap_.size()) {
            sift_up(i);
            sift_down(i);
        }
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    bool less(std::size_t a, std::size_t b) const {
        if (linkage_before(dist_[a], key_[a], dist_[b], key_[b])) return true;
        if (linkage_before(dist_[b], key_[b], dist_[a], key_[a])) return false;
        return a < b;
    }
    void swap_at(std::size_t i, std::size_t j) {
        std::swap(heap_[i], heap_[j]);
        pos_[heap_[i]] = i;
        pos_[heap_[j]] = j;
    }
    void sift_up(std::size_t i) {
        while (i > 0) {
            std::size_t p = (i - 1) / 2;
            if (!less(heap_[i], heap_[p])) break;
            swap_at(i, p);
            i = p;
        }
    }
    void sift_down(std::size_t i) {
        while (true) {
            std::size_t l = 2 * i + 1, r = l + 1, m = i;
            if (l < heap_.size() && less(heap_[l], heap_[m])) m = l;
            if (r < heap_.size() && less(heap_[r], heap_[m])) m = r;
            if (m == i) break;
            swap_at(i, m);
            i = m;
        }
    }

    const std::vector<double>& dist_;
    const std::vector<NodePair>& key_;
    std::vector<std::size_t> heap_;
    std::vector<std::size_t> pos_;
};

}  // namespace

// Each slot caches its best partner among active slots with a larger index. Cached
// entries may go stale but stay lower bounds (average linkage is reducible), so they are
// only revalidated when they reach the top of the heap.
Dendrogram upgma(const DistanceMatrix& distances) {
    const std::size_t n = distances.size();
    if (n == 0) throw InputError("upgma: empty distance matrix");
    Dendrogram tree{n, {}};
    if (n == 1) return tree;

    DistanceMatrix d = distances;
    std::vector<std::size_t> node(n), size(n, 1), nn(n, 0);
    std::vector<double> nnd(n, std::numeric_limits<double>::infinity());
    std::vector<NodePair> nnkey(n);
    std::vector<bool> active(n, true);
    std::iota(node.begin(), node.end(), std::size_t{0});
    SlotHeap heap(nnd, nnkey, n);

    auto recompute = [&](std::size_t i) {
        bool found = false;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!active[j]) continue;
            NodePair k = node_pair(node[i], node[j]);
            if (!found || linkage_before(d(i, j), k, nnd[i], nnkey[i])) {
                nn[i] = j;
                nnd[i] = d(i, j);
                nnkey[i] = k;
                found = true;
            }
        }
        return found;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        recompute(i);
        heap.push(i);
    }

    double last_height = 0.0;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t a = heap.top();
        while (!active[nn[a]] || d(a, nn[a]) != nnd[a] || node_pair(node[a], node[nn[a]]) != nnkey[a]) {
            if (!recompute(a)) throw InvariantError("upgma: slot without partner");
            heap.update(a);
            a = heap.top();
        }
        const std::size_t b = nn[a];  // a < b; the merged cluster lives in slot b
        double height = nnd[a];
        // Average linkage is monotone; only rounding can produce a tiny inversion.
        if (height < last_height) {
            if (last_height - height > kLinkageTieTolerance * std::max(1.0, last_height) * 16)
                throw InvariantError("upgma: merge heights decreased");
            height = last_height;
        }
        last_height = height;
        auto [left, right] = node_pair(node[a], node[b]);
        tree.merges.push_back({left, right, height, size[a] + size[b]});

        heap.remove(a);
        active[a] = false;
        const double wa = static_cast<double>(size[a]), wb = static_cast<double>(size[b]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == b) continue;
            d.set(b, k, (wa * d(a, k) + wb * d(b, k)) / (wa + wb));
        }
        size[b] += size[a];
        node[b] = n + step;

        for (std::size_t k = 0; k < b; ++k) {
            if (!active[k]) continue;
            NodePair key = node_pair(node[k], node[b]);
            if (k < a && (nn[k] == a || nn[k] == b)) {
                nn[k] = b;  // cached distance stays a lower bound
            } else if (linkage_before(d(k, b), key, nnd[k], nnkey[k])) {
                nn[k] = b;
                nnd[k] = d(k, b);
                nnkey[k] = key;
                heap.update(k);
            }
        }
        if (b + 1 < n && recompute(b)) {
            heap.update(b);
        } else {
            heap.remove(b);
        }
    }
    return tree;
}

std::vector<int> cut(const Dendrogram& tree, std::size_t k) {
    const std::size_t n = tree.leaves;
    if (k < 1 || k > n) throw InputError("cut: k must be in 1..n");
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n - k; ++i) {
        parent[find(tree.merges[i].left)] = n + i;
        parent[find(tree.merges[i].right)] = n + i;
    }
    std::map<std::size_t, int> label;
    std::vector<int> out(n);
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        auto [it, inserted] = label.try_emplace(find(leaf), static_cast<int>(label.size()));
        out[leaf] = it->second;
    }
    return out;
}

std::vector<MobilityClass> build_classes(std::span<const int> assignments,
                                         std::span<const BinaryOccupancy> vectors, std::span<const Buv> buvs) {
    if (assignments.size() != vectors.size()) throw InputError("build_classes: assignment/vector size mismatch");
    int k = 0;
    for (int a : assignments) {
        if (a < 0) throw InputError("build_classes: negative class label");
        k = std::max(k, a + 1);
    }
    std::vector<MobilityClass> classes(k);
    std::vector<std::vector<std::size_t>> rows(k);
    for (std::size_t i = 0; i < assignments.size(); ++i) rows[assignments[i]].push_back(i);
    for (int c = 0; c < k; ++c) {
        MobilityClass& cls = classes[c];
        cls.id = c;
        for (std::size_t i : rows[c]) cls.members.push_back(vectors[i].user_id);
        std::sort(cls.members.begin(), cls.members.end());
        if (rows[c].empty()) continue;
        const double n = static_cast<double>(rows[c].size());
        for (int m = 0; m < kMonths; ++m) {
            double ones = 0;
            for (std::size_t i : rows[c]) ones += vectors[i].bits.test(m) ? 1.0 : 0.0;
            const double p = ones / n;
            cls.mean_profile[m] = p;
            cls.std_profile[m] = std::sqrt(std::max(0.0, p * (1.0 - p)));
        }
        cls.bandicoot = characterize_class(cls.members, buvs);
    }
    return classes;
}

}  // namespace mobprof
