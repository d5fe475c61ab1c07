#include "cosetcox/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "cosetcox/spatial_index.hpp"

namespace cosetcox {

namespace {

void require_leafwise(const CoxSample& cox) {
    if (cox.subgroup.dim() != 1)
        throw std::invalid_argument("leafwise operations require a one-dimensional subgroup");
}

}  // namespace

double VoronoiAssignment::total_volume() const {
    return std::accumulate(cell_volume.begin(), cell_volume.end(), 0.0);
}

GroupPoint VoronoiAssignment::cell_center(const Window& window, std::size_t flat) const {
    const int d = static_cast<int>(resolution.size());
    GroupPoint q(d);
    for (int a = d - 1; a >= 0; --a) {
        const auto r = static_cast<std::size_t>(resolution[a]);
        const std::size_t k = flat % r;
        flat /= r;
        const double h = (window.hi[a] - window.lo[a]) / static_cast<double>(r);
        q[a] = window.lo[a] + (static_cast<double>(k) + 0.5) * h;
    }
    return q;
}

std::vector<double> coordinate_labels(const Configuration& config) {
    std::vector<double> labels;
    labels.reserve(config.size());
    for (const auto& p : config.points) {
        std::uint64_t h = 0x243f6a8885a308d3ULL;
        for (int i = 0; i < p.dim(); ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(p[i]));
        labels.push_back(static_cast<double>(h >> 11) * 0x1.0p-53);
    }
    return labels;
}

VoronoiAssignment voronoi_assign(const Configuration& config, int resolution,
                                 std::optional<std::span<const double>> labels) {
    if (config.points.empty()) throw std::invalid_argument("voronoi_assign: empty configuration");
    if (resolution < 1) throw std::invalid_argument("voronoi_assign: resolution must be positive");
    const ModelGroup& model = config.model;
    const int d = model.dim();
    std::vector<double> own_labels;
    std::span<const double> lab;
    if (labels) {
        lab = *labels;
        if (lab.size() != config.size()) throw std::invalid_argument("voronoi_assign: one label per point required");
    } else {
        own_labels = coordinate_labels(config);
        lab = own_labels;
    }

    VoronoiAssignment out;
    out.resolution.assign(static_cast<std::size_t>(d), resolution);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(resolution);
    out.grid_cell_volume = model.haar_volume(config.window) / static_cast<double>(total);
    out.owner.resize(total);
    out.cell_volume.assign(config.size(), 0.0);

    const SpatialIndex index(model, config.points);
    for (std::size_t c = 0; c < total; ++c) {
        bool tie = false;
        const std::size_t o = index.nearest(out.cell_center(config.window, c), lab, nullptr, &tie);
        out.owner[c] = o;
        out.cell_volume[o] += out.grid_cell_volume;
        if (tie) ++out.tie_cells;
    }
    return out;
}

LeafwiseCells leafwise_voronoi(const CoxSample& cox, const Box& segment) {
    require_leafwise(cox);
    if (segment.dim() != 1) throw std::invalid_argument("leafwise_voronoi: segment must be one-dimensional");
    const int axis = cox.subgroup.axes().front();
    std::vector<std::vector<std::size_t>> by_coset(cox.cosets.size());
    for (std::size_t i = 0; i < cox.config.size(); ++i) by_coset[cox.coset_of[i]].push_back(i);

    LeafwiseCells out;
    for (std::size_t c = 0; c < by_coset.size(); ++c) {
        auto& idx = by_coset[c];
        if (idx.empty()) {
            out.empty_cosets.push_back(c);
            continue;
        }
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return cox.config.points[a][axis] < cox.config.points[b][axis];
        });
        LeafwiseCells::Leaf leaf;
        leaf.coset = c;
        leaf.points = idx;
        for (auto i : idx) leaf.positions.push_back(cox.config.points[i][axis]);
        const std::size_t n = idx.size();
        for (std::size_t k = 0; k < n; ++k) {
            const double left = k == 0 ? segment.lo[0] : 0.5 * (leaf.positions[k - 1] + leaf.positions[k]);
            const double right = k + 1 == n ? segment.hi[0] : 0.5 * (leaf.positions[k] + leaf.positions[k + 1]);
            leaf.intervals.emplace_back(left, right);
        }
        out.leaves.push_back(std::move(leaf));
    }
    return out;
}

AdjacencyReport high_adjacency_scan(const CoxSample& cox, double radius, std::size_t min_pairs, double min_spread) {
    require_leafwise(cox);
    if (!(radius > 0.0)) throw std::invalid_argument("high_adjacency_scan: radius must be positive");
    const int axis = cox.subgroup.axes().front();
    const auto& pts = cox.config.points;

    struct Acc {
        std::size_t pairs = 0;
        double lo = INFINITY, hi = -INFINITY;
    };
    std::map<std::pair<std::size_t, std::size_t>, Acc> acc;
    const SpatialIndex index(cox.config.model, pts);
    std::vector<std::size_t> nb;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        index.neighbors(pts[i], radius, nb);
        for (auto j : nb) {
            // Count each unordered cross pair once, from the lower coset.
            if (cox.coset_of[j] <= cox.coset_of[i]) continue;
            auto& a = acc[{cox.coset_of[i], cox.coset_of[j]}];
            ++a.pairs;
            a.lo = std::min({a.lo, pts[i][axis], pts[j][axis]});
            a.hi = std::max({a.hi, pts[i][axis], pts[j][axis]});
        }
    }
    AdjacencyReport rep;
    rep.radius = radius;
    rep.min_pairs = min_pairs;
    rep.min_spread = min_spread;
    for (const auto& [key, a] : acc) {
        CosetPairAdjacency p;
        p.first = key.first;
        p.second = key.second;
        p.pairs = a.pairs;
        p.spread = a.hi - a.lo;
        p.flagged = p.pairs >= min_pairs && p.spread >= min_spread;
        rep.total_cross_pairs += p.pairs;
        if (p.flagged) ++rep.flagged_pairs;
        rep.pairs.push_back(p);
    }
    return rep;
}

}  // namespace cosetcox
