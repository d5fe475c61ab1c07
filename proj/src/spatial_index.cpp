#include "cosetcox/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cosetcox {

SpatialIndex::SpatialIndex(const ModelGroup& model, std::span<const GroupPoint> points, double target_per_cell)
    : model_(model), points_(points), dim_(model.dim()) {
    if (points_.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("SpatialIndex supports at most 2^32 points");
    lo_.assign(static_cast<std::size_t>(dim_), 0.0);
    width_.assign(static_cast<std::size_t>(dim_), 1.0);
    cells_.assign(static_cast<std::size_t>(dim_), 1);
    if (points_.empty()) {
        start_.assign(2, 0);
        return;
    }
    std::vector<double> hi(static_cast<std::size_t>(dim_), -std::numeric_limits<double>::infinity());
    std::fill(lo_.begin(), lo_.end(), std::numeric_limits<double>::infinity());
    for (const auto& p : points_)
        for (int a = 0; a < dim_; ++a) {
            lo_[a] = std::min(lo_[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    // Cubic cells sized for ~target_per_cell points, ignoring flat axes.
    double vol = 1.0;
    int active = 0;
    for (int a = 0; a < dim_; ++a) {
        const double ext = hi[a] - lo_[a];
        if (ext > 0.0) {
            vol *= ext;
            ++active;
        }
    }
    const double n = static_cast<double>(points_.size());
    const double side = active > 0 ? std::pow(vol * target_per_cell / n, 1.0 / active) : 1.0;
    std::size_t total = 1;
    for (int a = 0; a < dim_; ++a) {
        const double ext = hi[a] - lo_[a];
        std::size_t c = ext > 0.0 && side > 0.0 ? static_cast<std::size_t>(std::ceil(ext / side)) : 1;
        c = std::clamp<std::size_t>(c, 1, 4096);
        cells_[a] = c;
        width_[a] = ext > 0.0 ? ext / static_cast<double>(c) : 1.0;
        total *= c;
    }
    start_.assign(total + 1, 0);
    std::vector<std::size_t> flat(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        std::size_t f = 0;
        for (int a = 0; a < dim_; ++a) f = f * cells_[a] + cell_of(a, points_[i][a]);
        flat[i] = f;
        ++start_[f + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(points_.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) items_[fill[flat[i]]++] = static_cast<std::uint32_t>(i);
}

std::size_t SpatialIndex::cell_of(int axis, double x) const {
    const double t = (x - lo_[axis]) / width_[axis];
    if (!(t > 0.0)) return 0;
    const auto c = static_cast<std::size_t>(t);
    return std::min(c, cells_[axis] - 1);
}

void SpatialIndex::neighbors(const GroupPoint& p, double r, std::vector<std::size_t>& out) const {
    out.clear();
    for_each_candidate(model_.ball_bounds(p, r), [&](std::size_t j) {
        if (model_.dist(p, points_[j]) < r) out.push_back(j);
    });
    std::sort(out.begin(), out.end());
}

std::size_t SpatialIndex::nearest(const GroupPoint& q, std::span<const double> labels, double* distance,
                                  bool* tie) const {
    if (points_.empty()) throw std::invalid_argument("nearest: empty index");
    double r = 0.0;
    for (int a = 0; a < dim_; ++a) r = std::max(r, width_[a]);
    for (;; r *= 2.0) {
        std::size_t best = points_.size();
        double best_d = std::numeric_limits<double>::infinity();
        bool tied = false;
        for_each_candidate(model_.ball_bounds(q, r), [&](std::size_t j) {
            const double d = model_.dist(points_[j], q);
            if (d < best_d) {
                best_d = d;
                best = j;
                tied = false;
            } else if (d == best_d) {
                tied = true;
                if (labels[j] < labels[best]) best = j;
            }
        });
        // Every point at distance <= r lies inside the scanned bounds.
        if (best_d <= r) {
            if (distance) *distance = best_d;
            if (tie) *tie = tied;
            return best;
        }
    }
}

}  // namespace cosetcox
