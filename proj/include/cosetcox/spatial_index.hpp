#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cosetcox/group_models.hpp"

namespace cosetcox {

/// Uniform cell grid over chart coordinates.
///
/// Metric queries are answered by scanning the cells that meet the chart
/// bounding box of the metric ball (ModelGroup::ball_bounds) and filtering by
/// the exact model distance, so the index is correct for every model metric.
class SpatialIndex {
public:
    SpatialIndex(const ModelGroup& model, std::span<const GroupPoint> points, double target_per_cell = 2.0);

    const ModelGroup& model() const noexcept { return model_; }
    std::size_t size() const noexcept { return points_.size(); }

    /// Calls fn(i) for every point whose cell meets the box (a superset of the
    /// points inside it).
    template <class Fn>
    void for_each_candidate(const Box& box, Fn&& fn) const;

    /// Indices of points with dist(p, point) < r, in increasing index order.
    void neighbors(const GroupPoint& p, double r, std::vector<std::size_t>& out) const;

    /// Nearest point to q; on exact distance ties the smaller label wins.
    /// Returns the index, writes the distance and whether a tie occurred.
    std::size_t nearest(const GroupPoint& q, std::span<const double> labels, double* distance = nullptr,
                        bool* tie = nullptr) const;

private:
    std::size_t cell_of(int axis, double x) const;

    ModelGroup model_;
    std::span<const GroupPoint> points_;
    int dim_;
    std::vector<double> lo_;
    std::vector<double> width_;
    std::vector<std::size_t> cells_;  // per axis
    std::vector<std::size_t> start_;  // CSR offsets, size = #cells + 1
    std::vector<std::uint32_t> items_;
};

template <class Fn>
void SpatialIndex::for_each_candidate(const Box& box, Fn&& fn) const {
    if (points_.empty()) return;
    std::size_t lo[kMaxDim], hi[kMaxDim], idx[kMaxDim];
    for (int a = 0; a < dim_; ++a) {
        if (box.hi[a] < lo_[a] || box.lo[a] > lo_[a] + width_[a] * static_cast<double>(cells_[a])) return;
        lo[a] = cell_of(a, box.lo[a]);
        hi[a] = cell_of(a, box.hi[a]);
        idx[a] = lo[a];
    }
    for (;;) {
        std::size_t flat = 0;
        for (int a = 0; a < dim_; ++a) flat = flat * cells_[a] + idx[a];
        for (std::size_t k = start_[flat]; k < start_[flat + 1]; ++k) fn(static_cast<std::size_t>(items_[k]));
        int a = dim_ - 1;
        while (a >= 0 && ++idx[a] > hi[a]) {
            idx[a] = lo[a];
            --a;
        }
        if (a < 0) break;
    }
}

}  // namespace cosetcox
