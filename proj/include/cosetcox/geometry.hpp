#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cosetcox/processes.hpp"

namespace cosetcox {

/// Grid-level Voronoi tessellation of a window.
struct VoronoiAssignment {
    std::vector<int> resolution;       ///< cells per axis
    std::vector<std::size_t> owner;    ///< row-major (last axis fastest) owning point index
    std::vector<double> cell_volume;   ///< per point: number of owned grid cells times cell volume
    double grid_cell_volume = 0.0;
    std::size_t tie_cells = 0;         ///< grid cells resolved by the label tie-break

    double total_volume() const;
    /// Chart coordinates of the center of grid cell `flat`.
    GroupPoint cell_center(const Window& window, std::size_t flat) const;
};

/// Tie-break labels for a configuration when no marks are available: a hash
/// of the coordinates mapped into [0, 1).
std::vector<double> coordinate_labels(const Configuration& config);

/// Owner of every grid cell of config.window: the nearest point of the
/// configuration (buffer points included), smaller label on exact ties.
VoronoiAssignment voronoi_assign(const Configuration& config, int resolution,
                                 std::optional<std::span<const double>> labels = std::nullopt);

/// One-dimensional Voronoi cells of the points on each coset.
struct LeafwiseCells {
    struct Leaf {
        std::size_t coset = 0;
        std::vector<std::size_t> points;                   ///< indices into the sample, sorted along A
        std::vector<double> positions;                     ///< A-coordinates, ascending
        std::vector<std::pair<double, double>> intervals;  ///< cell of each point
    };
    std::vector<Leaf> leaves;
    std::vector<std::size_t> empty_cosets;  ///< listed cosets carrying no point
};

LeafwiseCells leafwise_voronoi(const CoxSample& cox, const Box& segment);

/// Adjacency statistics of one unordered pair of distinct cosets.
struct CosetPairAdjacency {
    std::size_t first = 0;
    std::size_t second = 0;
    std::size_t pairs = 0;   ///< cross pairs (x, y) with dist(x, y) < R
    double spread = 0.0;     ///< extent along A of the points taking part in those pairs
    bool flagged = false;    ///< pairs >= min_pairs and spread >= min_spread
};

struct AdjacencyReport {
    double radius = 0.0;
    std::size_t min_pairs = 0;
    double min_spread = 0.0;
    std::vector<CosetPairAdjacency> pairs;  ///< only coset pairs with at least one cross pair
    std::size_t total_cross_pairs = 0;
    std::size_t flagged_pairs = 0;
};

AdjacencyReport high_adjacency_scan(const CoxSample& cox, double radius, std::size_t min_pairs,
                                    double min_spread = 0.0);

}  // namespace cosetcox
