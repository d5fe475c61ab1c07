#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cosetcox/processes.hpp"

namespace cosetcox {

enum class EdgeKind : std::uint8_t { Distance, Star, Line, Lift };

struct Provenance {
    EdgeKind kind = EdgeKind::Distance;
    int level = 0;  ///< star radius index n for star_union edges

    std::string tag() const;
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Edge between u < v. `arcs` bit 0 is u->v, bit 1 is v->u.
struct Edge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    std::uint8_t arcs = 3;
    Provenance provenance;
};

/// Factor graph on the points of one configuration.
///
/// Factor graphs are directed in general: the degree of a vertex is its
/// out-degree. Symmetric constructions insert both arcs, in which case the
/// degree coincides with the undirected degree.
class FactorGraph {
public:
    explicit FactorGraph(std::size_t vertices = 0) : vertices_(vertices) {}

    std::size_t vertex_count() const noexcept { return vertices_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// Adds the arc from -> to; an existing edge keeps its provenance and
    /// gains the arc.
    void add_arc(std::size_t from, std::size_t to, Provenance p);
    void add_edge(std::size_t a, std::size_t b, Provenance p);
    /// Union with another graph on the same vertex set.
    void merge(const FactorGraph& other);

    std::vector<std::size_t> out_degrees() const;
    bool has_edge(std::size_t a, std::size_t b) const;

private:
    void insert(std::size_t a, std::size_t b, std::uint8_t arcs, Provenance p);

    std::size_t vertices_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

/// Edges between all pairs at distance < R.
FactorGraph distance_graph(const Configuration& config, double radius);

/// Arcs g -> h for g != h with mark(g) < t and dist(g, h) < R.
FactorGraph star_graph(const MarkedConfiguration& marked, double threshold, double radius, int level = 0);

struct StarLevel {
    int n = 0;
    double threshold = 0.0;  ///< t_n
    double radius = 0.0;     ///< R_n = n
    double ball_volume = 0.0;
};

/// Sequence of star graphs whose budget sum t_n * lambda(B(0, n)) stays below epsilon.
struct StarSchedule {
    double epsilon = 0.0;
    std::vector<StarLevel> levels;

    /// t_n = c / (n * v(n) * 2^n) with c chosen so that the budget is epsilon / 2.
    static StarSchedule make_default(const ModelGroup& model, double epsilon, int n_max);
    double budget() const;
    double max_radius() const;
    /// Throws std::invalid_argument if the budget or threshold invariants fail.
    void validate() const;
};

FactorGraph star_union(const MarkedConfiguration& marked, const StarSchedule& schedule);

/// Joins consecutive points (along A) on each coset.
FactorGraph leafwise_line_graph(const CoxSample& cox);

/// Lift of a sparsified distance graph on G/A: coset pairs at transversal
/// distance < R_q are kept with probability p, each kept pair realised by one
/// edge between its A-nearest points.
FactorGraph lifted_quotient_graph(const CoxSample& cox, double keep_probability, double quotient_radius,
                                  RandomStream& rng);

/// Points whose metric margin-ball lies inside the sampled domain.
std::vector<std::size_t> interior_points(const Configuration& config, double margin);

/// Mean out-degree over interior points with a normal-approximation CI.
Estimate avg_degree(const FactorGraph& graph, const Configuration& config, double margin);

/// Degree total and vertex count over the interior points of one sample.
struct DegreeTally {
    double degree_sum = 0.0;
    std::size_t vertices = 0;
};

DegreeTally degree_tally(const FactorGraph& graph, const Configuration& config, double margin);

/// Ratio estimate sum(degree) / sum(vertices) over replicates, with a
/// delta-method standard error.
Estimate pooled_average_degree(const std::vector<DegreeTally>& tallies);

struct ComponentReport {
    std::size_t components = 0;
    double giant_fraction = 0.0;
    std::vector<std::size_t> sizes;  ///< descending
};

ComponentReport connectivity(const FactorGraph& graph);

struct CostOptions {
    int n_max = 3;
    bool include_lift = false;
    double lift_probability = 0.05;
    double lift_radius = 1.0;
    unsigned threads = 1;
};

struct CostRow {
    double window_side = 0.0;
    double epsilon = 0.0;
    double schedule_budget = 0.0;
    double avg_degree = 0.0;
    double avg_degree_ci = 0.0;   ///< 95% half-width across replicates
    double avg_degree_sigma = 0.0;
    double giant_fraction = 0.0;
    double giant_fraction_ci = 0.0;
    double line_giant_fraction = 0.0;
    std::size_t replicates = 0;
    bool degree_bound_ok = false;  ///< avg_degree <= 2 + epsilon + 3 sigma
};

struct ExperimentReport {
    std::vector<CostRow> rows;
    bool giant_non_decreasing = false;
    bool all_degree_bounds_ok = false;
};

/// Lines plus star unions on Cox samples over windows [-L/2, L/2]^d.
ExperimentReport cost_upper_bound_experiment(const SubgroupSpec& sub, const std::vector<double>& window_sides,
                                             double epsilon, std::size_t replicates, RandomStream& rng,
                                             const CostOptions& options = {});

}  // namespace cosetcox
