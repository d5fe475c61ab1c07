#include "cosetcox/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cosetcox/parallel.hpp"
#include "cosetcox/spatial_index.hpp"

namespace cosetcox {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

struct UnionFind {
    std::vector<std::size_t> parent, size;
    explicit UnionFind(std::size_t n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size[a] < size[b]) std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
    }
};

// Per coset, point indices sorted by the (single) A coordinate.
std::vector<std::vector<std::size_t>> sorted_leaves(const CoxSample& cox) {
    require(cox.subgroup.dim() == 1, "leafwise graphs require a one-dimensional subgroup");
    const int axis = cox.subgroup.axes().front();
    std::vector<std::vector<std::size_t>> leaves(cox.cosets.size());
    for (std::size_t i = 0; i < cox.config.size(); ++i) leaves[cox.coset_of[i]].push_back(i);
    for (auto& l : leaves)
        std::sort(l.begin(), l.end(), [&](std::size_t a, std::size_t b) {
            return cox.config.points[a][axis] < cox.config.points[b][axis];
        });
    return leaves;
}

}  // namespace

std::string Provenance::tag() const {
    switch (kind) {
        case EdgeKind::Distance: return "distance";
        case EdgeKind::Star: return "star_" + std::to_string(level);
        case EdgeKind::Line: return "line";
        case EdgeKind::Lift: return "lift";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// FactorGraph

void FactorGraph::insert(std::size_t a, std::size_t b, std::uint8_t arcs, Provenance p) {
    require(a < vertices_ && b < vertices_, "edge references a missing vertex");
    require(a != b, "factor graphs have no self-loops");
    if (a > b) {
        std::swap(a, b);
        arcs = static_cast<std::uint8_t>(((arcs & 1) << 1) | ((arcs >> 1) & 1));
    }
    const auto key = edge_key(a, b);
    if (auto it = lookup_.find(key); it != lookup_.end()) {
        edges_[it->second].arcs |= arcs;
        return;
    }
    lookup_.emplace(key, edges_.size());
    edges_.push_back(Edge{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), arcs, p});
}

void FactorGraph::add_arc(std::size_t from, std::size_t to, Provenance p) { insert(from, to, 1, p); }

void FactorGraph::add_edge(std::size_t a, std::size_t b, Provenance p) { insert(a, b, 3, p); }

void FactorGraph::merge(const FactorGraph& other) {
    require(other.vertices_ == vertices_, "merged graphs must share the vertex set");
    for (const auto& e : other.edges_) insert(e.u, e.v, e.arcs, e.provenance);
}

std::vector<std::size_t> FactorGraph::out_degrees() const {
    std::vector<std::size_t> deg(vertices_, 0);
    for (const auto& e : edges_) {
        if (e.arcs & 1) ++deg[e.u];
        if (e.arcs & 2) ++deg[e.v];
    }
    return deg;
}

bool FactorGraph::has_edge(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    return lookup_.contains(edge_key(a, b));
}

// ---------------------------------------------------------------------------
// Constructions

FactorGraph distance_graph(const Configuration& config, double radius) {
    require(radius > 0.0, "distance_graph: radius must be positive");
    FactorGraph g(config.size());
    const SpatialIndex index(config.model, config.points);
    std::vector<std::size_t> nb;
    for (std::size_t i = 0; i < config.size(); ++i) {
        index.neighbors(config.points[i], radius, nb);
        for (auto j : nb)
            if (j > i) g.add_edge(i, j, {EdgeKind::Distance, 0});
    }
    return g;
}

FactorGraph star_graph(const MarkedConfiguration& marked, double threshold, double radius, int level) {
    require(threshold > 0.0 && threshold <= 1.0, "star_graph: threshold must lie in (0, 1]");
    require(radius > 0.0, "star_graph: radius must be positive");
    const Configuration& config = marked.config;
    require(marked.marks.size() == config.size(), "star_graph: one mark per point required");
    FactorGraph g(config.size());
    const SpatialIndex index(config.model, config.points);
    std::vector<std::size_t> nb;
    for (std::size_t i = 0; i < config.size(); ++i) {
        if (!(marked.marks[i] < threshold)) continue;
        index.neighbors(config.points[i], radius, nb);
        for (auto j : nb)
            if (j != i) g.add_arc(i, j, {EdgeKind::Star, level});
    }
    return g;
}

StarSchedule StarSchedule::make_default(const ModelGroup& model, double epsilon, int n_max) {
    require(epsilon > 0.0, "star schedule requires epsilon > 0");
    require(n_max >= 1, "star schedule requires n_max >= 1");
    double weight = 0.0;
    for (int n = 1; n <= n_max; ++n) weight += 1.0 / (n * std::ldexp(1.0, n));
    const double c = 0.5 * epsilon / weight;
    StarSchedule s;
    s.epsilon = epsilon;
    for (int n = 1; n <= n_max; ++n) {
        StarLevel l;
        l.n = n;
        l.radius = n;
        l.ball_volume = model.ball_volume(n);
        l.threshold = l.ball_volume > 0.0 ? c / (n * l.ball_volume * std::ldexp(1.0, n)) : 1.0;
        s.levels.push_back(l);
    }
    s.validate();
    return s;
}

double StarSchedule::budget() const {
    double b = 0.0;
    for (const auto& l : levels) b += l.threshold * l.ball_volume;
    return b;
}

double StarSchedule::max_radius() const {
    double r = 0.0;
    for (const auto& l : levels) r = std::max(r, l.radius);
    return r;
}

void StarSchedule::validate() const {
    require(epsilon > 0.0, "star schedule requires epsilon > 0");
    require(!levels.empty(), "star schedule is empty");
    for (std::size_t k = 0; k < levels.size(); ++k) {
        require(levels[k].threshold > 0.0 && levels[k].threshold <= 1.0, "star thresholds must lie in (0, 1]");
        if (k > 0) require(levels[k].threshold < levels[k - 1].threshold, "star thresholds must strictly decrease");
    }
    require(budget() < epsilon, "star schedule exceeds its degree budget");
}

FactorGraph star_union(const MarkedConfiguration& marked, const StarSchedule& schedule) {
    schedule.validate();
    FactorGraph g(marked.config.size());
    for (const auto& l : schedule.levels) g.merge(star_graph(marked, l.threshold, l.radius, l.n));
    return g;
}

FactorGraph leafwise_line_graph(const CoxSample& cox) {
    FactorGraph g(cox.config.size());
    for (const auto& leaf : sorted_leaves(cox))
        for (std::size_t k = 1; k < leaf.size(); ++k) g.add_edge(leaf[k - 1], leaf[k], {EdgeKind::Line, 0});
    return g;
}

FactorGraph lifted_quotient_graph(const CoxSample& cox, double keep_probability, double quotient_radius,
                                  RandomStream& rng) {
    require(keep_probability >= 0.0 && keep_probability <= 1.0, "lift keep probability must lie in [0, 1]");
    require(quotient_radius > 0.0, "lift quotient radius must be positive");
    const auto leaves = sorted_leaves(cox);
    const int axis = cox.subgroup.axes().front();
    FactorGraph g(cox.config.size());
    if (keep_probability == 0.0 || cox.cosets.empty()) return g;

    const int td = cox.subgroup.transversal_dim();
    const ModelGroup quotient = ModelGroup::euclidean(td);
    std::vector<GroupPoint> reps;
    reps.reserve(cox.cosets.size());
    for (const auto& c : cox.cosets) reps.emplace_back(std::span<const double>(c.coords));
    const SpatialIndex index(quotient, reps);
    std::vector<std::size_t> nb;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        index.neighbors(reps[i], quotient_radius, nb);
        for (auto j : nb) {
            if (j <= i) continue;
            if (!rng.bernoulli(keep_probability)) continue;
            const auto& a = leaves[i];
            const auto& b = leaves[j];
            if (a.empty() || b.empty()) continue;
            // Two-pointer sweep for the A-nearest cross pair.
            std::size_t ia = 0, ib = 0, best_a = a[0], best_b = b[0];
            double best = INFINITY;
            while (ia < a.size() && ib < b.size()) {
                const double xa = cox.config.points[a[ia]][axis];
                const double xb = cox.config.points[b[ib]][axis];
                if (std::abs(xa - xb) < best) {
                    best = std::abs(xa - xb);
                    best_a = a[ia];
                    best_b = b[ib];
                }
                if (xa < xb)
                    ++ia;
                else
                    ++ib;
            }
            g.add_edge(best_a, best_b, {EdgeKind::Lift, 0});
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Statistics

std::vector<std::size_t> interior_points(const Configuration& config, double margin) {
    require(margin >= 0.0, "interior margin must be nonnegative");
    const Window d = config.domain();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < config.size(); ++i)
        if (d.contains(config.model.ball_bounds(config.points[i], margin))) out.push_back(i);
    return out;
}

Estimate avg_degree(const FactorGraph& graph, const Configuration& config, double margin) {
    require(graph.vertex_count() == config.size(), "avg_degree: graph and configuration differ in size");
    const auto interior = interior_points(config, margin);
    require(!interior.empty(), "avg_degree: margin leaves no interior points");
    const auto deg = graph.out_degrees();
    double sum = 0.0, sum2 = 0.0;
    for (auto i : interior) {
        const double x = static_cast<double>(deg[i]);
        sum += x;
        sum2 += x * x;
    }
    const double n = static_cast<double>(interior.size());
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
    return Estimate{mean, std::sqrt(var / n)};
}

DegreeTally degree_tally(const FactorGraph& graph, const Configuration& config, double margin) {
    require(graph.vertex_count() == config.size(), "degree_tally: graph and configuration differ in size");
    const auto deg = graph.out_degrees();
    DegreeTally t;
    for (auto i : interior_points(config, margin)) {
        t.degree_sum += static_cast<double>(deg[i]);
        ++t.vertices;
    }
    return t;
}

Estimate pooled_average_degree(const std::vector<DegreeTally>& tallies) {
    require(tallies.size() >= 2, "pooled_average_degree needs at least two replicates");
    double sd = 0.0, sn = 0.0;
    for (const auto& t : tallies) {
        sd += t.degree_sum;
        sn += static_cast<double>(t.vertices);
    }
    require(sn > 0.0, "pooled_average_degree: no interior points in any replicate");
    const double ratio = sd / sn;
    const double m = static_cast<double>(tallies.size());
    const double mean_n = sn / m;
    double ss = 0.0;
    for (const auto& t : tallies) {
        const double r = t.degree_sum - ratio * static_cast<double>(t.vertices);
        ss += r * r;
    }
    return Estimate{ratio, std::sqrt(ss / (m - 1.0) / m) / mean_n};
}

ComponentReport connectivity(const FactorGraph& graph) {
    const std::size_t n = graph.vertex_count();
    UnionFind uf(n);
    for (const auto& e : graph.edges()) uf.unite(e.u, e.v);
    ComponentReport rep;
    for (std::size_t i = 0; i < n; ++i)
        if (uf.find(i) == i) rep.sizes.push_back(uf.size[i]);
    std::sort(rep.sizes.rbegin(), rep.sizes.rend());
    rep.components = rep.sizes.size();
    rep.giant_fraction = n ? static_cast<double>(rep.sizes.front()) / static_cast<double>(n) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Cost experiment

ExperimentReport cost_upper_bound_experiment(const SubgroupSpec& sub, const std::vector<double>& window_sides,
                                             double epsilon, std::size_t replicates, RandomStream& rng,
                                             const CostOptions& options) {
    require(epsilon > 0.0, "cost experiment requires epsilon > 0 (empty star schedule otherwise)");
    require(replicates >= 2, "cost experiment needs at least two replicates");
    require(!window_sides.empty(), "cost experiment needs window sizes");
    const ModelGroup& model = sub.model();
    const StarSchedule schedule = StarSchedule::make_default(model, epsilon, options.n_max);
    const double margin = schedule.max_radius();

    ExperimentReport report;
    for (std::size_t w = 0; w < window_sides.size(); ++w) {
        const double side = window_sides[w];
        require(side > 0.0, "window sides must be positive");
        const Window window = Box::cube(model.dim(), -0.5 * side, 0.5 * side);

        struct Result {
            double degree, giant, line_giant;
        };
        std::vector<Result> results(replicates);
        parallel_for(replicates, options.threads, [&](std::size_t r) {
            RandomStream s = rng.split({w, r});
            RandomStream cox_rng = s.split(0), mark_rng = s.split(1), lift_rng = s.split(2);
            const CoxSample cox = sample_cox_quotient(sub, window, margin, cox_rng);
            const MarkedConfiguration marked = iid_marking(cox.config, mark_rng);
            FactorGraph g = leafwise_line_graph(cox);
            const double line_giant = connectivity(g).giant_fraction;
            g.merge(star_union(marked, schedule));
            if (options.include_lift)
                g.merge(lifted_quotient_graph(cox, options.lift_probability, options.lift_radius, lift_rng));
            results[r] = {avg_degree(g, cox.config, margin).value, connectivity(g).giant_fraction, line_giant};
        });

        auto mean_sd = [&](auto field) {
            double s = 0.0, s2 = 0.0;
            for (const auto& x : results) {
                s += field(x);
                s2 += field(x) * field(x);
            }
            const double n = static_cast<double>(results.size());
            const double m = s / n;
            return std::pair{m, std::sqrt(std::max(0.0, (s2 - n * m * m) / (n - 1)))};
        };
        const double root_n = std::sqrt(static_cast<double>(replicates));
        const auto [deg_m, deg_sd] = mean_sd([](const Result& x) { return x.degree; });
        const auto [giant_m, giant_sd] = mean_sd([](const Result& x) { return x.giant; });
        const auto [line_m, line_sd] = mean_sd([](const Result& x) { return x.line_giant; });
        (void)line_sd;

        CostRow row;
        row.window_side = side;
        row.epsilon = epsilon;
        row.schedule_budget = schedule.budget();
        row.avg_degree = deg_m;
        row.avg_degree_sigma = deg_sd / root_n;
        row.avg_degree_ci = 1.959963984540054 * row.avg_degree_sigma;
        row.giant_fraction = giant_m;
        row.giant_fraction_ci = 1.959963984540054 * giant_sd / root_n;
        row.line_giant_fraction = line_m;
        row.replicates = replicates;
        row.degree_bound_ok = deg_m <= 2.0 + epsilon + 3.0 * row.avg_degree_sigma;
        report.rows.push_back(row);
    }
    report.all_degree_bounds_ok = std::all_of(report.rows.begin(), report.rows.end(),
                                              [](const CostRow& r) { return r.degree_bound_ok; });
    report.giant_non_decreasing = true;
    for (std::size_t k = 1; k < report.rows.size(); ++k)
        if (report.rows[k].giant_fraction < report.rows[k - 1].giant_fraction) report.giant_non_decreasing = false;
    return report;
}

}  // namespace cosetcox
