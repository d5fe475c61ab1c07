#include "cosetcox/graphs.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include "doctest.h"

using namespace cosetcox;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edge_set(const FactorGraph& g) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (const auto& e : g.edges()) s.emplace(e.u, e.v);
    return s;
}

// Component label of every vertex by graph search, independent of the
// library's union-find.
std::vector<std::size_t> component_labels(const FactorGraph& g) {
    std::vector<std::vector<std::size_t>> adj(g.vertex_count());
    for (const auto& e : g.edges()) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    std::vector<std::size_t> label(g.vertex_count(), SIZE_MAX);
    std::size_t next = 0;
    for (std::size_t s = 0; s < g.vertex_count(); ++s) {
        if (label[s] != SIZE_MAX) continue;
        std::vector<std::size_t> stack{s};
        label[s] = next;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            for (auto w : adj[v])
                if (label[w] == SIZE_MAX) {
                    label[w] = next;
                    stack.push_back(w);
                }
        }
        ++next;
    }
    return label;
}

}  // namespace

TEST_CASE("factor graph bookkeeping") {
    FactorGraph g(4);
    g.add_arc(2, 1, {EdgeKind::Star, 1});
    CHECK(g.edge_count() == 1);
    CHECK(g.edges()[0].u == 1);
    CHECK(g.edges()[0].arcs == 2);
    g.add_arc(1, 2, {EdgeKind::Star, 2});
    CHECK(g.edge_count() == 1);
    CHECK(g.edges()[0].arcs == 3);
    CHECK(g.edges()[0].provenance.tag() == "star_1");
    g.add_edge(0, 3, {EdgeKind::Line, 0});
    CHECK(g.out_degrees() == std::vector<std::size_t>{1, 1, 1, 1});
    CHECK(g.has_edge(3, 0));
    CHECK_FALSE(g.has_edge(0, 1));
    CHECK_THROWS_AS(g.add_edge(1, 1, {}), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(1, 4, {}), std::invalid_argument);
    CHECK_THROWS_AS(g.merge(FactorGraph(5)), std::invalid_argument);
    CHECK(Provenance{EdgeKind::Lift, 0}.tag() == "lift");
    CHECK(Provenance{EdgeKind::Distance, 0}.tag() == "distance");
}

TEST_CASE("distance graph examples") {
    const auto e2 = ModelGroup::euclidean(2);
    Configuration c(e2, Box::cube(2, 0, 10));
    c.points = {GroupPoint{1, 1}, GroupPoint{4, 5}};
    CHECK(distance_graph(c, 4.0).edge_count() == 0);
    CHECK(distance_graph(c, 6.0).edge_count() == 1);
    CHECK(distance_graph(c, 5.0).edge_count() == 0);
    CHECK_THROWS_AS(distance_graph(c, 0.0), std::invalid_argument);
}

TEST_CASE("distance graph average degree on poisson") {
    // Slivnyak: the interior mean degree is lambda(B(0, R)) = pi R^2.
    const auto e2 = ModelGroup::euclidean(2);
    const double R = 0.7;
    RandomStream rng(301);
    std::vector<DegreeTally> tallies;
    for (int i = 0; i < 1500; ++i) {
        RandomStream r = rng.split(i);
        const auto c = sample_poisson_group(e2, Box::cube(2, 0, 3), R, 1.0, r);
        tallies.push_back(degree_tally(distance_graph(c, R), c, R));
    }
    const auto est = pooled_average_degree(tallies);
    CHECK(std::abs(est.value - std::numbers::pi * R * R) < 3.0 * est.std_error);
}

TEST_CASE("star graph") {
    RandomStream rng(307);
    const auto e2 = ModelGroup::euclidean(2);
    const auto c = sample_poisson_group(e2, Box::cube(2, 0, 5), 1.0, 1.0, rng);
    const auto m = iid_marking(c, rng);
    const auto full = star_graph(m, 1.0, 1.0);
    const auto dist = distance_graph(c, 1.0);
    CHECK(edge_set(full) == edge_set(dist));
    CHECK(full.out_degrees() == dist.out_degrees());
    CHECK(star_graph(m, 1e-12, 1.0).edge_count() == 0);
    const auto partial = star_graph(m, 0.3, 1.0);
    for (const auto& e : partial.edges()) {
        if (e.arcs & 1) CHECK(m.marks[e.u] < 0.3);
        if (e.arcs & 2) CHECK(m.marks[e.v] < 0.3);
        CHECK(e2.dist(c.points[e.u], c.points[e.v]) < 1.0);
    }
    CHECK_THROWS_AS(star_graph(m, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(star_graph(m, 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("star graph average degree is t times the ball volume") {
    const auto e2 = ModelGroup::euclidean(2);
    RandomStream rng(311);
    std::vector<DegreeTally> tallies;
    for (int i = 0; i < 2000; ++i) {
        RandomStream r = rng.split(i);
        const auto c = sample_poisson_group(e2, Box::cube(2, 0, 4), 1.0, 1.0, r);
        tallies.push_back(degree_tally(star_graph(iid_marking(c, r), 0.1, 1.0), c, 1.0));
    }
    const auto est = pooled_average_degree(tallies);
    CHECK(std::abs(est.value - 0.1 * std::numbers::pi) < 3.0 * est.std_error);
}

TEST_CASE("graphs are equivariant under left translation") {
    RandomStream rng(313);
    const auto h = ModelGroup::heisenberg();
    const auto c = sample_poisson_group(h, Box::cube(3, 0, 3), 0.0, 2.0, rng);
    const auto m = iid_marking(c, rng);
    const GroupPoint k = haar_sample(h, Box::cube(3, -5, 5), rng);
    Configuration moved(h, h.translate_bounds(k, c.window));
    for (const auto& p : c.points) moved.points.push_back(h.mul(k, p));
    CHECK(edge_set(distance_graph(c, 1.2)) == edge_set(distance_graph(moved, 1.2)));
    const MarkedConfiguration mm{moved, m.marks};
    CHECK(edge_set(star_graph(m, 0.4, 1.5)) == edge_set(star_graph(mm, 0.4, 1.5)));
}

TEST_CASE("default star schedule") {
    const auto h = ModelGroup::heisenberg();
    const auto s = StarSchedule::make_default(h, 0.5, 3);
    // Hand computation: c = (eps / 2) / sum 1/(n 2^n), v(n) = pi^2 n^4 / 8.
    const double c = 0.25 / (0.5 + 0.125 + 1.0 / 24.0);
    REQUIRE(s.levels.size() == 3);
    for (int n = 1; n <= 3; ++n) {
        const double v = std::numbers::pi * std::numbers::pi * std::pow(n, 4) / 8.0;
        CHECK(s.levels[n - 1].threshold == doctest::Approx(c / (n * v * std::pow(2.0, n))));
        CHECK(s.levels[n - 1].radius == n);
    }
    CHECK(s.levels[0].threshold == doctest::Approx(0.1519817755).epsilon(1e-8));
    CHECK(s.budget() == doctest::Approx(0.25));
    CHECK(s.max_radius() == 3.0);
    CHECK_THROWS_AS(StarSchedule::make_default(h, 0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(StarSchedule::make_default(h, 0.5, 0), std::invalid_argument);
    StarSchedule bad = s;
    bad.levels[1].threshold = bad.levels[0].threshold;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.epsilon = 0.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    for (const auto& m : {ModelGroup::euclidean(1), ModelGroup::euclidean(3), ModelGroup::lattice(2)}) {
        const auto sm = StarSchedule::make_default(m, 0.3, 5);
        CHECK_NOTHROW(sm.validate());
        CHECK(sm.budget() < 0.3);
    }
}

TEST_CASE("star union") {
    RandomStream rng(317);
    const auto h = ModelGroup::heisenberg();
    const auto c = sample_poisson_group(h, Box::cube(3, 0, 4), 1.0, 1.0, rng);
    const auto m = iid_marking(c, rng);
    const auto one = StarSchedule::make_default(h, 0.5, 1);
    const auto u1 = star_union(m, one);
    const auto s1 = star_graph(m, one.levels[0].threshold, 1.0);
    CHECK(edge_set(u1) == edge_set(s1));
    CHECK(u1.out_degrees() == s1.out_degrees());
    const auto three = StarSchedule::make_default(h, 0.5, 3);
    const auto u3 = star_union(m, three);
    for (const auto& e : u3.edges()) {
        CHECK(e.provenance.kind == EdgeKind::Star);
        CHECK(e.provenance.level >= 1);
        CHECK(e.provenance.level <= 3);
    }
}

TEST_CASE("star union average degree stays within its budget") {
    RandomStream rng(319);
    for (const auto& m : {ModelGroup::euclidean(2), ModelGroup::heisenberg()}) {
        CAPTURE(m.name());
        const auto s = StarSchedule::make_default(m, 1.0, 2);
        std::vector<DegreeTally> tallies;
        for (int i = 0; i < 300; ++i) {
            RandomStream r = rng.split(i);
            const auto c = sample_poisson_group(m, Box::cube(m.dim(), 0, 3), s.max_radius(), 1.0, r);
            tallies.push_back(degree_tally(star_union(iid_marking(c, r), s), c, s.max_radius()));
        }
        const auto est = pooled_average_degree(tallies);
        CHECK(est.value <= s.budget() + 3.0 * est.std_error);
    }
}

TEST_CASE("leafwise line graph") {
    RandomStream rng(331);
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    const auto cox = sample_cox_quotient(sub, Box::cube(3, 0, 3), 1.0, rng);
    const auto g = leafwise_line_graph(cox);
    std::map<std::size_t, std::size_t> per_coset;
    for (auto c : cox.coset_of) ++per_coset[c];
    std::size_t expected_edges = 0;
    for (const auto& [c, k] : per_coset) expected_edges += k - 1;
    CHECK(g.edge_count() == expected_edges);
    // Exact mean degree: 2 (k - 1) / k per coset, aggregated.
    const auto deg = g.out_degrees();
    double total = 0.0;
    for (auto d : deg) {
        CHECK(d <= 2);
        total += static_cast<double>(d);
    }
    CHECK(total == doctest::Approx(2.0 * static_cast<double>(expected_edges)));
    for (const auto& e : g.edges()) {
        CHECK(cox.coset_of[e.u] == cox.coset_of[e.v]);
        CHECK(e.provenance.kind == EdgeKind::Line);
    }
    const auto comps = connectivity(g);
    CHECK(comps.components == per_coset.size());
}

TEST_CASE("line graph degree tends to two as segments grow") {
    RandomStream rng(337);
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    double prev = 0.0;
    for (double side : {2.0, 8.0, 32.0}) {
        std::size_t twos = 0, total = 0;
        for (int i = 0; i < 20; ++i) {
            const auto cox = sample_cox_quotient(sub, Box({0, 0, 0}, {2, 2, side}), 0.0, rng);
            for (auto d : leafwise_line_graph(cox).out_degrees()) {
                twos += d == 2;
                ++total;
            }
        }
        const double frac = static_cast<double>(twos) / static_cast<double>(total);
        CHECK(frac > prev);
        prev = frac;
    }
    CHECK(prev > 0.9);
}

TEST_CASE("lifted quotient graph") {
    RandomStream rng(347);
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    const auto cox = sample_cox_quotient(sub, Box::cube(3, 0, 4), 0.5, rng);
    RandomStream lr(1);
    CHECK(lifted_quotient_graph(cox, 0.0, 1.0, lr).edge_count() == 0);
    const auto g = lifted_quotient_graph(cox, 1.0, 1.0, lr);
    std::set<std::pair<std::size_t, std::size_t>> coset_pairs;
    for (const auto& e : g.edges()) {
        const auto a = cox.coset_of[e.u], b = cox.coset_of[e.v];
        CHECK(a != b);
        CHECK(coset_pairs.emplace(std::min(a, b), std::max(a, b)).second);
        CHECK(e.provenance.kind == EdgeKind::Lift);
        const double tq = std::hypot(cox.cosets[a].coords[0] - cox.cosets[b].coords[0],
                                     cox.cosets[a].coords[1] - cox.cosets[b].coords[1]);
        CHECK(tq < 1.0);
    }
    // With p = 1 every close coset pair carrying points is realised once.
    std::size_t close = 0;
    std::vector<std::size_t> load(cox.cosets.size(), 0);
    for (auto c : cox.coset_of) ++load[c];
    for (std::size_t a = 0; a < cox.cosets.size(); ++a)
        for (std::size_t b = a + 1; b < cox.cosets.size(); ++b)
            if (load[a] && load[b] &&
                std::hypot(cox.cosets[a].coords[0] - cox.cosets[b].coords[0],
                           cox.cosets[a].coords[1] - cox.cosets[b].coords[1]) < 1.0)
                ++close;
    CHECK(g.edge_count() == close);
    CHECK_THROWS_AS(lifted_quotient_graph(cox, 1.5, 1.0, lr), std::invalid_argument);
}

TEST_CASE("lifted quotient degree is bounded by the sparsified transversal degree") {
    RandomStream rng(349);
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    const double p = 0.3, Rq = 1.5;
    std::vector<DegreeTally> tallies;
    for (int i = 0; i < 300; ++i) {
        RandomStream r = rng.split(i);
        const auto cox = sample_cox_quotient(sub, Box::cube(3, 0, 4), 0.5, r);
        tallies.push_back(degree_tally(lifted_quotient_graph(cox, p, Rq, r), cox.config, 0.0));
    }
    const auto est = pooled_average_degree(tallies);
    CHECK(est.value <= p * std::numbers::pi * Rq * Rq + 3.0 * est.std_error);
    CHECK(est.value > 0.0);
}

TEST_CASE("average degree") {
    const auto e2 = ModelGroup::euclidean(2);
    Configuration c(e2, Box::cube(2, 0, 10));
    c.points = {GroupPoint{5, 5}, GroupPoint{5.5, 5}};
    FactorGraph empty(2);
    CHECK(avg_degree(empty, c, 1.0).value == 0.0);
    FactorGraph one(2);
    one.add_edge(0, 1, {EdgeKind::Distance, 0});
    CHECK(avg_degree(one, c, 1.0).value == 1.0);
    CHECK_THROWS_AS(avg_degree(one, c, 6.0), std::invalid_argument);
    CHECK(interior_points(c, 5.0).size() == 1);
}

TEST_CASE("connectivity") {
    FactorGraph none(5);
    const auto r0 = connectivity(none);
    CHECK(r0.components == 5);
    CHECK(r0.giant_fraction == doctest::Approx(0.2));
    FactorGraph path(5);
    for (std::size_t i = 0; i + 1 < 5; ++i) path.add_edge(i, i + 1, {EdgeKind::Line, 0});
    const auto r1 = connectivity(path);
    CHECK(r1.components == 1);
    CHECK(r1.giant_fraction == 1.0);
    CHECK(r1.sizes == std::vector<std::size_t>{5});
    CHECK(connectivity(FactorGraph(0)).components == 0);
}

TEST_CASE("adding stars never splits line components and giant grows with epsilon") {
    RandomStream rng(353);
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    const auto cox = sample_cox_quotient(sub, Box::cube(3, -4, 4), 3.0, rng);
    const auto marked = iid_marking(cox.config, rng);
    const auto lines = leafwise_line_graph(cox);
    const auto line_labels = component_labels(lines);
    double prev = connectivity(lines).giant_fraction;
    for (double eps : {0.1, 0.5, 1.0, 2.0}) {
        FactorGraph g = lines;
        g.merge(star_union(marked, StarSchedule::make_default(sub.model(), eps, 3)));
        const auto labels = component_labels(g);
        std::map<std::size_t, std::size_t> image;
        for (std::size_t v = 0; v < labels.size(); ++v) {
            const auto [it, fresh] = image.emplace(line_labels[v], labels[v]);
            CHECK(it->second == labels[v]);
        }
        const auto rep = connectivity(g);
        CHECK(rep.components == std::set<std::size_t>(labels.begin(), labels.end()).size());
        CHECK(rep.giant_fraction >= prev);
        prev = rep.giant_fraction;
    }
}

TEST_CASE("cost experiment") {
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    RandomStream rng(359);
    const auto rep = cost_upper_bound_experiment(sub, {4.0, 6.0}, 0.5, 6, rng);
    REQUIRE(rep.rows.size() == 2);
    for (const auto& row : rep.rows) {
        CHECK(row.avg_degree > 1.0);
        CHECK(row.degree_bound_ok == (row.avg_degree <= 2.5 + 3.0 * row.avg_degree_sigma));
        CHECK(row.schedule_budget == doctest::Approx(0.25));
        CHECK(row.giant_fraction >= row.line_giant_fraction);
        CHECK(row.replicates == 6);
    }
    CostOptions lift;
    lift.include_lift = true;
    RandomStream rng2(359);
    const auto with_lift = cost_upper_bound_experiment(sub, {4.0}, 0.5, 4, rng2, lift);
    CHECK(with_lift.rows[0].avg_degree >= 1.0);
    CHECK_THROWS_AS(cost_upper_bound_experiment(sub, {4.0}, 0.0, 4, rng), std::invalid_argument);
    // Worker count never changes the numbers.
    CostOptions threaded;
    threaded.threads = 3;
    RandomStream a(5), b(5);
    const auto r1 = cost_upper_bound_experiment(sub, {4.0}, 0.5, 6, a);
    const auto r3 = cost_upper_bound_experiment(sub, {4.0}, 0.5, 6, b, threaded);
    CHECK(r1.rows[0].avg_degree == r3.rows[0].avg_degree);
    CHECK(r1.rows[0].giant_fraction == r3.rows[0].giant_fraction);
}
