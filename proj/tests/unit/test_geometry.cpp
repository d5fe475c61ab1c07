#include "cosetcox/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "cosetcox/spatial_index.hpp"
#include "cosetcox/stats.hpp"
#include "doctest.h"

using namespace cosetcox;

namespace {

CoxSample two_lines(double gap, double length, RandomStream& rng) {
    const auto sub = SubgroupSpec::coordinate_flat(ModelGroup::euclidean(2), {0});
    CoxSample s{sub, {CosetId{{0.0}}, CosetId{{gap}}}, Configuration(sub.model(), Box({0, 0}, {length, gap})), {},
                Box({0.0}, {length})};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto n = rng.poisson(length);
        for (std::uint64_t k = 0; k < n; ++k) {
            s.config.points.push_back(coset_haar_sample(sub, s.cosets[c], s.segment, rng));
            s.coset_of.push_back(c);
        }
    }
    return s;
}

}  // namespace

TEST_CASE("spatial index neighbors match brute force") {
    RandomStream rng(201);
    for (const auto& m : {ModelGroup::euclidean(1), ModelGroup::euclidean(2), ModelGroup::euclidean(3),
                          ModelGroup::lattice(2), ModelGroup::heisenberg()}) {
        CAPTURE(m.name());
        std::vector<GroupPoint> pts;
        const Box w = Box::cube(m.dim(), -3.0, 4.0);
        for (int i = 0; i < 400; ++i) pts.push_back(haar_sample(m, w, rng));
        const SpatialIndex index(m, pts);
        std::vector<std::size_t> got;
        for (int q = 0; q < 100; ++q) {
            const auto p = haar_sample(m, m.dilate(w, 1.0), rng);
            const double r = rng.uniform(0.2, 2.5);
            index.neighbors(p, r, got);
            std::vector<std::size_t> want;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (m.dist(p, pts[j]) < r) want.push_back(j);
            CHECK(got == want);
        }
    }
    const SpatialIndex empty(ModelGroup::euclidean(2), {});
    std::vector<std::size_t> out{1, 2};
    empty.neighbors({0, 0}, 1.0, out);
    CHECK(out.empty());
}

TEST_CASE("nearest point with label tie-break") {
    RandomStream rng(203);
    const auto h = ModelGroup::heisenberg();
    std::vector<GroupPoint> pts;
    for (int i = 0; i < 300; ++i) pts.push_back(haar_sample(h, Box::cube(3, 0.0, 5.0), rng));
    std::vector<double> labels(pts.size());
    for (auto& l : labels) l = rng.uniform();
    const SpatialIndex index(h, pts);
    for (int q = 0; q < 500; ++q) {
        const auto p = haar_sample(h, Box::cube(3, -2.0, 7.0), rng);
        double d = 0.0;
        const auto best = index.nearest(p, labels, &d);
        for (const auto& x : pts) CHECK(d <= h.dist(p, x));
        CHECK(d == h.dist(p, pts[best]));
    }
    const auto e2 = ModelGroup::euclidean(2);
    const std::vector<GroupPoint> sym{{-1, 0}, {1, 0}};
    const SpatialIndex si(e2, sym);
    bool tie = false;
    const std::vector<double> l1{0.7, 0.2}, l2{0.1, 0.2};
    CHECK(si.nearest({0, 3}, l1, nullptr, &tie) == 1);
    CHECK(tie);
    CHECK(si.nearest({0, 3}, l2) == 0);
}

TEST_CASE("voronoi of one point owns the window") {
    const auto e2 = ModelGroup::euclidean(2);
    Configuration c(e2, Box::cube(2, 0, 1));
    c.points = {GroupPoint{0.3, 0.3}};
    const auto v = voronoi_assign(c, 16);
    for (auto o : v.owner) CHECK(o == 0);
    CHECK(v.cell_volume[0] == doctest::Approx(1.0));
    Configuration empty(e2, Box::cube(2, 0, 1));
    CHECK_THROWS_AS(voronoi_assign(empty, 8), std::invalid_argument);
}

TEST_CASE("two points split along the bisector") {
    const auto e2 = ModelGroup::euclidean(2);
    Configuration c(e2, Box::cube(2, 0, 1));
    c.points = {GroupPoint{0.2, 0.3}, GroupPoint{0.6, 0.9}};
    const auto v = voronoi_assign(c, 64);
    for (std::size_t k = 0; k < v.owner.size(); ++k) {
        const auto q = v.cell_center(c.window, k);
        const double side = e2.dist(q, c.points[0]) - e2.dist(q, c.points[1]);
        if (side < 0) CHECK(v.owner[k] == 0);
        if (side > 0) CHECK(v.owner[k] == 1);
    }
}

TEST_CASE("tie rate vanishes as the grid refines") {
    const auto e2 = ModelGroup::euclidean(2);
    Configuration c(e2, Box::cube(2, 0, 1));
    c.points = {GroupPoint{0.25, 0.5}, GroupPoint{0.75, 0.5}};
    const std::vector<double> labels{0.9, 0.1};
    double prev = 1.0;
    for (int r : {9, 27, 81, 243}) {
        const auto v = voronoi_assign(c, r, labels);
        const double rate = static_cast<double>(v.tie_cells) / static_cast<double>(v.owner.size());
        CHECK(rate == doctest::Approx(1.0 / r));
        CHECK(rate < prev);
        prev = rate;
        // Tied cells go to the smaller label.
        for (std::size_t k = 0; k < v.owner.size(); ++k)
            if (std::abs(v.cell_center(c.window, k)[0] - 0.5) < 1e-12) CHECK(v.owner[k] == 1);
    }
}

TEST_CASE("voronoi partition and nearest-owner invariant on random samples") {
    RandomStream rng(207);
    for (const auto& m : {ModelGroup::euclidean(2), ModelGroup::heisenberg()}) {
        CAPTURE(m.name());
        const Box w = Box::cube(m.dim(), 0.0, 2.0);
        const auto c = sample_poisson_group(m, w, 1.0, 2.0, rng);
        const int res = m.dim() == 2 ? 128 : 24;
        const auto v = voronoi_assign(c, res);
        CHECK(v.total_volume() == doctest::Approx(m.haar_volume(w)).epsilon(1e-9));
        for (std::size_t k = 0; k < v.owner.size(); ++k) {
            const auto q = v.cell_center(w, k);
            const double dq = m.dist(c.points[v.owner[k]], q);
            for (const auto& p : c.points) REQUIRE(dq <= m.dist(p, q) + 1e-9);
        }
        for (double vol : v.cell_volume) CHECK(vol <= m.haar_volume(w));
    }
}

TEST_CASE("voronoi assignment is equivariant under translation") {
    RandomStream rng(211);
    const auto e2 = ModelGroup::euclidean(2);
    const auto c = sample_poisson_group(e2, Box::cube(2, 0.0, 3.0), 0.0, 3.0, rng);
    const GroupPoint k{1.25, -0.5};
    Configuration moved(e2, e2.translate_bounds(k, c.window));
    for (const auto& p : c.points) moved.points.push_back(e2.mul(k, p));
    const auto labels = coordinate_labels(c);
    CHECK(voronoi_assign(c, 64, labels).owner == voronoi_assign(moved, 64, labels).owner);

    const auto h = ModelGroup::heisenberg();
    const auto ch = sample_poisson_group(h, Box::cube(3, 0.0, 2.0), 0.0, 3.0, rng);
    const GroupPoint kh{0.7, -1.1, 2.3};
    std::vector<GroupPoint> movedh;
    for (const auto& p : ch.points) movedh.push_back(h.mul(kh, p));
    const auto lh = coordinate_labels(ch);
    const SpatialIndex a(h, ch.points), b(h, movedh);
    for (int i = 0; i < 300; ++i) {
        const auto q = haar_sample(h, Box::cube(3, 0.0, 2.0), rng);
        CHECK(a.nearest(q, lh) == b.nearest(h.mul(kh, q), lh));
    }
}

TEST_CASE("leafwise voronoi cells") {
    const auto sub = SubgroupSpec::center(ModelGroup::heisenberg());
    CoxSample s{sub, {CosetId{{0.1, 0.2}}, CosetId{{0.5, 0.5}}, CosetId{{0.9, 0.9}}},
                Configuration(sub.model(), Box::cube(3, 0, 3)), {}, Box({0.0}, {3.0})};
    s.config.points = {GroupPoint{0.1, 0.2, 2.0}, GroupPoint{0.5, 0.5, 1.5}, GroupPoint{0.1, 0.2, 0.0}};
    s.coset_of = {0, 1, 0};
    const auto cells = leafwise_voronoi(s, s.segment);
    REQUIRE(cells.leaves.size() == 2);
    CHECK(cells.empty_cosets == std::vector<std::size_t>{2});
    const auto& l0 = cells.leaves[0];
    CHECK(l0.positions == std::vector<double>{0.0, 2.0});
    CHECK(l0.intervals[0].second == doctest::Approx(1.0));
    CHECK(l0.intervals[1].first == doctest::Approx(1.0));
    const auto& l1 = cells.leaves[1];
    CHECK(l1.intervals[0].first == 0.0);
    CHECK(l1.intervals[0].second == 3.0);

    RandomStream rng(213);
    const auto cox = sample_cox_quotient(sub, Box::cube(3, 0, 3), 0.5, rng);
    const auto lc = leafwise_voronoi(cox, cox.segment);
    for (const auto& leaf : lc.leaves) {
        double total = 0.0;
        for (std::size_t k = 0; k < leaf.points.size(); ++k) {
            const auto [lo, hi] = leaf.intervals[k];
            CHECK(lo <= leaf.positions[k]);
            CHECK(leaf.positions[k] <= hi);
            if (k > 0) CHECK(lo == leaf.intervals[k - 1].second);
            total += hi - lo;
        }
        CHECK(total == doctest::Approx(cox.segment.volume()));
    }
    const auto plane = SubgroupSpec::coordinate_flat(ModelGroup::euclidean(3), {0, 1});
    CoxSample flat{plane, {}, Configuration(plane.model(), Box::cube(3, 0, 1)), {}, Box::cube(2, 0, 1)};
    CHECK_THROWS_AS(leafwise_voronoi(flat, Box({0.0}, {1.0})), std::invalid_argument);
}

TEST_CASE("adjacency between parallel lines") {
    RandomStream rng(217);
    const auto far = high_adjacency_scan(two_lines(3.0, 40.0, rng), 2.0, 1);
    CHECK(far.total_cross_pairs == 0);
    CHECK(far.pairs.empty());

    // Oracle: pairs (s, t) on [0, L]^2 with (s - t)^2 + 9 < 16 have area
    // L^2 - (L - sqrt 7)^2 at unit rate on both lines.
    for (double L : {20.0, 40.0, 80.0}) {
        const double expected = L * L - (L - std::sqrt(7.0)) * (L - std::sqrt(7.0));
        std::vector<double> counts;
        for (int i = 0; i < 400; ++i)
            counts.push_back(static_cast<double>(high_adjacency_scan(two_lines(3.0, L, rng), 4.0, 1).total_cross_pairs));
        const auto m = stats::mean_se(counts);
        CAPTURE(L);
        CHECK(std::abs(m.mean - expected) < 4.0 * m.std_error);
    }
    const auto rep = high_adjacency_scan(two_lines(3.0, 60.0, rng), 4.0, 10, 30.0);
    REQUIRE(rep.pairs.size() == 1);
    CHECK(rep.pairs[0].first == 0);
    CHECK(rep.pairs[0].second == 1);
    CHECK(rep.pairs[0].flagged == (rep.pairs[0].pairs >= 10 && rep.pairs[0].spread >= 30.0));
    CHECK_THROWS_AS(high_adjacency_scan(two_lines(3.0, 5.0, rng), 0.0, 1), std::invalid_argument);
}

TEST_CASE("points of one coset are never adjacent to themselves") {
    const auto sub = SubgroupSpec::coordinate_flat(ModelGroup::euclidean(2), {0});
    CoxSample s{sub, {CosetId{{0.0}}}, Configuration(sub.model(), Box({0, 0}, {10, 0})), {}, Box({0.0}, {10.0})};
    for (int i = 0; i < 10; ++i) {
        s.config.points.push_back(GroupPoint{static_cast<double>(i), 0.0});
        s.coset_of.push_back(0);
    }
    const auto rep = high_adjacency_scan(s, 5.0, 1);
    CHECK(rep.total_cross_pairs == 0);
}
