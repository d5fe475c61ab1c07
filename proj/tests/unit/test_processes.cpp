#include "cosetcox/processes.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cosetcox/diagnostics.hpp"
#include "cosetcox/stats.hpp"
#include "doctest.h"

using namespace cosetcox;

namespace {

// Simpson rule over a rectangle; an oracle independent of the library's
// Gauss-Legendre quadrature.
template <class F>
double simpson2(F f, double x0, double x1, double y0, double y1, int n = 400) {
    const double hx = (x1 - x0) / n, hy = (y1 - y0) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double wi = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        for (int j = 0; j <= n; ++j) {
            const double wj = (j == 0 || j == n) ? 1 : (j % 2 ? 4 : 2);
            s += wi * wj * f(x0 + i * hx, y0 + j * hy);
        }
    }
    return s * hx * hy / 9.0;
}

}  // namespace

TEST_CASE("poisson intensity and independence on disjoint halves") {
    const auto e2 = ModelGroup::euclidean(2);
    const Box w = Box::cube(2, 0.0, 1.0);
    RandomStream rng(101);
    const std::vector<Box> halves{Box({0, 0}, {0.5, 1}), Box({0.5, 0}, {1, 1})};
    const auto fs = collect_fidi(halves, 4000, rng,
                                 [&](RandomStream& r) { return sample_poisson_group(e2, w, 0.0, 5.0, r); });
    double total = 0.0;
    for (const auto& row : fs.rows) total += static_cast<double>(row[0] + row[1]);
    const double mean = total / 4000.0;
    CHECK(std::abs(mean - 5.0) < 4.0 * std::sqrt(5.0 / 4000.0));
    const auto cov = count_covariance(fs, 0, 1);
    CHECK(std::abs(cov.value) < 3.0 * cov.std_error);
    for (const auto& g : count_gof_test(fs, {2.5, 2.5})) CHECK(g.p_value > 0.01);
}

TEST_CASE("poisson degenerate inputs") {
    const auto e2 = ModelGroup::euclidean(2);
    RandomStream rng(103);
    const auto c = sample_poisson_group(e2, Box({0, 0}, {0, 0}), 0.0, 5.0, rng);
    CHECK(c.points.empty());
    CHECK_THROWS_AS(sample_poisson_group(e2, Box::cube(2, 0, 1), 0.0, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson_group(e2, Box::cube(2, 0, 1), -1.0, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson_group(ModelGroup::lattice(2), Box::cube(2, 0, 1), 0.0, 1.5, rng),
                    std::invalid_argument);
}

TEST_CASE("samplers keep configurations simple and inside the domain") {
    RandomStream rng(107);
    for (const auto& m : {ModelGroup::euclidean(1), ModelGroup::euclidean(3), ModelGroup::heisenberg(),
                          ModelGroup::lattice(2)}) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto c = sample_poisson_group(m, Box::cube(m.dim(), -1.0, 1.5), 0.7, m.discrete() ? 0.4 : 3.0, rng);
            CHECK_NOTHROW(c.check_invariants());
        }
    }
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = sample_cox_quotient(center, Box::cube(3, 0.0, 2.0), 0.5, rng);
        CHECK_NOTHROW(s.check_invariants());
        CHECK_NOTHROW(s.config.check_invariants());
        const auto f = sample_cox_folner(FolnerSet::symmetric(center, 3.0), Box::cube(3, 0.0, 2.0), 4.0, rng);
        CHECK_NOTHROW(f.check_invariants());
    }
    Configuration dup(ModelGroup::euclidean(2), Box::cube(2, 0, 1));
    dup.points = {GroupPoint{0.5, 0.5}, GroupPoint{0.5, 0.5}};
    CHECK_THROWS_AS(dup.check_invariants(), std::logic_error);
    Configuration out(ModelGroup::euclidean(2), Box::cube(2, 0, 1), 0.1);
    out.points = {GroupPoint{1.5, 0.5}};
    CHECK_THROWS_AS(out.check_invariants(), std::logic_error);
}

TEST_CASE("lattice poisson is site percolation") {
    const auto z2 = ModelGroup::lattice(2);
    RandomStream rng(109);
    double total = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const auto c = sample_poisson_group(z2, Box::cube(2, 0.0, 9.0), 0.0, 0.3, rng);
        CHECK_NOTHROW(c.check_invariants());
        total += static_cast<double>(c.size());
    }
    // 100 sites, Binomial(100, 0.3).
    CHECK(std::abs(total / n - 30.0) < 4.0 * std::sqrt(100 * 0.3 * 0.7 / n));
}

TEST_CASE("poisson cosets on the quotient") {
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    RandomStream rng(113);
    FidiSample counts{{Box::cube(3, 0, 1)}, {}};
    for (int i = 0; i < 4000; ++i)
        counts.rows.push_back({sample_poisson_quotient(center, Box::cube(2, 0.0, 2.0), 1.0, rng).size()});
    const auto m = stats::mean_se(counts.column(0));
    CHECK(std::abs(m.mean - 4.0) < 4.0 * m.std_error);
    CHECK(count_gof_test(counts, {4.0})[0].p_value > 0.01);
    int empty = 0;
    for (int i = 0; i < 1000; ++i) empty += sample_poisson_quotient(center, Box::cube(2, 0.0, 2.0), 1e-6, rng).empty();
    CHECK(empty >= 995);
}

TEST_CASE("iid marks are uniform and independent of locations") {
    const auto e2 = ModelGroup::euclidean(2);
    RandomStream rng(127);
    std::vector<double> marks, xs;
    for (int i = 0; i < 200; ++i) {
        const auto c = sample_poisson_group(e2, Box::cube(2, 0.0, 3.0), 0.0, 2.0, rng);
        const auto m = iid_marking(c, rng);
        REQUIRE(m.marks.size() == c.size());
        for (std::size_t k = 0; k < c.size(); ++k) {
            marks.push_back(m.marks[k]);
            xs.push_back(c.points[k][0]);
        }
    }
    CHECK(stats::ks_uniform(marks).p_value > 0.01);
    const auto mm = stats::mean_se(marks), mx = stats::mean_se(xs);
    double cov = 0.0;
    for (std::size_t k = 0; k < marks.size(); ++k) cov += (marks[k] - mm.mean) * (xs[k] - mx.mean);
    const double corr = cov / static_cast<double>(marks.size()) / (mm.sd * mx.sd);
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(marks.size())));
    const Configuration empty(e2, Box::cube(2, 0, 1));
    CHECK(iid_marking(empty, rng).marks.empty());
    RandomStream a(5), b(5);
    const auto c = sample_poisson_group(e2, Box::cube(2, 0.0, 3.0), 0.0, 2.0, a);
    (void)sample_poisson_group(e2, Box::cube(2, 0.0, 3.0), 0.0, 2.0, b);
    CHECK(iid_marking(c, a).marks == iid_marking(c, b).marks);
}

TEST_CASE("cox processes have intensity one") {
    RandomStream rng(131);
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    const auto line = SubgroupSpec::coordinate_flat(ModelGroup::euclidean(2), {1});
    for (const auto& sub : {center, line}) {
        CAPTURE(sub.name());
        const Box w = Box::cube(sub.model().dim(), 0.0, 1.0);
        std::vector<Configuration> q, f1, f2;
        for (int i = 0; i < 4000; ++i) {
            q.push_back(sample_cox_quotient(sub, w, 0.0, rng).config);
            const auto F1 = FolnerSet::symmetric(sub, 1.0), F2 = FolnerSet::symmetric(sub, 0.05);
            f1.push_back(sample_cox_folner(F1, w, F1.reach(), rng).config);
            f2.push_back(sample_cox_folner(F2, w, F2.reach(), rng).config);
        }
        for (const auto* s : {&q, &f1, &f2}) {
            const auto e = estimate_intensity(*s, w);
            CHECK(std::abs(e.value - 1.0) < 3.5 * e.std_error);
        }
    }
}

TEST_CASE("cox coset counts are poisson given the cosets") {
    RandomStream rng(137);
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    FidiSample per_coset{{Box::cube(3, 0, 1)}, {}};
    double len = 0.0;
    while (per_coset.rows.size() < 3000) {
        const auto s = sample_cox_quotient(center, Box::cube(3, 0.0, 1.0), 0.0, rng);
        len = s.segment.volume();
        std::vector<std::size_t> counts(s.cosets.size(), 0);
        for (auto c : s.coset_of) ++counts[c];
        for (auto k : counts) per_coset.rows.push_back({k});
    }
    CHECK(len == doctest::Approx(1.0));
    CHECK(count_gof_test(per_coset, {len})[0].p_value > 0.01);
    // No transversal extent: no cosets, no points.
    const auto none = sample_cox_quotient(center, Box({0, 0, 0}, {0, 0, 1}), 0.0, rng);
    CHECK(none.cosets.empty());
    CHECK(none.config.points.empty());
    CHECK_THROWS_AS(sample_cox_quotient(SubgroupSpec::coordinate_flat(ModelGroup::lattice(2), {0}),
                                        Box::cube(2, 0, 3), 0.0, rng),
                    std::invalid_argument);
}

TEST_CASE("cox folner sampler enforces the propagation buffer") {
    RandomStream rng(139);
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    const auto F = FolnerSet::symmetric(center, 4.0);
    CHECK_THROWS_AS(sample_cox_folner(F, Box::cube(3, 0, 1), F.reach() - 0.1, rng), std::invalid_argument);
    const auto s = sample_cox_folner(F, Box::cube(3, 0, 1), F.reach() + 0.5, rng);
    CHECK(s.config.buffer == doctest::Approx(0.5));
    // Every point lies on its base coset within the F-segment of a base point.
    for (std::size_t i = 0; i < s.config.size(); ++i)
        CHECK(coset_project(center, s.config.points[i]) == s.cosets[s.coset_of[i]]);
}

TEST_CASE("intensity estimator") {
    RandomStream rng(149);
    const auto e2 = ModelGroup::euclidean(2);
    std::vector<Configuration> s;
    for (int i = 0; i < 3000; ++i) s.push_back(sample_poisson_group(e2, Box::cube(2, 0, 1), 0.0, 5.0, rng));
    const auto e = estimate_intensity(s, Box::cube(2, 0, 1));
    CHECK(std::abs(e.value - 5.0) < 3.5 * e.std_error);
    CHECK(e.ci95() > 0.0);
    CHECK_THROWS_AS(estimate_intensity({}, Box::cube(2, 0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(estimate_intensity(s, Box({0, 0}, {0, 1})), std::invalid_argument);
}

TEST_CASE("quadrature against an independent oracle") {
    const auto e2 = ModelGroup::euclidean(2);
    const TestFunction f{"exp_dist", [&](const GroupPoint& x) { return std::exp(-e2.norm(x)); },
                         Box::cube(2, -2.0, 2.0)};
    const double oracle = simpson2([](double x, double y) { return std::exp(-std::hypot(x, y)); }, -2, 2, -2, 2);
    CHECK(integrate(e2, f) == doctest::Approx(oracle).epsilon(1e-5));
    // Frozen oracle value.
    CHECK(oracle == doctest::Approx(4.0999221292).epsilon(1e-7));
    const TestFunction poly{"xyz", [](const GroupPoint& x) { return x[0] * x[1] * x[2] + 1.0; },
                            Box({0, 0, 0}, {1, 2, 3})};
    CHECK(integrate(ModelGroup::heisenberg(), poly) == doctest::Approx(0.5 * 2.0 * 4.5 + 6.0));
    const TestFunction ind{"one", [](const GroupPoint&) { return 1.0; }, Box::cube(2, 0.0, 2.0)};
    CHECK(integrate(ModelGroup::lattice(2), ind) == 9.0);
}

TEST_CASE("campbell identity") {
    RandomStream rng(151);
    const auto e2 = ModelGroup::euclidean(2);
    const Box w = Box::cube(2, -3.0, 3.0);
    std::vector<Configuration> s;
    for (int i = 0; i < 3000; ++i) s.push_back(sample_poisson_group(e2, w, 0.0, 1.0, rng));
    const TestFunction f{"exp_dist", [&](const GroupPoint& x) { return std::exp(-e2.norm(x)); },
                         Box::cube(2, -2.0, 2.0)};
    const auto rep = campbell_check(e2, s, f, 1.0);
    const double oracle = simpson2([](double x, double y) { return std::exp(-std::hypot(x, y)); }, -2, 2, -2, 2);
    CHECK(std::abs(rep.lhs - oracle) < 3.5 * rep.lhs_std_error);
    CHECK(std::abs(rep.z) < 3.5);

    const Box u({0, 0}, {1, 2});
    const TestFunction ind{"indicator", [](const GroupPoint&) { return 1.0; }, u};
    const auto ri = campbell_check(e2, s, ind, 1.0);
    CHECK(ri.rhs == doctest::Approx(u.volume()));

    const TestFunction zero{"zero", [](const GroupPoint&) { return 0.0; }, u};
    const auto rz = campbell_check(e2, s, zero, 1.0);
    CHECK(rz.lhs == 0.0);
    CHECK(rz.rhs == 0.0);
    CHECK(rz.z == 0.0);

    const TestFunction wide{"wide", [](const GroupPoint&) { return 1.0; }, Box::cube(2, -4.0, 0.0)};
    CHECK_THROWS_AS(campbell_check(e2, s, wide, 1.0), std::invalid_argument);
}

TEST_CASE("palm version of the poisson process") {
    RandomStream rng(157);
    const auto e2 = ModelGroup::euclidean(2);
    const double t = 2.0, R = 0.8;
    const Box w = Box::cube(2, -1.0, 1.0);
    double total = 0.0;
    const int n = 5000;
    for (int i = 0; i < n; ++i) {
        const auto p = palm_poisson(e2, w, 0.0, t, rng);
        REQUIRE(p.config.points[p.root] == e2.identity());
        for (const auto& g : p.config.points) total += e2.norm(g) < R ? 1.0 : 0.0;
    }
    // Slivnyak: t * lambda(B(0, R)) + 1 for the root.
    const double expected = t * std::numbers::pi * R * R + 1.0;
    CHECK(std::abs(total / n - expected) < 4.0 * std::sqrt(t * std::numbers::pi * R * R / n));
    CHECK_THROWS_AS(palm_poisson(e2, Box::cube(2, 1.0, 2.0), 0.0, 1.0, rng), std::invalid_argument);

    const auto z2 = ModelGroup::lattice(2);
    for (int i = 0; i < 50; ++i) {
        const auto p = palm_poisson(z2, Box::cube(2, -2.0, 2.0), 0.0, 0.5, rng);
        CHECK_NOTHROW(p.config.check_invariants());
        CHECK(p.config.points[p.root] == z2.identity());
    }
}

TEST_CASE("palm version of the cox process") {
    RandomStream rng(163);
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    const Box w = Box::cube(3, -0.5, 0.5);
    FidiSample on_root{{Box::cube(3, 0, 1)}, {}};
    double len = 0.0;
    for (int i = 0; i < 3000; ++i) {
        RandomStream r = rng.split(i);
        const auto p = palm_cox(center, w, 0.0, r);
        REQUIRE(p.cox.has_value());
        REQUIRE(p.config.points[p.root] == center.model().identity());
        CHECK_NOTHROW(p.cox->check_invariants());
        const std::size_t root_coset = p.cox->coset_of[p.root];
        CHECK(p.cox->cosets[root_coset] == coset_project(center, center.model().identity()));
        std::size_t k = 0;
        for (auto c : p.cox->coset_of) k += c == root_coset;
        on_root.rows.push_back({k - 1});
        len = p.cox->segment.volume();
    }
    CHECK(count_gof_test(on_root, {len})[0].p_value > 0.01);
}

TEST_CASE("fidi counts") {
    const auto e2 = ModelGroup::euclidean(2);
    Configuration c(e2, Box::cube(2, 0.0, 1.0));
    const std::vector<Box> quads{Box({0, 0}, {0.5, 0.5}), Box({0.5, 0}, {1, 0.5}), Box({0, 0.5}, {0.5, 1}),
                                 Box({0.5, 0.5}, {1, 1})};
    CHECK(fidi(c, quads) == std::vector<std::size_t>{0, 0, 0, 0});
    c.points.push_back({0.7, 0.2});
    CHECK(fidi(c, quads) == std::vector<std::size_t>{0, 1, 0, 0});
    CHECK_THROWS_AS(fidi(c, {Box({0, 0}, {1.5, 1})}), std::invalid_argument);

    RandomStream rng(167);
    const auto fs = collect_fidi(quads, 4000, rng,
                                 [&](RandomStream& r) { return sample_poisson_group(e2, c.window, 0.0, 1.0, r); });
    for (const auto& g : count_gof_test(fs, {0.25, 0.25, 0.25, 0.25})) CHECK(g.p_value > 0.01);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) {
            const auto cv = count_covariance(fs, i, j);
            CHECK(std::abs(cv.value) < 3.5 * cv.std_error);
        }
}

TEST_CASE("sampling is deterministic per seed") {
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    RandomStream a(99), b(99);
    const auto sa = sample_cox_quotient(center, Box::cube(3, 0, 2), 1.0, a);
    const auto sb = sample_cox_quotient(center, Box::cube(3, 0, 2), 1.0, b);
    REQUIRE(sa.config.size() == sb.config.size());
    for (std::size_t i = 0; i < sa.config.size(); ++i) CHECK(sa.config.points[i] == sb.config.points[i]);
}

TEST_CASE("configuration text format round trips exactly") {
    RandomStream rng(173);
    const auto center = SubgroupSpec::center(ModelGroup::heisenberg());
    const auto s = sample_cox_quotient(center, Box::cube(3, 0, 1), 0.5, rng);
    const auto m = iid_marking(s.config, rng);
    std::stringstream io;
    write_configuration(io, s.config, &m.marks, &s);
    const auto parsed = read_configuration(io);
    CHECK(parsed.config.model == s.config.model);
    CHECK(parsed.config.buffer == s.config.buffer);
    REQUIRE(parsed.config.size() == s.config.size());
    for (std::size_t i = 0; i < s.config.size(); ++i) {
        CHECK(parsed.config.points[i] == s.config.points[i]);
        CHECK(parsed.marks[i] == m.marks[i]);
        CHECK(parsed.coset_index[i] == static_cast<long long>(s.coset_of[i]));
    }
    CHECK(parsed.cosets == s.cosets);

    const auto z2 = ModelGroup::lattice(2);
    const auto c = sample_poisson_group(z2, Box::cube(2, 0, 4), 0.0, 0.5, rng);
    std::stringstream io2;
    write_configuration(io2, c);
    const auto p2 = read_configuration(io2);
    CHECK(p2.marks.empty());
    CHECK(p2.config.points.size() == c.points.size());
    std::stringstream bad("not a configuration\n");
    CHECK_THROWS(read_configuration(bad));
}
