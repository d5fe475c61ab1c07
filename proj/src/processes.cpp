#include "cosetcox/processes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace cosetcox {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

bool lex_less(const GroupPoint& a, const GroupPoint& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (a[i] != b[i]) return a[i] < b[i];
    return false;
}

bool near_equal(const GroupPoint& a, const GroupPoint& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (std::abs(a[i] - b[i]) > kDuplicateTol) return false;
    return true;
}

// Indices of points that duplicate an earlier point (in sorted order).
std::vector<std::size_t> find_duplicates(const std::vector<GroupPoint>& pts) {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lex_less(pts[a], pts[b]); });
    std::vector<std::size_t> dups;
    for (std::size_t k = 1; k < order.size(); ++k)
        if (near_equal(pts[order[k - 1]], pts[order[k]])) dups.push_back(order[k]);
    return dups;
}

// Uniform point in the box, continuous models only.
GroupPoint uniform_in(const Box& b, RandomStream& rng) {
    GroupPoint g(b.dim());
    for (int i = 0; i < b.dim(); ++i) g[i] = rng.uniform(b.lo[i], b.hi[i]);
    return g;
}

// Enumerate lattice sites of a box in row-major order.
template <class Fn>
void for_each_site(const Box& b, Fn&& fn) {
    const int d = b.dim();
    std::vector<long long> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        lo[i] = static_cast<long long>(std::ceil(b.lo[i]));
        hi[i] = static_cast<long long>(std::floor(b.hi[i]));
        if (hi[i] < lo[i]) return;
    }
    std::vector<long long> idx = lo;
    GroupPoint g(d);
    for (;;) {
        for (int i = 0; i < d; ++i) g[i] = static_cast<double>(idx[i]);
        fn(g);
        int k = d - 1;
        while (k >= 0 && ++idx[k] > hi[k]) {
            idx[k] = lo[k];
            --k;
        }
        if (k < 0) break;
    }
}

std::vector<GroupPoint> poisson_points(const Box& region, bool discrete, double intensity, RandomStream& rng) {
    std::vector<GroupPoint> pts;
    if (discrete) {
        require(intensity <= 1.0, "lattice Poisson (Bernoulli site percolation) requires intensity <= 1");
        for_each_site(region, [&](const GroupPoint& g) {
            if (rng.bernoulli(intensity)) pts.push_back(g);
        });
        return pts;
    }
    const double vol = region.volume();
    if (vol <= 0.0) return pts;
    const auto n = rng.poisson(intensity * vol);
    pts.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) pts.push_back(uniform_in(region, rng));
    // Coincident draws have probability zero; replacing one by a fresh
    // uniform draw keeps the law of the process.
    for (auto dups = find_duplicates(pts); !dups.empty(); dups = find_duplicates(pts))
        for (auto i : dups) pts[i] = uniform_in(region, rng);
    return pts;
}

void require_continuous(const ModelGroup& model, const char* what) {
    if (model.discrete())
        throw std::invalid_argument(std::string(what) + " is defined for continuous models only");
}

// Unit-rate Poisson points on embed(c)·segment.
void add_coset_points(const SubgroupSpec& sub, const CosetId& c, std::size_t coset_index, const Box& segment,
                      RandomStream& rng, CoxSample& out) {
    const GroupPoint base = embed(sub, c);
    const auto n = rng.poisson(segment.volume());
    for (std::uint64_t k = 0; k < n; ++k) {
        const GroupPoint a = uniform_in(segment, rng);
        out.config.points.push_back(sub.model().mul(base, sub.element(a.coords())));
        out.coset_of.push_back(coset_index);
    }
}

void dedupe_cox(CoxSample& s, RandomStream& rng) {
    for (auto dups = find_duplicates(s.config.points); !dups.empty(); dups = find_duplicates(s.config.points)) {
        for (auto i : dups) {
            const GroupPoint base = embed(s.subgroup, s.cosets[s.coset_of[i]]);
            const GroupPoint a = uniform_in(s.segment, rng);
            s.config.points[i] = s.subgroup.model().mul(base, s.subgroup.element(a.coords()));
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Types

Configuration::Configuration(ModelGroup m, Window w, double buf) : model(m), window(std::move(w)), buffer(buf) {
    model.validate(window);
    require(buffer >= 0.0, "buffer must be nonnegative");
}

std::size_t Configuration::count_in(const Box& b) const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [&](const GroupPoint& g) { return b.contains(g); }));
}

void Configuration::check_invariants() const {
    const Window d = domain();
    for (const auto& p : points) {
        model.validate(p);
        if (!d.contains(p)) throw std::logic_error("configuration point outside the dilated window");
    }
    if (!find_duplicates(points).empty()) throw std::logic_error("configuration is not simple");
}

void CoxSample::check_invariants() const {
    config.check_invariants();
    if (coset_of.size() != config.points.size()) throw std::logic_error("coset assignment size mismatch");
    for (std::size_t i = 0; i < config.points.size(); ++i) {
        if (coset_of[i] >= cosets.size()) throw std::logic_error("coset index out of range");
        if (coset_project(subgroup, config.points[i]) != cosets[coset_of[i]])
            throw std::logic_error("point does not lie on its coset");
    }
    auto sorted = cosets;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::logic_error("cosets are not pairwise distinct");
}

// ---------------------------------------------------------------------------
// Samplers

Configuration sample_poisson_group(const ModelGroup& model, const Window& window, double buffer, double intensity,
                                   RandomStream& rng) {
    require(intensity > 0.0, "intensity must be positive");
    Configuration c(model, window, buffer);
    c.points = poisson_points(c.domain(), model.discrete(), intensity, rng);
    return c;
}

std::vector<CosetId> sample_poisson_quotient(const SubgroupSpec& sub, const Box& transversal, double intensity,
                                             RandomStream& rng) {
    require(intensity > 0.0, "intensity must be positive");
    require(transversal.dim() == sub.transversal_dim(), "transversal box dimension mismatch");
    std::vector<CosetId> out;
    for (const auto& g : poisson_points(transversal, sub.model().discrete(), intensity, rng))
        out.push_back(CosetId{{g.coords().begin(), g.coords().end()}});
    return out;
}

MarkedConfiguration iid_marking(const Configuration& config, RandomStream& rng) {
    MarkedConfiguration m{config, {}};
    m.marks.reserve(config.size());
    for (std::size_t i = 0; i < config.size(); ++i) m.marks.push_back(rng.uniform());
    // Ties have probability zero; resample until all marks are distinct.
    for (;;) {
        std::vector<std::size_t> order(m.marks.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return m.marks[a] < m.marks[b]; });
        bool clean = true;
        for (std::size_t k = 1; k < order.size(); ++k) {
            if (m.marks[order[k]] == m.marks[order[k - 1]]) {
                m.marks[order[k]] = rng.uniform();
                clean = false;
            }
        }
        if (clean) break;
    }
    return m;
}

CoxSample sample_cox_quotient(const SubgroupSpec& sub, const Window& window, double buffer, RandomStream& rng) {
    require_continuous(sub.model(), "sample_cox_quotient");
    CoxSample s{sub, {}, Configuration(sub.model(), window, buffer), {}, {}};
    const Window d = s.config.domain();
    s.segment = sub.a_box(d);
    s.cosets = sample_poisson_quotient(sub, sub.transversal_box(d), 1.0, rng);
    for (std::size_t c = 0; c < s.cosets.size(); ++c) add_coset_points(sub, s.cosets[c], c, s.segment, rng, s);
    dedupe_cox(s, rng);
    return s;
}

CoxSample sample_cox_folner(const FolnerSet& F, const Window& window, double buffer, RandomStream& rng) {
    const SubgroupSpec& sub = F.subgroup;
    require_continuous(sub.model(), "sample_cox_folner");
    const double vf = F.volume();
    require(vf > 0.0, "sample_cox_folner requires lambda_A(F) > 0");
    const double reach = F.reach();
    if (buffer < reach)
        throw std::invalid_argument("sample_cox_folner: buffer " + std::to_string(buffer) +
                                    " is smaller than the propagation reach " + std::to_string(reach));
    const double analysis = buffer - reach;
    CoxSample s{sub, {}, Configuration(sub.model(), window, analysis), {}, {}};
    const Window d = s.config.domain();
    s.segment = sub.a_box(d);

    // x·F meets D exactly when x lies in D·F^{-1}: D stretched along A.
    Window base_region = d;
    for (int k = 0; k < sub.dim(); ++k) {
        const int ax = sub.axes()[k];
        base_region.lo[ax] = d.lo[ax] - F.box.hi[k];
        base_region.hi[ax] = d.hi[ax] - F.box.lo[k];
    }
    const auto base = poisson_points(base_region, false, 1.0 / vf, rng);
    for (const auto& x : base) {
        const std::size_t idx = s.cosets.size();
        s.cosets.push_back(coset_project(sub, x));
        const auto n = rng.poisson(vf);
        for (std::uint64_t k = 0; k < n; ++k) {
            const GroupPoint f = uniform_in(F.box, rng);
            GroupPoint p = sub.model().mul(x, sub.element(f.coords()));
            if (!d.contains(p)) continue;
            s.config.points.push_back(p);
            s.coset_of.push_back(idx);
        }
    }
    // Coincidences along one segment have probability zero; drop them.
    auto dups = find_duplicates(s.config.points);
    std::sort(dups.rbegin(), dups.rend());
    for (auto i : dups) {
        s.config.points.erase(s.config.points.begin() + static_cast<std::ptrdiff_t>(i));
        s.coset_of.erase(s.coset_of.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return s;
}

PalmSample palm_poisson(const ModelGroup& model, const Window& window, double buffer, double intensity,
                        RandomStream& rng) {
    Configuration c = sample_poisson_group(model, window, buffer, intensity, rng);
    const GroupPoint root = model.identity();
    require(c.domain().contains(root), "palm_poisson requires the identity inside the dilated window");
    if (model.discrete()) {
        // The site process may already contain the root; the Palm version is
        // then Bernoulli off the root plus the root.
        std::erase(c.points, root);
    }
    c.points.push_back(root);
    const std::size_t root_index = c.points.size() - 1;
    return PalmSample{PalmConstruction::PoissonWithRoot, std::move(c), std::nullopt, root_index};
}

PalmSample palm_cox(const SubgroupSpec& sub, const Window& window, double buffer, RandomStream& rng) {
    RandomStream cox_rng = rng.split(0);
    RandomStream root_rng = rng.split(1);
    CoxSample s = sample_cox_quotient(sub, window, buffer, cox_rng);
    const GroupPoint root = sub.model().identity();
    require(s.config.domain().contains(root), "palm_cox requires the identity inside the dilated window");
    const std::size_t idx = s.cosets.size();
    s.cosets.push_back(coset_project(sub, root));
    add_coset_points(sub, s.cosets.back(), idx, s.segment, root_rng, s);
    dedupe_cox(s, root_rng);
    for (std::size_t i = 0; i < s.config.points.size(); ++i) {
        if (s.config.points[i] != root) continue;
        s.config.points.erase(s.config.points.begin() + static_cast<std::ptrdiff_t>(i));
        s.coset_of.erase(s.coset_of.begin() + static_cast<std::ptrdiff_t>(i));
        break;
    }
    s.config.points.push_back(root);
    s.coset_of.push_back(idx);
    PalmSample p{PalmConstruction::CoxWithRootCoset, s.config, std::nullopt, s.config.points.size() - 1};
    p.cox = std::move(s);
    return p;
}

std::vector<std::size_t> fidi(const Configuration& config, const std::vector<Box>& boxes) {
    const Window d = config.domain();
    std::vector<std::size_t> counts;
    counts.reserve(boxes.size());
    for (const auto& b : boxes) {
        require(b.dim() == config.model.dim(), "fidi box dimension mismatch");
        require(d.contains(b), "fidi box escapes the sampled window");
        counts.push_back(config.count_in(b));
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Estimators

Estimate estimate_intensity(const std::vector<Configuration>& samples, const Window& window) {
    require(!samples.empty(), "estimate_intensity needs at least one sample");
    const ModelGroup& model = samples.front().model;
    const double vol = model.haar_volume(window);
    require(vol > 0.0, "estimate_intensity needs a window of positive volume");
    double sum = 0.0, sum2 = 0.0;
    for (const auto& s : samples) {
        require(s.model == model, "samples must come from one model");
        require(s.domain().contains(window), "samples must cover the estimation window");
        const double c = static_cast<double>(s.count_in(window));
        sum += c;
        sum2 += c * c;
    }
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
    return Estimate{mean / vol, std::sqrt(var / n) / vol};
}

double integrate(const ModelGroup& model, const TestFunction& f, int panels) {
    model.validate(f.support);
    const int d = model.dim();
    if (model.discrete()) {
        double s = 0.0;
        for_each_site(f.support, [&](const GroupPoint& g) { s += f.f(g); });
        return s;
    }
    using Rule = boost::math::quadrature::gauss<double, 10>;
    GroupPoint x(d);
    // Nested tensor rule, one axis at a time.
    std::function<double(int)> over_axis = [&](int axis) -> double {
        if (axis == d) return f.f(x);
        const double lo = f.support.lo[axis], hi = f.support.hi[axis];
        const double h = (hi - lo) / panels;
        double total = 0.0;
        for (int p = 0; p < panels; ++p) {
            total += Rule::integrate(
                [&](double t) {
                    x[axis] = t;
                    return over_axis(axis + 1);
                },
                lo + p * h, lo + (p + 1) * h);
        }
        return total;
    };
    return over_axis(0);
}

CampbellReport campbell_check(const ModelGroup& model, const std::vector<Configuration>& samples,
                              const TestFunction& f, double intensity) {
    require(!samples.empty(), "campbell_check needs samples");
    CampbellReport rep;
    rep.function = f.name;
    rep.samples = samples.size();
    double sum = 0.0, sum2 = 0.0;
    for (const auto& s : samples) {
        if (!s.window.contains(f.support))
            throw std::invalid_argument("campbell_check: test function support touches the buffer zone");
        double v = 0.0;
        for (const auto& p : s.points)
            if (f.support.contains(p)) v += f.f(p);
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(samples.size());
    rep.lhs = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum2 - n * rep.lhs * rep.lhs) / (n - 1)) : 0.0;
    rep.lhs_std_error = std::sqrt(var / n);
    rep.rhs = intensity * integrate(model, f);
    if (rep.lhs_std_error > 0.0)
        rep.z = (rep.lhs - rep.rhs) / rep.lhs_std_error;
    else
        rep.z = (rep.lhs == rep.rhs) ? 0.0 : std::copysign(INFINITY, rep.lhs - rep.rhs);
    return rep;
}

}  // namespace cosetcox
