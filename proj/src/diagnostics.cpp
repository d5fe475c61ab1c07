#include "cosetcox/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "cosetcox/parallel.hpp"
#include "cosetcox/spatial_index.hpp"
#include "cosetcox/stats.hpp"

namespace cosetcox {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

bool same_boxes(const std::vector<Box>& a, const std::vector<Box>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].lo != b[i].lo || a[i].hi != b[i].hi) return false;
    return true;
}

std::uint64_t category(const std::vector<std::size_t>& row, std::size_t cap) {
    std::uint64_t key = 0;
    for (auto c : row) key = key * (cap + 1) + std::min(c, cap);
    return key;
}

// Joint categories of two samples as dense ids, in order of first appearance.
struct Categories {
    std::vector<std::size_t> a, b;
    std::size_t count = 0;
};

Categories categorize(const FidiSample& a, const FidiSample& b, std::size_t cap) {
    require(cap >= 1, "category cap must be at least 1");
    require(std::pow(static_cast<double>(cap + 1), static_cast<double>(a.boxes.size())) < 1.8e19,
            "too many boxes for the joint histogram");
    std::unordered_map<std::uint64_t, std::size_t> ids;
    Categories c;
    auto id_of = [&](const std::vector<std::size_t>& row) {
        const auto [it, inserted] = ids.try_emplace(category(row, cap), ids.size());
        return it->second;
    };
    for (const auto& r : a.rows) c.a.push_back(id_of(r));
    for (const auto& r : b.rows) c.b.push_back(id_of(r));
    c.count = ids.size();
    return c;
}

double plug_in_tv(const std::vector<std::size_t>& ca, const std::vector<std::size_t>& cb, std::size_t k) {
    std::vector<double> h(k, 0.0);
    const double wa = 1.0 / static_cast<double>(ca.size());
    const double wb = 1.0 / static_cast<double>(cb.size());
    for (auto c : ca) h[c] += wa;
    for (auto c : cb) h[c] -= wb;
    double s = 0.0;
    for (double v : h) s += std::abs(v);
    return std::min(1.0, 0.5 * s);
}

Box hull(const std::vector<Box>& boxes) {
    require(!boxes.empty(), "box list is empty");
    Box h = boxes.front();
    for (const auto& b : boxes) {
        require(b.dim() == h.dim(), "boxes differ in dimension");
        for (int i = 0; i < h.dim(); ++i) {
            h.lo[i] = std::min(h.lo[i], b.lo[i]);
            h.hi[i] = std::max(h.hi[i], b.hi[i]);
        }
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// FidiSample

void FidiSample::check_invariants() const {
    for (const auto& r : rows)
        if (r.size() != boxes.size()) throw std::logic_error("fidi row length differs from the box count");
}

std::vector<double> FidiSample::column(std::size_t box) const {
    require(box < boxes.size(), "fidi column out of range");
    std::vector<double> c;
    c.reserve(rows.size());
    for (const auto& r : rows) c.push_back(static_cast<double>(r[box]));
    return c;
}

FidiSample collect_fidi(const std::vector<Box>& boxes, std::size_t replicates, const RandomStream& rng,
                        const std::function<Configuration(RandomStream&)>& sampler, unsigned threads) {
    require(!boxes.empty(), "collect_fidi: no boxes");
    FidiSample out{boxes, std::vector<std::vector<std::size_t>>(replicates)};
    parallel_for(replicates, threads, [&](std::size_t r) {
        RandomStream s = rng.split(r);
        out.rows[r] = fidi(sampler(s), boxes);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Tests

std::vector<GofResult> count_gof_test(const FidiSample& fidi, const std::vector<double>& means) {
    fidi.check_invariants();
    require(fidi.replicates() >= 500, "count_gof_test needs at least 500 replicates");
    require(means.size() == fidi.boxes.size(), "count_gof_test: one mean per box required");
    constexpr std::size_t kTail = 10;
    const double n = static_cast<double>(fidi.replicates());
    std::vector<GofResult> out;
    for (std::size_t b = 0; b < means.size(); ++b) {
        const double mu = means[b];
        require(mu >= 0.0 && std::isfinite(mu), "count_gof_test: means must be finite and nonnegative");
        std::vector<double> obs(kTail + 1, 0.0), exp(kTail + 1, 0.0);
        for (const auto& r : fidi.rows) obs[std::min(r[b], kTail)] += 1.0;
        for (std::size_t k = 0; k < kTail; ++k) exp[k] = n * stats::poisson_pmf(k, mu);
        exp[kTail] = n * stats::poisson_sf(kTail, mu);

        GofResult g;
        bool impossible = false;
        for (std::size_t k = 0; k <= kTail; ++k)
            if (exp[k] == 0.0 && obs[k] > 0.0) impossible = true;
        if (impossible) {
            g.statistic = INFINITY;
            g.p_value = 0.0;
            g.bins = kTail + 1;
            out.push_back(g);
            continue;
        }
        // Merge sparse bins inward from both tails.
        while (obs.size() > 1 && exp.back() < 5.0) {
            exp[exp.size() - 2] += exp.back();
            obs[obs.size() - 2] += obs.back();
            exp.pop_back();
            obs.pop_back();
        }
        while (obs.size() > 1 && exp.front() < 5.0) {
            exp[1] += exp[0];
            obs[1] += obs[0];
            exp.erase(exp.begin());
            obs.erase(obs.begin());
        }
        g.bins = obs.size();
        for (std::size_t k = 0; k < obs.size(); ++k)
            if (exp[k] > 0.0) g.statistic += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
        g.df = static_cast<double>(g.bins) - 1.0;
        g.p_value = g.df > 0.0 ? stats::chi2_sf(g.statistic, g.df) : 1.0;
        out.push_back(g);
    }
    return out;
}

Estimate count_covariance(const FidiSample& fidi, std::size_t i, std::size_t j) {
    fidi.check_invariants();
    require(fidi.replicates() >= 2, "count_covariance needs two replicates");
    const auto x = fidi.column(i);
    const auto y = fidi.column(j);
    const double mx = stats::mean_se(x).mean;
    const double my = stats::mean_se(y).mean;
    std::vector<double> prod(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) prod[k] = (x[k] - mx) * (y[k] - my);
    const auto m = stats::mean_se(prod);
    const double n = static_cast<double>(x.size());
    return Estimate{m.mean * n / (n - 1.0), m.std_error};
}

GofResult two_sample_fidi_test(const FidiSample& a, const FidiSample& b, std::size_t cap) {
    a.check_invariants();
    b.check_invariants();
    require(same_boxes(a.boxes, b.boxes), "two_sample_fidi_test: box lists differ");
    require(a.replicates() > 0 && b.replicates() > 0, "two_sample_fidi_test: empty sample");
    const Categories c = categorize(a, b, cap);
    std::vector<double> oa(c.count, 0.0), ob(c.count, 0.0);
    for (auto k : c.a) oa[k] += 1.0;
    for (auto k : c.b) ob[k] += 1.0;
    const double na = static_cast<double>(a.replicates());
    const double nb = static_cast<double>(b.replicates());
    const double fa = na / (na + nb), fb = nb / (na + nb);

    // Pool categories that are sparse in either sample.
    std::vector<std::pair<double, double>> cells;
    std::pair<double, double> pooled{0.0, 0.0};
    for (std::size_t k = 0; k < c.count; ++k) {
        const double tot = oa[k] + ob[k];
        if (tot * std::min(fa, fb) < 5.0) {
            pooled.first += oa[k];
            pooled.second += ob[k];
        } else {
            cells.emplace_back(oa[k], ob[k]);
        }
    }
    if (pooled.first + pooled.second > 0.0) {
        if ((pooled.first + pooled.second) * std::min(fa, fb) < 5.0 && !cells.empty()) {
            auto smallest = std::min_element(cells.begin(), cells.end(), [](const auto& x, const auto& y) {
                return x.first + x.second < y.first + y.second;
            });
            smallest->first += pooled.first;
            smallest->second += pooled.second;
        } else {
            cells.push_back(pooled);
        }
    }
    GofResult g;
    g.bins = cells.size();
    for (const auto& [x, y] : cells) {
        const double tot = x + y;
        const double ea = tot * fa, eb = tot * fb;
        g.statistic += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    g.df = static_cast<double>(g.bins) - 1.0;
    g.p_value = g.df > 0.0 ? stats::chi2_sf(g.statistic, g.df) : 1.0;
    return g;
}

TvEstimate tv_estimate(const FidiSample& a, const FidiSample& b, RandomStream& rng, std::size_t cap,
                       std::size_t bootstrap) {
    a.check_invariants();
    b.check_invariants();
    require(same_boxes(a.boxes, b.boxes), "tv_estimate: box lists differ");
    require(a.replicates() > 0 && b.replicates() > 0, "tv_estimate: empty sample");
    require(bootstrap >= 20, "tv_estimate: at least 20 bootstrap resamples required");
    const Categories c = categorize(a, b, cap);
    TvEstimate out;
    out.value = plug_in_tv(c.a, c.b, c.count);
    out.bootstrap = bootstrap;
    std::vector<double> boot(bootstrap);
    std::vector<std::size_t> ra(c.a.size()), rb(c.b.size());
    for (std::size_t k = 0; k < bootstrap; ++k) {
        for (auto& x : ra) x = c.a[rng.index(c.a.size())];
        for (auto& x : rb) x = c.b[rng.index(c.b.size())];
        boot[k] = plug_in_tv(ra, rb, c.count);
    }
    std::sort(boot.begin(), boot.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(bootstrap - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return i + 1 < bootstrap ? boot[i] * (1.0 - f) + boot[i + 1] * f : boot[i];
    };
    // Basic bootstrap interval: reflects the resampling bias of the plug-in
    // estimator back around the point estimate.
    out.ci_lo = std::clamp(2.0 * out.value - quantile(0.975), 0.0, 1.0);
    out.ci_hi = std::clamp(2.0 * out.value - quantile(0.025), 0.0, 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Weak convergence

std::vector<Box> default_test_boxes(const SubgroupSpec& sub) {
    const ModelGroup& model = sub.model();
    require(!model.discrete(), "default test boxes are defined for continuous models");
    const int lead = sub.axes().front();
    std::vector<Box> boxes;
    for (int k = 0; k < 6; ++k) {
        Box b = Box::cube(model.dim(), 0.0, 1.0);
        for (int t : sub.transversal_axes()) b.hi[t] = 0.5;
        b.lo[lead] = 2.0 * k;
        b.hi[lead] = 2.0 * k + 1.0;
        boxes.push_back(b);
    }
    return boxes;
}

double folner_parameter_closed(const SubgroupSpec& sub, const Box& B, const FolnerSet& F) {
    require(!sub.model().discrete(), "closed form is for continuous models");
    double v = sub.transversal_box(B).volume();
    const Box ba = sub.a_box(B);
    for (int i = 0; i < sub.dim(); ++i) v *= (ba.hi[i] - ba.lo[i]) + (F.box.hi[i] - F.box.lo[i]);
    return v / F.volume();
}

Estimate folner_parameter_mc(const SubgroupSpec& sub, const Box& B, const FolnerSet& F, std::size_t samples,
                             RandomStream& rng) {
    const ModelGroup& model = sub.model();
    require(!model.discrete(), "folner_parameter_mc is for continuous models");
    require(samples > 0, "folner_parameter_mc needs samples");
    require(F.volume() > 0.0, "lambda_A(F) must be positive");
    model.validate(B);
    // A is normal and right multiplication by A shifts A-coordinates, so
    // B F lies in B with its A-sides widened by F.
    Box region = B;
    for (int i = 0; i < sub.dim(); ++i) {
        const int ax = sub.axes()[i];
        region.lo[ax] += F.box.lo[i];
        region.hi[ax] += F.box.hi[i];
    }
    for (int a = 0; a < region.dim(); ++a) {
        const double pad = 0.25 * (region.hi[a] - region.lo[a]);
        region.lo[a] -= pad;
        region.hi[a] += pad;
    }
    const Box ba = sub.a_box(B);
    std::size_t hits = 0;
    std::vector<double> f(static_cast<std::size_t>(sub.dim()));
    for (std::size_t s = 0; s < samples; ++s) {
        const GroupPoint g = haar_sample(model, region, rng);
        // g ∈ B F iff g f^{-1} ∈ B for some f ∈ F; the best candidate is the
        // point of F closest to A(g) - center(B_A).
        const auto ag = sub.a_coords(g);
        for (int i = 0; i < sub.dim(); ++i)
            f[i] = std::clamp(ag[i] - 0.5 * (ba.lo[i] + ba.hi[i]), F.box.lo[i], F.box.hi[i]);
        if (B.contains(model.mul(g, model.inv(sub.element(f))))) ++hits;
    }
    const double n = static_cast<double>(samples);
    const double q = static_cast<double>(hits) / n;
    const double scale = region.volume() / F.volume();
    return Estimate{scale * q, scale * std::sqrt(q * (1.0 - q) / n)};
}

ConvergenceReport weak_convergence_report(const SubgroupSpec& sub, const std::vector<double>& ns,
                                          const Box& parameter_box, const std::vector<Box>& test_boxes,
                                          std::size_t replicates, const RandomStream& rng,
                                          const ConvergenceOptions& options) {
    require(!ns.empty(), "weak_convergence_report: empty Folner sequence");
    for (std::size_t k = 0; k < ns.size(); ++k) {
        require(ns[k] > 0.0, "Folner sizes must be positive");
        if (k > 0) require(ns[k] > ns[k - 1], "Folner sequence must be increasing");
    }
    require(replicates >= 2, "weak_convergence_report needs replicates");
    const ModelGroup& model = sub.model();
    model.validate(parameter_box);
    const Window panel = hull(test_boxes);
    model.validate(panel);

    ConvergenceReport rep;
    rep.parameter_box = parameter_box;
    rep.test_boxes = test_boxes;

    const FidiSample reference = collect_fidi(
        test_boxes, replicates, rng.split(0),
        [&](RandomStream& r) { return sample_cox_quotient(sub, panel, 0.0, r).config; }, options.threads);

    const Box ba = sub.a_box(parameter_box);
    Box K = ba;
    for (int i = 0; i < K.dim(); ++i) {
        const double h = ba.hi[i] - ba.lo[i];
        K.lo[i] = -h;
        K.hi[i] = h;
    }
    const double p = sub.transversal_box(parameter_box).volume();

    for (std::size_t k = 0; k < ns.size(); ++k) {
        const FolnerSet F = FolnerSet::symmetric(sub, ns[k]);
        ConvergenceRow row;
        row.n = ns[k];
        row.folner_volume = F.volume();
        RandomStream pn_rng = rng.split({2, k});
        const Estimate pn = folner_parameter_mc(sub, parameter_box, F, options.pn_samples, pn_rng);
        row.p_n = pn.value;
        row.p_n_std_error = pn.std_error;
        row.p_n_closed = folner_parameter_closed(sub, parameter_box, F);
        row.p = p;
        row.eps_n = folner_defect(F, K);
        row.lower_bound_ok = row.p_n >= p - 3.0 * row.p_n_std_error;
        row.upper_bound_ok = row.p_n <= (1.0 + row.eps_n) * p + 3.0 * row.p_n_std_error;
        row.coupling_bound = stats::poisson_tv(row.p_n_closed, p);

        const double reach = F.reach();
        const FidiSample sample = collect_fidi(
            test_boxes, replicates, rng.split({1, k}),
            [&](RandomStream& r) { return sample_cox_folner(F, panel, reach, r).config; }, options.threads);
        RandomStream tv_rng = rng.split({3, k});
        row.tv = tv_estimate(sample, reference, tv_rng, options.cap, options.bootstrap);
        rep.rows.push_back(row);
    }

    rep.p_n_decreasing = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        const auto& a = rep.rows[k - 1];
        const auto& b = rep.rows[k];
        const double tol = 3.0 * std::hypot(a.p_n_std_error, b.p_n_std_error);
        if (b.p_n > a.p_n + tol) rep.p_n_decreasing = false;
        if (b.tv.ci_lo > a.tv.ci_hi) ++rep.tv_violations;
    }
    rep.tv_decreasing = rep.rows.back().tv.value < rep.rows.front().tv.value;
    rep.tv_separated = rep.rows.back().tv.ci_hi < rep.rows.front().tv.ci_lo;
    return rep;
}

// ---------------------------------------------------------------------------
// Palm by rerooting

FidiSample palm_reroot_estimate(const std::vector<Configuration>& samples, const std::vector<Box>& boxes,
                                double margin, const RandomStream* one_root_per_sample) {
    require(!samples.empty(), "palm_reroot_estimate: no samples");
    require(!boxes.empty(), "palm_reroot_estimate: no boxes");
    require(margin >= 0.0, "palm_reroot_estimate: margin must be nonnegative");
    std::vector<std::vector<std::vector<std::size_t>>> per_sample(samples.size());
    std::size_t most = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Configuration& config = samples[s];
        const ModelGroup& model = config.model;
        const Window domain = config.domain();
        const SpatialIndex index(model, config.points);
        for (const auto& g : config.points) {
            if (!config.window.contains(g)) continue;
            if (!domain.contains(model.ball_bounds(g, margin))) continue;
            std::vector<Box> moved;
            bool fits = true;
            for (const auto& b : boxes) {
                moved.push_back(model.translate_bounds(g, b));
                fits = fits && domain.contains(moved.back());
            }
            if (!fits) continue;
            const GroupPoint gi = model.inv(g);
            std::vector<std::size_t> row(boxes.size(), 0);
            for (std::size_t k = 0; k < boxes.size(); ++k)
                index.for_each_candidate(moved[k], [&](std::size_t j) {
                    if (boxes[k].contains(model.mul(gi, config.points[j]))) ++row[k];
                });
            per_sample[s].push_back(std::move(row));
        }
        most = std::max(most, per_sample[s].size());
    }
    FidiSample out{boxes, {}};
    for (std::size_t s = 0; s < samples.size(); ++s) {
        auto& rows = per_sample[s];
        if (rows.empty()) continue;
        if (!one_root_per_sample) {
            for (auto& r : rows) out.rows.push_back(std::move(r));
            continue;
        }
        // Uniform root, accepted with probability count / most: every root
        // keeps equal weight, as the Palm law requires.
        RandomStream pick = one_root_per_sample->split(s);
        const std::size_t k = pick.index(rows.size());
        if (pick.uniform() * static_cast<double>(most) < static_cast<double>(rows.size()))
            out.rows.push_back(std::move(rows[k]));
    }
    if (out.rows.empty()) throw std::invalid_argument("palm_reroot_estimate: no interior points");
    return out;
}

}  // namespace cosetcox
