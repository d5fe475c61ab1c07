#include "cosetcox/group_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cosetcox {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Number of integers in [lo, hi].
double lattice_count(double lo, double hi) {
    const double n = std::floor(hi) - std::ceil(lo) + 1.0;
    return n > 0.0 ? n : 0.0;
}

double box_measure(const Box& b, bool discrete) {
    if (!discrete) return b.volume();
    double v = 1.0;
    for (int i = 0; i < b.dim(); ++i) v *= lattice_count(b.lo[i], b.hi[i]);
    return v;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Euclidean: return "euclidean";
        case ModelKind::IntegerLattice: return "lattice";
        case ModelKind::Heisenberg: return "heisenberg";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "euclidean") return ModelKind::Euclidean;
    if (name == "lattice") return ModelKind::IntegerLattice;
    if (name == "heisenberg") return ModelKind::Heisenberg;
    throw std::invalid_argument("unknown model kind: " + std::string(name));
}

// ---------------------------------------------------------------------------
// GroupPoint

GroupPoint::GroupPoint(int dim) : dim_(dim) {
    require(dim >= 0 && dim <= kMaxDim, "point dimension out of range");
}

GroupPoint::GroupPoint(std::initializer_list<double> coords)
    : GroupPoint(std::span<const double>(coords.begin(), coords.size())) {}

GroupPoint::GroupPoint(std::span<const double> coords) : GroupPoint(static_cast<int>(coords.size())) {
    std::copy(coords.begin(), coords.end(), c_.begin());
}

bool operator==(const GroupPoint& a, const GroupPoint& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
        if (a[i] != b[i]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Box

Box::Box(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    require(lo.size() == hi.size(), "box bounds have mismatched dimensions");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        require(std::isfinite(lo[i]) && std::isfinite(hi[i]), "box bounds must be finite");
        require(lo[i] <= hi[i], "box requires lo <= hi on every axis");
    }
}

Box Box::cube(int dim, double lo, double hi) {
    return Box(std::vector<double>(static_cast<std::size_t>(dim), lo),
               std::vector<double>(static_cast<std::size_t>(dim), hi));
}

double Box::volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
    return v;
}

bool Box::contains(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) return false;
    for (int i = 0; i < dim(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

bool Box::contains(const Box& inner) const {
    if (inner.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
        if (inner.lo[i] < lo[i] || inner.hi[i] > hi[i]) return false;
    return true;
}

Box Box::intersect(const Box& other) const {
    require(other.dim() == dim(), "box dimension mismatch");
    Box out = *this;
    for (int i = 0; i < dim(); ++i) {
        out.lo[i] = std::max(lo[i], other.lo[i]);
        out.hi[i] = std::min(hi[i], other.hi[i]);
        if (out.hi[i] < out.lo[i]) out.hi[i] = out.lo[i];
    }
    return out;
}

bool Box::empty() const { return volume() <= 0.0; }

// ---------------------------------------------------------------------------
// ModelGroup

ModelGroup ModelGroup::euclidean(int dim) {
    require(dim >= 1 && dim <= kMaxDim, "euclidean dimension out of range");
    return {ModelKind::Euclidean, dim};
}

ModelGroup ModelGroup::lattice(int dim) {
    require(dim >= 1 && dim <= kMaxDim, "lattice dimension out of range");
    return {ModelKind::IntegerLattice, dim};
}

ModelGroup ModelGroup::heisenberg() { return {ModelKind::Heisenberg, 3}; }

std::string ModelGroup::name() const {
    if (kind_ == ModelKind::Heisenberg) return "heisenberg";
    return std::string(to_string(kind_)) + "(" + std::to_string(dim_) + ")";
}

GroupPoint ModelGroup::identity() const { return GroupPoint(dim_); }

GroupPoint ModelGroup::mul(const GroupPoint& g, const GroupPoint& h) const {
    require(g.dim() == dim_ && h.dim() == dim_, "dimension mismatch in group product");
    GroupPoint out(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = g[i] + h[i];
    if (kind_ == ModelKind::Heisenberg) out[2] += 0.5 * (g[0] * h[1] - g[1] * h[0]);
    return out;
}

GroupPoint ModelGroup::inv(const GroupPoint& g) const {
    require(g.dim() == dim_, "dimension mismatch in group inverse");
    GroupPoint out(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = -g[i];
    return out;
}

double ModelGroup::norm(const GroupPoint& g) const {
    if (kind_ == ModelKind::Heisenberg) {
        const double r2 = g[0] * g[0] + g[1] * g[1];
        return std::sqrt(std::sqrt(r2 * r2 + 16.0 * g[2] * g[2]));
    }
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += g[i] * g[i];
    return std::sqrt(s);
}

double ModelGroup::dist(const GroupPoint& g, const GroupPoint& h) const {
    if (kind_ == ModelKind::Heisenberg) {
        const double dx = h[0] - g[0];
        const double dy = h[1] - g[1];
        const double dz = h[2] - g[2] - 0.5 * (g[0] * h[1] - g[1] * h[0]);
        const double r2 = dx * dx + dy * dy;
        return std::sqrt(std::sqrt(r2 * r2 + 16.0 * dz * dz));
    }
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double d = h[i] - g[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void ModelGroup::validate(const GroupPoint& g) const {
    require(g.dim() == dim_, "point dimension does not match model");
    for (int i = 0; i < dim_; ++i) {
        require(std::isfinite(g[i]), "point coordinates must be finite");
        if (discrete()) require(g[i] == std::round(g[i]), "lattice points must have integer coordinates");
    }
}

void ModelGroup::validate(const Window& w) const {
    require(w.dim() == dim_, "window dimension does not match model");
}

double ModelGroup::haar_volume(const Window& w) const {
    validate(w);
    return box_measure(w, discrete());
}

double ModelGroup::ball_volume(double r) const {
    if (r <= 0.0) return 0.0;
    switch (kind_) {
        case ModelKind::Euclidean: {
            const double d = dim_;
            return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(r, d);
        }
        case ModelKind::Heisenberg:
            // Gauge ball: |z| < sqrt(r^4 - rho^4)/4 over the disk rho < r.
            return std::numbers::pi * std::numbers::pi * std::pow(r, 4) / 8.0;
        case ModelKind::IntegerLattice: {
            const int m = static_cast<int>(std::ceil(r));
            std::vector<int> idx(static_cast<std::size_t>(dim_), -m);
            double count = 0.0;
            for (;;) {
                double s = 0.0;
                for (int v : idx) s += static_cast<double>(v) * v;
                if (std::sqrt(s) < r) count += 1.0;
                int k = 0;
                while (k < dim_ && ++idx[static_cast<std::size_t>(k)] > m) idx[static_cast<std::size_t>(k++)] = -m;
                if (k == dim_) break;
            }
            return count;
        }
    }
    return 0.0;
}

Box ModelGroup::ball_bounds(const GroupPoint& g, double r) const {
    std::vector<double> lo(static_cast<std::size_t>(dim_)), hi(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
        lo[i] = g[i] - r;
        hi[i] = g[i] + r;
    }
    if (kind_ == ModelKind::Heisenberg) {
        // h = g·u with gauge(u) <= r: |u_xy| <= r, |u_z| <= r^2/4, shear <= |g_xy| r / 2.
        const double reach = 0.25 * r * r + 0.5 * r * std::hypot(g[0], g[1]);
        lo[2] = g[2] - reach;
        hi[2] = g[2] + reach;
    }
    return Box(std::move(lo), std::move(hi));
}

Box ModelGroup::translate_bounds(const GroupPoint& g, const Box& b) const {
    validate(b);
    if (kind_ != ModelKind::Heisenberg) {
        Box out = b;
        for (int i = 0; i < dim_; ++i) {
            out.lo[i] += g[i];
            out.hi[i] += g[i];
        }
        return out;
    }
    // z' = g_z + z + (g_x y - g_y x)/2 is affine, so extremes sit at corners.
    std::vector<double> lo{b.lo[0] + g[0], b.lo[1] + g[1], 0.0};
    std::vector<double> hi{b.hi[0] + g[0], b.hi[1] + g[1], 0.0};
    const double sx = -0.5 * g[1], sy = 0.5 * g[0];
    lo[2] = g[2] + b.lo[2] + std::min(sx * b.lo[0], sx * b.hi[0]) + std::min(sy * b.lo[1], sy * b.hi[1]);
    hi[2] = g[2] + b.hi[2] + std::max(sx * b.lo[0], sx * b.hi[0]) + std::max(sy * b.lo[1], sy * b.hi[1]);
    return Box(std::move(lo), std::move(hi));
}

Window ModelGroup::dilate(const Window& w, double r) const {
    validate(w);
    require(r >= 0.0, "dilation radius must be nonnegative");
    Window out = w;
    for (int i = 0; i < dim_; ++i) {
        out.lo[i] -= r;
        out.hi[i] += r;
    }
    if (kind_ == ModelKind::Heisenberg) {
        const double mx = std::max(std::abs(w.lo[0]), std::abs(w.hi[0]));
        const double my = std::max(std::abs(w.lo[1]), std::abs(w.hi[1]));
        const double reach = 0.25 * r * r + 0.5 * r * std::hypot(mx, my);
        out.lo[2] = w.lo[2] - reach;
        out.hi[2] = w.hi[2] + reach;
    }
    return out;
}

// ---------------------------------------------------------------------------
// SubgroupSpec

SubgroupSpec::SubgroupSpec(ModelGroup model, std::vector<int> axes) : model_(model), axes_(std::move(axes)) {
    std::sort(axes_.begin(), axes_.end());
    require(std::adjacent_find(axes_.begin(), axes_.end()) == axes_.end(), "duplicate subgroup axis");
    require(!axes_.empty(), "subgroup must be noncompact (select at least one axis)");
    require(static_cast<int>(axes_.size()) < model_.dim(), "subgroup must be proper");
    for (int a : axes_) require(a >= 0 && a < model_.dim(), "subgroup axis out of range");
    for (int i = 0; i < model_.dim(); ++i)
        if (!std::binary_search(axes_.begin(), axes_.end(), i)) transversal_.push_back(i);
}

SubgroupSpec SubgroupSpec::coordinate_flat(const ModelGroup& model, std::vector<int> axes) {
    if (model.kind() == ModelKind::Heisenberg) {
        // Only the center is whitelisted: it is normal, and coordinate lines
        // in x or y are not subgroups of the chosen chart law.
        require(axes.size() == 1 && axes[0] == 2, "heisenberg supports only the center subgroup (axis 2)");
    }
    return SubgroupSpec(model, std::move(axes));
}

SubgroupSpec SubgroupSpec::center(const ModelGroup& model) {
    require(model.kind() == ModelKind::Heisenberg, "center subgroup is defined for heisenberg only");
    return SubgroupSpec(model, {2});
}

std::string SubgroupSpec::name() const {
    if (model_.kind() == ModelKind::Heisenberg) return "center";
    std::string s = "axes[";
    for (std::size_t i = 0; i < axes_.size(); ++i) s += (i ? "," : "") + std::to_string(axes_[i]);
    return s + "]";
}

bool SubgroupSpec::contains(const GroupPoint& g) const {
    for (int i : transversal_)
        if (g[i] != 0.0) return false;
    return true;
}

std::vector<double> SubgroupSpec::a_coords(const GroupPoint& g) const {
    std::vector<double> out;
    out.reserve(axes_.size());
    for (int i : axes_) out.push_back(g[i]);
    return out;
}

GroupPoint SubgroupSpec::element(std::span<const double> a) const {
    require(a.size() == axes_.size(), "subgroup coordinate dimension mismatch");
    GroupPoint g = model_.identity();
    for (std::size_t k = 0; k < axes_.size(); ++k) g[axes_[k]] = a[k];
    return g;
}

Box SubgroupSpec::a_box(const Window& w) const {
    Box b;
    for (int i : axes_) {
        b.lo.push_back(w.lo[i]);
        b.hi.push_back(w.hi[i]);
    }
    return b;
}

Box SubgroupSpec::transversal_box(const Window& w) const {
    Box b;
    for (int i : transversal_) {
        b.lo.push_back(w.lo[i]);
        b.hi.push_back(w.hi[i]);
    }
    return b;
}

// ---------------------------------------------------------------------------
// FolnerSet

FolnerSet FolnerSet::symmetric(const SubgroupSpec& sub, double n) {
    require(n > 0.0, "folner size must be positive");
    return FolnerSet{sub, Box::cube(sub.dim(), -n, n)};
}

double FolnerSet::volume() const { return box_measure(box, subgroup.model().discrete()); }

double FolnerSet::reach() const {
    // The gauge restricted to A is monotone in |a| per coordinate, so the
    // sup is attained at a corner of the box.
    const int k = subgroup.dim();
    double best = 0.0;
    for (int mask = 0; mask < (1 << k); ++mask) {
        std::vector<double> a(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) a[j] = (mask >> j & 1) ? box.hi[j] : box.lo[j];
        best = std::max(best, subgroup.model().norm(subgroup.element(a)));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Operations

GroupPoint mul(const ModelGroup& model, const GroupPoint& g, const GroupPoint& h) { return model.mul(g, h); }

double dist(const ModelGroup& model, const GroupPoint& g, const GroupPoint& h) { return model.dist(g, h); }

GroupPoint haar_sample(const ModelGroup& model, const Window& window, RandomStream& rng) {
    model.validate(window);
    require(model.haar_volume(window) > 0.0, "haar_sample requires a window of positive volume");
    GroupPoint g(model.dim());
    for (int i = 0; i < model.dim(); ++i) {
        if (model.discrete()) {
            const auto lo = static_cast<long long>(std::ceil(window.lo[i]));
            const auto hi = static_cast<long long>(std::floor(window.hi[i]));
            g[i] = static_cast<double>(lo + static_cast<long long>(rng.index(static_cast<std::size_t>(hi - lo + 1))));
        } else {
            g[i] = rng.uniform(window.lo[i], window.hi[i]);
        }
    }
    return g;
}

CosetId coset_project(const SubgroupSpec& sub, const GroupPoint& g) {
    CosetId c;
    c.coords.reserve(sub.transversal_axes().size());
    for (int i : sub.transversal_axes()) c.coords.push_back(g[i]);
    return c;
}

GroupPoint embed(const SubgroupSpec& sub, const CosetId& c) {
    require(static_cast<int>(c.coords.size()) == sub.transversal_dim(), "coset id dimension mismatch");
    GroupPoint g = sub.model().identity();
    const auto& t = sub.transversal_axes();
    for (std::size_t k = 0; k < t.size(); ++k) g[t[k]] = c.coords[k];
    return g;
}

GroupPoint coset_haar_sample(const SubgroupSpec& sub, const CosetId& c, const Box& segment, RandomStream& rng) {
    require(segment.dim() == sub.dim(), "segment dimension must match subgroup");
    const bool discrete = sub.model().discrete();
    require(box_measure(segment, discrete) > 0.0, "coset_haar_sample requires a segment of positive volume");
    const ModelGroup lattice_or_flat =
        discrete ? ModelGroup::lattice(sub.dim()) : ModelGroup::euclidean(sub.dim());
    const GroupPoint a = haar_sample(lattice_or_flat, segment, rng);
    return sub.model().mul(embed(sub, c), sub.element(a.coords()));
}

double coset_measure(const SubgroupSpec& sub, const CosetId& c, const Window& window) {
    // For the whitelisted (normal, coordinate) subgroups, embed(c)·A meets the
    // box in the slab of A-coordinates of the box, provided c lies over it.
    const Box t = sub.transversal_box(window);
    if (!t.contains(c.coords)) return 0.0;
    return box_measure(sub.a_box(window), sub.model().discrete());
}

DisintegrationReport check_disintegration(const SubgroupSpec& sub, const Window& window, std::size_t n_samples,
                                          RandomStream& rng) {
    const ModelGroup& model = sub.model();
    model.validate(window);
    require(n_samples > 0, "check_disintegration needs at least one sample");
    DisintegrationReport rep;
    rep.samples = n_samples;
    rep.exact = model.haar_volume(window);
    // Sample cosets from lambda_Q over a transversal box strictly larger than
    // the projection, so that fibres of length zero are exercised too.
    Box t = sub.transversal_box(window);
    for (int i = 0; i < t.dim(); ++i) {
        const double pad = 0.25 * (t.hi[i] - t.lo[i]) + (model.discrete() ? 1.0 : 0.0);
        t.lo[i] -= pad;
        t.hi[i] += pad;
    }
    const double t_vol = box_measure(t, model.discrete());
    if (rep.exact <= 0.0 || t_vol <= 0.0) return rep;
    const ModelGroup quotient =
        model.discrete() ? ModelGroup::lattice(t.dim()) : ModelGroup::euclidean(t.dim());
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const GroupPoint q = haar_sample(quotient, t, rng);
        const double fibre = coset_measure(sub, CosetId{{q.coords().begin(), q.coords().end()}}, window);
        sum += fibre;
        sum2 += fibre * fibre;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    rep.estimate = t_vol * mean;
    rep.std_error = t_vol * std::sqrt(var / n);
    rep.rel_error = std::abs(rep.estimate - rep.exact) / rep.exact;
    return rep;
}

double folner_defect(const FolnerSet& F, const Box& K) {
    const bool discrete = F.subgroup.model().discrete();
    require(K.dim() == F.box.dim(), "K must live in the same subgroup as F");
    const double vf = box_measure(F.box, discrete);
    require(vf > 0.0, "folner_defect requires lambda_A(F) > 0");
    // A is abelian, so KF is the Minkowski sum of the two boxes.
    Box kf = F.box;
    for (int i = 0; i < kf.dim(); ++i) {
        kf.lo[i] = K.lo[i] + F.box.lo[i];
        kf.hi[i] = K.hi[i] + F.box.hi[i];
    }
    const double vkf = box_measure(kf, discrete);
    const double vcap = box_measure(kf.intersect(F.box), discrete);
    const bool overlap = [&] {
        for (int i = 0; i < kf.dim(); ++i)
            if (kf.hi[i] < F.box.lo[i] || F.box.hi[i] < kf.lo[i]) return false;
        return true;
    }();
    return (vkf + vf - 2.0 * (overlap ? vcap : 0.0)) / vf;
}

double ball_volume_mc(const ModelGroup& model, double r, std::size_t n_samples, RandomStream& rng) {
    require(n_samples > 0, "ball_volume_mc needs samples");
    const GroupPoint o = model.identity();
    const Box b = model.ball_bounds(o, r);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < n_samples; ++s)
        if (model.norm(haar_sample(model, b, rng)) < r) ++hits;
    return model.haar_volume(b) * static_cast<double>(hits) / static_cast<double>(n_samples);
}

}  // namespace cosetcox
