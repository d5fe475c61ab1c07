#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cosetcox/random.hpp"

namespace cosetcox {

/// Largest chart dimension supported by the fixed-size point type.
inline constexpr int kMaxDim = 4;

/// Tolerance for algebraic identities (group law, metric invariance).
inline constexpr double kAlgebraTol = 1e-9;

enum class ModelKind { Euclidean, IntegerLattice, Heisenberg };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// A point of a model group in its fixed coordinate chart.
class GroupPoint {
public:
    GroupPoint() = default;
    explicit GroupPoint(int dim);
    GroupPoint(std::initializer_list<double> coords);
    explicit GroupPoint(std::span<const double> coords);

    int dim() const noexcept { return dim_; }
    double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
    std::span<const double> coords() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }

    friend bool operator==(const GroupPoint& a, const GroupPoint& b) noexcept;

private:
    std::array<double, kMaxDim> c_{};
    int dim_ = 0;
};

/// Axis-aligned closed box in chart (or subgroup / transversal) coordinates.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    Box() = default;
    Box(std::vector<double> lo_, std::vector<double> hi_);
    static Box cube(int dim, double lo, double hi);

    int dim() const noexcept { return static_cast<int>(lo.size()); }
    /// Lebesgue volume of the box.
    double volume() const;
    bool contains(std::span<const double> x) const;
    bool contains(const GroupPoint& g) const { return contains(g.coords()); }
    bool contains(const Box& inner) const;
    Box intersect(const Box& other) const;
    bool empty() const;
};

/// Bounded window of a model group: a box in chart coordinates.
using Window = Box;

/// One of the three whitelisted unimodular model groups.
///
/// Euclidean(d) and IntegerLattice(d) use vector addition and the Euclidean
/// norm of g^{-1}h. Heisenberg uses the law
///   (x,y,z)(x',y',z') = (x+x', y+y', z+z' + (xy' - yx')/2)
/// with the Cygan-Koranyi gauge ((x^2+y^2)^2 + 16 z^2)^{1/4}. In all three
/// charts the Haar density is 1 (Lebesgue or counting measure).
class ModelGroup {
public:
    static ModelGroup euclidean(int dim);
    static ModelGroup lattice(int dim);
    static ModelGroup heisenberg();

    ModelKind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    bool discrete() const noexcept { return kind_ == ModelKind::IntegerLattice; }
    std::string name() const;

    GroupPoint identity() const;
    GroupPoint mul(const GroupPoint& g, const GroupPoint& h) const;
    GroupPoint inv(const GroupPoint& g) const;
    /// Gauge of g, i.e. dist(identity, g).
    double norm(const GroupPoint& g) const;
    double dist(const GroupPoint& g, const GroupPoint& h) const;

    /// Throws std::invalid_argument unless g is a finite point of this model.
    void validate(const GroupPoint& g) const;
    void validate(const Window& w) const;

    /// Haar measure of a box (cardinality of lattice sites for IntegerLattice).
    double haar_volume(const Window& w) const;
    /// Exact Haar volume of the open ball B(0, r).
    double ball_volume(double r) const;

    /// Chart bounding box of the closed ball B(g, r).
    Box ball_bounds(const GroupPoint& g, double r) const;
    /// Chart bounding box of the left translate g·b (left translation is affine in the chart).
    Box translate_bounds(const GroupPoint& g, const Box& b) const;
    /// Chart bounding box of {g : dist(g, w) <= r}.
    Window dilate(const Window& w, double r) const;

    friend bool operator==(const ModelGroup&, const ModelGroup&) = default;

private:
    ModelGroup(ModelKind kind, int dim) : kind_(kind), dim_(dim) {}

    ModelKind kind_ = ModelKind::Euclidean;
    int dim_ = 0;
};

/// Distinguished amenable closed unimodular noncompact subgroup A.
///
/// For Euclidean / lattice models A is the coordinate flat spanned by the
/// selected axes; for Heisenberg it is the center {(0,0,z)}. All of these
/// are normal, so left cosets are parametrised by the unselected coordinates.
class SubgroupSpec {
public:
    static SubgroupSpec coordinate_flat(const ModelGroup& model, std::vector<int> axes);
    static SubgroupSpec center(const ModelGroup& model);

    const ModelGroup& model() const noexcept { return model_; }
    const std::vector<int>& axes() const noexcept { return axes_; }
    const std::vector<int>& transversal_axes() const noexcept { return transversal_; }
    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    int transversal_dim() const noexcept { return static_cast<int>(transversal_.size()); }
    std::string name() const;

    bool contains(const GroupPoint& g) const;
    /// Coordinates of g along A (its position on its own coset).
    std::vector<double> a_coords(const GroupPoint& g) const;
    /// Element of A with the given subgroup coordinates.
    GroupPoint element(std::span<const double> a) const;
    /// Projection of a chart box onto the A coordinates.
    Box a_box(const Window& w) const;
    /// Projection of a chart box onto the transversal coordinates.
    Box transversal_box(const Window& w) const;

    friend bool operator==(const SubgroupSpec&, const SubgroupSpec&) = default;

private:
    SubgroupSpec(ModelGroup model, std::vector<int> axes);

    ModelGroup model_;
    std::vector<int> axes_;
    std::vector<int> transversal_;
};

/// A point of G/A, given by its transversal coordinates.
struct CosetId {
    std::vector<double> coords;
    friend bool operator==(const CosetId&, const CosetId&) = default;
    friend auto operator<=>(const CosetId&, const CosetId&) = default;
};

/// Finite-volume box F in subgroup coordinates.
struct FolnerSet {
    SubgroupSpec subgroup;
    Box box;

    /// Symmetric box [-n, n]^k in A.
    static FolnerSet symmetric(const SubgroupSpec& sub, double n);
    double volume() const;
    /// sup over f in F of dist(0, f).
    double reach() const;
};

// Operations on model groups.

GroupPoint mul(const ModelGroup& model, const GroupPoint& g, const GroupPoint& h);
double dist(const ModelGroup& model, const GroupPoint& g, const GroupPoint& h);

/// Point uniformly distributed with respect to Haar measure on the window.
GroupPoint haar_sample(const ModelGroup& model, const Window& window, RandomStream& rng);

CosetId coset_project(const SubgroupSpec& sub, const GroupPoint& g);
/// Canonical representative of a coset: transversal coordinates, zeros on A.
GroupPoint embed(const SubgroupSpec& sub, const CosetId& c);

/// Point on embed(c)·A, uniform w.r.t. the coset Haar measure on embed(c)·segment.
GroupPoint coset_haar_sample(const SubgroupSpec& sub, const CosetId& c, const Box& segment,
                             RandomStream& rng);

/// Haar measure of the coset embed(c)·A restricted to the window.
double coset_measure(const SubgroupSpec& sub, const CosetId& c, const Window& window);

struct DisintegrationReport {
    double estimate = 0.0;   ///< MC estimate of the integral over G/A of lambda_{gA}(window)
    double std_error = 0.0;
    double exact = 0.0;      ///< lambda(window)
    double rel_error = 0.0;
    std::size_t samples = 0;
};

DisintegrationReport check_disintegration(const SubgroupSpec& sub, const Window& window,
                                          std::size_t n_samples, RandomStream& rng);

/// lambda_A(KF \ F ∪ F \ KF) / lambda_A(F) for boxes F, K in A.
double folner_defect(const FolnerSet& F, const Box& K);

/// Monte Carlo estimate of lambda(B(0, r)).
double ball_volume_mc(const ModelGroup& model, double r, std::size_t n_samples, RandomStream& rng);

}  // namespace cosetcox
