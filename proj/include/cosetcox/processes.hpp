#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cosetcox/group_models.hpp"
#include "cosetcox/random.hpp"

namespace cosetcox {

/// Tolerance used to detect duplicate points.
inline constexpr double kDuplicateTol = 1e-12;

/// Finite sample of a point process on a window, sampled on the window
/// dilated by `buffer` (see ModelGroup::dilate).
struct Configuration {
    ModelGroup model;
    Window window;
    double buffer = 0.0;
    std::vector<GroupPoint> points;

    Configuration(ModelGroup m, Window w, double buf = 0.0);

    /// Region on which the sample is exact: the dilated window.
    Window domain() const { return model.dilate(window, buffer); }
    std::size_t size() const noexcept { return points.size(); }
    /// Number of points inside the bare window.
    std::size_t count_in(const Box& b) const;
    /// Throws std::logic_error if points escape the domain or repeat.
    void check_invariants() const;
};

struct MarkedConfiguration {
    Configuration config;
    std::vector<double> marks;
};

/// Cox sample: Poisson cosets of A plus points carried on those cosets.
struct CoxSample {
    SubgroupSpec subgroup;
    std::vector<CosetId> cosets;
    Configuration config;
    /// coset_of[i] indexes `cosets` for config.points[i].
    std::vector<std::size_t> coset_of;
    /// A-coordinate range of the domain: every coset carries points on this segment.
    Box segment;

    void check_invariants() const;
};

enum class PalmConstruction { PoissonWithRoot, CoxWithRootCoset };

struct PalmSample {
    PalmConstruction construction;
    Configuration config;
    std::optional<CoxSample> cox;
    /// Index of the identity in config.points.
    std::size_t root = 0;
};

/// Intensity-t Poisson process on the dilated window (count-then-place).
/// On IntegerLattice models this is Bernoulli(t) site percolation, t <= 1.
Configuration sample_poisson_group(const ModelGroup& model, const Window& window, double buffer, double intensity,
                                   RandomStream& rng);

/// Intensity-t Poisson process of cosets on a transversal box.
std::vector<CosetId> sample_poisson_quotient(const SubgroupSpec& sub, const Box& transversal, double intensity,
                                             RandomStream& rng);

/// Attach i.i.d. Unif[0,1] marks (pairwise distinct).
MarkedConfiguration iid_marking(const Configuration& config, RandomStream& rng);

/// Cox process driven by G/A, sampled exactly on the dilated window.
CoxSample sample_cox_quotient(const SubgroupSpec& sub, const Window& window, double buffer, RandomStream& rng);

/// Cox process driven by a Folner set F. Requires buffer >= F.reach(); the
/// returned sample is exact on window dilated by (buffer - F.reach()).
CoxSample sample_cox_folner(const FolnerSet& F, const Window& window, double buffer, RandomStream& rng);

/// Palm version of the intensity-t Poisson process: Poisson plus the identity.
PalmSample palm_poisson(const ModelGroup& model, const Window& window, double buffer, double intensity,
                        RandomStream& rng);

/// Palm version of the Cox process driven by G/A: Cox sample union an
/// independent unit-rate Poisson on A, plus the identity.
PalmSample palm_cox(const SubgroupSpec& sub, const Window& window, double buffer, RandomStream& rng);

/// Point counts of a configuration in each box.
std::vector<std::size_t> fidi(const Configuration& config, const std::vector<Box>& boxes);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    /// Half-width of the 95% normal-approximation confidence interval.
    double ci95() const { return 1.959963984540054 * std_error; }
};

/// Mean count in the window divided by lambda(window).
Estimate estimate_intensity(const std::vector<Configuration>& samples, const Window& window);

/// Nonnegative test function with compact support inside a box.
struct TestFunction {
    std::string name;
    std::function<double(const GroupPoint&)> f;
    Box support;
};

struct CampbellReport {
    std::string function;
    double lhs = 0.0;        ///< mean of sum_{x in sample} f(x)
    double lhs_std_error = 0.0;
    double rhs = 0.0;        ///< intensity * integral of f by quadrature
    double z = 0.0;
    std::size_t samples = 0;
};

/// Gauss-Legendre tensor quadrature of f over its support box
/// (lattice models: exact sum over sites).
double integrate(const ModelGroup& model, const TestFunction& f, int panels = 16);

CampbellReport campbell_check(const ModelGroup& model, const std::vector<Configuration>& samples,
                              const TestFunction& f, double intensity);

// Columnar text format: one point per row, "x0 .. x{d-1} mark coset".
void write_configuration(std::ostream& os, const Configuration& config, const std::vector<double>* marks = nullptr,
                         const CoxSample* cox = nullptr);

struct ParsedConfiguration {
    Configuration config;
    std::vector<double> marks;           // empty if no marks were written
    std::vector<long long> coset_index;  // -1 where absent
    std::vector<CosetId> cosets;
};

ParsedConfiguration read_configuration(std::istream& is);

}  // namespace cosetcox
