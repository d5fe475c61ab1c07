#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "cosetcox/processes.hpp"

namespace cosetcox {

/// Count vectors of many replicates over a fixed list of boxes.
struct FidiSample {
    std::vector<Box> boxes;
    std::vector<std::vector<std::size_t>> rows;

    std::size_t replicates() const noexcept { return rows.size(); }
    /// Throws std::logic_error if a row length differs from the box count.
    void check_invariants() const;
    /// Column `box` as doubles.
    std::vector<double> column(std::size_t box) const;
};

/// Draws `replicates` configurations (replicate i from rng.split(i)) and
/// records their fidi on `boxes`.
FidiSample collect_fidi(const std::vector<Box>& boxes, std::size_t replicates, const RandomStream& rng,
                        const std::function<Configuration(RandomStream&)>& sampler, unsigned threads = 1);

struct GofResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

/// Per-box chi-square test of the counts against Poisson(means[i]).
/// Bins 0..9 plus a tail bin for counts >= 10, merged until every expected
/// count is at least 5. Requires at least 500 replicates.
std::vector<GofResult> count_gof_test(const FidiSample& fidi, const std::vector<double>& means);

/// Sample covariance of two columns with a delta-method standard error.
Estimate count_covariance(const FidiSample& fidi, std::size_t i, std::size_t j);

/// Chi-square test of homogeneity on joint count histograms. Each count is
/// capped at `cap` (values >= cap share a category); joint categories with an
/// expected count below 5 in either sample are pooled.
GofResult two_sample_fidi_test(const FidiSample& a, const FidiSample& b, std::size_t cap = 4);

struct TvEstimate {
    double value = 0.0;
    double ci_lo = 0.0;   ///< basic bootstrap 95% interval
    double ci_hi = 0.0;
    std::size_t bootstrap = 0;
};

/// Plug-in total variation between the joint (capped) count laws, with a
/// basic bootstrap CI.
TvEstimate tv_estimate(const FidiSample& a, const FidiSample& b, RandomStream& rng, std::size_t cap = 4,
                       std::size_t bootstrap = 200);

struct ConvergenceRow {
    double n = 0.0;
    double folner_volume = 0.0;  ///< lambda_A(F_n)
    double p_n = 0.0;            ///< MC estimate of lambda_G(B F_n) / lambda_A(F_n)
    double p_n_std_error = 0.0;
    double p_n_closed = 0.0;     ///< box-geometry closed form
    double p = 0.0;              ///< lambda_Q(B A)
    double eps_n = 0.0;          ///< Folner defect of F_n for K = B^{-1}B ∩ A
    bool lower_bound_ok = false; ///< p_n >= p within 3 standard errors
    bool upper_bound_ok = false; ///< p_n <= (1 + eps_n) p within 3 standard errors
    TvEstimate tv;               ///< fidi TV between the Cox-F_n and Cox-G/A samplers
    double coupling_bound = 0.0; ///< d_TV(Poisson(p_n), Poisson(p)), exact
};

struct ConvergenceReport {
    Box parameter_box;             ///< B
    std::vector<Box> test_boxes;   ///< fidi panel
    std::vector<ConvergenceRow> rows;
    bool p_n_decreasing = false;   ///< p_n non-increasing within MC error
    bool tv_decreasing = false;    ///< last TV below first TV
    bool tv_separated = false;     ///< last TV CI entirely below first TV CI
    std::size_t tv_violations = 0; ///< consecutive rows with TV CI strictly above the previous CI
};

struct ConvergenceOptions {
    std::size_t pn_samples = 200000;
    std::size_t bootstrap = 200;
    std::size_t cap = 4;
    unsigned threads = 1;
};

/// Six boxes stacked along the first A axis above a small transversal square.
std::vector<Box> default_test_boxes(const SubgroupSpec& sub);

/// Closed form of lambda_G(B F) / lambda_A(F) for boxes B and F.
double folner_parameter_closed(const SubgroupSpec& sub, const Box& B, const FolnerSet& F);

/// MC estimate of lambda_G(B F) / lambda_A(F) by hit-or-miss over a padded
/// bounding box, membership decided through the group law.
Estimate folner_parameter_mc(const SubgroupSpec& sub, const Box& B, const FolnerSet& F, std::size_t samples,
                             RandomStream& rng);

/// Throws std::invalid_argument unless `ns` is strictly increasing and positive.
ConvergenceReport weak_convergence_report(const SubgroupSpec& sub, const std::vector<double>& ns,
                                          const Box& parameter_box, const std::vector<Box>& test_boxes,
                                          std::size_t replicates, const RandomStream& rng,
                                          const ConvergenceOptions& options = {});

/// Empirical Palm fidi by rerooting: for every point g of the bare window
/// whose margin ball and rerooted boxes g·box lie in the sampled domain, one
/// row of counts of g^{-1}Π in `boxes`. Throws if no such point exists.
/// Rows from one sample are dependent. With `one_root_per_sample` set, each
/// sample contributes at most one uniformly chosen root, accepted with
/// probability (its root count) / (largest root count), so rows are
/// independent and still Palm-weighted.
FidiSample palm_reroot_estimate(const std::vector<Configuration>& samples, const std::vector<Box>& boxes,
                                double margin, const RandomStream* one_root_per_sample = nullptr);

}  // namespace cosetcox
