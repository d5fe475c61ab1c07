#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosetcox/group_models.hpp"
#include "json.hpp"

namespace cosetcox::cli {

/// Raised for anything wrong with the configuration; maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string command;

    std::string model = "heisenberg";
    int dim = 3;
    std::string subgroup = "default";  ///< "default", "center", "none" or comma-separated axes
    std::vector<double> window_lo;      ///< empty: unit cube
    std::vector<double> window_hi;
    double buffer = 0.0;
    double intensity = 1.0;
    std::vector<double> folner_ns{1, 2, 4, 8, 16};
    double epsilon = 0.5;
    int n_max = 3;
    std::size_t replicates = 0;  ///< 0 picks the per-command default
    std::uint64_t seed = 1;
    std::string output = "cosetcox_out";
    unsigned threads = 1;
    double p_threshold = 0.01;
    double sigma = 3.0;
    bool svg = false;

    std::string process;  ///< sample / intensity: poisson, cox, palm-poisson, palm-cox
    int resolution = 512;
    double adjacency_radius = 1.0;
    std::size_t adjacency_min_pairs = 3;
    double adjacency_min_spread = 1.0;
    std::vector<double> window_sides{5, 10, 20};
    bool include_lift = false;
    double lift_probability = 0.05;
    double lift_radius = 1.0;
    double palm_buffer = 2.0;
    std::size_t palm_stationary = 0;  ///< 0: ten times the replicate count
    std::size_t pn_samples = 200000;
    std::size_t bootstrap = 200;
    std::size_t cap = 4;

    ModelGroup make_model() const;
    SubgroupSpec make_subgroup() const;
    Window window() const;

    /// Fills command defaults and checks every precondition; throws ConfigError.
    void resolve();
    nlohmann::ordered_json to_json() const;
};

/// Reads a YAML file over the defaults. Unknown keys are rejected.
ExperimentConfig load_config(const std::string& path, const std::string& command);
ExperimentConfig default_config(const std::string& command);

}  // namespace cosetcox::cli
