#include "cli_config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cosetcox::cli {

namespace {

const std::set<std::string> kCommands{"sample",    "intensity", "campbell",  "palm-check",
                                      "cox-converge", "voronoi", "adjacency", "cost"};

void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void allow_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& keys) {
    check(node.IsMap(), where + " must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        check(keys.count(key) == 1, "unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out) {
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

std::vector<double> scalar_or_list(const YAML::Node& n, int dim, const char* what) {
    try {
        if (n.IsScalar()) return std::vector<double>(static_cast<std::size_t>(dim), n.as<double>());
        return n.as<std::vector<double>>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string("bad value for window ") + what);
    }
}

std::vector<int> parse_axes(const std::string& s) {
    std::vector<int> axes;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            axes.push_back(std::stoi(tok, &used));
            check(used == tok.size(), "bad subgroup axis '" + tok + "'");
        } catch (const std::logic_error&) {
            throw ConfigError("bad subgroup axis '" + tok + "'");
        }
    }
    return axes;
}

bool needs_cox(const ExperimentConfig& c) {
    if (c.command == "sample" || c.command == "intensity") return c.process == "cox" || c.process == "palm-cox";
    return c.command == "cox-converge" || c.command == "adjacency" || c.command == "cost";
}

}  // namespace

ModelGroup ExperimentConfig::make_model() const {
    try {
        switch (parse_model_kind(model)) {
            case ModelKind::Euclidean: return ModelGroup::euclidean(dim);
            case ModelKind::IntegerLattice: return ModelGroup::lattice(dim);
            case ModelKind::Heisenberg: return ModelGroup::heisenberg();
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("unknown model");
}

SubgroupSpec ExperimentConfig::make_subgroup() const {
    const ModelGroup m = make_model();
    try {
        if (subgroup == "center") return SubgroupSpec::center(m);
        if (subgroup == "default") {
            if (m.kind() == ModelKind::Heisenberg) return SubgroupSpec::center(m);
            return SubgroupSpec::coordinate_flat(m, {m.dim() - 1});
        }
        check(subgroup != "none", "this command needs a subgroup");
        return SubgroupSpec::coordinate_flat(m, parse_axes(subgroup));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

Window ExperimentConfig::window() const {
    if (window_lo.empty()) return Box::cube(make_model().dim(), 0.0, 1.0);
    return Box(window_lo, window_hi);
}

void ExperimentConfig::resolve() {
    check(kCommands.count(command) == 1, "unknown command '" + command + "'");
    if (model == "heisenberg") dim = 3;
    check(dim >= 1 && dim <= 8, "dim must lie in [1, 8]");
    const ModelGroup m = make_model();
    if (subgroup == "default" && m.discrete()) subgroup = "none";

    if (!window_lo.empty() || !window_hi.empty()) {
        check(window_lo.size() == static_cast<std::size_t>(m.dim()) && window_hi.size() == window_lo.size(),
              "window dimension does not match the model");
        for (std::size_t i = 0; i < window_lo.size(); ++i) {
            check(std::isfinite(window_lo[i]) && std::isfinite(window_hi[i]), "window bounds must be finite");
            check(window_hi[i] > window_lo[i], "window has zero volume");
        }
    }
    check(std::isfinite(buffer) && buffer >= 0.0, "buffer must be nonnegative");
    check(std::isfinite(intensity) && intensity > 0.0, "intensity must be positive");
    check(!m.discrete() || intensity <= 1.0, "lattice intensity is a site probability, at most 1");
    check(threads >= 1, "threads must be at least 1");
    check(p_threshold > 0.0 && p_threshold < 1.0, "p_value threshold must lie in (0, 1)");
    check(sigma > 0.0, "sigma threshold must be positive");

    if (replicates == 0) {
        if (command == "intensity" || command == "campbell" || command == "cox-converge") replicates = 10000;
        else if (command == "palm-check") replicates = 2000;
        else if (command == "cost") replicates = 50;
        else replicates = 1;
    }
    if (process.empty()) process = command == "intensity" ? "cox" : "poisson";
    if (command == "sample")
        check(process == "poisson" || process == "cox" || process == "palm-poisson" || process == "palm-cox",
              "process must be poisson, cox, palm-poisson or palm-cox");
    if (command == "intensity") check(process == "poisson" || process == "cox", "process must be poisson or cox");

    if (needs_cox(*this)) {
        check(!m.discrete(), "Cox processes need a continuous model");
        (void)make_subgroup();
    }
    if (command == "palm-check" && !m.discrete() && subgroup != "none") (void)make_subgroup();
    if (command == "cox-converge") {
        check(!folner_ns.empty(), "folner.n must not be empty");
        for (std::size_t i = 0; i < folner_ns.size(); ++i) {
            check(folner_ns[i] > 0.0, "folner.n entries must be positive");
            check(i == 0 || folner_ns[i] > folner_ns[i - 1], "folner.n must be strictly increasing");
        }
        check(replicates >= 500, "cox-converge needs at least 500 replicates");
        check(pn_samples >= 100, "converge.pn_samples must be at least 100");
        check(cap >= 1, "converge.cap must be at least 1");
    }
    if (command == "adjacency" || command == "cost")
        check(make_subgroup().dim() == 1, "this command needs a one-dimensional subgroup");
    if (command == "cost") {
        check(epsilon > 0.0 && epsilon < 1.0, "star.epsilon must lie in (0, 1)");
        check(n_max >= 1 && n_max <= 12, "star.n_max must lie in [1, 12]");
        check(!window_sides.empty(), "cost.window_sides must not be empty");
        for (double s : window_sides) check(s > 0.0, "cost.window_sides must be positive");
        check(lift_probability >= 0.0 && lift_probability <= 1.0, "cost.lift_probability must lie in [0, 1]");
        check(lift_radius > 0.0, "cost.lift_radius must be positive");
        check(replicates >= 2, "cost needs at least 2 replicates");
    }
    if (command == "voronoi") {
        check(resolution >= 1, "voronoi.resolution must be positive");
        check(std::pow(static_cast<double>(resolution), m.dim()) <= 1 << 26, "voronoi grid too large");
    }
    if (command == "adjacency") {
        check(adjacency_radius > 0.0, "adjacency.radius must be positive");
        check(adjacency_min_spread >= 0.0, "adjacency.min_spread must be nonnegative");
    }
    if (command == "palm-check") {
        check(palm_buffer > 0.0, "palm.buffer must be positive");
        if (palm_stationary == 0) palm_stationary = 10 * replicates;
        check(replicates >= 100, "palm-check needs at least 100 replicates");
    }
    if (command == "campbell") check(replicates >= 2, "campbell needs at least 2 replicates");
    if (command == "intensity") check(replicates >= 2, "intensity needs at least 2 replicates");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
    const Window w = window();
    nlohmann::ordered_json j;
    j["command"] = command;
    j["model"] = model;
    j["dim"] = make_model().dim();
    j["subgroup"] = subgroup;
    j["window"] = {{"lo", w.lo}, {"hi", w.hi}};
    j["buffer"] = buffer;
    j["intensity"] = intensity;
    j["process"] = process;
    j["folner"] = {{"n", folner_ns}};
    j["star"] = {{"epsilon", epsilon}, {"n_max", n_max}};
    j["replicates"] = replicates;
    j["seed"] = seed;
    j["threads"] = threads;
    j["output"] = output;
    j["thresholds"] = {{"p_value", p_threshold}, {"sigma", sigma}};
    j["svg"] = svg;
    j["voronoi"] = {{"resolution", resolution}};
    j["adjacency"] = {{"radius", adjacency_radius},
                      {"min_pairs", adjacency_min_pairs},
                      {"min_spread", adjacency_min_spread}};
    j["cost"] = {{"window_sides", window_sides},
                 {"include_lift", include_lift},
                 {"lift_probability", lift_probability},
                 {"lift_radius", lift_radius}};
    j["palm"] = {{"buffer", palm_buffer}, {"stationary_samples", palm_stationary}};
    j["converge"] = {{"pn_samples", pn_samples}, {"bootstrap", bootstrap}, {"cap", cap}};
    return j;
}

ExperimentConfig default_config(const std::string& command) {
    ExperimentConfig c;
    c.command = command;
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& command) {
    ExperimentConfig c = default_config(command);
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot read config '" + path + "': " + e.what());
    }
    if (root.IsNull()) return c;
    allow_keys(root, "config",
               {"model", "dim", "subgroup", "window", "buffer", "intensity", "process", "folner", "star",
                "replicates", "seed", "threads", "output", "thresholds", "svg", "voronoi", "adjacency", "cost",
                "palm", "converge"});
    read(root, "model", c.model);
    if (c.model != "heisenberg") c.dim = 2;
    read(root, "dim", c.dim);
    check(c.model != "heisenberg" || c.dim == 3, "the Heisenberg model is three-dimensional");
    if (root["subgroup"]) {
        const auto& s = root["subgroup"];
        if (s.IsSequence()) {
            std::string joined;
            for (const auto& a : s) joined += (joined.empty() ? "" : ",") + a.as<std::string>();
            c.subgroup = joined;
        } else {
            read(root, "subgroup", c.subgroup);
        }
    }
    if (const auto w = root["window"]) {
        allow_keys(w, "window", {"lo", "hi", "side"});
        const int d = c.model == "heisenberg" ? 3 : c.dim;
        if (w["side"]) {
            check(!w["lo"] && !w["hi"], "window takes either side or lo/hi");
            double side = 0.0;
            read(w, "side", side);
            c.window_lo.assign(static_cast<std::size_t>(std::max(d, 0)), -0.5 * side);
            c.window_hi.assign(static_cast<std::size_t>(std::max(d, 0)), 0.5 * side);
        } else {
            check(w["lo"] && w["hi"], "window needs lo and hi");
            c.window_lo = scalar_or_list(w["lo"], d, "lo");
            c.window_hi = scalar_or_list(w["hi"], d, "hi");
        }
    }
    read(root, "buffer", c.buffer);
    read(root, "intensity", c.intensity);
    read(root, "process", c.process);
    if (const auto f = root["folner"]) {
        allow_keys(f, "folner", {"n"});
        read(f, "n", c.folner_ns);
    }
    if (const auto s = root["star"]) {
        allow_keys(s, "star", {"epsilon", "n_max"});
        read(s, "epsilon", c.epsilon);
        read(s, "n_max", c.n_max);
    }
    read(root, "replicates", c.replicates);
    read(root, "seed", c.seed);
    read(root, "threads", c.threads);
    read(root, "output", c.output);
    read(root, "svg", c.svg);
    if (const auto t = root["thresholds"]) {
        allow_keys(t, "thresholds", {"p_value", "sigma"});
        read(t, "p_value", c.p_threshold);
        read(t, "sigma", c.sigma);
    }
    if (const auto v = root["voronoi"]) {
        allow_keys(v, "voronoi", {"resolution"});
        read(v, "resolution", c.resolution);
    }
    if (const auto a = root["adjacency"]) {
        allow_keys(a, "adjacency", {"radius", "min_pairs", "min_spread"});
        read(a, "radius", c.adjacency_radius);
        read(a, "min_pairs", c.adjacency_min_pairs);
        read(a, "min_spread", c.adjacency_min_spread);
    }
    if (const auto k = root["cost"]) {
        allow_keys(k, "cost", {"window_sides", "include_lift", "lift_probability", "lift_radius"});
        read(k, "window_sides", c.window_sides);
        read(k, "include_lift", c.include_lift);
        read(k, "lift_probability", c.lift_probability);
        read(k, "lift_radius", c.lift_radius);
    }
    if (const auto p = root["palm"]) {
        allow_keys(p, "palm", {"buffer", "stationary_samples"});
        read(p, "buffer", c.palm_buffer);
        read(p, "stationary_samples", c.palm_stationary);
    }
    if (const auto v = root["converge"]) {
        allow_keys(v, "converge", {"pn_samples", "bootstrap", "cap"});
        read(v, "pn_samples", c.pn_samples);
        read(v, "bootstrap", c.bootstrap);
        read(v, "cap", c.cap);
    }
    return c;
}

}  // namespace cosetcox::cli
