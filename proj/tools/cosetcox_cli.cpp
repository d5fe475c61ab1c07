// Experiment runner: one subcommand per check, YAML config, CSV + JSON output.
//
// Exit codes: 0 success, 1 a statistical assertion failed, 2 bad config or
// runtime error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "cosetcox/diagnostics.hpp"
#include "cosetcox/geometry.hpp"
#include "cosetcox/graphs.hpp"
#include "cosetcox/parallel.hpp"
#include "cosetcox/processes.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cosetcox;
using cli::ExperimentConfig;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Artifacts {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    ordered_json results = ordered_json::object();
    std::optional<bool> passed;  ///< empty when the command asserts nothing
    std::string svg;
};

std::vector<std::string> coord_header(int d) {
    std::vector<std::string> h;
    for (int i = 0; i < d; ++i) h.push_back("x" + std::to_string(i));
    return h;
}

// Maps a point index to a stable colour.
std::string colour(std::size_t i) {
    const std::uint64_t h = splitmix64(i + 1);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", unsigned(h & 0xff), unsigned((h >> 8) & 0xff),
                  unsigned((h >> 16) & 0xff));
    return buf;
}

struct SvgCanvas {
    Box frame;
    double size = 600.0;
    std::ostringstream body;

    double sx(double x) const { return (x - frame.lo[0]) / (frame.hi[0] - frame.lo[0]) * size; }
    double sy(double y) const { return size - (y - frame.lo[1]) / (frame.hi[1] - frame.lo[1]) * size; }

    void rect(const Box& b, const std::string& fill, const std::string& stroke = "none") {
        body << "<rect x=\"" << num(sx(b.lo[0])) << "\" y=\"" << num(sy(b.hi[1])) << "\" width=\""
             << num(sx(b.hi[0]) - sx(b.lo[0])) << "\" height=\"" << num(sy(b.lo[1]) - sy(b.hi[1]))
             << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void dot(double x, double y, const std::string& fill) {
        body << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"2\" fill=\"" << fill
             << "\"/>\n";
    }
    std::string finish(const std::string& metadata) const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n"
           << "<metadata><![CDATA[" << metadata << "]]></metadata>\n"
           << body.str() << "</svg>\n";
        return os.str();
    }
};

Box project2(const Box& b) { return Box({b.lo[0], b.lo[1]}, {b.hi[0], b.hi[1]}); }

Artifacts run_sample(const ExperimentConfig& c) {
    const ModelGroup model = c.make_model();
    const Window w = c.window();
    RandomStream rng = RandomStream(c.seed).split(0);
    std::optional<CoxSample> cox;
    Configuration config(model, w, c.buffer);
    if (c.process == "poisson") {
        config = sample_poisson_group(model, w, c.buffer, c.intensity, rng);
    } else if (c.process == "palm-poisson") {
        config = palm_poisson(model, w, c.buffer, c.intensity, rng).config;
    } else if (c.process == "cox") {
        cox = sample_cox_quotient(c.make_subgroup(), w, c.buffer, rng);
        config = cox->config;
    } else {
        auto p = palm_cox(c.make_subgroup(), w, c.buffer, rng);
        cox = std::move(p.cox);
        config = p.config;
    }
    Artifacts a;
    a.header = coord_header(model.dim());
    a.header.insert(a.header.end(), {"coset", "in_window"});
    for (std::size_t i = 0; i < config.size(); ++i) {
        std::vector<std::string> row;
        for (double x : config.points[i].coords()) row.push_back(num(x));
        row.push_back(cox ? std::to_string(cox->coset_of[i]) : "-1");
        row.push_back(w.contains(config.points[i]) ? "1" : "0");
        a.rows.push_back(std::move(row));
    }
    const Window dom = config.domain();
    a.results["points"] = config.size();
    a.results["points_in_window"] = config.count_in(w);
    a.results["domain"] = {{"lo", dom.lo}, {"hi", dom.hi}};
    if (cox) a.results["cosets"] = cox->cosets.size();
    if (c.svg && model.dim() >= 2) {
        SvgCanvas svg{project2(dom), 600.0, {}};
        svg.rect(project2(w), "none", "black");
        for (std::size_t i = 0; i < config.size(); ++i)
            svg.dot(config.points[i][0], config.points[i][1], cox ? colour(cox->coset_of[i]) : "black");
        a.svg = svg.finish("");
    }
    return a;
}

Artifacts run_intensity(const ExperimentConfig& c) {
    const ModelGroup model = c.make_model();
    const Window w = c.window();
    const RandomStream root = RandomStream(c.seed).split(1);
    std::vector<Configuration> samples(c.replicates, Configuration(model, w));
    const bool cox = c.process == "cox";
    const std::optional<SubgroupSpec> sub = cox ? std::optional(c.make_subgroup()) : std::nullopt;
    parallel_for(c.replicates, c.threads, [&](std::size_t r) {
        RandomStream rng = root.split(r);
        samples[r] = cox ? sample_cox_quotient(*sub, w, c.buffer, rng).config
                         : sample_poisson_group(model, w, c.buffer, c.intensity, rng);
    });
    const Estimate e = estimate_intensity(samples, w);
    const double expected = cox ? 1.0 : c.intensity;
    const double z = (e.value - expected) / e.std_error;
    Artifacts a;
    a.header = {"process", "estimate", "std_error", "ci95", "expected", "z", "pass"};
    a.passed = std::abs(z) <= c.sigma;
    a.rows.push_back({c.process, num(e.value), num(e.std_error), num(e.ci95()), num(expected), num(z),
                      *a.passed ? "1" : "0"});
    a.results = {{"estimate", e.value}, {"std_error", e.std_error}, {"ci95", e.ci95()},
                 {"expected", expected}, {"z", z}};
    return a;
}

Artifacts run_campbell(const ExperimentConfig& c) {
    const ModelGroup model = c.make_model();
    const Window w = c.window();
    std::vector<double> lo, hi;
    for (int i = 0; i < w.dim(); ++i) {
        const double q = 0.25 * (w.hi[i] - w.lo[i]);
        lo.push_back(w.lo[i] + q);
        hi.push_back(w.hi[i] - q);
    }
    const Box s(lo, hi);
    const std::vector<TestFunction> fns{
        {"indicator", [](const GroupPoint&) { return 1.0; }, s},
        {"polynomial",
         [s](const GroupPoint& x) {
             double p = 1.0;
             for (int i = 0; i < x.dim(); ++i) p *= (x[i] - s.lo[i]) / (s.hi[i] - s.lo[i]);
             return 1.0 + p;
         },
         s},
        {"exp_norm", [model](const GroupPoint& x) { return std::exp(-model.norm(x)); }, s},
    };
    const RandomStream root = RandomStream(c.seed).split(2);
    std::vector<Configuration> samples(c.replicates, Configuration(model, w));
    parallel_for(c.replicates, c.threads, [&](std::size_t r) {
        RandomStream rng = root.split(r);
        samples[r] = sample_poisson_group(model, w, 0.0, c.intensity, rng);
    });
    Artifacts a;
    a.header = {"function", "lhs", "lhs_std_error", "rhs", "z", "pass"};
    a.passed = true;
    a.results["functions"] = ordered_json::array();
    for (const auto& f : fns) {
        const auto rep = campbell_check(model, samples, f, c.intensity);
        const bool ok = std::abs(rep.z) <= c.sigma;
        a.passed = *a.passed && ok;
        a.rows.push_back({rep.function, num(rep.lhs), num(rep.lhs_std_error), num(rep.rhs), num(rep.z), ok ? "1" : "0"});
        a.results["functions"].push_back(
            {{"name", rep.function}, {"lhs", rep.lhs}, {"lhs_std_error", rep.lhs_std_error}, {"rhs", rep.rhs},
             {"z", rep.z}});
    }
    return a;
}

std::vector<Box> palm_boxes(const ModelGroup& model) {
    const int d = model.dim();
    const double a = model.discrete() ? 1.0 : 0.25;
    const double shift = model.discrete() ? 3.0 : 2.0 * a;
    Box b0 = Box::cube(d, -a, a);
    Box b1 = b0, b2 = b0;
    b1.lo[d - 1] += shift;
    b1.hi[d - 1] += shift;
    b2.lo[0] += shift;
    b2.hi[0] += shift;
    return {b0, b1, b2};
}

Box hull(const std::vector<Box>& boxes) {
    Box h = boxes.front();
    for (const auto& b : boxes)
        for (int i = 0; i < h.dim(); ++i) {
            h.lo[i] = std::min(h.lo[i], b.lo[i]);
            h.hi[i] = std::max(h.hi[i], b.hi[i]);
        }
    return h;
}

Artifacts run_palm_check(const ExperimentConfig& c) {
    const ModelGroup model = c.make_model();
    const Window w = c.window();
    const auto boxes = palm_boxes(model);
    const Box around = hull(boxes);
    const RandomStream root = RandomStream(c.seed).split(3);

    Artifacts a;
    a.header = {"test", "statistic", "df", "p_value", "rows_a", "rows_b", "pass"};
    a.passed = true;
    a.results["boxes"] = ordered_json::array();
    for (const auto& b : boxes) a.results["boxes"].push_back({{"lo", b.lo}, {"hi", b.hi}});
    a.results["tests"] = ordered_json::array();
    auto record = [&](const std::string& name, const FidiSample& x, const FidiSample& y) {
        const auto g = two_sample_fidi_test(x, y, c.cap);
        const bool ok = g.p_value > c.p_threshold;
        a.passed = *a.passed && ok;
        a.rows.push_back({name, num(g.statistic), num(g.df), num(g.p_value), std::to_string(x.replicates()),
                          std::to_string(y.replicates()), ok ? "1" : "0"});
        a.results["tests"].push_back({{"name", name},
                                      {"statistic", g.statistic},
                                      {"df", g.df},
                                      {"p_value", g.p_value},
                                      {"rows_a", x.replicates()},
                                      {"rows_b", y.replicates()}});
    };

    const auto constructed = collect_fidi(boxes, c.replicates, root.split(0), [&](RandomStream& r) {
        return palm_poisson(model, around, 0.0, c.intensity, r).config;
    }, c.threads);
    auto plus_root = collect_fidi(boxes, c.replicates, root.split(1), [&](RandomStream& r) {
        return sample_poisson_group(model, around, 0.0, c.intensity, r);
    }, c.threads);
    for (auto& row : plus_root.rows)
        for (std::size_t k = 0; k < boxes.size(); ++k) row[k] += boxes[k].contains(model.identity()) ? 1 : 0;
    record("slivnyak", plus_root, constructed);

    std::vector<Configuration> stationary(c.palm_stationary, Configuration(model, w));
    const RandomStream srng = root.split(2);
    parallel_for(stationary.size(), c.threads, [&](std::size_t r) {
        RandomStream rng = srng.split(r);
        stationary[r] = sample_poisson_group(model, w, c.palm_buffer, c.intensity, rng);
    });
    const RandomStream thin = root.split(3);
    record("poisson_reroot", palm_reroot_estimate(stationary, boxes, 0.0, &thin), constructed);

    if (!model.discrete() && c.subgroup != "none") {
        const SubgroupSpec sub = c.make_subgroup();
        const RandomStream crng = root.split(4);
        parallel_for(stationary.size(), c.threads, [&](std::size_t r) {
            RandomStream rng = crng.split(r);
            stationary[r] = sample_cox_quotient(sub, w, c.palm_buffer, rng).config;
        });
        const RandomStream cthin = root.split(5);
        const auto palm = collect_fidi(boxes, c.replicates, root.split(6), [&](RandomStream& r) {
            return palm_cox(sub, around, 0.0, r).config;
        }, c.threads);
        record("cox_reroot", palm_reroot_estimate(stationary, boxes, 0.0, &cthin), palm);
    }
    return a;
}

Artifacts run_cox_converge(const ExperimentConfig& c) {
    const SubgroupSpec sub = c.make_subgroup();
    const Window B = c.window();
    ConvergenceOptions opt;
    opt.pn_samples = c.pn_samples;
    opt.bootstrap = c.bootstrap;
    opt.cap = c.cap;
    opt.threads = c.threads;
    const auto rep = weak_convergence_report(sub, c.folner_ns, B, default_test_boxes(sub), c.replicates,
                                             RandomStream(c.seed).split(4), opt);
    Artifacts a;
    a.header = {"n",     "folner_volume", "p_n",   "p_n_std_error", "p_n_closed", "p",
                "eps_n", "lower_bound_ok", "upper_bound_ok", "tv", "tv_ci_lo", "tv_ci_hi", "coupling_bound"};
    bool ok = rep.tv_separated;
    a.results["rows"] = ordered_json::array();
    for (const auto& r : rep.rows) {
        ok = ok && r.lower_bound_ok && r.upper_bound_ok &&
             std::abs(r.p_n - r.p_n_closed) <= c.sigma * r.p_n_std_error;
        a.rows.push_back({num(r.n), num(r.folner_volume), num(r.p_n), num(r.p_n_std_error), num(r.p_n_closed),
                          num(r.p), num(r.eps_n), r.lower_bound_ok ? "1" : "0", r.upper_bound_ok ? "1" : "0",
                          num(r.tv.value), num(r.tv.ci_lo), num(r.tv.ci_hi), num(r.coupling_bound)});
        a.results["rows"].push_back({{"n", r.n},
                                     {"p_n", r.p_n},
                                     {"p_n_std_error", r.p_n_std_error},
                                     {"p_n_closed", r.p_n_closed},
                                     {"p", r.p},
                                     {"eps_n", r.eps_n},
                                     {"tv", r.tv.value},
                                     {"tv_ci", {r.tv.ci_lo, r.tv.ci_hi}}});
    }
    a.results["p_n_decreasing"] = rep.p_n_decreasing;
    a.results["tv_decreasing"] = rep.tv_decreasing;
    a.results["tv_separated"] = rep.tv_separated;
    a.results["tv_violations"] = rep.tv_violations;
    a.passed = ok;
    return a;
}

Artifacts run_voronoi(const ExperimentConfig& c) {
    const ModelGroup model = c.make_model();
    const Window w = c.window();
    RandomStream rng = RandomStream(c.seed).split(5);
    const Configuration config = sample_poisson_group(model, w, c.buffer, c.intensity, rng);
    const auto vor = voronoi_assign(config, c.resolution);
    const double wv = model.haar_volume(w);
    const double rel = std::abs(vor.total_volume() - wv) / wv;

    std::optional<bool> owners_ok;
    if (static_cast<double>(vor.owner.size()) * static_cast<double>(config.size()) <= 2e9) {
        owners_ok = true;
        for (std::size_t cell = 0; cell < vor.owner.size() && *owners_ok; ++cell) {
            const GroupPoint q = vor.cell_center(w, cell);
            double best = INFINITY;
            for (const auto& p : config.points) best = std::min(best, model.dist(q, p));
            owners_ok = model.dist(q, config.points[vor.owner[cell]]) <= best;
        }
    }
    Artifacts a;
    a.header = coord_header(model.dim());
    a.header.insert(a.header.begin(), "index");
    a.header.push_back("cell_volume");
    for (std::size_t i = 0; i < config.size(); ++i) {
        std::vector<std::string> row{std::to_string(i)};
        for (double x : config.points[i].coords()) row.push_back(num(x));
        row.push_back(num(vor.cell_volume[i]));
        a.rows.push_back(std::move(row));
    }
    a.results = {{"points", config.size()},
                 {"grid_cells", vor.owner.size()},
                 {"total_volume", vor.total_volume()},
                 {"window_volume", wv},
                 {"relative_error", rel},
                 {"tie_cells", vor.tie_cells}};
    a.results["owner_check"] = owners_ok ? ordered_json(*owners_ok) : ordered_json("skipped");
    a.passed = rel <= 0.005 && owners_ok.value_or(true);
    if (c.svg && model.dim() == 2) {
        SvgCanvas svg{w, 600.0, {}};
        const int res = vor.resolution[0];
        const int step = std::max(1, res / 128);
        for (int i = 0; i < res; i += step)
            for (int j = 0; j < res; j += step) {
                const std::size_t cell = static_cast<std::size_t>(i) * static_cast<std::size_t>(res) + j;
                const double hx = (w.hi[0] - w.lo[0]) / res, hy = (w.hi[1] - w.lo[1]) / res;
                const Box px({w.lo[0] + i * hx, w.lo[1] + j * hy},
                             {w.lo[0] + std::min(i + step, res) * hx, w.lo[1] + std::min(j + step, res) * hy});
                svg.rect(px, colour(vor.owner[cell]));
            }
        for (const auto& p : config.points)
            if (w.contains(p)) svg.dot(p[0], p[1], "black");
        a.svg = svg.finish("");
    }
    return a;
}

Artifacts run_adjacency(const ExperimentConfig& c) {
    RandomStream rng = RandomStream(c.seed).split(6);
    const auto cox = sample_cox_quotient(c.make_subgroup(), c.window(), c.buffer, rng);
    const auto rep = high_adjacency_scan(cox, c.adjacency_radius, c.adjacency_min_pairs, c.adjacency_min_spread);
    Artifacts a;
    a.header = {"first", "second", "pairs", "spread", "flagged"};
    for (const auto& p : rep.pairs)
        a.rows.push_back({std::to_string(p.first), std::to_string(p.second), std::to_string(p.pairs), num(p.spread),
                          p.flagged ? "1" : "0"});
    a.results = {{"points", cox.config.size()},
                 {"cosets", cox.cosets.size()},
                 {"coset_pairs", rep.pairs.size()},
                 {"total_cross_pairs", rep.total_cross_pairs},
                 {"flagged_pairs", rep.flagged_pairs}};
    return a;
}

Artifacts run_cost(const ExperimentConfig& c) {
    CostOptions opt;
    opt.n_max = c.n_max;
    opt.include_lift = c.include_lift;
    opt.lift_probability = c.lift_probability;
    opt.lift_radius = c.lift_radius;
    opt.threads = c.threads;
    RandomStream rng = RandomStream(c.seed).split(7);
    const auto rep = cost_upper_bound_experiment(c.make_subgroup(), c.window_sides, c.epsilon, c.replicates, rng, opt);
    Artifacts a;
    a.header = {"window_side", "epsilon",           "schedule_budget", "avg_degree", "avg_degree_ci",
                "avg_degree_sigma", "giant_fraction", "giant_fraction_ci", "line_giant_fraction", "replicates",
                "degree_bound_ok"};
    bool ok = rep.giant_non_decreasing;
    a.results["rows"] = ordered_json::array();
    for (const auto& r : rep.rows) {
        const bool bound = r.avg_degree <= 2.0 + r.epsilon + c.sigma * r.avg_degree_sigma;
        ok = ok && bound;
        a.rows.push_back({num(r.window_side), num(r.epsilon), num(r.schedule_budget), num(r.avg_degree),
                          num(r.avg_degree_ci), num(r.avg_degree_sigma), num(r.giant_fraction),
                          num(r.giant_fraction_ci), num(r.line_giant_fraction), std::to_string(r.replicates),
                          bound ? "1" : "0"});
        a.results["rows"].push_back({{"window_side", r.window_side},
                                     {"avg_degree", r.avg_degree},
                                     {"avg_degree_ci", r.avg_degree_ci},
                                     {"giant_fraction", r.giant_fraction},
                                     {"degree_bound_ok", bound}});
    }
    a.results["giant_non_decreasing"] = rep.giant_non_decreasing;
    a.passed = ok;
    return a;
}

Artifacts dispatch(const ExperimentConfig& c) {
    if (c.command == "sample") return run_sample(c);
    if (c.command == "intensity") return run_intensity(c);
    if (c.command == "campbell") return run_campbell(c);
    if (c.command == "palm-check") return run_palm_check(c);
    if (c.command == "cox-converge") return run_cox_converge(c);
    if (c.command == "voronoi") return run_voronoi(c);
    if (c.command == "adjacency") return run_adjacency(c);
    return run_cost(c);
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + p.string());
}

void write_outputs(const ExperimentConfig& c, const Artifacts& a) {
    const fs::path dir(c.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw cli::ConfigError("cannot create output directory '" + c.output + "'");
    const ordered_json cfg = c.to_json();

    std::ostringstream csv;
    csv << "# seed: " << c.seed << "\n# config: " << cfg.dump() << "\n";
    for (std::size_t i = 0; i < a.header.size(); ++i) csv << (i ? "," : "") << a.header[i];
    csv << "\n";
    for (const auto& row : a.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << row[i];
        csv << "\n";
    }
    write_file(dir / (c.command + ".csv"), csv.str());

    ordered_json summary;
    summary["command"] = c.command;
    summary["seed"] = c.seed;
    summary["status"] = !a.passed ? "ok" : *a.passed ? "pass" : "fail";
    summary["config"] = cfg;
    summary["results"] = a.results;
    write_file(dir / (c.command + ".json"), summary.dump(2) + "\n");

    if (!a.svg.empty()) {
        // Metadata is spliced in here so every output carries the config.
        std::string svg = a.svg;
        const std::string tag = "<![CDATA[";
        svg.insert(svg.find(tag) + tag.size(), summary["config"].dump());
        write_file(dir / (c.command + ".svg"), svg);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invariant point processes, Cox processes and factor graphs on model groups"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<unsigned> threads;
    std::string out;
    app.add_option("--config", config_path, "YAML config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--replicates", replicates, "Replicate count");
    app.add_option("--out", out, "Output directory (overrides COSETCOX_OUT_DIR and the config)");
    app.add_option("--threads", threads, "Worker threads");
    for (const char* name :
         {"sample", "intensity", "campbell", "palm-check", "cox-converge", "voronoi", "adjacency", "cost"})
        app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        ExperimentConfig c = config_path.empty() ? cli::default_config(command) : cli::load_config(config_path, command);
        if (seed) c.seed = *seed;
        if (replicates) c.replicates = *replicates;
        if (threads) c.threads = *threads;
        if (const char* env = std::getenv("COSETCOX_OUT_DIR"); env && *env) c.output = env;
        if (!out.empty()) c.output = out;
        c.resolve();
        const Artifacts a = dispatch(c);
        write_outputs(c, a);
        const std::string status = !a.passed ? "ok" : *a.passed ? "pass" : "fail";
        std::cout << command << ": " << status << " (" << (fs::path(c.output) / (command + ".json")).string()
                  << ")\n";
        return a.passed.value_or(true) ? 0 : 1;
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
