#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cosetcox/processes.hpp"

namespace cosetcox {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_configuration(std::ostream& os, const Configuration& config, const std::vector<double>* marks,
                         const CoxSample* cox) {
    const int d = config.model.dim();
    if (marks && marks->size() != config.size()) throw std::invalid_argument("marks size mismatch");
    if (cox && cox->coset_of.size() != config.size()) throw std::invalid_argument("coset assignment size mismatch");
    os << "# cosetcox-configuration 1\n";
    os << "# model " << to_string(config.model.kind()) << ' ' << d << '\n';
    os << "# window";
    for (int i = 0; i < d; ++i) os << ' ' << fmt_double(config.window.lo[i]);
    os << " |";
    for (int i = 0; i < d; ++i) os << ' ' << fmt_double(config.window.hi[i]);
    os << '\n';
    os << "# buffer " << fmt_double(config.buffer) << '\n';
    if (cox) {
        os << "# subgroup";
        for (int a : cox->subgroup.axes()) os << ' ' << a;
        os << '\n';
        for (std::size_t c = 0; c < cox->cosets.size(); ++c) {
            os << "# coset " << c;
            for (double v : cox->cosets[c].coords) os << ' ' << fmt_double(v);
            os << '\n';
        }
    }
    os << "# columns";
    for (int i = 0; i < d; ++i) os << " x" << i;
    os << " mark coset\n";
    for (std::size_t k = 0; k < config.size(); ++k) {
        const auto& p = config.points[k];
        for (int i = 0; i < d; ++i) os << (i ? " " : "") << fmt_double(p[i]);
        os << ' ' << (marks ? fmt_double((*marks)[k]) : std::string("-"));
        os << ' ' << (cox ? std::to_string(cox->coset_of[k]) : std::string("-"));
        os << '\n';
    }
}

ParsedConfiguration read_configuration(std::istream& is) {
    std::string line;
    std::optional<ModelGroup> model;
    std::optional<Window> window;
    double buffer = 0.0;
    std::vector<CosetId> cosets;
    std::vector<GroupPoint> points;
    std::vector<double> marks;
    std::vector<long long> coset_index;
    bool any_mark = false;

    auto fail = [](const std::string& why) { throw std::runtime_error("read_configuration: " + why); };

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "model") {
                std::string kind;
                int d = 0;
                ls >> kind >> d;
                switch (parse_model_kind(kind)) {
                    case ModelKind::Euclidean: model = ModelGroup::euclidean(d); break;
                    case ModelKind::IntegerLattice: model = ModelGroup::lattice(d); break;
                    case ModelKind::Heisenberg: model = ModelGroup::heisenberg(); break;
                }
            } else if (key == "window") {
                if (!model) fail("window before model");
                std::vector<double> lo, hi;
                std::string tok;
                bool upper = false;
                while (ls >> tok) {
                    if (tok == "|") {
                        upper = true;
                        continue;
                    }
                    (upper ? hi : lo).push_back(std::stod(tok));
                }
                window = Window(lo, hi);
            } else if (key == "buffer") {
                ls >> buffer;
            } else if (key == "coset") {
                std::size_t idx = 0;
                ls >> idx;
                if (idx != cosets.size()) fail("coset ids must be listed in order");
                CosetId c;
                double v;
                while (ls >> v) c.coords.push_back(v);
                cosets.push_back(std::move(c));
            }
            continue;
        }
        if (!model || !window) fail("data row before header");
        const int d = model->dim();
        GroupPoint p(d);
        for (int i = 0; i < d; ++i)
            if (!(ls >> p[i])) fail("short row");
        std::string mark_tok, coset_tok;
        if (!(ls >> mark_tok >> coset_tok)) fail("row is missing mark/coset columns");
        points.push_back(p);
        if (mark_tok != "-") {
            any_mark = true;
            marks.push_back(std::stod(mark_tok));
        } else {
            marks.push_back(std::nan(""));
        }
        coset_index.push_back(coset_tok == "-" ? -1 : std::stoll(coset_tok));
    }
    if (!model || !window) fail("missing header");
    ParsedConfiguration out{Configuration(*model, *window, buffer), {}, std::move(coset_index), std::move(cosets)};
    out.config.points = std::move(points);
    if (any_mark) out.marks = std::move(marks);
    return out;
}

}  // namespace cosetcox
