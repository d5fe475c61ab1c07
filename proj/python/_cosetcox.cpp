#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cosetcox/diagnostics.hpp"
#include "cosetcox/geometry.hpp"
#include "cosetcox/graphs.hpp"
#include "cosetcox/processes.hpp"

namespace py = pybind11;
using namespace cosetcox;

namespace {

py::array_t<double> points_array(const Configuration& c) {
    const auto n = static_cast<py::ssize_t>(c.size());
    const auto d = static_cast<py::ssize_t>(c.model.dim());
    py::array_t<double> out({n, d});
    auto v = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t j = 0; j < d; ++j) v(i, j) = c.points[static_cast<std::size_t>(i)][static_cast<int>(j)];
    return out;
}

GroupPoint to_point(const std::vector<double>& x) { return GroupPoint(std::span<const double>(x)); }

py::dict cox_dict(const CoxSample& s) {
    py::dict d;
    d["points"] = points_array(s.config);
    d["coset_of"] = s.coset_of;
    std::vector<std::vector<double>> cosets;
    for (const auto& c : s.cosets) cosets.push_back(c.coords);
    d["cosets"] = cosets;
    return d;
}

}  // namespace

PYBIND11_MODULE(_cosetcox, m) {
    m.doc() = "Invariant point processes and factor graphs on model groups";

    py::class_<RandomStream>(m, "RandomStream")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("split", py::overload_cast<std::uint64_t>(&RandomStream::split, py::const_), py::arg("index"))
        .def("uniform", py::overload_cast<>(&RandomStream::uniform));

    py::class_<Box>(m, "Box")
        .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("lo"), py::arg("hi"))
        .def_static("cube", &Box::cube, py::arg("dim"), py::arg("lo"), py::arg("hi"))
        .def_readonly("lo", &Box::lo)
        .def_readonly("hi", &Box::hi)
        .def("volume", &Box::volume)
        .def("contains", [](const Box& b, const std::vector<double>& x) { return b.contains(x); })
        .def("__repr__", [](const Box& b) {
            return "Box(" + py::repr(py::cast(b.lo)).cast<std::string>() + ", " +
                   py::repr(py::cast(b.hi)).cast<std::string>() + ")";
        });

    py::class_<ModelGroup>(m, "ModelGroup")
        .def_static("euclidean", &ModelGroup::euclidean, py::arg("dim"))
        .def_static("lattice", &ModelGroup::lattice, py::arg("dim"))
        .def_static("heisenberg", &ModelGroup::heisenberg)
        .def_property_readonly("dim", &ModelGroup::dim)
        .def_property_readonly("name", &ModelGroup::name)
        .def("mul", [](const ModelGroup& g, const std::vector<double>& a, const std::vector<double>& b) {
            const auto p = g.mul(to_point(a), to_point(b));
            return std::vector<double>(p.coords().begin(), p.coords().end());
        })
        .def("inv", [](const ModelGroup& g, const std::vector<double>& a) {
            const auto p = g.inv(to_point(a));
            return std::vector<double>(p.coords().begin(), p.coords().end());
        })
        .def("dist", [](const ModelGroup& g, const std::vector<double>& a, const std::vector<double>& b) {
            return g.dist(to_point(a), to_point(b));
        })
        .def("norm", [](const ModelGroup& g, const std::vector<double>& a) { return g.norm(to_point(a)); })
        .def("ball_volume", &ModelGroup::ball_volume, py::arg("r"))
        .def("haar_volume", &ModelGroup::haar_volume, py::arg("window"));

    py::class_<SubgroupSpec>(m, "SubgroupSpec")
        .def_static("coordinate_flat", &SubgroupSpec::coordinate_flat, py::arg("model"), py::arg("axes"))
        .def_static("center", &SubgroupSpec::center, py::arg("model"))
        .def_property_readonly("axes", &SubgroupSpec::axes)
        .def_property_readonly("name", &SubgroupSpec::name);

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("value", &Estimate::value)
        .def_readonly("std_error", &Estimate::std_error)
        .def("ci95", &Estimate::ci95);

    m.def(
        "sample_poisson",
        [](const ModelGroup& g, const Box& w, double buffer, double intensity, RandomStream& rng) {
            return points_array(sample_poisson_group(g, w, buffer, intensity, rng));
        },
        py::arg("model"), py::arg("window"), py::arg("buffer"), py::arg("intensity"), py::arg("rng"));
    m.def(
        "sample_cox",
        [](const SubgroupSpec& s, const Box& w, double buffer, RandomStream& rng) {
            return cox_dict(sample_cox_quotient(s, w, buffer, rng));
        },
        py::arg("subgroup"), py::arg("window"), py::arg("buffer"), py::arg("rng"));
    m.def(
        "palm_poisson",
        [](const ModelGroup& g, const Box& w, double buffer, double intensity, RandomStream& rng) {
            const auto p = palm_poisson(g, w, buffer, intensity, rng);
            return py::make_tuple(points_array(p.config), p.root);
        },
        py::arg("model"), py::arg("window"), py::arg("buffer"), py::arg("intensity"), py::arg("rng"));
    m.def(
        "intensity",
        [](const ModelGroup& g, const Box& w, double intensity, std::size_t replicates, RandomStream& rng) {
            std::vector<Configuration> s;
            for (std::size_t r = 0; r < replicates; ++r) s.push_back(sample_poisson_group(g, w, 0.0, intensity, rng));
            return estimate_intensity(s, w);
        },
        py::arg("model"), py::arg("window"), py::arg("intensity"), py::arg("replicates"), py::arg("rng"));

    m.def(
        "voronoi_volumes",
        [](const ModelGroup& g, const Box& w, double buffer, double intensity, int resolution, RandomStream& rng) {
            const auto c = sample_poisson_group(g, w, buffer, intensity, rng);
            const auto v = voronoi_assign(c, resolution);
            return py::make_tuple(points_array(c), v.cell_volume);
        },
        py::arg("model"), py::arg("window"), py::arg("buffer"), py::arg("intensity"), py::arg("resolution"),
        py::arg("rng"));

    m.def(
        "star_schedule",
        [](const ModelGroup& g, double epsilon, int n_max) {
            const auto s = StarSchedule::make_default(g, epsilon, n_max);
            std::vector<double> t;
            for (const auto& l : s.levels) t.push_back(l.threshold);
            return py::make_tuple(t, s.budget());
        },
        py::arg("model"), py::arg("epsilon"), py::arg("n_max"));

    m.def(
        "cost_experiment",
        [](const SubgroupSpec& s, const std::vector<double>& sides, double epsilon, std::size_t replicates,
           RandomStream& rng, int n_max) {
            CostOptions opt;
            opt.n_max = n_max;
            const auto rep = cost_upper_bound_experiment(s, sides, epsilon, replicates, rng, opt);
            py::list rows;
            for (const auto& r : rep.rows) {
                py::dict d;
                d["window_side"] = r.window_side;
                d["avg_degree"] = r.avg_degree;
                d["avg_degree_ci"] = r.avg_degree_ci;
                d["giant_fraction"] = r.giant_fraction;
                d["degree_bound_ok"] = r.degree_bound_ok;
                rows.append(d);
            }
            return rows;
        },
        py::arg("subgroup"), py::arg("window_sides"), py::arg("epsilon"), py::arg("replicates"), py::arg("rng"),
        py::arg("n_max") = 3);

    m.def(
        "weak_convergence",
        [](const SubgroupSpec& s, const std::vector<double>& ns, const Box& B, std::size_t replicates,
           const RandomStream& rng) {
            ConvergenceOptions opt;
            opt.pn_samples = 50000;
            const auto rep = weak_convergence_report(s, ns, B, default_test_boxes(s), replicates, rng, opt);
            py::list rows;
            for (const auto& r : rep.rows) {
                py::dict d;
                d["n"] = r.n;
                d["p_n"] = r.p_n;
                d["p_n_std_error"] = r.p_n_std_error;
                d["p_n_closed"] = r.p_n_closed;
                d["p"] = r.p;
                d["tv"] = r.tv.value;
                rows.append(d);
            }
            return rows;
        },
        py::arg("subgroup"), py::arg("ns"), py::arg("parameter_box"), py::arg("replicates"), py::arg("rng"));
}
