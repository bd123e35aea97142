#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prim3d/dataset_io.hpp"
#include "prim3d/distill.hpp"
#include "prim3d/features.hpp"
#include "prim3d/serialize.hpp"

namespace py = pybind11;
using namespace prim3d;

namespace
{
RctSpec make_spec(std::uint64_t seed, std::pair<int, int> leaves, std::vector<std::string> const& ops,
                  std::vector<std::string> const& kinds)
{
    RctSpec spec;
    spec.master_seed = seed;
    std::tie(spec.leaf_min, spec.leaf_max) = leaves;
    if (!ops.empty())
    {
        spec.ops.clear();
        for (auto const& name : ops)
        {
            auto op = parse_op(name);
            if (!op)
                fail(ErrorCode::InvalidParams, "unknown operation '" + name + "'");
            spec.ops.push_back(*op);
        }
    }
    if (!kinds.empty())
    {
        spec.kinds.clear();
        for (auto const& name : kinds)
        {
            auto k = parse_kind(name);
            if (!k)
                fail(ErrorCode::InvalidParams, "unknown primitive '" + name + "'");
            spec.kinds.push_back(*k);
        }
    }
    validate(spec);
    return spec;
}

py::object to_python(Json const& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

py::dict cloud_dict(LabeledPointCloud const& c)
{
    py::dict out;
    out["points"] = c.points;
    out["semantic"] = c.semantic;
    out["instance"] = c.instance;
    if (c.normals)
        out["normals"] = *c.normals;
    else
        out["normals"] = py::none();
    out["centroid"] = c.centroid;
    out["scale"] = c.scale;
    out["object_index"] = c.object_index;
    return out;
}

FeatureMatrix features(RowMatrix const& data)
{
    return make_feature_matrix(data);
}

KernelConfig kernel_or_default(std::vector<double> const& bandwidths)
{
    KernelConfig cfg;
    if (!bandwidths.empty())
        cfg.bandwidths = bandwidths;
    validate(cfg);
    return cfg;
}
}  // namespace

PYBIND11_MODULE(_prim3d, m)
{
    m.doc() = "Procedural primitive point clouds and MMD-based distillation";
    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    m.def("count_tree_shapes", &count_tree_shapes, py::arg("leaves"));

    m.def(
        "generate_object",
        [](std::uint64_t seed, std::uint64_t index, std::pair<int, int> leaves,
           std::vector<std::string> const& ops, std::vector<std::string> const& kinds,
           int n_points, bool normals) {
            auto spec = make_spec(seed, leaves, ops, kinds);
            SamplerConfig cfg;
            cfg.n_points = n_points;
            cfg.normals = normals;
            validate(cfg);
            GeneratedObject obj;
            {
                py::gil_scoped_release release;
                obj = generate_object(spec, cfg, index);
            }
            auto out = cloud_dict(obj.cloud);
            out["tree"] = to_python(to_json(obj.sample));
            return out;
        },
        py::arg("seed"), py::arg("index"), py::arg("leaves") = std::pair{1, 6},
        py::arg("ops") = std::vector<std::string>{}, py::arg("kinds") = std::vector<std::string>{},
        py::arg("n_points") = 1024, py::arg("normals") = true);

    m.def(
        "read_dataset",
        [](std::string const& path) {
            Dataset ds;
            {
                py::gil_scoped_release release;
                ds = read_dataset(path);
            }
            py::list objects;
            for (auto const& rec : ds.records)
            {
                auto d = cloud_dict(rec.cloud);
                d["tree"] = to_python(to_json(rec.sample));
                objects.append(d);
            }
            py::dict out;
            out["objects"] = objects;
            out["content_hash"] = hex64(ds.content_hash);
            return out;
        },
        py::arg("path"));

    m.def(
        "read_features",
        [](std::string const& path) {
            auto f = read_feature_file(path);
            return py::make_tuple(f.data, f.row_ids);
        },
        py::arg("path"));

    m.def(
        "chamfer", [](PointMatrix const& x, PointMatrix const& y) { return chamfer(x, y); },
        py::arg("x"), py::arg("y"));
    m.def(
        "augmented_chamfer",
        [](PointMatrix const& x, PointMatrix const& y) { return augmented_chamfer(x, y); },
        py::arg("x"), py::arg("y"));

    m.def(
        "descriptor",
        [](PointMatrix const& points, std::vector<std::uint8_t> semantic, int bins, int pairs,
           bool eigen, bool label_hist, std::uint64_t pair_seed) {
            LabeledPointCloud cloud;
            cloud.points = points;
            if (semantic.empty())
                semantic.assign(cloud.size(), 0);
            cloud.semantic = std::move(semantic);
            cloud.instance.assign(cloud.size(), 0);
            DescriptorConfig cfg{bins, pairs, eigen, label_hist, pair_seed};
            validate(cfg);
            return extract_descriptor(cloud, cfg);
        },
        py::arg("points"), py::arg("semantic") = std::vector<std::uint8_t>{},
        py::arg("bins") = 64, py::arg("pairs") = 4096, py::arg("eigen") = true,
        py::arg("label_hist") = false, py::arg("pair_seed") = 0);

    m.def(
        "median_heuristic",
        [](RowMatrix const& d, RowMatrix const& t, std::uint64_t seed) {
            return median_heuristic(features(d), features(t), seed).bandwidths;
        },
        py::arg("d"), py::arg("t"), py::arg("seed") = 0);

    m.def(
        "mmd_squared",
        [](RowMatrix const& d, RowMatrix const& t, std::vector<double> const& bandwidths) {
            return mmd_squared(features(d), features(t), kernel_or_default(bandwidths));
        },
        py::arg("d"), py::arg("t"), py::arg("bandwidths") = std::vector<double>{});

    m.def(
        "adaptivity_proxy",
        [](RowMatrix const& d, RowMatrix const& t, std::vector<double> const& bandwidths,
           bool include_self) {
            return adaptivity_proxy(features(d), features(t), kernel_or_default(bandwidths), 1,
                                    include_self)
                .scores;
        },
        py::arg("d"), py::arg("t"), py::arg("bandwidths") = std::vector<double>{},
        py::arg("include_self") = false);

    m.def(
        "adaptivity_exact",
        [](RowMatrix const& d, RowMatrix const& t, std::vector<double> const& bandwidths) {
            return adaptivity_exact_all(features(d), features(t), kernel_or_default(bandwidths))
                .scores;
        },
        py::arg("d"), py::arg("t"), py::arg("bandwidths") = std::vector<double>{});

    m.def(
        "distill",
        [](RowMatrix const& d, RowMatrix const& t, std::vector<double> const& bandwidths,
           double ratio, std::size_t threshold, int epochs, unsigned threads) {
            DistillConfig dcfg{ratio, threshold, epochs};
            validate(dcfg);
            auto fd = features(d), ft = features(t);
            auto kcfg = bandwidths.empty() ? median_heuristic(fd, ft) : kernel_or_default(bandwidths);
            DistillReport report;
            {
                py::gil_scoped_release release;
                report = run_distillation(fd, ft, kcfg, dcfg, {}, threads);
            }
            return to_python(to_json(report, false));
        },
        py::arg("d"), py::arg("t"), py::arg("bandwidths") = std::vector<double>{},
        py::arg("ratio") = 0.7, py::arg("threshold") = 10000, py::arg("epochs") = 5,
        py::arg("threads") = 1);
}
