#include "prim3d/serialize.hpp"

#include <sstream>

namespace prim3d
{
namespace
{
Json vec_json(Vec3 const& v)
{
    return Json::array({v[0], v[1], v[2]});
}

Vec3 vec_from(Json const& j)
{
    if (!j.is_array() || j.size() != 3)
        fail(ErrorCode::InvalidParams, "expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template<class Enum, class Parse>
Enum parse_enum(Json const& j, Parse parse, char const* what)
{
    auto name = j.get<std::string>();
    auto value = parse(name);
    if (!value)
        fail(ErrorCode::InvalidParams, std::string("unknown ") + what + " '" + name + "'");
    return *value;
}

// Wrap JSON library exceptions into the package error type.
template<class F>
auto guarded(F&& fn) -> decltype(fn())
{
    try
    {
        return fn();
    }
    catch (nlohmann::json::exception const& e)
    {
        fail(ErrorCode::InvalidParams, std::string("malformed JSON record: ") + e.what());
    }
}
}  // namespace

Json to_json(RctSpec const& spec)
{
    Json kinds = Json::array();
    for (auto k : spec.kinds)
        kinds.push_back(to_string(k));
    Json ops = Json::array();
    for (auto op : spec.ops)
        ops.push_back(to_string(op));
    return Json{{"leaf_range", {spec.leaf_min, spec.leaf_max}},
                {"kinds", kinds},
                {"scale_range", {spec.scale_min, spec.scale_max}},
                {"ops", ops},
                {"master_seed", spec.master_seed}};
}

RctSpec rct_spec_from_json(Json const& j)
{
    return guarded([&] {
        RctSpec s;
        s.leaf_min = j.at("leaf_range").at(0).get<int>();
        s.leaf_max = j.at("leaf_range").at(1).get<int>();
        s.kinds.clear();
        for (auto const& k : j.at("kinds"))
            s.kinds.push_back(parse_enum<PrimitiveKind>(k, parse_kind, "primitive kind"));
        s.scale_min = j.at("scale_range").at(0).get<double>();
        s.scale_max = j.at("scale_range").at(1).get<double>();
        s.ops.clear();
        for (auto const& op : j.at("ops"))
            s.ops.push_back(parse_enum<BoolOp>(op, parse_op, "boolean operation"));
        s.master_seed = j.at("master_seed").get<std::uint64_t>();
        return s;
    });
}

Json to_json(SamplerConfig const& cfg)
{
    return Json{{"n_points", cfg.n_points},
                {"tol", cfg.tol},
                {"normalize", cfg.normalize},
                {"max_attempts_factor", cfg.max_attempts_factor},
                {"normals", cfg.normals}};
}

SamplerConfig sampler_config_from_json(Json const& j)
{
    return guarded([&] {
        SamplerConfig c;
        c.n_points = j.at("n_points").get<int>();
        c.tol = j.at("tol").get<double>();
        c.normalize = j.at("normalize").get<bool>();
        c.max_attempts_factor = j.at("max_attempts_factor").get<int>();
        c.normals = j.at("normals").get<bool>();
        return c;
    });
}

Json to_json(DescriptorConfig const& cfg)
{
    return Json{{"d2_bins", cfg.d2_bins},
                {"d2_pairs", cfg.d2_pairs},
                {"include_eigen", cfg.include_eigen},
                {"include_label_hist", cfg.include_label_hist},
                {"pair_seed", cfg.pair_seed}};
}

DescriptorConfig descriptor_config_from_json(Json const& j)
{
    return guarded([&] {
        DescriptorConfig c;
        c.d2_bins = j.at("d2_bins").get<int>();
        c.d2_pairs = j.at("d2_pairs").get<int>();
        c.include_eigen = j.at("include_eigen").get<bool>();
        c.include_label_hist = j.at("include_label_hist").get<bool>();
        c.pair_seed = j.at("pair_seed").get<std::uint64_t>();
        return c;
    });
}

Json to_json(RctSample const& s)
{
    Json leaves = Json::array();
    for (auto const& leaf : s.leaves)
    {
        Json rot = Json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                rot.push_back(leaf.pose.rotation(r, c));
        leaves.push_back(Json{{"kind", to_string(leaf.kind())},
                              {"params", flatten(leaf.params)},
                              {"rotation", rot},
                              {"translation", vec_json(leaf.pose.translation)},
                              {"scale", leaf.pose.scale}});
    }
    Json internal = Json::array();
    for (std::size_t k = 0; k < s.internal_ops.size(); ++k)
    {
        internal.push_back(Json{{"node", s.shape.internal_node(static_cast<int>(k))},
                                {"op", to_string(s.internal_ops[k])},
                                {"anchor", vec_json(s.anchors[k])},
                                {"anchor_point", vec_json(s.anchor_points[k])}});
    }
    return Json{{"provenance", {{"master_seed", s.master_seed}, {"object_index", s.object_index}}},
                {"tree", {{"left", s.shape.lefts()}, {"right", s.shape.rights()}}},
                {"leaves", leaves},
                {"internal", internal}};
}

RctSample rct_sample_from_json(Json const& j)
{
    return guarded([&] {
        RctSample s;
        s.master_seed = j.at("provenance").at("master_seed").get<std::uint64_t>();
        s.object_index = j.at("provenance").at("object_index").get<std::uint64_t>();
        s.shape = TreeShape(j.at("tree").at("left").get<std::vector<int>>(),
                            j.at("tree").at("right").get<std::vector<int>>(), 0);
        for (auto const& leaf : j.at("leaves"))
        {
            auto kind = parse_enum<PrimitiveKind>(leaf.at("kind"), parse_kind, "primitive kind");
            auto values = leaf.at("params").get<std::vector<double>>();
            PrimitiveInstance inst{unflatten(kind, values), Pose{}};
            auto const& rot = leaf.at("rotation");
            if (rot.size() != 9)
                fail(ErrorCode::InvalidParams, "rotation needs 9 entries");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    inst.pose.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)].get<double>();
            inst.pose.translation = vec_from(leaf.at("translation"));
            inst.pose.scale = leaf.at("scale").get<double>();
            s.leaves.push_back(std::move(inst));
        }
        auto const& internal = j.at("internal");
        if (internal.size() != s.shape.internal_count())
            fail(ErrorCode::InvalidParams, "internal node count disagrees with the tree");
        for (std::size_t k = 0; k < internal.size(); ++k)
        {
            auto const& node = internal[k];
            if (node.at("node").get<int>() != s.shape.internal_node(static_cast<int>(k)))
                fail(ErrorCode::InvalidParams, "internal nodes are not in post-order");
            s.internal_ops.push_back(parse_enum<BoolOp>(node.at("op"), parse_op, "boolean operation"));
            s.anchors.push_back(vec_from(node.at("anchor")));
            s.anchor_points.push_back(vec_from(node.at("anchor_point")));
        }
        check_structure(s);
        return s;
    });
}

Json to_json(DistillReport const& report, bool include_timing)
{
    Json epochs = Json::array();
    Json timing = Json::array();
    for (auto const& e : report.epochs)
    {
        epochs.push_back(Json{{"epoch", e.epoch},
                              {"size_before", e.size_before},
                              {"size_after", e.size_after},
                              {"pruned", e.pruned},
                              {"mmd_after", e.mmd_after},
                              {"retained_ids", e.retained_ids}});
        timing.push_back(Json{{"epoch", e.epoch}, {"seconds", e.seconds}});
    }
    Json out{{"config",
              {{"r", report.config.retention_ratio},
               {"size_t", report.config.size_threshold},
               {"epochs", report.config.epochs}}},
             {"kernel", {{"bandwidths", report.kernel.bandwidths}}},
             {"source_rows", report.source_rows},
             {"target_rows", report.target_rows},
             {"initial_mmd", report.initial_mmd},
             {"epochs", epochs}};
    if (include_timing)
        out["timing"] = Json{{"total_seconds", report.total_seconds}, {"epochs", timing}};
    return out;
}

}  // namespace prim3d
