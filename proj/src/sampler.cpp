#include "prim3d/sampler.hpp"

#include <cmath>
#include <sstream>

#include "prim3d/parallel.hpp"

namespace prim3d
{

void validate(SamplerConfig const& cfg)
{
    if (cfg.n_points < 1)
        fail(ErrorCode::InvalidParams, "point count must be at least 1");
    if (!(cfg.tol >= 0))
        fail(ErrorCode::InvalidParams, "tolerance must be nonnegative");
    if (cfg.max_attempts_factor < 1)
        fail(ErrorCode::InvalidParams, "attempt factor must be at least 1");
}

NormalizedPoints normalize_cloud(PointMatrix const& points)
{
    if (points.rows() == 0)
        fail(ErrorCode::DegenerateCloud, "cannot normalize an empty cloud");
    Vec3 centroid = points.colwise().mean().transpose();
    PointMatrix centered = points.rowwise() - centroid.transpose();
    double scale = centered.rowwise().norm().maxCoeff();
    if (!(scale >= 1e-12))
        fail(ErrorCode::DegenerateCloud, "all points coincide");
    return {centered / scale, centroid, scale};
}

Rng cloud_rng(std::uint64_t master_seed, std::uint64_t object_index)
{
    return Rng(splitmix64(derive_seed(master_seed, object_index) ^ 0xC10D5A3B1E5ull));
}

LabeledPointCloud sample_labeled_cloud(RctSample const& sample, SamplerConfig const& cfg,
                                       Rng& rng)
{
    validate(cfg);
    check_structure(sample);
    TreeShape const& shape = sample.shape;
    std::size_t const l = sample.leaves.size();

    // Leaves reached through an odd number of subtrahend links face inward.
    std::vector<bool> flip(l, false);
    for (std::size_t i = 0; i < l; ++i)
    {
        int node = shape.leaf_node(static_cast<int>(i));
        bool f = false;
        for (int p = shape.parent(node); p >= 0; node = p, p = shape.parent(p))
        {
            if (sample.internal_ops[shape.internal_index(p)] == BoolOp::Difference
                && shape.left(p) == node)
            {
                f = !f;
            }
        }
        flip[i] = f;
    }

    std::vector<double> cumulative(l);
    double total = 0;
    for (std::size_t i = 0; i < l; ++i)
    {
        total += world_surface_area(sample.leaves[i]);
        cumulative[i] = total;
    }

    std::size_t const n = static_cast<std::size_t>(cfg.n_points);
    std::size_t const max_candidates = n * static_cast<std::size_t>(cfg.max_attempts_factor);
    PointMatrix pts(n, 3);
    PointMatrix nrm(n, 3);
    LabeledPointCloud cloud;
    cloud.semantic.resize(n);
    cloud.instance.resize(n);

    std::size_t kept = 0;
    for (std::size_t candidates = 0; kept < n; ++candidates)
    {
        if (candidates >= max_candidates)
        {
            std::ostringstream os;
            os << "kept " << kept << " of " << n << " points after " << candidates
               << " candidates";
            fail(ErrorCode::SamplingExhausted, os.str());
        }
        double u = rng.uniform() * total;
        std::size_t leaf = 0;
        while (leaf + 1 < l && u >= cumulative[leaf])
            ++leaf;
        PrimitiveInstance const& inst = sample.leaves[leaf];
        SurfaceSample s = sample_canonical_surface(inst.params, rng);
        Vec3 p = apply_pose(inst.pose, s.point);
        if (classify_subtree(sample, shape.root(), p, cfg.tol, static_cast<int>(leaf))
            != Membership::On)
        {
            continue;
        }
        Vec3 normal = inst.pose.rotation * s.normal;
        if (flip[leaf])
            normal = -normal;
        pts.row(kept) = p.transpose();
        nrm.row(kept) = normal.transpose();
        cloud.semantic[kept] = static_cast<std::uint8_t>(inst.kind());
        cloud.instance[kept] = static_cast<std::uint8_t>(leaf);
        ++kept;
    }

    if (cfg.normalize)
    {
        auto norm = normalize_cloud(pts);
        cloud.points = std::move(norm.points);
        cloud.centroid = norm.centroid;
        cloud.scale = norm.scale;
    }
    else
    {
        cloud.points = std::move(pts);
    }
    if (cfg.normals)
        cloud.normals = std::move(nrm);
    cloud.master_seed = sample.master_seed;
    cloud.object_index = sample.object_index;
    return cloud;
}

GeneratedObject generate_object(RctSpec const& spec, SamplerConfig const& cfg,
                                std::uint64_t object_index)
{
    GeneratedObject obj{sample_rct(spec, object_index), {}};
    Rng rng = cloud_rng(spec.master_seed, object_index);
    obj.cloud = sample_labeled_cloud(obj.sample, cfg, rng);
    return obj;
}

std::vector<GeneratedObject> generate_batch(RctSpec const& spec, SamplerConfig const& cfg,
                                            std::uint64_t first, std::size_t count,
                                            unsigned threads)
{
    validate(spec);
    validate(cfg);
    std::vector<GeneratedObject> out(count);
    parallel_for(count, threads,
                 [&](std::size_t i) { out[i] = generate_object(spec, cfg, first + i); });
    return out;
}

}  // namespace prim3d
