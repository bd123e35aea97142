#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "csg.hpp"
#include "rct.hpp"

namespace prim3d
{

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct SamplerConfig
{
    int n_points = 1024;
    double tol = kDefaultOnTolerance;
    bool normalize = true;
    int max_attempts_factor = 64;
    bool normals = true;
};

void validate(SamplerConfig const& cfg);

/*!
 * Points on the boundary of one object with per-point part labels.
 *
 * When normalized, the sampled world points are recovered as
 * `points * scale + centroid`.
 */
struct LabeledPointCloud
{
    PointMatrix points;
    std::vector<std::uint8_t> semantic;
    std::vector<std::uint8_t> instance;
    std::optional<PointMatrix> normals;
    Vec3 centroid = Vec3::Zero();
    double scale = 1.0;
    std::uint64_t master_seed = 0;
    std::uint64_t object_index = 0;

    std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
    Vec3 point(std::size_t i) const { return points.row(static_cast<Eigen::Index>(i)); }
    Vec3 world_point(std::size_t i) const { return point(i) * scale + centroid; }
};

struct NormalizedPoints
{
    PointMatrix points;
    Vec3 centroid;
    double scale;
};

/// Center on the centroid and divide by the largest centered norm.
NormalizedPoints normalize_cloud(PointMatrix const& points);

/// Draw `cfg.n_points` labeled points uniformly over the visible boundary of
/// the composed solid.
LabeledPointCloud sample_labeled_cloud(RctSample const& sample, SamplerConfig const& cfg,
                                       Rng& rng);

//! Stream used for surface sampling of object `index`; disjoint from the
//! stream that built the tree.
Rng cloud_rng(std::uint64_t master_seed, std::uint64_t object_index);

struct GeneratedObject
{
    RctSample sample;
    LabeledPointCloud cloud;
};

/// Tree plus point cloud for one batch index; a pure function of its inputs.
GeneratedObject generate_object(RctSpec const& spec, SamplerConfig const& cfg,
                                std::uint64_t object_index);

/// Objects `first .. first+count-1`, generated on `threads` workers.
std::vector<GeneratedObject> generate_batch(RctSpec const& spec, SamplerConfig const& cfg,
                                            std::uint64_t first, std::size_t count,
                                            unsigned threads);

}  // namespace prim3d
