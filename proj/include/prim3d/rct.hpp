#pragma once

#include <array>
#include <string>
#include <vector>

#include "primitives.hpp"

namespace prim3d
{

enum class BoolOp : std::uint8_t
{
    Union = 0,
    Intersection = 1,
    Difference = 2,
};

std::string_view to_string(BoolOp op);
std::optional<BoolOp> parse_op(std::string_view name);

//---------------------------------------------------------------------------//
/*!
 * Full binary tree in canonical form.
 *
 * Nodes are numbered in pre-order with the root at 0. Leaves are numbered
 * left to right; internal nodes are numbered in post-order, so iterating
 * internal indices in increasing order visits children before parents.
 */
class TreeShape
{
  public:
    //! Single-leaf tree
    TreeShape();

    //! Build from arbitrary child arrays (-1 marks a leaf) and a root.
    TreeShape(std::vector<int> const& left, std::vector<int> const& right, int root);

    std::size_t node_count() const { return left_.size(); }
    std::size_t leaf_count() const { return leaf_nodes_.size(); }
    std::size_t internal_count() const { return internal_nodes_.size(); }

    int root() const { return 0; }
    int left(int node) const { return left_[node]; }
    int right(int node) const { return right_[node]; }
    int parent(int node) const { return parent_[node]; }
    bool is_leaf(int node) const { return left_[node] < 0; }

    int leaf_index(int node) const { return leaf_index_[node]; }
    int internal_index(int node) const { return internal_index_[node]; }
    int leaf_node(int leaf) const { return leaf_nodes_[leaf]; }
    int internal_node(int internal) const { return internal_nodes_[internal]; }

    std::vector<int> const& lefts() const { return left_; }
    std::vector<int> const& rights() const { return right_; }

    //! Leaf indices in the subtree rooted at `node`, ascending.
    std::vector<int> leaves_under(int node) const;
    //! Internal indices in the subtree rooted at `node`, ascending.
    std::vector<int> internals_under(int node) const;

    //! Pre-order string of 'I'/'L'; identifies the plane shape.
    std::string encode() const;

    bool operator==(TreeShape const& other) const
    {
        return left_ == other.left_ && right_ == other.right_;
    }

  private:
    std::vector<int> left_, right_, parent_;
    std::vector<int> leaf_index_, internal_index_;
    std::vector<int> leaf_nodes_, internal_nodes_;
};

//---------------------------------------------------------------------------//
struct RctSpec
{
    int leaf_min = 1;
    int leaf_max = 6;
    std::vector<PrimitiveKind> kinds{kAllKinds.begin(), kAllKinds.end()};
    double scale_min = 0.25;
    double scale_max = 1.0;
    std::vector<BoolOp> ops{BoolOp::Union};
    std::uint64_t master_seed = 0;
};

void validate(RctSpec const& spec);

/*!
 * A realized constructive tree.
 *
 * Leaf poses already include every anchor translation accumulated on the
 * path to the root. Node `n` with internal index `k` evaluates
 * `internal_ops[k](right, left)`; for Difference the left subtree is the
 * subtrahend. `anchor_points[k]` is the point drawn inside the right child,
 * which the translated left child also contains, in final world coordinates.
 */
struct RctSample
{
    TreeShape shape;
    std::vector<PrimitiveInstance> leaves;
    std::vector<BoolOp> internal_ops;
    std::vector<Vec3> anchors;
    std::vector<Vec3> anchor_points;
    std::uint64_t master_seed = 0;
    std::uint64_t object_index = 0;
};

//! Number of plane full binary trees with `leaves` leaves (Catalan(leaves-1)).
std::uint64_t count_tree_shapes(int leaves);

//! Uniform plane tree shape by Rémy's insertion process.
TreeShape sample_tree_shape(int leaves, Rng& rng);

//! Haar-uniform rotation from a normalized Gaussian quaternion.
Mat3 sample_rotation_uniform(Rng& rng);

struct VolumePoint
{
    Vec3 point;
    int attempts = 0;
};

inline constexpr int kMaxVolumeRejections = 100000;

/// Uniform point strictly inside the solid rooted at `node`, by rejection in
/// the bounding box of the subtree's leaf bounding spheres. Throws EmptySolid
/// after kMaxVolumeRejections consecutive misses.
VolumePoint sample_volume_point(RctSample const& sample, int node, Rng& rng);

/// Draw object `object_index` of the batch described by `spec`. Empty
/// objects, and non-union objects with too little visible surface, are
/// redrawn from the same stream; DegenerateObject after kMaxObjectRedraws.
RctSample sample_rct(RctSpec const& spec, std::uint64_t object_index);

inline constexpr int kMaxObjectRedraws = 20;

//! A recorded anchor point or leaf center that is strictly inside the
//! composed solid, if any.
std::optional<Vec3> interior_witness(RctSample const& sample);

/// Fraction of area-weighted leaf-surface candidates that lie on the
/// boundary of the composed solid.
double visible_fraction(RctSample const& sample, int candidates, Rng& rng);

// Objects with Intersection or Difference nodes are redrawn when fewer than
// this fraction of surface candidates survive; such slivers would exhaust
// the surface sampler.
inline constexpr int kVisibilityProbes = 1024;
inline constexpr double kMinVisibleFraction = 1.0 / 32;

struct ValidityReport
{
    bool non_empty = false;
    bool bounded = false;
    std::size_t leaf_count = 0;
    std::array<std::size_t, 3> op_histogram{};
};

ValidityReport validate_rct(RctSample const& sample);

//! Structural consistency checks; throws InvalidParams.
void check_structure(RctSample const& sample);

}  // namespace prim3d
