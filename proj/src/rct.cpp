#include "prim3d/rct.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>

#include "prim3d/csg.hpp"

namespace prim3d
{

std::string_view to_string(BoolOp op)
{
    switch (op)
    {
        case BoolOp::Union: return "union";
        case BoolOp::Intersection: return "intersection";
        case BoolOp::Difference: return "difference";
    }
    return "unknown";
}

std::optional<BoolOp> parse_op(std::string_view name)
{
    for (auto op : {BoolOp::Union, BoolOp::Intersection, BoolOp::Difference})
    {
        if (to_string(op) == name)
            return op;
    }
    return std::nullopt;
}

//---------------------------------------------------------------------------//
// TREE SHAPE
//---------------------------------------------------------------------------//
TreeShape::TreeShape() : TreeShape({-1}, {-1}, 0) {}

TreeShape::TreeShape(std::vector<int> const& left, std::vector<int> const& right, int root)
{
    std::size_t const n = left.size();
    if (right.size() != n || n == 0 || n % 2 == 0 || root < 0
        || static_cast<std::size_t>(root) >= n)
    {
        fail(ErrorCode::InvalidParams, "tree child arrays are inconsistent");
    }

    // Renumber in pre-order.
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> stack{root};
    std::vector<char> seen(n, 0);
    while (!stack.empty())
    {
        int v = stack.back();
        stack.pop_back();
        if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v])
            fail(ErrorCode::InvalidParams, "tree child arrays do not form a tree");
        seen[v] = 1;
        order.push_back(v);
        if ((left[v] < 0) != (right[v] < 0))
            fail(ErrorCode::InvalidParams, "internal node must have two children");
        if (left[v] >= 0)
        {
            stack.push_back(right[v]);
            stack.push_back(left[v]);
        }
    }
    if (order.size() != n)
        fail(ErrorCode::InvalidParams, "tree has unreachable nodes");

    std::vector<int> new_id(n);
    for (std::size_t i = 0; i < n; ++i)
        new_id[order[i]] = static_cast<int>(i);

    left_.assign(n, -1);
    right_.assign(n, -1);
    parent_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i)
    {
        int old = order[i];
        if (left[old] >= 0)
        {
            left_[i] = new_id[left[old]];
            right_[i] = new_id[right[old]];
            parent_[left_[i]] = static_cast<int>(i);
            parent_[right_[i]] = static_cast<int>(i);
        }
    }

    leaf_index_.assign(n, -1);
    internal_index_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i)
    {
        if (left_[i] < 0)
        {
            leaf_index_[i] = static_cast<int>(leaf_nodes_.size());
            leaf_nodes_.push_back(static_cast<int>(i));
        }
    }
    // Post-order for internal nodes.
    std::function<void(int)> visit = [&](int v) {
        if (left_[v] < 0)
            return;
        visit(left_[v]);
        visit(right_[v]);
        internal_index_[v] = static_cast<int>(internal_nodes_.size());
        internal_nodes_.push_back(v);
    };
    visit(0);
}

std::vector<int> TreeShape::leaves_under(int node) const
{
    std::vector<int> out;
    std::vector<int> stack{node};
    while (!stack.empty())
    {
        int v = stack.back();
        stack.pop_back();
        if (is_leaf(v))
        {
            out.push_back(leaf_index_[v]);
        }
        else
        {
            stack.push_back(left_[v]);
            stack.push_back(right_[v]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> TreeShape::internals_under(int node) const
{
    std::vector<int> out;
    std::vector<int> stack{node};
    while (!stack.empty())
    {
        int v = stack.back();
        stack.pop_back();
        if (!is_leaf(v))
        {
            out.push_back(internal_index_[v]);
            stack.push_back(left_[v]);
            stack.push_back(right_[v]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string TreeShape::encode() const
{
    std::string s;
    s.reserve(node_count());
    for (std::size_t i = 0; i < node_count(); ++i)
        s.push_back(left_[i] < 0 ? 'L' : 'I');
    return s;
}

//---------------------------------------------------------------------------//
// RANDOM STRUCTURE
//---------------------------------------------------------------------------//
std::uint64_t count_tree_shapes(int leaves)
{
    if (leaves < 1)
        fail(ErrorCode::InvalidParams, "leaf count must be at least 1");
    if (leaves > 30)
        fail(ErrorCode::Overflow, "shape count is only tabulated for at most 30 leaves");
    // C(k+1) = C(k) * 2(2k+1) / (k+2); the division is exact.
    std::uint64_t c = 1;
    for (std::uint64_t k = 0; k + 1 < static_cast<std::uint64_t>(leaves); ++k)
        c = c * 2 * (2 * k + 1) / (k + 2);
    return c;
}

TreeShape sample_tree_shape(int leaves, Rng& rng)
{
    if (leaves < 1)
        fail(ErrorCode::InvalidParams, "leaf count must be at least 1");
    std::size_t const n = 2 * static_cast<std::size_t>(leaves) - 1;
    std::vector<int> left(n, -1), right(n, -1), parent(n, -1);
    int root = 0;
    for (int k = 1; k < leaves; ++k)
    {
        int const existing = 2 * k - 1;
        int x = static_cast<int>(rng.index(existing));
        int y = existing;      // new internal node spliced above x
        int z = existing + 1;  // new leaf
        int p = parent[x];
        parent[y] = p;
        if (p < 0)
            root = y;
        else if (left[p] == x)
            left[p] = y;
        else
            right[p] = y;
        if (rng.coin())
        {
            left[y] = x;
            right[y] = z;
        }
        else
        {
            left[y] = z;
            right[y] = x;
        }
        parent[x] = y;
        parent[z] = y;
    }
    return TreeShape(left, right, root);
}

Mat3 sample_rotation_uniform(Rng& rng)
{
    Eigen::Vector4d q;
    double len = 0;
    do
    {
        q = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        len = q.norm();
    } while (len < 1e-12);
    q /= len;
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

//---------------------------------------------------------------------------//
// MEMBERSHIP
//---------------------------------------------------------------------------//
Membership classify_subtree(RctSample const& sample, int node, Vec3 const& p, double tol,
                            int forced_leaf)
{
    TreeShape const& shape = sample.shape;
    if (shape.is_leaf(node))
    {
        int leaf = shape.leaf_index(node);
        if (leaf == forced_leaf)
            return Membership::On;
        return classify_point(sample.leaves[leaf], p, tol);
    }
    BoolOp op = sample.internal_ops[shape.internal_index(node)];
    // The right child is the first operand.
    Membership a = classify_subtree(sample, shape.right(node), p, tol, forced_leaf);
    switch (op)
    {
        case BoolOp::Union:
            if (a == Membership::In)
                return a;
            break;
        case BoolOp::Intersection:
        case BoolOp::Difference:
            if (a == Membership::Out)
                return a;
            break;
    }
    Membership b = classify_subtree(sample, shape.left(node), p, tol, forced_leaf);
    return combine(op, a, b);
}

//---------------------------------------------------------------------------//
// RCT SAMPLING
//---------------------------------------------------------------------------//
void validate(RctSpec const& spec)
{
    if (spec.leaf_min < 1 || spec.leaf_max < spec.leaf_min)
        fail(ErrorCode::InvalidParams, "leaf range must satisfy 1 <= min <= max");
    if (spec.leaf_max > 255)
        fail(ErrorCode::InvalidParams, "at most 255 leaves fit the instance label");
    if (spec.kinds.empty())
        fail(ErrorCode::InvalidParams, "primitive kind set is empty");
    if (spec.ops.empty())
        fail(ErrorCode::InvalidParams, "boolean operation set is empty");
    if (!(spec.scale_min > 0) || !(spec.scale_max >= spec.scale_min)
        || !std::isfinite(spec.scale_max))
    {
        fail(ErrorCode::InvalidParams, "scale range must satisfy 0 < low <= high");
    }
}

VolumePoint sample_volume_point(RctSample const& sample, int node, Rng& rng)
{
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int leaf : sample.shape.leaves_under(node))
    {
        auto bs = bounding_sphere(sample.leaves[leaf]);
        lo = lo.cwiseMin(bs.center - Vec3::Constant(bs.radius));
        hi = hi.cwiseMax(bs.center + Vec3::Constant(bs.radius));
    }
    for (int attempt = 1; attempt <= kMaxVolumeRejections; ++attempt)
    {
        Vec3 p(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), rng.uniform(lo[2], hi[2]));
        if (classify_subtree(sample, node, p, kDefaultOnTolerance) == Membership::In)
            return {p, attempt};
    }
    fail(ErrorCode::EmptySolid, "no interior point found by volume rejection");
}

std::optional<Vec3> interior_witness(RctSample const& sample)
{
    auto is_in = [&](Vec3 const& p) {
        return classify_membership(sample, p, kDefaultOnTolerance) == Membership::In;
    };
    for (auto const& p : sample.anchor_points)
        if (is_in(p))
            return p;
    for (auto const& leaf : sample.leaves)
        if (is_in(leaf.pose.translation))
            return leaf.pose.translation;
    return std::nullopt;
}

double visible_fraction(RctSample const& sample, int candidates, Rng& rng)
{
    std::size_t const l = sample.leaves.size();
    std::vector<double> cumulative(l);
    double total = 0;
    for (std::size_t i = 0; i < l; ++i)
    {
        total += world_surface_area(sample.leaves[i]);
        cumulative[i] = total;
    }
    int kept = 0;
    for (int c = 0; c < candidates; ++c)
    {
        double u = rng.uniform() * total;
        std::size_t leaf = 0;
        while (leaf + 1 < l && u >= cumulative[leaf])
            ++leaf;
        auto const& inst = sample.leaves[leaf];
        Vec3 p = apply_pose(inst.pose, sample_canonical_surface(inst.params, rng).point);
        kept += classify_subtree(sample, sample.shape.root(), p, kDefaultOnTolerance,
                                 static_cast<int>(leaf))
                == Membership::On;
    }
    return static_cast<double>(kept) / candidates;
}

namespace
{
std::optional<RctSample> try_sample(RctSpec const& spec, Rng& rng)
{
    RctSample s;
    s.master_seed = spec.master_seed;

    int span = spec.leaf_max - spec.leaf_min + 1;
    int l = spec.leaf_min + static_cast<int>(rng.index(static_cast<std::uint64_t>(span)));
    s.shape = sample_tree_shape(l, rng);

    s.leaves.reserve(l);
    for (int i = 0; i < l; ++i)
    {
        PrimitiveKind kind = spec.kinds[rng.index(spec.kinds.size())];
        PrimitiveInstance inst{sample_params(kind, rng), Pose{}};
        inst.pose.rotation = sample_rotation_uniform(rng);
        inst.pose.scale = rng.uniform(spec.scale_min, spec.scale_max);
        s.leaves.push_back(std::move(inst));
    }

    std::size_t const internal = s.shape.internal_count();
    s.internal_ops.assign(internal, BoolOp::Union);
    s.anchors.assign(internal, Vec3::Zero());
    s.anchor_points.assign(internal, Vec3::Zero());
    for (std::size_t k = 0; k < internal; ++k)
    {
        int node = s.shape.internal_node(static_cast<int>(k));
        s.internal_ops[k] = spec.ops[rng.index(spec.ops.size())];
        int lchild = s.shape.left(node);
        int rchild = s.shape.right(node);
        Vec3 p_left, p_right;
        try
        {
            p_left = sample_volume_point(s, lchild, rng).point;
            p_right = sample_volume_point(s, rchild, rng).point;
        }
        catch (Error const& e)
        {
            if (e.code() == ErrorCode::EmptySolid)
                return std::nullopt;
            throw;
        }
        Vec3 delta = p_right - p_left;
        s.anchors[k] = delta;
        s.anchor_points[k] = p_right;
        for (int leaf : s.shape.leaves_under(lchild))
            s.leaves[leaf].pose.translation += delta;
        for (int sub : s.shape.internals_under(lchild))
            s.anchor_points[sub] += delta;
    }

    bool all_union = std::all_of(s.internal_ops.begin(), s.internal_ops.end(),
                                 [](BoolOp op) { return op == BoolOp::Union; });
    if (!all_union)
    {
        if (!interior_witness(s))
        {
            try
            {
                sample_volume_point(s, s.shape.root(), rng);
            }
            catch (Error const& e)
            {
                if (e.code() == ErrorCode::EmptySolid)
                    return std::nullopt;
                throw;
            }
        }
        if (visible_fraction(s, kVisibilityProbes, rng) < kMinVisibleFraction)
            return std::nullopt;
    }
    return s;
}
}  // namespace

RctSample sample_rct(RctSpec const& spec, std::uint64_t object_index)
{
    validate(spec);
    Rng rng(derive_seed(spec.master_seed, object_index));
    for (int attempt = 0; attempt < kMaxObjectRedraws; ++attempt)
    {
        if (auto s = try_sample(spec, rng))
        {
            s->object_index = object_index;
            return std::move(*s);
        }
    }
    std::ostringstream os;
    os << "object " << object_index << " stayed empty after " << kMaxObjectRedraws
       << " redraws";
    fail(ErrorCode::DegenerateObject, os.str());
}

void check_structure(RctSample const& sample)
{
    std::size_t l = sample.shape.leaf_count();
    if (sample.leaves.size() != l || sample.internal_ops.size() + 1 != l
        || sample.anchors.size() + 1 != l || sample.anchor_points.size() + 1 != l)
    {
        fail(ErrorCode::InvalidParams, "sample arrays disagree with the tree shape");
    }
    for (auto const& leaf : sample.leaves)
    {
        validate(leaf.params);
        validate(leaf.pose);
    }
}

ValidityReport validate_rct(RctSample const& sample)
{
    check_structure(sample);
    ValidityReport r;
    r.leaf_count = sample.leaves.size();
    for (BoolOp op : sample.internal_ops)
        ++r.op_histogram[static_cast<std::size_t>(op)];

    r.bounded = std::all_of(sample.leaves.begin(), sample.leaves.end(), [](auto const& leaf) {
        auto bs = bounding_sphere(leaf);
        return bs.center.allFinite() && std::isfinite(bs.radius);
    });

    if (interior_witness(sample))
    {
        r.non_empty = true;
        return r;
    }
    Rng rng(splitmix64(derive_seed(sample.master_seed, sample.object_index)));
    try
    {
        sample_volume_point(sample, sample.shape.root(), rng);
        r.non_empty = true;
    }
    catch (Error const& e)
    {
        if (e.code() != ErrorCode::EmptySolid)
            throw;
        r.non_empty = false;
    }
    return r;
}

}  // namespace prim3d
