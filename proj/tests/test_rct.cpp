#include <map>
#include <numbers>
#include <set>

#include <Eigen/LU>
#include <doctest.h>

#include "prim3d/csg.hpp"
#include "prim3d/rct.hpp"
#include "prim3d/serialize.hpp"
#include "test_support.hpp"

using namespace prim3d;
using std::numbers::pi;

namespace
{
double shape_chi_square_p(int leaves, int draws, std::uint64_t seed)
{
    auto shapes = test::enumerate_shapes(leaves);
    std::map<std::string, double> counts;
    for (auto const& s : shapes)
        counts[s] = 0;
    Rng rng(seed);
    for (int i = 0; i < draws; ++i)
    {
        auto code = sample_tree_shape(leaves, rng).encode();
        REQUIRE(counts.count(code) == 1);
        counts[code] += 1;
    }
    std::vector<double> observed, expected;
    for (auto const& [code, c] : counts)
    {
        observed.push_back(c);
        expected.push_back(static_cast<double>(draws) / shapes.size());
    }
    return test::chi_square_p(observed, expected);
}

ErrorCode code_of(auto&& fn)
{
    try
    {
        fn();
    }
    catch (Error const& e)
    {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidParams;
}
}  // namespace

TEST_CASE("tree shape counts")
{
    CHECK(count_tree_shapes(1) == 1);
    CHECK(count_tree_shapes(4) == 5);
    CHECK(count_tree_shapes(6) == 42);
    for (int l = 1; l <= 10; ++l)
        CHECK(count_tree_shapes(l) == test::enumerate_shapes(l).size());
    // Catalan(29)
    CHECK(count_tree_shapes(30) == 1002242216651368ull);
    CHECK(code_of([] { count_tree_shapes(31); }) == ErrorCode::Overflow);
    CHECK(code_of([] { count_tree_shapes(0); }) == ErrorCode::InvalidParams);
}

TEST_CASE("small tree shapes are forced")
{
    Rng rng(1);
    for (int i = 0; i < 100; ++i)
    {
        CHECK(sample_tree_shape(1, rng).encode() == "L");
        CHECK(sample_tree_shape(2, rng).encode() == "ILL");
    }
}

TEST_CASE("tree shapes are uniform")
{
    CHECK(shape_chi_square_p(3, 20000, 2) > 0.001);
    CHECK(shape_chi_square_p(4, 20000, 3) > 0.001);
    CHECK(shape_chi_square_p(5, 28000, 4) > 0.001);
}

TEST_CASE("tree shape layout")
{
    Rng rng(5);
    for (int l = 1; l <= 12; ++l)
    {
        auto shape = sample_tree_shape(l, rng);
        REQUIRE(shape.node_count() == static_cast<std::size_t>(2 * l - 1));
        REQUIRE(shape.leaf_count() == static_cast<std::size_t>(l));
        for (std::size_t k = 0; k < shape.internal_count(); ++k)
        {
            int node = shape.internal_node(static_cast<int>(k));
            for (int child : {shape.left(node), shape.right(node)})
            {
                REQUIRE(shape.parent(child) == node);
                if (!shape.is_leaf(child))
                    REQUIRE(shape.internal_index(child) < static_cast<int>(k));
            }
        }
        // leaves numbered left to right = increasing pre-order position
        for (int i = 1; i < l; ++i)
            REQUIRE(shape.leaf_node(i - 1) < shape.leaf_node(i));
        REQUIRE(shape.leaves_under(shape.root()).size() == static_cast<std::size_t>(l));
    }
    CHECK_THROWS_AS(TreeShape({1, -1}, {-1, -1}, 0), Error);
}

TEST_CASE("rotations are proper and Haar distributed")
{
    Rng rng(6);
    int const n = 100000;
    Vec3 mean = Vec3::Zero();
    std::vector<double> angles;
    for (int i = 0; i < n; ++i)
    {
        Mat3 m = sample_rotation_uniform(rng);
        REQUIRE((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        REQUIRE(std::abs(m.determinant() - 1) < 1e-9);
        mean += m * Vec3(0, 0, 1);
        angles.push_back(std::acos(std::clamp((m.trace() - 1) / 2, -1.0, 1.0)));
    }
    mean /= n;
    double bound = 3 * (1 / std::sqrt(3.0)) / std::sqrt(static_cast<double>(n));
    CHECK(mean.cwiseAbs().maxCoeff() < bound);
    // Haar angle density (1 - cos t) / pi integrates to (t - sin t) / pi.
    CHECK(test::ks_p(angles, [](double t) { return (t - std::sin(t)) / pi; }) > 0.001);
}

TEST_CASE("volume points")
{
    auto sample = test::single_leaf_sample(PrimitiveInstance{SphereParams{1.0}, Pose{}});
    Rng rng(7);
    long attempts = 0, accepted = 0;
    while (attempts < 100000)
    {
        auto v = sample_volume_point(sample, 0, rng);
        REQUIRE(v.point.norm() < 1);
        attempts += v.attempts;
        ++accepted;
    }
    CHECK(std::abs(static_cast<double>(accepted) / attempts - pi / 6) < 0.01);

    // A - B with B containing A: right is the minuend.
    auto empty = test::two_leaf_sample(test::sphere_at(Vec3::Zero(), 1.0),
                                       test::sphere_at(Vec3::Zero(), 0.5), BoolOp::Difference);
    CHECK(code_of([&] { sample_volume_point(empty, 0, rng); }) == ErrorCode::EmptySolid);
    auto report = validate_rct(empty);
    CHECK_FALSE(report.non_empty);
    CHECK(report.bounded);
}

TEST_CASE("spec validation")
{
    RctSpec spec;
    CHECK_NOTHROW(validate(spec));
    spec.leaf_min = 0;
    CHECK_THROWS_AS(validate(spec), Error);
    spec = RctSpec{};
    spec.leaf_min = 4;
    spec.leaf_max = 3;
    CHECK_THROWS_AS(validate(spec), Error);
    spec = RctSpec{};
    spec.kinds.clear();
    CHECK_THROWS_AS(validate(spec), Error);
    spec = RctSpec{};
    spec.scale_min = 0;
    CHECK_THROWS_AS(validate(spec), Error);
}

TEST_CASE("sample_rct structural examples")
{
    RctSpec spheres;
    spheres.kinds = {PrimitiveKind::Sphere};
    spheres.leaf_min = spheres.leaf_max = 1;
    for (std::uint64_t i = 0; i < 50; ++i)
    {
        auto s = sample_rct(spheres, i);
        REQUIRE(s.leaves.size() == 1);
        REQUIRE(s.internal_ops.empty());
        REQUIRE(s.leaves[0].kind() == PrimitiveKind::Sphere);
        REQUIRE(s.leaves[0].pose.scale >= spheres.scale_min);
        REQUIRE(s.leaves[0].pose.scale <= spheres.scale_max);
    }

    RctSpec three;
    three.leaf_min = three.leaf_max = 3;
    three.ops = {BoolOp::Union, BoolOp::Intersection, BoolOp::Difference};
    for (std::uint64_t i = 0; i < 200; ++i)
    {
        auto s = sample_rct(three, i);
        REQUIRE(s.leaves.size() == 3);
        REQUIRE(s.internal_ops.size() == 2);
        REQUIRE(s.anchors.size() == 2);
        for (auto const& leaf : s.leaves)
        {
            REQUIRE(in_default_domain(leaf.params));
            REQUIRE_NOTHROW(validate(leaf.pose));
        }
        REQUIRE_NOTHROW(check_structure(s));
    }
}

TEST_CASE("leaf counts are uniform over the range")
{
    RctSpec spec;
    std::vector<double> counts(6, 0.0);
    int const n = 3000;
    for (std::uint64_t i = 0; i < n; ++i)
        counts[sample_rct(spec, i).leaves.size() - 1] += 1;
    CHECK(test::chi_square_p(counts, std::vector<double>(6, n / 6.0)) > 0.001);
}

TEST_CASE("union anchors lie inside both children")
{
    RctSpec spec;
    spec.master_seed = 99;
    for (std::uint64_t i = 0; i < 1000; ++i)
    {
        auto s = sample_rct(spec, i);
        for (std::size_t k = 0; k < s.internal_ops.size(); ++k)
        {
            int node = s.shape.internal_node(static_cast<int>(k));
            Vec3 const& p = s.anchor_points[k];
            REQUIRE(classify_subtree(s, s.shape.left(node), p, kDefaultOnTolerance) == Membership::In);
            REQUIRE(classify_subtree(s, s.shape.right(node), p, kDefaultOnTolerance) == Membership::In);
        }
        if (!s.internal_ops.empty())
            REQUIRE(classify_membership(s, s.anchor_points.back(), kDefaultOnTolerance)
                    == Membership::In);
    }
}

TEST_CASE("anchor offsets translate the left subtree")
{
    // The anchor offset is p_r - p_l: the recorded anchor point sits where the
    // left child's draw was moved to, so left leaves carry the offset.
    RctSpec spec;
    spec.leaf_min = spec.leaf_max = 2;
    spec.kinds = {PrimitiveKind::Sphere};
    for (std::uint64_t i = 0; i < 100; ++i)
    {
        auto s = sample_rct(spec, i);
        REQUIRE(s.anchors.size() == 1);
        Vec3 p_l = s.anchor_points[0] - s.anchors[0];
        // p_l was drawn inside the untranslated left leaf
        PrimitiveInstance untranslated = s.leaves[0];
        untranslated.pose.translation -= s.anchors[0];
        REQUIRE(classify_point(untranslated, p_l, kDefaultOnTolerance) == Membership::In);
    }
}

TEST_CASE("sample_rct is deterministic and order independent")
{
    RctSpec spec;
    spec.master_seed = 1234;
    spec.ops = {BoolOp::Union, BoolOp::Intersection, BoolOp::Difference};
    std::vector<std::string> forward, backward(50);
    for (std::uint64_t i = 0; i < 50; ++i)
        forward.push_back(to_json(sample_rct(spec, i)).dump());
    for (std::uint64_t i = 50; i-- > 0;)
        backward[i] = to_json(sample_rct(spec, i)).dump();
    CHECK(forward == backward);

    RctSpec other = spec;
    other.master_seed = 1235;
    CHECK(to_json(sample_rct(other, 0)).dump() != forward[0]);
    CHECK(forward[0] != forward[1]);
}

TEST_CASE("union-only samples are non-empty and bounded")
{
    RctSpec spec;
    spec.master_seed = 5;
    for (std::uint64_t i = 0; i < 1000; ++i)
    {
        auto report = validate_rct(sample_rct(spec, i));
        REQUIRE(report.non_empty);
        REQUIRE(report.bounded);
        REQUIRE(report.op_histogram[1] == 0);
        REQUIRE(report.op_histogram[2] == 0);
    }
}

TEST_CASE("mixed-op samples are non-empty")
{
    RctSpec spec;
    spec.master_seed = 6;
    spec.ops = {BoolOp::Union, BoolOp::Intersection, BoolOp::Difference};
    std::array<std::size_t, 3> ops{};
    for (std::uint64_t i = 0; i < 300; ++i)
    {
        auto report = validate_rct(sample_rct(spec, i));
        REQUIRE(report.non_empty);
        for (int k = 0; k < 3; ++k)
            ops[k] += report.op_histogram[k];
    }
    for (auto c : ops)
        CHECK(c > 0);
}
