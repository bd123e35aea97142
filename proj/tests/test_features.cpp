#include <numeric>

#include <doctest.h>

#include "prim3d/features.hpp"
#include "test_support.hpp"

using namespace prim3d;

namespace
{
LabeledPointCloud sphere_cloud(int n, std::uint64_t seed)
{
    auto sample = test::single_leaf_sample(test::sphere_at(Vec3::Zero()));
    SamplerConfig cfg;
    cfg.n_points = n;
    Rng rng(seed);
    return sample_labeled_cloud(sample, cfg, rng);
}

LabeledPointCloud object_cloud(RctSample const& sample, std::uint64_t seed)
{
    SamplerConfig cfg;
    Rng rng(seed);
    return sample_labeled_cloud(sample, cfg, rng);
}

RctSample box_union()
{
    RctSample s;
    // ((b0 u b1) u b2) laid out along x
    s.shape = TreeShape({1, 2, -1, -1, -1}, {4, 3, -1, -1, -1}, 0);
    for (int i = 0; i < 3; ++i)
    {
        PrimitiveInstance box{BoxParams{Vec3(0.5, 0.3, 0.3)}, Pose{}};
        box.pose.translation = Vec3(0.8 * i, 0, 0);
        s.leaves.push_back(box);
    }
    s.internal_ops = {BoolOp::Union, BoolOp::Union};
    s.anchors = {Vec3::Zero(), Vec3::Zero()};
    s.anchor_points = {Vec3::Zero(), Vec3::Zero()};
    return s;
}
}  // namespace

TEST_CASE("descriptor layout")
{
    DescriptorConfig cfg;
    CHECK(descriptor_size(cfg) == 67);
    cfg.include_label_hist = true;
    CHECK(descriptor_size(cfg) == 72);
    cfg.include_eigen = false;
    CHECK(descriptor_size(cfg) == 69);
    cfg.d2_bins = 1;
    CHECK_THROWS_AS(validate(cfg), Error);

    auto cloud = sphere_cloud(512, 1);
    DescriptorConfig full;
    full.include_label_hist = true;
    auto v = extract_descriptor(cloud, full);
    REQUIRE(v.size() == descriptor_size(full));
    double hist = std::accumulate(v.begin(), v.begin() + 64, 0.0);
    double eig = std::accumulate(v.begin() + 64, v.begin() + 67, 0.0);
    CHECK(std::abs(hist - 1) < 1e-9);
    CHECK(std::abs(eig - 1) < 1e-9);
    CHECK(v[64] >= v[65]);
    CHECK(v[65] >= v[66]);
    // every point is a sphere point
    CHECK(v[67 + static_cast<int>(PrimitiveKind::Sphere)] == 1.0);
}

TEST_CASE("descriptor is deterministic and order invariant")
{
    auto cloud = sphere_cloud(1024, 2);
    DescriptorConfig cfg;
    auto a = extract_descriptor(cloud, cfg);
    CHECK(a == extract_descriptor(cloud, cfg));

    LabeledPointCloud shuffled = cloud;
    Rng rng(3);
    for (std::size_t i = cloud.size() - 1; i > 0; --i)
    {
        std::size_t j = rng.index(i + 1);
        shuffled.points.row(static_cast<Eigen::Index>(i)).swap(
            shuffled.points.row(static_cast<Eigen::Index>(j)));
        std::swap(shuffled.semantic[i], shuffled.semantic[j]);
        std::swap(shuffled.instance[i], shuffled.instance[j]);
    }
    CHECK(extract_descriptor(shuffled, cfg) == a);

    DescriptorConfig other = cfg;
    other.pair_seed = 9;
    CHECK(extract_descriptor(cloud, other) != a);
}

TEST_CASE("sphere eigenvalues are isotropic")
{
    auto cloud = sphere_cloud(8192, 4);
    auto v = extract_descriptor(cloud, DescriptorConfig{});
    for (int i = 64; i < 67; ++i)
        CHECK(std::abs(v[i] - 1.0 / 3) < 0.02);
}

TEST_CASE("translation before normalization does not change the descriptor")
{
    auto sample = box_union();
    auto moved = sample;
    for (auto& leaf : moved.leaves)
        leaf.pose.translation += Vec3(5, -2, 7);
    auto a = extract_descriptor(object_cloud(sample, 5), DescriptorConfig{});
    auto b = extract_descriptor(object_cloud(moved, 5), DescriptorConfig{});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) < 1e-6);
}

TEST_CASE("unnormalized input is rejected")
{
    auto sample = test::single_leaf_sample(test::sphere_at(Vec3::Zero(), 1.0));
    SamplerConfig cfg;
    cfg.normalize = false;
    cfg.n_points = 64;
    Rng rng(6);
    auto cloud = sample_labeled_cloud(sample, cfg, rng);
    cloud.points *= 1.01;
    CHECK(test::error_code([&] { extract_descriptor(cloud, DescriptorConfig{}); })
          == ErrorCode::UnnormalizedInput);
}

TEST_CASE("batch features")
{
    std::vector<LabeledPointCloud> clouds{sphere_cloud(256, 7), object_cloud(box_union(), 8)};
    clouds[0].object_index = 11;
    clouds[1].object_index = 4;
    DescriptorConfig cfg;

    std::span<LabeledPointCloud const> first(clouds.data(), 1);
    auto single = batch_features(first, cfg);
    REQUIRE(single.rows() == 1);
    CHECK(std::vector<double>(single.row(0).begin(), single.row(0).end())
          == extract_descriptor(clouds[0], cfg));

    auto both = batch_features(clouds, cfg, 2);
    CHECK(both.row_ids == std::vector<std::uint64_t>{11, 4});
    std::vector<LabeledPointCloud> swapped{clouds[1], clouds[0]};
    auto rev = batch_features(swapped, cfg);
    CHECK(rev.row_ids == std::vector<std::uint64_t>{4, 11});
    CHECK(rev.data.row(0) == both.data.row(1));
    CHECK(rev.data.row(1) == both.data.row(0));
    // a sphere and a row of boxes are far apart in descriptor space
    CHECK((both.data.row(0) - both.data.row(1)).norm() > 0.01);

    clouds[1].points *= 2;
    try
    {
        batch_features(clouds, cfg);
        FAIL("expected UnnormalizedInput");
    }
    catch (Error const& e)
    {
        CHECK(e.code() == ErrorCode::UnnormalizedInput);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}
