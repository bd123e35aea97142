#include <cstring>
#include <sstream>

#include <doctest.h>

#include "prim3d/dataset_io.hpp"
#include "test_support.hpp"

using namespace prim3d;
namespace fs = std::filesystem;

namespace
{
std::uint64_t le(std::vector<std::uint8_t> const& b, std::size_t offset, int bytes)
{
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i)
        v = (v << 8) | b[offset + static_cast<std::size_t>(i)];
    return v;
}

std::uint64_t fnv1a(std::uint8_t const* data, std::size_t n)
{
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i)
        h = (h ^ data[i]) * 1099511628211ull;
    return h;
}

struct Generated
{
    RctSpec spec;
    SamplerConfig sampler;
    std::vector<GeneratedObject> objects;
};

Generated make_objects(std::size_t count, bool normals = true, unsigned threads = 2)
{
    Generated g;
    g.spec.master_seed = 314;
    g.spec.ops = {BoolOp::Union, BoolOp::Difference};
    g.sampler.n_points = 96;
    g.sampler.normals = normals;
    g.objects = generate_batch(g.spec, g.sampler, 0, count, threads);
    return g;
}

// Minimal PLY reader covering the vertex layouts this library writes.
struct PlyVertex
{
    std::vector<float> values;
    int semantic = 0, instance = 0;
};

std::vector<PlyVertex> read_ply(fs::path const& path, std::vector<std::string>& props)
{
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "ply");
    std::getline(in, line);
    bool ascii = line == "format ascii 1.0";
    REQUIRE((ascii || line == "format binary_little_endian 1.0"));
    std::size_t count = 0;
    while (std::getline(in, line) && line != "end_header")
    {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "element")
        {
            std::string name;
            ls >> name >> count;
            REQUIRE(name == "vertex");
        }
        else if (word == "property")
        {
            std::string type, name;
            ls >> type >> name;
            props.push_back(type + " " + name);
        }
    }
    std::size_t floats = props.size() - 2;
    std::vector<PlyVertex> out(count);
    for (auto& v : out)
    {
        v.values.resize(floats);
        if (ascii)
        {
            for (auto& f : v.values)
                in >> f;
            in >> v.semantic >> v.instance;
        }
        else
        {
            in.read(reinterpret_cast<char*>(v.values.data()), static_cast<std::streamsize>(4 * floats));
            unsigned char labels[2];
            in.read(reinterpret_cast<char*>(labels), 2);
            v.semantic = labels[0];
            v.instance = labels[1];
        }
    }
    REQUIRE(in.good());
    if (ascii)
        in >> std::ws;
    in.peek();
    CHECK(in.eof());
    return out;
}
}  // namespace

TEST_CASE("fnv1a reference values")
{
    Fnv1a64 empty;
    CHECK(empty.digest() == 0xcbf29ce484222325ull);
    Fnv1a64 a;
    std::uint8_t byte = 'a';
    a.update({&byte, 1});
    CHECK(a.digest() == 0xaf63dc4c8601ec8cull);
    Fnv1a64 foobar;
    std::string text = "foobar";
    foobar.update({reinterpret_cast<std::uint8_t const*>(text.data()), text.size()});
    CHECK(foobar.digest() == 0x85944171f73967e8ull);
    CHECK(hex64(0xaf63dc4c8601ec8cull) == "af63dc4c8601ec8c");
    CHECK(hex64(1) == "0000000000000001");
}

TEST_CASE("dataset round trip")
{
    test::TempDir dir("roundtrip");
    auto g = make_objects(10);
    // hand the writer a shuffled batch; it must sort by index
    std::vector<GeneratedObject> shuffled(g.objects.rbegin(), g.objects.rend());
    auto manifest = write_dataset(shuffled, dir / "d.p3ds", dir / "d.json", g.spec, g.sampler);
    CHECK(manifest.object_count == 10);

    auto bytes = test::read_bytes(dir / "d.p3ds");
    REQUIRE(bytes.size() > kDatasetHeaderBytes);
    CHECK(std::memcmp(bytes.data(), "P3DS", 4) == 0);
    CHECK(le(bytes, 4, 2) == 1);
    CHECK(le(bytes, 6, 8) == 10);
    CHECK(le(bytes, 14, 4) == 96);
    CHECK(le(bytes, 18, 2) == 1);
    CHECK(fnv1a(bytes.data() + kDatasetHeaderBytes, bytes.size() - kDatasetHeaderBytes)
          == manifest.content_hash);

    // record sizes follow the declared layout
    std::size_t offset = kDatasetHeaderBytes;
    for (std::uint64_t i = 0; i < 10; ++i)
    {
        CHECK(le(bytes, offset, 8) == i);
        std::size_t json = le(bytes, offset + 8, 4);
        offset += 12 + json + 96 * (24 + 2);
    }
    CHECK(offset == bytes.size());

    auto ds = read_dataset(dir / "d.p3ds");
    CHECK(ds.content_hash == manifest.content_hash);
    REQUIRE(ds.records.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
    {
        auto const& rec = ds.records[i];
        auto const& src = g.objects[i];
        CHECK(rec.object_index == i);
        CHECK(to_json(rec.sample).dump() == to_json(src.sample).dump());
        CHECK(rec.cloud.points == src.cloud.points.cast<float>().cast<double>());
        CHECK(*rec.cloud.normals == src.cloud.normals->cast<float>().cast<double>());
        CHECK(rec.cloud.semantic == src.cloud.semantic);
        CHECK(rec.cloud.instance == src.cloud.instance);
        CHECK(rec.cloud.centroid == src.cloud.centroid);
        CHECK(rec.cloud.scale == src.cloud.scale);
    }

    auto back = read_manifest(dir / "d.json");
    CHECK(back.content_hash == manifest.content_hash);
    CHECK(back.object_count == 10);
    CHECK(to_json(back.spec) == to_json(g.spec));
    CHECK(to_json(back.sampler) == to_json(g.sampler));
    CHECK(back.tool_version == kToolVersion);

    // re-writing the read records gives the same bytes
    std::vector<GeneratedObject> again;
    for (auto& rec : ds.records)
        again.push_back({rec.sample, rec.cloud});
    auto m2 = write_dataset(again, dir / "e.p3ds", {}, g.spec, g.sampler);
    CHECK(m2.content_hash == manifest.content_hash);
    CHECK(test::read_bytes(dir / "e.p3ds") == bytes);
}

TEST_CASE("datasets without normals")
{
    test::TempDir dir("nonormals");
    auto g = make_objects(3, false);
    auto manifest = write_dataset(g.objects, dir / "d.p3ds", {}, g.spec, g.sampler);
    auto ds = read_dataset(dir / "d.p3ds");
    CHECK_FALSE(ds.header.has_normals());
    CHECK_FALSE(ds.records[0].cloud.normals.has_value());
    CHECK(ds.content_hash == manifest.content_hash);
}

TEST_CASE("empty dataset")
{
    test::TempDir dir("empty");
    auto g = make_objects(0);
    auto manifest = write_dataset(g.objects, dir / "d.p3ds", {}, g.spec, g.sampler);
    CHECK(manifest.object_count == 0);
    CHECK(fs::file_size(dir / "d.p3ds") == kDatasetHeaderBytes);
    auto ds = read_dataset(dir / "d.p3ds");
    CHECK(ds.records.empty());
    CHECK(ds.content_hash == 0xcbf29ce484222325ull);
}

TEST_CASE("thread count does not change the content hash")
{
    test::TempDir dir("threads");
    auto one = make_objects(24, true, 1);
    auto eight = make_objects(24, true, 8);
    auto a = write_dataset(one.objects, dir / "a.p3ds", {}, one.spec, one.sampler);
    auto b = write_dataset(eight.objects, dir / "b.p3ds", {}, eight.spec, eight.sampler);
    CHECK(a.content_hash == b.content_hash);
    CHECK(test::read_bytes(dir / "a.p3ds") == test::read_bytes(dir / "b.p3ds"));
}

TEST_CASE("corrupted datasets are rejected")
{
    test::TempDir dir("corrupt");
    auto g = make_objects(4);
    auto manifest = write_dataset(g.objects, dir / "d.p3ds", {}, g.spec, g.sampler);
    auto bytes = test::read_bytes(dir / "d.p3ds");

    SUBCASE("truncated")
    {
        auto cut = bytes;
        cut.resize(cut.size() - 7);
        test::write_bytes(dir / "x.p3ds", cut);
        CHECK(test::error_code([&] { read_dataset(dir / "x.p3ds"); }) == ErrorCode::LengthMismatch);
        cut.resize(10);
        test::write_bytes(dir / "x.p3ds", cut);
        CHECK(test::error_code([&] { read_dataset(dir / "x.p3ds"); }) == ErrorCode::LengthMismatch);
    }
    SUBCASE("trailing bytes")
    {
        auto extra = bytes;
        extra.push_back(0);
        test::write_bytes(dir / "x.p3ds", extra);
        CHECK(test::error_code([&] { read_dataset(dir / "x.p3ds"); }) == ErrorCode::LengthMismatch);
    }
    SUBCASE("bad magic")
    {
        auto bad = bytes;
        bad[0] = 'X';
        test::write_bytes(dir / "x.p3ds", bad);
        CHECK(test::error_code([&] { read_dataset(dir / "x.p3ds"); }) == ErrorCode::BadMagic);
    }
    SUBCASE("label out of range")
    {
        auto bad = bytes;
        bad.back() = 200;  // instance label of the last point
        test::write_bytes(dir / "x.p3ds", bad);
        CHECK(test::error_code([&] { read_dataset(dir / "x.p3ds"); })
              == ErrorCode::ValidationFailed);
    }
    SUBCASE("a flipped coordinate byte changes the hash")
    {
        auto bad = bytes;
        bad[bad.size() - 5] ^= 0x01;
        test::write_bytes(dir / "x.p3ds", bad);
        CHECK(read_dataset(dir / "x.p3ds").content_hash != manifest.content_hash);
    }
    SUBCASE("missing file")
    {
        CHECK(test::error_code([&] { read_dataset(dir / "nope.p3ds"); }) == ErrorCode::IoError);
    }
}

TEST_CASE("writer invariants")
{
    test::TempDir dir("writer");
    auto g = make_objects(3);
    {
        DatasetWriter w(dir / "w.p3ds", 96, true);
        w.append(g.objects[1].sample, g.objects[1].cloud);
        CHECK(test::error_code([&] { w.append(g.objects[0].sample, g.objects[0].cloud); })
              == ErrorCode::InvalidParams);
        auto no_normals = g.objects[2].cloud;
        no_normals.normals.reset();
        CHECK(test::error_code([&] { w.append(g.objects[2].sample, no_normals); })
              == ErrorCode::HeterogeneousRecords);
        DatasetWriter other(dir / "v.p3ds", 50, true);
        CHECK(test::error_code([&] { other.append(g.objects[0].sample, g.objects[0].cloud); })
              == ErrorCode::HeterogeneousRecords);
    }
    // neither writer finished, so neither file remains
    CHECK_FALSE(fs::exists(dir / "w.p3ds"));
    CHECK_FALSE(fs::exists(dir / "v.p3ds"));
    CHECK(test::error_code([&] { DatasetWriter(dir / "missing" / "x.p3ds", 96, true); })
          == ErrorCode::IoError);
}

TEST_CASE("PLY export")
{
    test::TempDir dir("ply");
    auto g = make_objects(1);
    auto cloud = g.objects[0].cloud;
    SamplerConfig cfg;
    Rng rng(1);
    auto big = sample_labeled_cloud(g.objects[0].sample, cfg, rng);
    export_ply(big, dir / "big.ply");
    std::ifstream in(dir / "big.ply");
    std::string line;
    bool found = false;
    while (std::getline(in, line) && line != "end_header")
        found = found || line == "element vertex 1024";
    CHECK(found);

    for (auto format : {PlyFormat::BinaryLittleEndian, PlyFormat::Ascii})
    {
        export_ply(cloud, dir / "c.ply", format);
        std::vector<std::string> props;
        auto verts = read_ply(dir / "c.ply", props);
        CHECK(props
              == std::vector<std::string>{"float x", "float y", "float z", "float nx", "float ny",
                                          "float nz", "uchar semantic", "uchar instance"});
        REQUIRE(verts.size() == cloud.size());
        for (std::size_t i = 0; i < verts.size(); ++i)
        {
            auto ii = static_cast<Eigen::Index>(i);
            for (int c = 0; c < 3; ++c)
            {
                CHECK(verts[i].values[c] == static_cast<float>(cloud.points(ii, c)));
                CHECK(verts[i].values[3 + c] == static_cast<float>((*cloud.normals)(ii, c)));
            }
            CHECK(verts[i].semantic == cloud.semantic[i]);
            CHECK(verts[i].instance == cloud.instance[i]);
        }
    }

    cloud.normals.reset();
    export_ply(cloud, dir / "n.ply");
    std::vector<std::string> props;
    auto verts = read_ply(dir / "n.ply", props);
    CHECK(props.size() == 5);
    CHECK(std::find(props.begin(), props.end(), "float nx") == props.end());
    CHECK(test::error_code([&] { export_ply(cloud, dir / "missing" / "x.ply"); })
          == ErrorCode::IoError);
}

TEST_CASE("feature file round trip")
{
    test::TempDir dir("features");
    Rng rng(2);
    RowMatrix data(100, 64);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        for (Eigen::Index j = 0; j < data.cols(); ++j)
            data(i, j) = static_cast<float>(rng.normal());
    std::vector<std::uint64_t> ids(100);
    for (std::size_t i = 0; i < ids.size(); ++i)
        ids[i] = 0xFFFF0000ull + 3 * i;
    auto m = make_feature_matrix(data, ids);
    Json sidecar{{"descriptor", to_json(DescriptorConfig{})}};
    write_feature_file(m, dir / "f.p3df", sidecar);

    auto bytes = test::read_bytes(dir / "f.p3df");
    CHECK(bytes.size() == 16 + 8 * 100 + 4 * 100 * 64);
    CHECK(std::memcmp(bytes.data(), "P3DF", 4) == 0);
    CHECK(le(bytes, 4, 8) == 100);
    CHECK(le(bytes, 12, 4) == 64);
    CHECK(le(bytes, 16, 8) == ids[0]);

    auto back = read_feature_file(dir / "f.p3df");
    CHECK(back.row_ids == ids);
    CHECK(back.data == data);

    std::ifstream side(feature_sidecar_path(dir / "f.p3df"));
    auto j = Json::parse(side);
    CHECK(j.at("descriptor") == to_json(DescriptorConfig{}));
    CHECK(j.at("rows") == 100);
    CHECK(j.at("cols") == 64);

    auto cut = bytes;
    cut.pop_back();
    test::write_bytes(dir / "t.p3df", cut);
    CHECK(test::error_code([&] { read_feature_file(dir / "t.p3df"); })
          == ErrorCode::LengthMismatch);

    std::vector<std::uint8_t> zero(bytes.begin(), bytes.begin() + 16);
    std::fill(zero.begin() + 4, zero.begin() + 12, 0);
    test::write_bytes(dir / "z.p3df", zero);
    CHECK(test::error_code([&] { read_feature_file(dir / "z.p3df"); })
          == ErrorCode::LengthMismatch);

    auto bad = bytes;
    bad[3] = 'S';
    test::write_bytes(dir / "b.p3df", bad);
    CHECK(test::error_code([&] { read_feature_file(dir / "b.p3df"); }) == ErrorCode::BadMagic);
}

TEST_CASE("sample JSON rejects malformed records")
{
    auto g = make_objects(1);
    Json j = to_json(g.objects[0].sample);
    CHECK(to_json(rct_sample_from_json(j)).dump() == j.dump());

    Json wrong_kind = j;
    wrong_kind["leaves"][0]["kind"] = "pyramid";
    CHECK(test::error_code([&] { rct_sample_from_json(wrong_kind); }) == ErrorCode::InvalidParams);

    Json missing = j;
    missing.erase("tree");
    CHECK(test::error_code([&] { rct_sample_from_json(missing); }) == ErrorCode::InvalidParams);

    RctSpec spec;
    spec.kinds = {PrimitiveKind::Torus, PrimitiveKind::Box};
    spec.ops = {BoolOp::Intersection};
    spec.leaf_min = 2;
    spec.master_seed = 1ull << 63;
    CHECK(to_json(rct_spec_from_json(to_json(spec))) == to_json(spec));
}
