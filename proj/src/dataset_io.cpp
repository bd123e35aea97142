#include "prim3d/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <iomanip>
#include <limits>
#include <sstream>

namespace prim3d
{
namespace
{
// Little-endian encoders; the byte order is fixed independent of the host.
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    for (int i = 0; i < 2; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, double v)
{
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint64_t get_le(std::uint8_t const* p, int bytes)
{
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

float get_f32(std::uint8_t const* p)
{
    return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(p, 4)));
}

[[noreturn]] void io_error(std::string const& what, fs::path const& path)
{
    fail(ErrorCode::IoError, what + " '" + path.string() + "'");
}

std::vector<std::uint8_t> encode_header(DatasetHeader const& h)
{
    std::vector<std::uint8_t> out(kDatasetMagic, kDatasetMagic + 4);
    put_u16(out, h.version);
    put_u64(out, h.object_count);
    put_u32(out, h.n_points);
    put_u16(out, h.flags);
    return out;
}

void write_bytes(std::ofstream& out, std::span<std::uint8_t const> bytes)
{
    out.write(reinterpret_cast<char const*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::size_t point_stride(bool normals)
{
    return (normals ? 24 : 12) + 2;
}
}  // namespace

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

//---------------------------------------------------------------------------//
// MANIFEST
//---------------------------------------------------------------------------//
Json to_json(Manifest const& m)
{
    return Json{{"format_version", m.format_version},
                {"tool_version", m.tool_version},
                {"rct_spec", to_json(m.spec)},
                {"sampler", to_json(m.sampler)},
                {"object_count", m.object_count},
                {"content_hash", hex64(m.content_hash)}};
}

Manifest manifest_from_json(Json const& j)
{
    try
    {
        Manifest m;
        m.format_version = j.at("format_version").get<int>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.spec = rct_spec_from_json(j.at("rct_spec"));
        m.sampler = sampler_config_from_json(j.at("sampler"));
        m.object_count = j.at("object_count").get<std::uint64_t>();
        m.content_hash = std::stoull(j.at("content_hash").get<std::string>(), nullptr, 16);
        return m;
    }
    catch (nlohmann::json::exception const& e)
    {
        fail(ErrorCode::InvalidParams, std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(Manifest const& m, fs::path const& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        io_error("cannot open manifest for writing", path);
    out << to_json(m).dump(2) << '\n';
    if (!out)
        io_error("failed writing manifest", path);
}

Manifest read_manifest(fs::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        io_error("cannot open manifest", path);
    try
    {
        return manifest_from_json(Json::parse(in));
    }
    catch (nlohmann::json::parse_error const& e)
    {
        fail(ErrorCode::InvalidParams, std::string("manifest is not JSON: ") + e.what());
    }
}

//---------------------------------------------------------------------------//
// RECORDS
//---------------------------------------------------------------------------//
std::vector<std::uint8_t> encode_record(RctSample const& sample, LabeledPointCloud const& cloud,
                                        bool normals)
{
    Json j = to_json(sample);
    j["normalization"] = Json{{"centroid", {cloud.centroid[0], cloud.centroid[1], cloud.centroid[2]}},
                              {"scale", cloud.scale}};
    std::string text = j.dump();
    if (text.size() > std::numeric_limits<std::uint32_t>::max())
        fail(ErrorCode::InvalidParams, "record JSON too large");

    std::vector<std::uint8_t> out;
    out.reserve(12 + text.size() + cloud.size() * point_stride(normals));
    put_u64(out, sample.object_index);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (std::size_t i = 0; i < cloud.size(); ++i)
    {
        auto ii = static_cast<Eigen::Index>(i);
        for (int c = 0; c < 3; ++c)
            put_f32(out, cloud.points(ii, c));
        if (normals)
        {
            for (int c = 0; c < 3; ++c)
                put_f32(out, (*cloud.normals)(ii, c));
        }
        out.push_back(cloud.semantic[i]);
        out.push_back(cloud.instance[i]);
    }
    return out;
}

DatasetWriter::DatasetWriter(fs::path path, std::uint32_t n_points, bool normals)
    : path_(std::move(path)), n_points_(n_points), normals_(normals)
{
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_)
        io_error("cannot open dataset for writing", path_);
    DatasetHeader h;
    h.n_points = n_points;
    h.flags = normals ? kFlagNormals : 0;
    write_bytes(out_, encode_header(h));
}

DatasetWriter::~DatasetWriter()
{
    if (!finished_)
    {
        out_.close();
        std::error_code ec;
        fs::remove(path_, ec);
    }
}

void DatasetWriter::append(RctSample const& sample, LabeledPointCloud const& cloud)
{
    if (cloud.size() != n_points_ || cloud.normals.has_value() != normals_)
    {
        std::ostringstream os;
        os << "object " << sample.object_index << " has " << cloud.size() << " points"
           << (cloud.normals ? " with" : " without") << " normals; file expects " << n_points_
           << (normals_ ? " with" : " without") << " normals";
        fail(ErrorCode::HeterogeneousRecords, os.str());
    }
    if (last_index_ && sample.object_index <= *last_index_)
        fail(ErrorCode::InvalidParams, "records must have strictly ascending object indices");
    auto bytes = encode_record(sample, cloud, normals_);
    write_bytes(out_, bytes);
    if (!out_)
        io_error("failed writing dataset record to", path_);
    hash_.update(bytes);
    last_index_ = sample.object_index;
    ++count_;
}

std::pair<std::uint64_t, std::uint64_t> DatasetWriter::finish()
{
    std::vector<std::uint8_t> count;
    put_u64(count, count_);
    out_.seekp(6);
    write_bytes(out_, count);
    out_.close();
    if (!out_)
        io_error("failed finalizing dataset", path_);
    finished_ = true;
    return {count_, hash_.digest()};
}

DatasetReader::DatasetReader(fs::path const& path) : in_(path, std::ios::binary)
{
    if (!in_)
        io_error("cannot open dataset", path);
    std::uint8_t raw[kDatasetHeaderBytes];
    in_.read(reinterpret_cast<char*>(raw), sizeof(raw));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(raw)))
        fail(ErrorCode::LengthMismatch, "dataset header truncated");
    if (std::memcmp(raw, kDatasetMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not a P3DS dataset");
    header_.version = static_cast<std::uint16_t>(get_le(raw + 4, 2));
    header_.object_count = get_le(raw + 6, 8);
    header_.n_points = static_cast<std::uint32_t>(get_le(raw + 14, 4));
    header_.flags = static_cast<std::uint16_t>(get_le(raw + 18, 2));
    if (header_.version != kDatasetVersion)
        fail(ErrorCode::BadMagic, "unsupported dataset version");
}

void DatasetReader::read_exact(void* dst, std::size_t n, Fnv1a64* hash)
{
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
        fail(ErrorCode::LengthMismatch, "dataset record truncated");
    if (hash)
        hash->update({static_cast<std::uint8_t const*>(dst), n});
}

std::optional<DatasetRecord> DatasetReader::next()
{
    if (read_ == header_.object_count)
    {
        if (in_.peek() != std::char_traits<char>::eof())
            fail(ErrorCode::LengthMismatch, "dataset has bytes beyond the declared records");
        return std::nullopt;
    }
    std::uint8_t head[12];
    read_exact(head, sizeof(head), &hash_);
    DatasetRecord rec;
    rec.object_index = get_le(head, 8);
    std::size_t json_len = get_le(head + 8, 4);
    std::string text(json_len, '\0');
    read_exact(text.data(), json_len, &hash_);

    Json j;
    try
    {
        j = Json::parse(text);
    }
    catch (nlohmann::json::parse_error const& e)
    {
        fail(ErrorCode::InvalidParams, std::string("record JSON unreadable: ") + e.what());
    }
    rec.sample = rct_sample_from_json(j);
    if (rec.sample.object_index != rec.object_index)
        fail(ErrorCode::ValidationFailed, "record index disagrees with its JSON provenance");

    bool const normals = header_.has_normals();
    std::size_t const n = header_.n_points;
    std::size_t const stride = point_stride(normals);
    std::vector<std::uint8_t> body(n * stride);
    read_exact(body.data(), body.size(), &hash_);

    LabeledPointCloud& cloud = rec.cloud;
    cloud.points.resize(static_cast<Eigen::Index>(n), 3);
    if (normals)
        cloud.normals = PointMatrix(static_cast<Eigen::Index>(n), 3);
    cloud.semantic.resize(n);
    cloud.instance.resize(n);
    std::size_t const leaves = rec.sample.leaves.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        std::uint8_t const* p = body.data() + i * stride;
        auto ii = static_cast<Eigen::Index>(i);
        for (int c = 0; c < 3; ++c)
            cloud.points(ii, c) = get_f32(p + 4 * c);
        if (normals)
        {
            for (int c = 0; c < 3; ++c)
                (*cloud.normals)(ii, c) = get_f32(p + 12 + 4 * c);
        }
        cloud.semantic[i] = p[stride - 2];
        cloud.instance[i] = p[stride - 1];
        if (cloud.semantic[i] >= kNumKinds || cloud.instance[i] >= leaves)
        {
            std::ostringstream os;
            os << "object " << rec.object_index << " point " << i << " has out-of-range labels";
            fail(ErrorCode::ValidationFailed, os.str());
        }
    }
    try
    {
        auto const& norm = j.at("normalization");
        auto c = norm.at("centroid");
        cloud.centroid = Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
        cloud.scale = norm.at("scale").get<double>();
    }
    catch (nlohmann::json::exception const& e)
    {
        fail(ErrorCode::InvalidParams, std::string("record normalization missing: ") + e.what());
    }
    cloud.master_seed = rec.sample.master_seed;
    cloud.object_index = rec.object_index;
    ++read_;
    return rec;
}

Manifest write_dataset(std::span<GeneratedObject const> objects, fs::path const& path,
                       fs::path const& manifest_path, RctSpec const& spec,
                       SamplerConfig const& sampler)
{
    validate(sampler);
    std::vector<GeneratedObject const*> ordered;
    ordered.reserve(objects.size());
    for (auto const& o : objects)
        ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(), [](auto const* a, auto const* b) {
        return a->sample.object_index < b->sample.object_index;
    });

    DatasetWriter writer(path, static_cast<std::uint32_t>(sampler.n_points), sampler.normals);
    for (auto const* o : ordered)
        writer.append(o->sample, o->cloud);
    auto [count, hash] = writer.finish();

    Manifest m;
    m.spec = spec;
    m.sampler = sampler;
    m.object_count = count;
    m.content_hash = hash;
    if (!manifest_path.empty())
        write_manifest(m, manifest_path);
    return m;
}

Dataset read_dataset(fs::path const& path)
{
    DatasetReader reader(path);
    Dataset ds;
    ds.header = reader.header();
    while (auto rec = reader.next())
        ds.records.push_back(std::move(*rec));
    ds.content_hash = reader.content_hash();
    return ds;
}

//---------------------------------------------------------------------------//
// PLY
//---------------------------------------------------------------------------//
void export_ply(LabeledPointCloud const& cloud, fs::path const& path, PlyFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        io_error("cannot open PLY for writing", path);
    bool const normals = cloud.normals.has_value();
    bool const ascii = format == PlyFormat::Ascii;

    out << "ply\n"
        << (ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
        << "comment prim3d object " << cloud.object_index << " seed " << cloud.master_seed
        << '\n'
        << "element vertex " << cloud.size() << '\n'
        << "property float x\nproperty float y\nproperty float z\n";
    if (normals)
        out << "property float nx\nproperty float ny\nproperty float nz\n";
    out << "property uchar semantic\nproperty uchar instance\nend_header\n";

    if (ascii)
        out << std::setprecision(std::numeric_limits<float>::max_digits10);
    std::vector<std::uint8_t> buf;
    for (std::size_t i = 0; i < cloud.size(); ++i)
    {
        auto ii = static_cast<Eigen::Index>(i);
        float vals[6];
        int nvals = 3;
        for (int c = 0; c < 3; ++c)
            vals[c] = static_cast<float>(cloud.points(ii, c));
        if (normals)
        {
            for (int c = 0; c < 3; ++c)
                vals[3 + c] = static_cast<float>((*cloud.normals)(ii, c));
            nvals = 6;
        }
        if (ascii)
        {
            for (int c = 0; c < nvals; ++c)
                out << vals[c] << ' ';
            out << static_cast<int>(cloud.semantic[i]) << ' '
                << static_cast<int>(cloud.instance[i]) << '\n';
        }
        else
        {
            buf.clear();
            for (int c = 0; c < nvals; ++c)
                put_f32(buf, vals[c]);
            buf.push_back(cloud.semantic[i]);
            buf.push_back(cloud.instance[i]);
            write_bytes(out, buf);
        }
    }
    if (!out)
        io_error("failed writing PLY", path);
}

//---------------------------------------------------------------------------//
// FEATURE FILE
//---------------------------------------------------------------------------//
fs::path feature_sidecar_path(fs::path const& path)
{
    return fs::path(path.string() + ".json");
}

void write_feature_file(FeatureMatrix const& matrix, fs::path const& path, Json const& sidecar)
{
    validate(matrix);
    if (matrix.cols() > std::numeric_limits<std::uint32_t>::max())
        fail(ErrorCode::InvalidParams, "too many feature columns");
    std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 4);
    out.reserve(kFeatureHeaderBytes + 8 * matrix.rows() + 4 * matrix.rows() * matrix.cols());
    put_u64(out, matrix.rows());
    put_u32(out, static_cast<std::uint32_t>(matrix.cols()));
    for (auto id : matrix.row_ids)
        put_u64(out, id);
    for (std::size_t r = 0; r < matrix.rows(); ++r)
        for (double v : matrix.row(r))
            put_f32(out, v);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        io_error("cannot open feature file for writing", path);
    write_bytes(f, out);
    if (!f)
        io_error("failed writing feature file", path);

    if (!sidecar.is_null())
    {
        Json side = sidecar;
        side["rows"] = matrix.rows();
        side["cols"] = matrix.cols();
        std::ofstream s(feature_sidecar_path(path), std::ios::binary | std::ios::trunc);
        if (!s)
            io_error("cannot open feature sidecar", feature_sidecar_path(path));
        s << side.dump(2) << '\n';
    }
}

FeatureMatrix read_feature_file(fs::path const& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        io_error("cannot open feature file", path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < kFeatureHeaderBytes)
        fail(ErrorCode::LengthMismatch, "feature file shorter than its header");
    if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not a P3DF feature file");
    std::uint64_t const m = get_le(bytes.data() + 4, 8);
    std::uint64_t const d = get_le(bytes.data() + 12, 4);
    if (m == 0 || d == 0)
        fail(ErrorCode::LengthMismatch, "feature file declares an empty matrix");
    std::uint64_t const body = bytes.size() - kFeatureHeaderBytes;
    // Guard the size arithmetic against absurd headers.
    if (m > body / 8 || d > body / 4 || (body - 8 * m) / 4 / m != d
        || 8 * m + 4 * m * d != body)
    {
        std::ostringstream os;
        os << "feature file has " << bytes.size() << " bytes, header implies "
           << kFeatureHeaderBytes << " + 8*" << m << " + 4*" << m << "*" << d;
        fail(ErrorCode::LengthMismatch, os.str());
    }

    FeatureMatrix out;
    out.row_ids.resize(m);
    std::uint8_t const* p = bytes.data() + kFeatureHeaderBytes;
    for (std::uint64_t i = 0; i < m; ++i, p += 8)
        out.row_ids[i] = get_le(p, 8);
    out.data.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::uint64_t r = 0; r < m; ++r)
        for (std::uint64_t c = 0; c < d; ++c, p += 4)
            out.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_f32(p);
    validate(out);
    return out;
}

}  // namespace prim3d
