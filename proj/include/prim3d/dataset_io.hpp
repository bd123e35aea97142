#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>

#include "serialize.hpp"

namespace prim3d
{

namespace fs = std::filesystem;

//---------------------------------------------------------------------------//
// HASHING
//---------------------------------------------------------------------------//
class Fnv1a64
{
  public:
    void update(std::span<std::uint8_t const> bytes)
    {
        for (auto b : bytes)
        {
            state_ ^= b;
            state_ *= 0x100000001B3ull;
        }
    }
    std::uint64_t digest() const { return state_; }

  private:
    std::uint64_t state_ = 0xCBF29CE484222325ull;
};

std::string hex64(std::uint64_t v);

//---------------------------------------------------------------------------//
// DATASET FILE
//---------------------------------------------------------------------------//
inline constexpr char kDatasetMagic[4] = {'P', '3', 'D', 'S'};
inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::uint16_t kFlagNormals = 0x1;
inline constexpr std::size_t kDatasetHeaderBytes = 20;

struct DatasetHeader
{
    std::uint16_t version = kDatasetVersion;
    std::uint64_t object_count = 0;
    std::uint32_t n_points = 0;
    std::uint16_t flags = 0;

    bool has_normals() const { return (flags & kFlagNormals) != 0; }
};

struct Manifest
{
    int format_version = kDatasetVersion;
    RctSpec spec;
    SamplerConfig sampler;
    std::uint64_t object_count = 0;
    std::uint64_t content_hash = 0;
    std::string tool_version = kToolVersion;
};

Json to_json(Manifest const& m);
Manifest manifest_from_json(Json const& j);
void write_manifest(Manifest const& m, fs::path const& path);
Manifest read_manifest(fs::path const& path);

/// Serialized bytes of one record (everything after the header for that object).
std::vector<std::uint8_t> encode_record(RctSample const& sample, LabeledPointCloud const& cloud,
                                        bool normals);

/*!
 * Sequential writer. Records must arrive with strictly ascending object
 * indices; the header count is patched on finish(). If the writer is
 * destroyed without finish(), the partial file is removed.
 */
class DatasetWriter
{
  public:
    DatasetWriter(fs::path path, std::uint32_t n_points, bool normals);
    ~DatasetWriter();

    DatasetWriter(DatasetWriter const&) = delete;
    DatasetWriter& operator=(DatasetWriter const&) = delete;

    void append(RctSample const& sample, LabeledPointCloud const& cloud);

    //! Object count and content hash of everything appended.
    std::pair<std::uint64_t, std::uint64_t> finish();

  private:
    fs::path path_;
    std::ofstream out_;
    std::uint32_t n_points_;
    bool normals_;
    std::uint64_t count_ = 0;
    std::optional<std::uint64_t> last_index_;
    Fnv1a64 hash_;
    bool finished_ = false;
};

struct DatasetRecord
{
    std::uint64_t object_index = 0;
    RctSample sample;
    LabeledPointCloud cloud;
};

class DatasetReader
{
  public:
    explicit DatasetReader(fs::path const& path);

    DatasetHeader const& header() const { return header_; }

    //! Next record, or nullopt once all header-declared records were read.
    std::optional<DatasetRecord> next();

    //! Hash of all records read so far.
    std::uint64_t content_hash() const { return hash_.digest(); }

  private:
    void read_exact(void* dst, std::size_t n, Fnv1a64* hash);

    std::ifstream in_;
    DatasetHeader header_;
    std::uint64_t read_ = 0;
    Fnv1a64 hash_;
};

/// Writes records in ascending object_index regardless of input order, then
/// the manifest (unless `manifest_path` is empty).
Manifest write_dataset(std::span<GeneratedObject const> objects, fs::path const& path,
                       fs::path const& manifest_path, RctSpec const& spec,
                       SamplerConfig const& sampler);

struct Dataset
{
    DatasetHeader header;
    std::vector<DatasetRecord> records;
    std::uint64_t content_hash = 0;
};

Dataset read_dataset(fs::path const& path);

//---------------------------------------------------------------------------//
// PLY
//---------------------------------------------------------------------------//
enum class PlyFormat
{
    BinaryLittleEndian,
    Ascii,
};

void export_ply(LabeledPointCloud const& cloud, fs::path const& path,
                PlyFormat format = PlyFormat::BinaryLittleEndian);

//---------------------------------------------------------------------------//
// FEATURE FILE
//---------------------------------------------------------------------------//
inline constexpr char kFeatureMagic[4] = {'P', '3', 'D', 'F'};
inline constexpr std::size_t kFeatureHeaderBytes = 16;

//! Sidecar path: "<path>.json"
fs::path feature_sidecar_path(fs::path const& path);

/// Writes the binary matrix (float32 values) and, if `sidecar` is not null,
/// the JSON sidecar.
void write_feature_file(FeatureMatrix const& matrix, fs::path const& path,
                        Json const& sidecar = nullptr);

FeatureMatrix read_feature_file(fs::path const& path);

}  // namespace prim3d
