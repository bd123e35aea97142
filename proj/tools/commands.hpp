#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace prim3d::cli
{

namespace fs = std::filesystem;

//! Bad flag values or paths; reported with exit code 2.
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct GenerateOptions
{
    fs::path out;
    fs::path manifest;  // default: <out>.json
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
    std::uint64_t first = 0;
    std::string leaves = "1..6";
    std::string scale = "0.25..1";
    std::vector<std::string> kinds;  // default: all five
    std::vector<std::string> ops;    // default: union
    int points = 1024;
    double tol = 1e-7;
    bool no_normals = false;
    bool no_normalize = false;
    unsigned threads = 0;
    bool quiet = false;
};

struct ExportOptions
{
    fs::path dataset;
    std::vector<std::uint64_t> indices;  // empty: every object
    fs::path out;                        // single-object output file
    fs::path out_dir;
    bool ascii = false;
};

struct DescriptorOptions
{
    int bins = 64;
    int pairs = 4096;
    bool no_eigen = false;
    bool label_hist = false;
    std::uint64_t pair_seed = 0;
};

struct FeaturizeOptions
{
    fs::path dataset;
    fs::path out;
    DescriptorOptions descriptor;
    unsigned threads = 0;
};

struct DistillOptions
{
    fs::path source;
    fs::path target;
    fs::path report;
    fs::path ids;
    double ratio = 0.7;
    std::uint64_t threshold = 10000;
    int epochs = 5;
    std::vector<double> bandwidths;  // empty: median heuristic
    std::uint64_t kernel_seed = 0;
    bool exact_oracle = false;
    bool no_timing = false;
    DescriptorOptions descriptor;  // when a source or target is a dataset
    unsigned threads = 0;
};

struct StatsOptions
{
    fs::path dataset;
    fs::path out;  // empty: stdout
    std::size_t acd_objects = 64;
};

struct ValidateOptions
{
    fs::path dataset;
    fs::path manifest;  // default: <dataset>.json when present
    fs::path out;       // empty: stdout
    double tol = 1e-5;
    unsigned threads = 0;
};

struct BenchOptions
{
    std::string what = "all";  // generation | distill | all
    fs::path out;              // empty: stdout
    std::uint64_t count = 20;
    int points = 1024;
    std::vector<std::size_t> sizes{1000, 2000, 4000};
    std::size_t target_rows = 1000;
    int dim = 32;
    std::size_t exact_rows = 4;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

int run_generate(GenerateOptions const& o);
int run_export(ExportOptions const& o);
int run_featurize(FeaturizeOptions const& o);
int run_distill(DistillOptions const& o);
int run_stats(StatsOptions const& o);
int run_validate(ValidateOptions const& o);
int run_bench(BenchOptions const& o);

}  // namespace prim3d::cli
