#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "prim3d/csg.hpp"
#include "prim3d/dataset_io.hpp"
#include "prim3d/distill.hpp"
#include "prim3d/features.hpp"
#include "prim3d/parallel.hpp"

namespace prim3d::cli
{
namespace
{
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Library validation failures during setup are usage errors.
template<class F>
void as_usage(F&& fn)
{
    try
    {
        fn();
    }
    catch (Error const& e)
    {
        throw UsageError(e.detail());
    }
}

template<class T>
std::pair<T, T> parse_range(std::string const& text, char const* flag)
{
    auto convert = [&](std::string const& s) {
        std::istringstream is(s);
        T v{};
        is >> v;
        if (!is || !is.eof())
            throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
        return v;
    };
    auto dots = text.find("..");
    if (dots == std::string::npos)
    {
        T v = convert(text);
        return {v, v};
    }
    return {convert(text.substr(0, dots)), convert(text.substr(dots + 2))};
}

void check_output(fs::path const& path, char const* flag)
{
    if (path.empty())
        throw UsageError(std::string(flag) + " is required");
    auto parent = path.parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw UsageError(std::string(flag) + ": directory '" + parent.string() + "' does not exist");
}

void write_text(fs::path const& path, std::string const& text)
{
    if (path.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        fail(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

DescriptorConfig descriptor_from(DescriptorOptions const& o)
{
    DescriptorConfig cfg;
    cfg.d2_bins = o.bins;
    cfg.d2_pairs = o.pairs;
    cfg.include_eigen = !o.no_eigen;
    cfg.include_label_hist = o.label_hist;
    cfg.pair_seed = o.pair_seed;
    as_usage([&] { validate(cfg); });
    return cfg;
}

struct Featurized
{
    FeatureMatrix matrix;
    std::uint64_t content_hash = 0;
};

Featurized featurize_dataset(fs::path const& path, DescriptorConfig const& cfg, unsigned threads)
{
    DatasetReader reader(path);
    std::size_t const d = descriptor_size(cfg);
    std::vector<double> values;
    std::vector<std::uint64_t> ids;
    std::size_t const chunk = 256 * std::max(1u, resolve_threads(threads));
    std::vector<LabeledPointCloud> clouds;
    auto flush = [&] {
        if (clouds.empty())
            return;
        auto part = batch_features(clouds, cfg, threads);
        values.insert(values.end(), part.data.data(), part.data.data() + part.data.size());
        ids.insert(ids.end(), part.row_ids.begin(), part.row_ids.end());
        clouds.clear();
    };
    while (auto rec = reader.next())
    {
        clouds.push_back(std::move(rec->cloud));
        if (clouds.size() == chunk)
            flush();
    }
    flush();
    if (ids.empty())
        fail(ErrorCode::EmptySet, "dataset '" + path.string() + "' has no objects");
    RowMatrix data = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(ids.size()),
                                           static_cast<Eigen::Index>(d));
    return {make_feature_matrix(std::move(data), std::move(ids)), reader.content_hash()};
}

std::string magic_of(fs::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    char buf[4] = {};
    in.read(buf, 4);
    if (!in)
        fail(ErrorCode::IoError, "cannot read '" + path.string() + "'");
    return std::string(buf, 4);
}

FeatureMatrix load_features(fs::path const& path, DescriptorConfig const& cfg, unsigned threads)
{
    auto magic = magic_of(path);
    if (magic == std::string(kFeatureMagic, 4))
        return read_feature_file(path);
    if (magic == std::string(kDatasetMagic, 4))
        return featurize_dataset(path, cfg, threads).matrix;
    fail(ErrorCode::BadMagic, "'" + path.string() + "' is neither a feature file nor a dataset");
}

FeatureMatrix gaussian_rows(std::size_t m, int dim, double shift, std::uint64_t seed)
{
    Rng rng(seed);
    RowMatrix data(static_cast<Eigen::Index>(m), dim);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        for (int j = 0; j < dim; ++j)
            data(i, j) = rng.normal() + shift;
    return make_feature_matrix(std::move(data));
}

//! Least-squares slope of log(t) against log(m).
double power_law_exponent(std::vector<double> const& m, std::vector<double> const& t)
{
    double n = static_cast<double>(m.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
    {
        double x = std::log(m[i]), y = std::log(t[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

//---------------------------------------------------------------------------//
// GENERATE
//---------------------------------------------------------------------------//
int run_generate(GenerateOptions const& o)
{
    RctSpec spec;
    std::tie(spec.leaf_min, spec.leaf_max) = parse_range<int>(o.leaves, "--leaves");
    std::tie(spec.scale_min, spec.scale_max) = parse_range<double>(o.scale, "--scale");
    if (!o.kinds.empty())
    {
        spec.kinds.clear();
        for (auto const& name : o.kinds)
        {
            auto k = parse_kind(name);
            if (!k)
                throw UsageError("--kinds: unknown primitive '" + name + "'");
            spec.kinds.push_back(*k);
        }
    }
    if (!o.ops.empty())
    {
        spec.ops.clear();
        for (auto const& name : o.ops)
        {
            auto op = parse_op(name);
            if (!op)
                throw UsageError("--ops: unknown operation '" + name + "'");
            spec.ops.push_back(*op);
        }
    }
    spec.master_seed = o.seed;
    SamplerConfig cfg;
    cfg.n_points = o.points;
    cfg.tol = o.tol;
    cfg.normalize = !o.no_normalize;
    cfg.normals = !o.no_normals;
    as_usage([&] {
        validate(spec);
        validate(cfg);
    });
    check_output(o.out, "--out");
    fs::path manifest_path = o.manifest.empty() ? fs::path(o.out.string() + ".json") : o.manifest;
    check_output(manifest_path, "--manifest");

    auto const start = Clock::now();
    unsigned const threads = resolve_threads(o.threads);
    std::uint64_t const chunk = std::max<std::uint64_t>(64, 16ull * threads);
    DatasetWriter writer(o.out, static_cast<std::uint32_t>(cfg.n_points), cfg.normals);
    for (std::uint64_t done = 0; done < o.count; done += chunk)
    {
        std::uint64_t n = std::min(chunk, o.count - done);
        auto batch = generate_batch(spec, cfg, o.first + done, n, threads);
        for (auto const& obj : batch)
            writer.append(obj.sample, obj.cloud);
    }
    auto [count, hash] = writer.finish();

    Manifest m;
    m.spec = spec;
    m.sampler = cfg;
    m.object_count = count;
    m.content_hash = hash;
    try
    {
        write_manifest(m, manifest_path);
    }
    catch (...)
    {
        std::error_code ec;
        fs::remove(o.out, ec);
        throw;
    }

    double secs = seconds_since(start);
    if (!o.quiet)
    {
        std::cout << "generated " << count << " objects in " << secs << " s ("
                  << (secs > 0 ? 60.0 * static_cast<double>(count) / secs : 0.0)
                  << " objects/min, " << threads << " threads)\n"
                  << "content_hash " << hex64(hash) << '\n';
    }
    return 0;
}

//---------------------------------------------------------------------------//
// EXPORT
//---------------------------------------------------------------------------//
int run_export(ExportOptions const& o)
{
    if (o.out.empty() == o.out_dir.empty())
        throw UsageError("exactly one of --out and --out-dir is required");
    if (!o.out.empty())
    {
        if (o.indices.size() != 1)
            throw UsageError("--out needs exactly one --index");
        check_output(o.out, "--out");
    }
    else
    {
        check_output(o.out_dir / "x", "--out-dir");
    }
    auto format = o.ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian;

    DatasetReader reader(o.dataset);
    std::vector<std::uint64_t> wanted = o.indices;
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    std::size_t written = 0;
    while (auto rec = reader.next())
    {
        if (!wanted.empty() && !std::binary_search(wanted.begin(), wanted.end(), rec->object_index))
            continue;
        fs::path target = !o.out.empty()
                              ? o.out
                              : o.out_dir / ("object_" + std::to_string(rec->object_index) + ".ply");
        export_ply(rec->cloud, target, format);
        ++written;
    }
    if (!wanted.empty() && written != wanted.size())
        fail(ErrorCode::IndexOutOfRange, "some requested objects are not in the dataset");
    std::cout << "exported " << written << " objects\n";
    return 0;
}

//---------------------------------------------------------------------------//
// FEATURIZE
//---------------------------------------------------------------------------//
int run_featurize(FeaturizeOptions const& o)
{
    auto cfg = descriptor_from(o.descriptor);
    check_output(o.out, "--out");
    auto f = featurize_dataset(o.dataset, cfg, o.threads);
    Json sidecar{{"descriptor", to_json(cfg)},
                 {"source", {{"object_count", f.matrix.rows()}, {"content_hash", hex64(f.content_hash)}}}};
    write_feature_file(f.matrix, o.out, sidecar);
    std::cout << "wrote " << f.matrix.rows() << " x " << f.matrix.cols() << " features\n";
    return 0;
}

//---------------------------------------------------------------------------//
// DISTILL
//---------------------------------------------------------------------------//
int run_distill(DistillOptions const& o)
{
    DistillConfig dcfg;
    dcfg.retention_ratio = o.ratio;
    dcfg.size_threshold = o.threshold;
    dcfg.epochs = o.epochs;
    as_usage([&] { validate(dcfg); });
    std::optional<KernelConfig> kcfg;
    if (!o.bandwidths.empty())
    {
        kcfg = KernelConfig{o.bandwidths};
        as_usage([&] { validate(*kcfg); });
    }
    auto dcfg_desc = descriptor_from(o.descriptor);
    check_output(o.report, "--report");
    if (!o.ids.empty())
        check_output(o.ids, "--ids");

    auto d = load_features(o.source, dcfg_desc, o.threads);
    auto t = load_features(o.target, dcfg_desc, o.threads);
    if (d.cols() != t.cols())
    {
        std::ostringstream os;
        os << "source has " << d.cols() << " feature columns, target has " << t.cols();
        fail(ErrorCode::DimensionMismatch, os.str());
    }
    if (!kcfg)
        kcfg = median_heuristic(d, t, o.kernel_seed);

    auto report = run_distillation(d, t, *kcfg, dcfg, {}, o.threads);
    Json j = to_json(report, !o.no_timing);

    bool oracle_failed = false;
    if (o.exact_oracle)
    {
        std::size_t rows = std::min<std::size_t>(500, d.rows());
        std::vector<std::size_t> head(rows);
        std::iota(head.begin(), head.end(), std::size_t{0});
        auto sub = d.select(head);
        auto exact = adaptivity_exact_all(sub, t, *kcfg, o.threads);
        auto proxy = adaptivity_proxy(sub, t, *kcfg, o.threads);
        double rho = spearman(proxy.scores, exact.scores);
        double dist = mmd(sub, t, *kcfg, o.threads);
        double worst = 0;
        for (double v : exact.scores)
            worst = std::max(worst, std::abs(v));
        bool condition = worst <= 0.05 * dist;
        oracle_failed = condition && rho < 0.99;
        j["exact_oracle"] = Json{{"rows", rows},
                                 {"spearman", rho},
                                 {"max_abs_adaptivity", worst},
                                 {"mmd", dist},
                                 {"condition_holds", condition},
                                 {"passed", !oracle_failed}};
        std::cout << "exact oracle on " << rows << " rows: spearman " << rho
                  << (condition ? "" : " (perturbation condition does not hold)") << '\n';
    }

    write_text(o.report, j.dump(2) + "\n");
    if (!o.ids.empty())
    {
        std::ostringstream ids;
        for (auto id : report.epochs.back().retained_ids)
            ids << id << '\n';
        write_text(o.ids, ids.str());
    }
    std::cout << "retained " << report.epochs.back().size_after << " of " << report.source_rows
              << " rows; mmd^2 " << report.initial_mmd << " -> " << report.epochs.back().mmd_after
              << '\n';
    if (oracle_failed)
    {
        std::cerr << "error: proxy ranking disagrees with the exact adaptivity\n";
        return 1;
    }
    return 0;
}

//---------------------------------------------------------------------------//
// STATS
//---------------------------------------------------------------------------//
int run_stats(StatsOptions const& o)
{
    if (!o.out.empty())
        check_output(o.out, "--out");
    DatasetReader reader(o.dataset);
    std::map<std::size_t, std::uint64_t> leaf_hist;
    std::array<std::uint64_t, 3> ops{};
    std::array<std::uint64_t, kNumKinds> leaf_kinds{}, point_kinds{};
    std::uint64_t objects = 0, points = 0;
    double coverage = 0;
    std::vector<PointMatrix> clouds;
    while (auto rec = reader.next())
    {
        ++objects;
        auto const& s = rec->sample;
        ++leaf_hist[s.leaves.size()];
        for (auto op : s.internal_ops)
            ++ops[static_cast<std::size_t>(op)];
        for (auto const& leaf : s.leaves)
            ++leaf_kinds[static_cast<std::size_t>(leaf.kind())];
        for (auto k : rec->cloud.semantic)
            ++point_kinds[k];
        points += rec->cloud.size();
        std::vector<bool> seen(s.leaves.size(), false);
        for (auto id : rec->cloud.instance)
            seen[id] = true;
        coverage += static_cast<double>(std::count(seen.begin(), seen.end(), true))
                    / static_cast<double>(s.leaves.size());
        if (clouds.size() < o.acd_objects)
            clouds.push_back(rec->cloud.points);
    }

    Json out;
    out["object_count"] = objects;
    out["content_hash"] = hex64(reader.content_hash());
    Json lh = Json::object();
    for (auto const& [l, c] : leaf_hist)
        lh[std::to_string(l)] = c;
    out["leaf_count_histogram"] = lh;
    Json oh = Json::object();
    for (auto op : {BoolOp::Union, BoolOp::Intersection, BoolOp::Difference})
        if (ops[static_cast<std::size_t>(op)] > 0)
            oh[std::string(to_string(op))] = ops[static_cast<std::size_t>(op)];
    out["op_histogram"] = oh;
    Json lk = Json::object(), pk = Json::object();
    for (auto kind : kAllKinds)
    {
        auto i = static_cast<std::size_t>(kind);
        lk[std::string(to_string(kind))] = leaf_kinds[i];
        pk[std::string(to_string(kind))]
            = points ? static_cast<double>(point_kinds[i]) / static_cast<double>(points) : 0.0;
    }
    out["leaf_kinds"] = lk;
    out["point_label_frequencies"] = pk;
    out["mean_instance_coverage"] = objects ? coverage / static_cast<double>(objects) : 0.0;

    if (clouds.size() >= 2)
    {
        std::vector<double> nearest(clouds.size(), std::numeric_limits<double>::infinity());
        parallel_for(clouds.size(), 0, [&](std::size_t i) {
            for (std::size_t j = 0; j < clouds.size(); ++j)
                if (j != i)
                    nearest[i] = std::min(nearest[i], augmented_chamfer(clouds[i], clouds[j]));
        });
        std::vector<double> sorted = nearest;
        std::sort(sorted.begin(), sorted.end());
        std::size_t n = sorted.size();
        double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        out["acd_nearest_neighbour"]
            = Json{{"objects", n},
                   {"mean", std::accumulate(sorted.begin(), sorted.end(), 0.0) / n},
                   {"median", median},
                   {"min", sorted.front()},
                   {"max", sorted.back()}};
    }
    else
    {
        out["acd_nearest_neighbour"] = nullptr;
    }
    write_text(o.out, out.dump(2) + "\n");
    return 0;
}

//---------------------------------------------------------------------------//
// VALIDATE
//---------------------------------------------------------------------------//
int run_validate(ValidateOptions const& o)
{
    if (!(o.tol >= 0))
        throw UsageError("--tol must be nonnegative");
    if (!o.out.empty())
        check_output(o.out, "--out");
    fs::path manifest_path = o.manifest;
    if (manifest_path.empty() && fs::exists(o.dataset.string() + ".json"))
        manifest_path = o.dataset.string() + ".json";
    std::optional<Manifest> manifest;
    if (!manifest_path.empty())
        manifest = read_manifest(manifest_path);

    std::vector<std::string> failures;
    std::uint64_t breaches = 0, objects = 0, checked = 0;
    auto breach = [&](std::string msg) {
        ++breaches;
        if (failures.size() < 20)
            failures.push_back(std::move(msg));
    };

    DatasetReader reader(o.dataset);
    bool const normalized = !manifest || manifest->sampler.normalize;
    while (auto rec = reader.next())
    {
        ++objects;
        auto const& s = rec->sample;
        auto const& cloud = rec->cloud;
        auto report = validate_rct(s);
        if (!report.non_empty || !report.bounded)
            breach("object " + std::to_string(rec->object_index) + ": empty or unbounded solid");
        std::vector<char> bad(cloud.size(), 0);
        parallel_for(cloud.size(), o.threads, [&](std::size_t i) {
            if (cloud.semantic[i] != static_cast<std::uint8_t>(s.leaves[cloud.instance[i]].kind()))
                bad[i] = 1;
            else if (classify_membership(s, cloud.world_point(i), o.tol) != Membership::On)
                bad[i] = 2;
            else if (cloud.normals
                     && std::abs(cloud.normals->row(static_cast<Eigen::Index>(i)).norm() - 1) > 1e-5)
                bad[i] = 3;
        });
        static char const* const kWhat[] = {"", "label mismatch", "point off the boundary",
                                            "normal not unit length"};
        for (std::size_t i = 0; i < bad.size(); ++i)
            if (bad[i])
                breach("object " + std::to_string(rec->object_index) + " point "
                       + std::to_string(i) + ": " + kWhat[static_cast<int>(bad[i])]);
        checked += cloud.size();
        if (normalized)
        {
            double c = Vec3(cloud.points.colwise().mean()).norm();
            double r = cloud.points.rowwise().norm().maxCoeff();
            if (c > 1e-5 || std::abs(r - 1) > 1e-5)
                breach("object " + std::to_string(rec->object_index) + ": cloud not normalized");
        }
    }
    std::uint64_t const hash = reader.content_hash();
    if (manifest)
    {
        if (manifest->object_count != objects)
            breach("manifest object_count " + std::to_string(manifest->object_count)
                   + " != " + std::to_string(objects));
        if (manifest->content_hash != hash)
            breach("manifest content_hash " + hex64(manifest->content_hash)
                   + " != " + hex64(hash));
        if (manifest->sampler.n_points != static_cast<int>(reader.header().n_points))
            breach("manifest n_points disagrees with the dataset header");
    }

    Json out{{"object_count", objects},
             {"points_checked", checked},
             {"tol", o.tol},
             {"content_hash", hex64(hash)},
             {"manifest_checked", manifest.has_value()},
             {"breaches", breaches},
             {"failures", failures},
             {"ok", breaches == 0}};
    write_text(o.out, out.dump(2) + "\n");
    if (breaches)
    {
        std::cerr << "ValidationFailed: " << breaches << " invariant breaches\n";
        return 1;
    }
    return 0;
}

//---------------------------------------------------------------------------//
// BENCH
//---------------------------------------------------------------------------//
int run_bench(BenchOptions const& o)
{
    if (o.what != "generation" && o.what != "distill" && o.what != "all")
        throw UsageError("--what must be generation, distill or all");
    if (o.count < 1 || o.points < 1 || o.dim < 1 || o.exact_rows < 1 || o.target_rows < 1)
        throw UsageError("bench sizes must be positive");
    for (auto m : o.sizes)
        if (m < 2)
            throw UsageError("--sizes entries must be at least 2");
    if (!o.out.empty())
        check_output(o.out, "--out");

    std::ostringstream csv;
    csv << "benchmark,parameter,value,items,seconds,seconds_per_item\n";
    csv.precision(6);
    if (o.what != "distill")
    {
        SamplerConfig cfg;
        cfg.n_points = o.points;
        for (int l = 1; l <= 6; ++l)
        {
            RctSpec spec;
            spec.leaf_min = spec.leaf_max = l;
            spec.master_seed = o.seed;
            auto start = Clock::now();
            auto batch = generate_batch(spec, cfg, 0, o.count, o.threads);
            double secs = seconds_since(start);
            csv << "generation,leaves," << l << ',' << o.count << ',' << secs << ','
                << secs / static_cast<double>(o.count) << '\n';
        }
    }
    if (o.what != "generation")
    {
        auto t = gaussian_rows(o.target_rows, o.dim, 0.5, splitmix64(o.seed) ^ 1);
        std::vector<double> ms, proxy_t, exact_t;
        for (auto m : o.sizes)
        {
            auto d = gaussian_rows(m, o.dim, 0.0, splitmix64(o.seed) ^ 2);
            auto kcfg = median_heuristic(d, t, o.seed);
            auto start = Clock::now();
            auto scores = adaptivity_proxy(d, t, kcfg, o.threads);
            double proxy = seconds_since(start);

            std::size_t k = std::min(o.exact_rows, m);
            start = Clock::now();
            for (std::size_t r = 0; r < k; ++r)
                adaptivity_exact(r * m / k, d, t, kcfg, o.threads);
            double per_row = seconds_since(start) / static_cast<double>(k);
            double exact = per_row * static_cast<double>(m);

            csv << "proxy,m," << m << ',' << m << ',' << proxy << ','
                << proxy / static_cast<double>(m) << '\n';
            csv << "exact,m," << m << ',' << m << ',' << exact << ',' << per_row << '\n';
            ms.push_back(static_cast<double>(m));
            proxy_t.push_back(proxy);
            exact_t.push_back(exact);
        }
        if (ms.size() >= 2)
        {
            std::cerr << "fitted exponents: proxy " << power_law_exponent(ms, proxy_t)
                      << ", exact " << power_law_exponent(ms, exact_t) << '\n';
        }
    }
    write_text(o.out, csv.str());
    return 0;
}

}  // namespace prim3d::cli
