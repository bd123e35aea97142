#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "prim3d/common.hpp"
#include "prim3d/serialize.hpp"

using namespace prim3d::cli;

namespace
{
void add_descriptor_flags(CLI::App* cmd, DescriptorOptions& d)
{
    cmd->add_option("--bins", d.bins, "D2 histogram bins");
    cmd->add_option("--pairs", d.pairs, "D2 point pairs per object");
    cmd->add_flag("--no-eigen", d.no_eigen, "Drop the covariance eigenvalue block");
    cmd->add_flag("--label-hist", d.label_hist, "Append the primitive label histogram");
    cmd->add_option("--pair-seed", d.pair_seed, "Seed for D2 pair selection");
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Procedural 3D primitive datasets and distribution-matching distillation"};
    app.set_config("--config", "", "Read options from a TOML/INI file");
    app.set_version_flag("--version", std::string(prim3d::kToolVersion));
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a dataset of random constructive objects");
    g->add_option("--out", gen.out, "Dataset file")->required();
    g->add_option("--manifest", gen.manifest, "Manifest path (default <out>.json)");
    g->add_option("--count", gen.count, "Number of objects")->required();
    g->add_option("--seed", gen.seed, "Master seed");
    g->add_option("--first", gen.first, "Index of the first object");
    g->add_option("--leaves", gen.leaves, "Leaf count N or MIN..MAX");
    g->add_option("--scale", gen.scale, "Leaf scale S or MIN..MAX");
    g->add_option("--kinds", gen.kinds, "Primitive kinds")->delimiter(',');
    g->add_option("--ops", gen.ops, "Boolean operations")->delimiter(',');
    g->add_option("--points", gen.points, "Points per object");
    g->add_option("--tol", gen.tol, "Boundary tolerance");
    g->add_flag("--no-normals", gen.no_normals, "Do not store normals");
    g->add_flag("--no-normalize", gen.no_normalize, "Keep world coordinates");
    g->add_option("--threads", gen.threads, "Worker threads (0: all cores)");
    g->add_flag("--quiet", gen.quiet);

    ExportOptions exp;
    auto* e = app.add_subcommand("export", "Write objects as PLY point clouds");
    e->add_option("--dataset", exp.dataset)->required();
    e->add_option("--index", exp.indices, "Object index (repeatable; default all)");
    e->add_option("--out", exp.out, "Output file for a single object");
    e->add_option("--out-dir", exp.out_dir, "Directory for object_<index>.ply files");
    e->add_flag("--ascii", exp.ascii, "ASCII instead of binary PLY");

    FeaturizeOptions feat;
    auto* f = app.add_subcommand("featurize", "Compute per-object descriptors");
    f->add_option("--dataset", feat.dataset)->required();
    f->add_option("--out", feat.out, "Feature file")->required();
    f->add_option("--threads", feat.threads);
    add_descriptor_flags(f, feat.descriptor);

    DistillOptions dist;
    auto* d = app.add_subcommand("distill", "Prune a source set toward a target distribution");
    d->add_option("--source", dist.source, "Feature file or dataset")->required();
    d->add_option("--target", dist.target, "Feature file or dataset")->required();
    d->add_option("--report", dist.report, "Report JSON")->required();
    d->add_option("--ids", dist.ids, "Retained ids, one per line");
    d->add_option("--ratio", dist.ratio, "Retention ratio per epoch");
    d->add_option("--threshold", dist.threshold, "Size below which pruning stops");
    d->add_option("--epochs", dist.epochs);
    d->add_option("--bandwidths", dist.bandwidths, "RBF bandwidths (default: median heuristic)")
        ->delimiter(',');
    d->add_option("--kernel-seed", dist.kernel_seed, "Seed for the median heuristic");
    d->add_flag("--exact-oracle", dist.exact_oracle, "Check proxy ranking on the first 500 rows");
    d->add_flag("--no-timing", dist.no_timing, "Omit wall-clock times from the report");
    d->add_option("--threads", dist.threads);
    add_descriptor_flags(d, dist.descriptor);

    StatsOptions st;
    auto* s = app.add_subcommand("stats", "Summarize a dataset");
    s->add_option("--dataset", st.dataset)->required();
    s->add_option("--out", st.out, "Output JSON (default stdout)");
    s->add_option("--acd-objects", st.acd_objects, "Objects used for the ACD summary");

    ValidateOptions val;
    auto* v = app.add_subcommand("validate", "Check dataset invariants");
    v->add_option("--dataset", val.dataset)->required();
    v->add_option("--manifest", val.manifest, "Manifest (default <dataset>.json when present)");
    v->add_option("--out", val.out, "Report JSON (default stdout)");
    v->add_option("--tol", val.tol, "Boundary tolerance in world units");
    v->add_option("--threads", val.threads);

    BenchOptions bench;
    auto* b = app.add_subcommand("bench", "Time generation and adaptivity scoring");
    b->add_option("--what", bench.what, "generation, distill or all");
    b->add_option("--out", bench.out, "CSV output (default stdout)");
    b->add_option("--count", bench.count, "Objects per leaf count");
    b->add_option("--points", bench.points);
    b->add_option("--sizes", bench.sizes, "Source sizes for scoring")->delimiter(',');
    b->add_option("--target-rows", bench.target_rows);
    b->add_option("--dim", bench.dim, "Feature dimension");
    b->add_option("--exact-rows", bench.exact_rows, "Rows timed for the exact score");
    b->add_option("--seed", bench.seed);
    b->add_option("--threads", bench.threads);

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& err)
    {
        int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (*g)
            return run_generate(gen);
        if (*e)
            return run_export(exp);
        if (*f)
            return run_featurize(feat);
        if (*d)
            return run_distill(dist);
        if (*s)
            return run_stats(st);
        if (*v)
            return run_validate(val);
        if (*b)
            return run_bench(bench);
    }
    catch (UsageError const& err)
    {
        std::cerr << "usage error: " << err.what() << '\n';
        return 2;
    }
    catch (prim3d::Error const& err)
    {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    catch (std::exception const& err)
    {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 2;
}
