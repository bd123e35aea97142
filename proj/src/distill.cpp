#include "prim3d/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "prim3d/parallel.hpp"

namespace prim3d
{
namespace
{
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_compatible(FeatureMatrix const& d, FeatureMatrix const& t)
{
    validate(d);
    validate(t);
    if (d.cols() != t.cols())
        fail(ErrorCode::DimensionMismatch, "feature matrices differ in dimension");
}

FeatureMatrix without_row(FeatureMatrix const& d, std::size_t i)
{
    std::vector<std::size_t> keep;
    keep.reserve(d.rows() - 1);
    for (std::size_t r = 0; r < d.rows(); ++r)
    {
        if (r != i)
            keep.push_back(r);
    }
    return d.select(keep);
}
}  // namespace

void validate(DistillConfig const& cfg)
{
    if (!(cfg.retention_ratio > 0 && cfg.retention_ratio < 1))
        fail(ErrorCode::InvalidParams, "retention ratio must lie in (0, 1)");
    if (cfg.size_threshold < 1)
        fail(ErrorCode::InvalidParams, "size threshold must be at least 1");
    if (cfg.epochs < 1)
        fail(ErrorCode::InvalidParams, "epoch count must be at least 1");
}

//---------------------------------------------------------------------------//
// ADAPTIVITY
//---------------------------------------------------------------------------//
double adaptivity_exact(std::size_t i, FeatureMatrix const& d, FeatureMatrix const& t,
                        KernelConfig const& cfg, unsigned threads)
{
    require_compatible(d, t);
    if (i >= d.rows())
        fail(ErrorCode::IndexOutOfRange, "row index beyond the source set");
    if (d.rows() < 2)
        fail(ErrorCode::InvalidParams, "adaptivity needs at least two source rows");
    double after = mmd(without_row(d, i), t, cfg, threads);
    double before = mmd(d, t, cfg, threads);
    return after - before;
}

AdaptivityScores adaptivity_exact_all(FeatureMatrix const& d, FeatureMatrix const& t,
                                      KernelConfig const& cfg, unsigned threads)
{
    require_compatible(d, t);
    if (d.rows() < 2)
        fail(ErrorCode::InvalidParams, "adaptivity needs at least two source rows");
    AdaptivityScores out;
    out.kind = ScoreKind::Exact;
    out.row_ids = d.row_ids;
    out.scores.resize(d.rows());
    double before = mmd(d, t, cfg, threads);
    for (std::size_t i = 0; i < d.rows(); ++i)
        out.scores[i] = mmd(without_row(d, i), t, cfg, threads) - before;
    return out;
}

AdaptivityScores adaptivity_proxy(FeatureMatrix const& d, FeatureMatrix const& t,
                                  KernelConfig const& cfg, unsigned threads,
                                  bool include_self)
{
    require_compatible(d, t);
    std::size_t const m = d.rows();
    std::size_t const n = t.rows();
    if (m < 2)
        fail(ErrorCode::InvalidParams, "proxy needs at least two source rows");
    RbfKernel k(cfg);

    AdaptivityScores out;
    out.kind = ScoreKind::Proxy;
    out.row_ids = d.row_ids;
    out.scores.resize(m);
    parallel_for(m, threads, [&](std::size_t r) {
        auto x = d.row(r);
        double to_target = 0;
        for (std::size_t j = 0; j < n; ++j)
            to_target += k(x, t.row(j));
        double to_source = 0;
        for (std::size_t i = 0; i < m; ++i)
        {
            if (i != r || include_self)
                to_source += k(x, d.row(i));
        }
        out.scores[r] = to_target / static_cast<double>(n)
                        - to_source / static_cast<double>(m - 1);
    });
    return out;
}

//---------------------------------------------------------------------------//
// SCHEDULE
//---------------------------------------------------------------------------//
std::size_t next_size(std::size_t size, DistillConfig const& cfg)
{
    if (size <= cfg.size_threshold)
        return size;
    auto shrunk = static_cast<std::size_t>(
        std::floor(cfg.retention_ratio * static_cast<double>(size)));
    return std::max(shrunk, cfg.size_threshold);
}

std::vector<std::uint64_t> distill_step(std::size_t size, AdaptivityScores const& scores,
                                        DistillConfig const& cfg)
{
    validate(cfg);
    if (scores.scores.size() != size || scores.row_ids.size() != size)
    {
        std::ostringstream os;
        os << "expected " << size << " scores, got " << scores.scores.size();
        fail(ErrorCode::LengthMismatch, os.str());
    }
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores.scores[a] != scores.scores[b])
            return scores.scores[a] > scores.scores[b];
        return scores.row_ids[a] < scores.row_ids[b];
    });
    order.resize(next_size(size, cfg));
    std::vector<std::uint64_t> ids;
    ids.reserve(order.size());
    for (std::size_t pos : order)
        ids.push_back(scores.row_ids[pos]);
    return ids;
}

DistillReport run_distillation(FeatureMatrix const& d, FeatureMatrix const& t,
                               KernelConfig const& kcfg, DistillConfig const& dcfg,
                               EpochHook const& hook, unsigned threads)
{
    auto const start = Clock::now();
    require_compatible(d, t);
    validate(kcfg);
    validate(dcfg);

    std::unordered_map<std::uint64_t, std::size_t> position;
    for (std::size_t r = 0; r < d.rows(); ++r)
    {
        if (!position.emplace(d.row_ids[r], r).second)
            fail(ErrorCode::InvalidParams, "source row ids must be unique");
    }

    DistillReport report;
    report.config = dcfg;
    report.kernel = kcfg;
    report.source_rows = d.rows();
    report.target_rows = t.rows();
    report.initial_mmd = std::max(0.0, mmd_squared(d, t, kcfg, threads));

    std::vector<std::size_t> current(d.rows());
    std::iota(current.begin(), current.end(), std::size_t{0});
    FeatureMatrix subset = d;
    double current_mmd = report.initial_mmd;

    for (int epoch = 1; epoch <= dcfg.epochs; ++epoch)
    {
        auto const epoch_start = Clock::now();
        if (hook)
            hook(epoch, subset.row_ids);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.size_before = current.size();
        if (current.size() > dcfg.size_threshold)
        {
            auto scores = adaptivity_proxy(subset, t, kcfg, threads);
            auto kept = distill_step(current.size(), scores, dcfg);
            current.clear();
            for (auto id : kept)
                current.push_back(position.at(id));
            std::sort(current.begin(), current.end());
            subset = d.select(current);
            current_mmd = std::max(0.0, mmd_squared(subset, t, kcfg, threads));
            rec.pruned = true;
        }
        rec.size_after = current.size();
        rec.retained_ids = subset.row_ids;
        std::sort(rec.retained_ids.begin(), rec.retained_ids.end());
        rec.mmd_after = current_mmd;
        rec.seconds = seconds_since(epoch_start);
        report.epochs.push_back(std::move(rec));
    }
    report.total_seconds = seconds_since(start);
    return report;
}

double spearman(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size())
        fail(ErrorCode::LengthMismatch, "rank correlation needs equal lengths");
    if (a.size() < 2)
        fail(ErrorCode::InvalidParams, "rank correlation needs at least two values");
    auto ranks = [](std::span<double const> v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size();)
        {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]])
                ++j;
            double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k)
                r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    auto ra = ranks(a);
    auto rb = ranks(b);
    double const n = static_cast<double>(a.size());
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i)
    {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0 || vb == 0)
        return 0.0;
    return num / std::sqrt(va * vb);
}

}  // namespace prim3d
