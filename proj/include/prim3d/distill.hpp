#pragma once

#include <functional>
#include <span>
#include <vector>

#include "metrics.hpp"

namespace prim3d
{

struct DistillConfig
{
    double retention_ratio = 0.7;
    std::size_t size_threshold = 10000;
    int epochs = 5;
};

void validate(DistillConfig const& cfg);

enum class ScoreKind
{
    Exact,
    Proxy,
};

struct AdaptivityScores
{
    std::vector<double> scores;
    std::vector<std::uint64_t> row_ids;
    ScoreKind kind = ScoreKind::Proxy;
};

/// MMD(D without row i, T) - MMD(D, T), by two full estimator evaluations.
double adaptivity_exact(std::size_t i, FeatureMatrix const& d, FeatureMatrix const& t,
                        KernelConfig const& cfg, unsigned threads = 1);

/// Exact adaptivity of every row; MMD(D, T) is evaluated once and shared.
AdaptivityScores adaptivity_exact_all(FeatureMatrix const& d, FeatureMatrix const& t,
                                      KernelConfig const& cfg, unsigned threads = 1);

/*!
 * Linear-per-row ranking proxy for the exact adaptivity:
 *
 *   mean_j k(x, t_j) - (1 / (m - 1)) * sum_{i != x} k(x, d_i)
 *
 * With `include_self`, the second sum also runs over x itself (still divided
 * by m - 1), which shifts every score by the same constant.
 */
AdaptivityScores adaptivity_proxy(FeatureMatrix const& d, FeatureMatrix const& t,
                                  KernelConfig const& cfg, unsigned threads = 1,
                                  bool include_self = false);

//! Size after one pruning step: max(floor(r * size), threshold), or size
//! itself when already at or below the threshold.
std::size_t next_size(std::size_t size, DistillConfig const& cfg);

/// Ids of the `next_size` highest-scoring rows, best first; ties go to the
/// smaller row id.
std::vector<std::uint64_t> distill_step(std::size_t size, AdaptivityScores const& scores,
                                        DistillConfig const& cfg);

struct EpochRecord
{
    int epoch = 0;
    std::size_t size_before = 0;
    std::size_t size_after = 0;
    bool pruned = false;
    std::vector<std::uint64_t> retained_ids;  // ascending
    double mmd_after = 0;                     // squared MMD, clamped at 0
    double seconds = 0;
};

struct DistillReport
{
    DistillConfig config;
    KernelConfig kernel;
    std::size_t source_rows = 0;
    std::size_t target_rows = 0;
    double initial_mmd = 0;  // squared MMD, clamped at 0
    std::vector<EpochRecord> epochs;
    double total_seconds = 0;
};

//! Called at the start of each epoch with the ids currently retained.
using EpochHook = std::function<void(int epoch, std::span<std::uint64_t const> retained)>;

/// Progressive pruning schedule. Row ids of `d` must be unique.
DistillReport run_distillation(FeatureMatrix const& d, FeatureMatrix const& t,
                               KernelConfig const& kcfg, DistillConfig const& dcfg,
                               EpochHook const& hook = {}, unsigned threads = 1);

//! Spearman rank correlation with average ranks for ties.
double spearman(std::span<double const> a, std::span<double const> b);

}  // namespace prim3d
