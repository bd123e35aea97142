#pragma once

#include <vector>

#include "metrics.hpp"
#include "sampler.hpp"

namespace prim3d
{

struct DescriptorConfig
{
    int d2_bins = 64;
    int d2_pairs = 4096;
    bool include_eigen = true;
    bool include_label_hist = false;
    std::uint64_t pair_seed = 0;
};

void validate(DescriptorConfig const& cfg);

std::size_t descriptor_size(DescriptorConfig const& cfg);

/*!
 * Fixed-length shape descriptor of a normalized cloud.
 *
 * Layout: D2 distance histogram on [0, 2] (L1-normalized), then optionally
 * the descending covariance eigenvalues divided by their sum, then optionally
 * the semantic label frequencies. Pairs are drawn over the lexicographically
 * sorted points, so the result does not depend on point order.
 */
std::vector<double> extract_descriptor(LabeledPointCloud const& cloud,
                                       DescriptorConfig const& cfg);

FeatureMatrix batch_features(std::span<LabeledPointCloud const> clouds,
                             DescriptorConfig const& cfg, unsigned threads = 1);

}  // namespace prim3d
