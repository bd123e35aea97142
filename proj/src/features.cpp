#include "prim3d/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "prim3d/parallel.hpp"

namespace prim3d
{

void validate(DescriptorConfig const& cfg)
{
    if (cfg.d2_bins < 2)
        fail(ErrorCode::InvalidParams, "D2 histogram needs at least two bins");
    if (cfg.d2_pairs < 1)
        fail(ErrorCode::InvalidParams, "D2 pair count must be positive");
}

std::size_t descriptor_size(DescriptorConfig const& cfg)
{
    return static_cast<std::size_t>(cfg.d2_bins) + (cfg.include_eigen ? 3 : 0)
           + (cfg.include_label_hist ? kNumKinds : 0);
}

std::vector<double> extract_descriptor(LabeledPointCloud const& cloud,
                                       DescriptorConfig const& cfg)
{
    validate(cfg);
    std::size_t const n = cloud.size();
    if (n == 0)
        fail(ErrorCode::DegenerateCloud, "cloud has no points");
    double max_norm = cloud.points.rowwise().norm().maxCoeff();
    if (max_norm > 1 + 1e-6)
    {
        std::ostringstream os;
        os << "max point norm " << max_norm << " exceeds 1";
        fail(ErrorCode::UnnormalizedInput, os.str());
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
        auto const& p = cloud.points;
        auto ii = static_cast<Eigen::Index>(i);
        return std::make_tuple(p(ii, 0), p(ii, 1), p(ii, 2), cloud.semantic[i],
                               cloud.instance[i]);
    };
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

    std::vector<double> out;
    out.reserve(descriptor_size(cfg));

    // D2 shape distribution
    std::vector<double> hist(static_cast<std::size_t>(cfg.d2_bins), 0.0);
    Rng rng(splitmix64(cfg.pair_seed));
    for (int k = 0; k < cfg.d2_pairs; ++k)
    {
        double dist = 0;
        if (n > 1)
        {
            std::size_t i = rng.index(n);
            std::size_t j = rng.index(n - 1);
            if (j >= i)
                ++j;
            dist = (cloud.point(order[i]) - cloud.point(order[j])).norm();
        }
        auto bin = static_cast<std::size_t>(dist / 2.0 * cfg.d2_bins);
        hist[std::min(bin, hist.size() - 1)] += 1.0;
    }
    for (double h : hist)
        out.push_back(h / cfg.d2_pairs);

    if (cfg.include_eigen)
    {
        Vec3 mean = Vec3::Zero();
        for (std::size_t i : order)
            mean += cloud.point(i);
        mean /= static_cast<double>(n);
        Mat3 cov = Mat3::Zero();
        for (std::size_t i : order)
        {
            Vec3 d = cloud.point(i) - mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Mat3> solver(cov, Eigen::EigenvaluesOnly);
        Vec3 ev = solver.eigenvalues().cwiseMax(0.0);
        double sum = ev.sum();
        for (int a = 2; a >= 0; --a)
            out.push_back(sum > 0 ? ev[a] / sum : 1.0 / 3.0);
    }

    if (cfg.include_label_hist)
    {
        std::array<double, kNumKinds> freq{};
        for (auto s : cloud.semantic)
            freq.at(s) += 1.0;
        for (double f : freq)
            out.push_back(f / static_cast<double>(n));
    }
    return out;
}

FeatureMatrix batch_features(std::span<LabeledPointCloud const> clouds,
                             DescriptorConfig const& cfg, unsigned threads)
{
    validate(cfg);
    if (clouds.empty())
        fail(ErrorCode::InvalidParams, "cannot featurize an empty dataset");
    std::size_t const d = descriptor_size(cfg);
    FeatureMatrix m;
    m.data.resize(static_cast<Eigen::Index>(clouds.size()), static_cast<Eigen::Index>(d));
    m.row_ids.resize(clouds.size());
    parallel_for(clouds.size(), threads, [&](std::size_t i) {
        std::vector<double> row;
        try
        {
            row = extract_descriptor(clouds[i], cfg);
        }
        catch (Error const& e)
        {
            std::ostringstream os;
            os << "row " << i << " (object " << clouds[i].object_index << "): " << e.detail();
            throw Error(e.code(), os.str());
        }
        for (std::size_t c = 0; c < d; ++c)
            m.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        m.row_ids[i] = clouds[i].object_index;
    });
    return m;
}

}  // namespace prim3d
