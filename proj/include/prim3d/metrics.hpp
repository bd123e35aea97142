#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "common.hpp"
#include "sampler.hpp"

namespace prim3d
{

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/*!
 * Dense row-per-sample descriptor matrix with opaque row identifiers.
 */
struct FeatureMatrix
{
    RowMatrix data;
    std::vector<std::uint64_t> row_ids;

    std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(data.cols()); }

    std::span<double const> row(std::size_t i) const
    {
        return {data.data() + i * cols(), cols()};
    }

    //! Rows at the given positions, in the given order.
    FeatureMatrix select(std::span<std::size_t const> positions) const;
};

/// Throws InvalidParams for empty shape, non-finite entries, or id count mismatch.
void validate(FeatureMatrix const& m);

/// Row ids default to 0..rows-1.
FeatureMatrix make_feature_matrix(RowMatrix data, std::vector<std::uint64_t> row_ids = {});

//---------------------------------------------------------------------------//
// CHAMFER
//---------------------------------------------------------------------------//
enum class NearestMethod
{
    BruteForce,
    Grid,
};

/// Sum over x in `from` of the distance to its nearest point in `to`.
double directed_chamfer(PointMatrix const& from, PointMatrix const& to,
                        NearestMethod method = NearestMethod::Grid);

//! Sum of both directed sums.
double chamfer(PointMatrix const& x, PointMatrix const& y,
               NearestMethod method = NearestMethod::Grid);

//! Larger of the two directed sums.
double augmented_chamfer(PointMatrix const& x, PointMatrix const& y,
                         NearestMethod method = NearestMethod::Grid);

//---------------------------------------------------------------------------//
// KERNELS AND MMD
//---------------------------------------------------------------------------//
//! Equal-weight mixture of Gaussian RBF kernels with the given sigmas.
struct KernelConfig
{
    std::vector<double> bandwidths{1.0};
};

void validate(KernelConfig const& cfg);

/// Precomputed exponent coefficients for a KernelConfig.
class RbfKernel
{
  public:
    explicit RbfKernel(KernelConfig const& cfg);

    double from_squared_distance(double d2) const
    {
        double s = 0;
        for (double c : coeffs_)
            s += std::exp(c * d2);
        return s * inv_count_;
    }

    double operator()(std::span<double const> a, std::span<double const> b) const
    {
        double d2 = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            double t = a[i] - b[i];
            d2 += t * t;
        }
        return from_squared_distance(d2);
    }

  private:
    std::vector<double> coeffs_;
    double inv_count_;
};

double kernel(std::span<double const> a, std::span<double const> b, KernelConfig const& cfg);

/// Biased (V-statistic) squared MMD, diagonal terms included. May be
/// slightly negative from rounding; callers clamp before taking roots.
double mmd_squared(FeatureMatrix const& d, FeatureMatrix const& t, KernelConfig const& cfg,
                   unsigned threads = 1);

//! sqrt(max(mmd_squared, 0))
double mmd(FeatureMatrix const& d, FeatureMatrix const& t, KernelConfig const& cfg,
           unsigned threads = 1);

/// Median pairwise distance over a seeded subsample of both sets, times
/// {0.25, 0.5, 1, 2, 4}.
KernelConfig median_heuristic(FeatureMatrix const& d, FeatureMatrix const& t,
                              std::uint64_t seed = 0, std::size_t subsample = 1000);

}  // namespace prim3d
