#include "prim3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "prim3d/parallel.hpp"

namespace prim3d
{

FeatureMatrix FeatureMatrix::select(std::span<std::size_t const> positions) const
{
    FeatureMatrix out;
    out.data.resize(static_cast<Eigen::Index>(positions.size()), data.cols());
    out.row_ids.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i)
    {
        if (positions[i] >= rows())
            fail(ErrorCode::IndexOutOfRange, "row position out of range");
        out.data.row(static_cast<Eigen::Index>(i))
            = data.row(static_cast<Eigen::Index>(positions[i]));
        out.row_ids.push_back(row_ids[positions[i]]);
    }
    return out;
}

void validate(FeatureMatrix const& m)
{
    if (m.data.rows() < 1 || m.data.cols() < 1)
        fail(ErrorCode::InvalidParams, "feature matrix needs at least one row and column");
    if (m.row_ids.size() != m.rows())
        fail(ErrorCode::InvalidParams, "row id count differs from row count");
    if (!m.data.allFinite())
        fail(ErrorCode::InvalidParams, "feature matrix has non-finite entries");
}

FeatureMatrix make_feature_matrix(RowMatrix data, std::vector<std::uint64_t> row_ids)
{
    if (row_ids.empty())
    {
        row_ids.resize(static_cast<std::size_t>(data.rows()));
        std::iota(row_ids.begin(), row_ids.end(), std::uint64_t{0});
    }
    FeatureMatrix m{std::move(data), std::move(row_ids)};
    validate(m);
    return m;
}

//---------------------------------------------------------------------------//
// NEAREST NEIGHBORS
//---------------------------------------------------------------------------//
namespace
{
void require_nonempty(PointMatrix const& x, PointMatrix const& y)
{
    if (x.rows() == 0 || y.rows() == 0)
        fail(ErrorCode::EmptySet, "chamfer distance needs two nonempty sets");
}

// Uniform bucket grid over a point set for exact nearest-neighbor queries.
class PointGrid
{
  public:
    explicit PointGrid(PointMatrix const& pts) : pts_(pts)
    {
        lo_ = pts.colwise().minCoeff().transpose();
        Vec3 hi = pts.colwise().maxCoeff().transpose();
        double extent = (hi - lo_).maxCoeff();
        double per_axis = std::cbrt(static_cast<double>(pts.rows()));
        cell_ = extent > 0 ? extent / std::max(1.0, per_axis) : 1.0;
        for (int a = 0; a < 3; ++a)
            dims_[a] = static_cast<int>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;

        std::size_t ncell = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
        start_.assign(ncell + 1, 0);
        std::vector<std::size_t> cell_of(pts.rows());
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
        {
            cell_of[i] = flat(cell_coords(pts.row(i).transpose()));
            ++start_[cell_of[i] + 1];
        }
        std::partial_sum(start_.begin(), start_.end(), start_.begin());
        order_.resize(pts.rows());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            order_[fill[cell_of[i]]++] = static_cast<std::size_t>(i);
    }

    double nearest_distance(Vec3 const& q) const
    {
        auto c = cell_coords(q);
        double best2 = std::numeric_limits<double>::infinity();
        int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
        for (int r = 0; r <= max_ring; ++r)
        {
            for (int i = c[0] - r; i <= c[0] + r; ++i)
            {
                if (i < 0 || i >= dims_[0])
                    continue;
                for (int j = c[1] - r; j <= c[1] + r; ++j)
                {
                    if (j < 0 || j >= dims_[1])
                        continue;
                    bool edge_ij = std::abs(i - c[0]) == r || std::abs(j - c[1]) == r;
                    for (int k = c[2] - r; k <= c[2] + r; ++k)
                    {
                        if (k < 0 || k >= dims_[2])
                            continue;
                        if (!edge_ij && std::abs(k - c[2]) != r)
                            continue;
                        std::size_t cell = flat({i, j, k});
                        for (std::size_t s = start_[cell]; s < start_[cell + 1]; ++s)
                        {
                            double d2 = (pts_.row(order_[s]).transpose() - q).squaredNorm();
                            best2 = std::min(best2, d2);
                        }
                    }
                }
            }
            // Every unvisited cell is at least r cells away.
            double bound = r * cell_;
            if (best2 <= bound * bound)
                break;
        }
        return std::sqrt(best2);
    }

  private:
    std::array<int, 3> cell_coords(Vec3 const& p) const
    {
        std::array<int, 3> c;
        for (int a = 0; a < 3; ++a)
        {
            double f = std::floor((p[a] - lo_[a]) / cell_);
            c[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(dims_[a] - 1)));
        }
        return c;
    }

    std::size_t flat(std::array<int, 3> c) const
    {
        return (static_cast<std::size_t>(c[0]) * dims_[1] + c[1]) * dims_[2] + c[2];
    }

    PointMatrix const& pts_;
    Vec3 lo_;
    double cell_;
    std::array<int, 3> dims_;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> order_;
};
}  // namespace

double directed_chamfer(PointMatrix const& from, PointMatrix const& to, NearestMethod method)
{
    require_nonempty(from, to);
    double sum = 0;
    if (method == NearestMethod::BruteForce)
    {
        for (Eigen::Index i = 0; i < from.rows(); ++i)
        {
            double best2 = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < to.rows(); ++j)
                best2 = std::min(best2, (from.row(i) - to.row(j)).squaredNorm());
            sum += std::sqrt(best2);
        }
        return sum;
    }
    PointGrid grid(to);
    for (Eigen::Index i = 0; i < from.rows(); ++i)
        sum += grid.nearest_distance(from.row(i).transpose());
    return sum;
}

double chamfer(PointMatrix const& x, PointMatrix const& y, NearestMethod method)
{
    return directed_chamfer(x, y, method) + directed_chamfer(y, x, method);
}

double augmented_chamfer(PointMatrix const& x, PointMatrix const& y, NearestMethod method)
{
    return std::max(directed_chamfer(x, y, method), directed_chamfer(y, x, method));
}

//---------------------------------------------------------------------------//
// KERNELS
//---------------------------------------------------------------------------//
void validate(KernelConfig const& cfg)
{
    if (cfg.bandwidths.empty())
        fail(ErrorCode::InvalidParams, "kernel needs at least one bandwidth");
    for (double s : cfg.bandwidths)
    {
        if (!(s > 0) || !std::isfinite(s))
            fail(ErrorCode::InvalidParams, "kernel bandwidths must be positive");
    }
}

RbfKernel::RbfKernel(KernelConfig const& cfg)
{
    validate(cfg);
    for (double s : cfg.bandwidths)
        coeffs_.push_back(-1.0 / (2.0 * s * s));
    inv_count_ = 1.0 / static_cast<double>(coeffs_.size());
}

double kernel(std::span<double const> a, std::span<double const> b, KernelConfig const& cfg)
{
    if (a.size() != b.size())
        fail(ErrorCode::DimensionMismatch, "kernel arguments differ in dimension");
    return RbfKernel(cfg)(a, b);
}

namespace
{
// Sum over all (i, j) of k(a_i, b_j), reduced row by row in a fixed order.
double kernel_sum(FeatureMatrix const& a, FeatureMatrix const& b, RbfKernel const& k,
                  unsigned threads)
{
    std::vector<double> row_sums(a.rows());
    parallel_for(a.rows(), threads, [&](std::size_t i) {
        auto ai = a.row(i);
        double s = 0;
        for (std::size_t j = 0; j < b.rows(); ++j)
            s += k(ai, b.row(j));
        row_sums[i] = s;
    });
    double total = 0;
    for (double s : row_sums)
        total += s;
    return total;
}
}  // namespace

double mmd_squared(FeatureMatrix const& d, FeatureMatrix const& t, KernelConfig const& cfg,
                   unsigned threads)
{
    validate(d);
    validate(t);
    if (d.cols() != t.cols())
        fail(ErrorCode::DimensionMismatch, "feature matrices differ in dimension");
    RbfKernel k(cfg);
    double const m = static_cast<double>(d.rows());
    double const n = static_cast<double>(t.rows());
    double dd = kernel_sum(d, d, k, threads);
    double dt = kernel_sum(d, t, k, threads);
    double tt = kernel_sum(t, t, k, threads);
    return dd / (m * m) - 2.0 * dt / (m * n) + tt / (n * n);
}

double mmd(FeatureMatrix const& d, FeatureMatrix const& t, KernelConfig const& cfg,
           unsigned threads)
{
    return std::sqrt(std::max(0.0, mmd_squared(d, t, cfg, threads)));
}

KernelConfig median_heuristic(FeatureMatrix const& d, FeatureMatrix const& t,
                              std::uint64_t seed, std::size_t subsample)
{
    validate(d);
    validate(t);
    if (d.cols() != t.cols())
        fail(ErrorCode::DimensionMismatch, "feature matrices differ in dimension");

    std::size_t const total = d.rows() + t.rows();
    std::vector<std::size_t> pick(total);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    if (total > subsample)
    {
        // Partial Fisher-Yates with the package's portable stream.
        Rng rng(splitmix64(seed));
        for (std::size_t i = 0; i < subsample; ++i)
            std::swap(pick[i], pick[i + rng.index(total - i)]);
        pick.resize(subsample);
        std::sort(pick.begin(), pick.end());
    }
    auto row = [&](std::size_t idx) {
        return idx < d.rows() ? d.row(idx) : t.row(idx - d.rows());
    };

    std::vector<double> dists;
    dists.reserve(pick.size() * (pick.size() - 1) / 2);
    for (std::size_t i = 0; i < pick.size(); ++i)
    {
        auto a = row(pick[i]);
        for (std::size_t j = i + 1; j < pick.size(); ++j)
        {
            auto b = row(pick[j]);
            double d2 = 0;
            for (std::size_t c = 0; c < a.size(); ++c)
                d2 += (a[c] - b[c]) * (a[c] - b[c]);
            dists.push_back(std::sqrt(d2));
        }
    }
    double median = 1.0;
    if (!dists.empty())
    {
        auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
        std::nth_element(dists.begin(), mid, dists.end());
        median = *mid;
    }
    if (!(median > 0))
        median = 1.0;
    KernelConfig cfg;
    cfg.bandwidths.clear();
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0})
        cfg.bandwidths.push_back(f * median);
    return cfg;
}

}  // namespace prim3d
