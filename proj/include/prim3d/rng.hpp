#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace prim3d
{

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for object `index` of a batch; independent of generation order.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/**
 * Explicit random stream.
 *
 * The engine is mt19937_64, whose output sequence is fixed by the standard.
 * The variate transforms are written out here because the standard library
 * distributions are implementation-defined, and datasets must hash the same
 * on every platform.
 */
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t index(std::uint64_t n)
    {
        std::uint64_t const limit = -n % n;  // 2^64 mod n
        for (;;)
        {
            std::uint64_t r = engine_();
            if (r >= limit)
                return r % n;
        }
    }

    bool coin() { return (engine_() >> 63) != 0; }

    /// Standard normal (Marsaglia polar method, second variate discarded).
    double normal()
    {
        for (;;)
        {
            double u = 2.0 * uniform() - 1.0;
            double v = 2.0 * uniform() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0)
                return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace prim3d
