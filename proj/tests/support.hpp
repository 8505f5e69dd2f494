#ifndef CPCA_TESTS_SUPPORT_HPP
#define CPCA_TESTS_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "cpca/temporal_modes.hpp"

namespace cpca::test
{

// Hand-rolled generators, seeded per case so failures are reproducible.
class Gen
{
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Complex complex_normal() { return {normal(), normal()}; }
    Complex phase() { return std::polar(1.0, uniform(-std::numbers::pi, std::numbers::pi)); }

    ComplexVector vector(Eigen::Index n)
    {
        ComplexVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = complex_normal();
        }
        return v;
    }

    Tmf tmf(const TimeGrid &grid)
    {
        return normalize(Tmf(grid, vector(static_cast<Eigen::Index>(grid.bins()))));
    }

    Tmf real_tmf(const TimeGrid &grid)
    {
        ComplexVector v = vector(static_cast<Eigen::Index>(grid.bins())).real().cast<Complex>();
        return normalize(Tmf(grid, v));
    }

    // Pair with |<f1, f2>| kept away from 0 and 1.
    std::pair<Tmf, Tmf> nonorthogonal_pair(const TimeGrid &grid)
    {
        for (;;) {
            Tmf a = tmf(grid);
            const Tmf b = tmf(grid);
            const double mix = uniform(0.15, 0.85);
            Tmf c = normalize(Tmf(grid, mix * phase() * a.amp() + (1.0 - mix) * b.amp()));
            const double ov = std::abs(inner_product(a, c));
            if (ov > 0.1 && ov < 0.95) {
                return {a, c};
            }
        }
    }

    std::mt19937_64 &engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Best mode match over the two pairings of {a1, a2} with {b1, b2}.
inline std::pair<double, double> pair_match(const Tmf &a1, const Tmf &a2, const Tmf &b1,
                                            const Tmf &b2)
{
    const double direct = std::min(mode_match(a1, b1), mode_match(a2, b2));
    const double swapped = std::min(mode_match(a1, b2), mode_match(a2, b1));
    if (direct >= swapped) {
        return {mode_match(a1, b1), mode_match(a2, b2)};
    }
    return {mode_match(a1, b2), mode_match(a2, b1)};
}

} // namespace cpca::test

#endif // CPCA_TESTS_SUPPORT_HPP
