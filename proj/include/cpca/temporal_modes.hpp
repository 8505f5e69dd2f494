#ifndef CPCA_TEMPORAL_MODES_HPP
#define CPCA_TEMPORAL_MODES_HPP

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cpca
{

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

// Uniform partition of [0, T] into M bins of width T / M.
class TimeGrid
{
public:
    TimeGrid(double duration_s, std::size_t bins);

    double duration() const noexcept { return duration_; }
    std::size_t bins() const noexcept { return bins_; }
    double dt() const noexcept { return duration_ / static_cast<double>(bins_); }

    // Sampling instant of bin j (0-based): (j + 1) * dt.
    double time_at(std::size_t bin) const noexcept { return static_cast<double>(bin + 1) * dt(); }

    bool compatible(const TimeGrid &other) const noexcept
    {
        return duration_ == other.duration_ && bins_ == other.bins_;
    }

private:
    double duration_;
    std::size_t bins_;
};

// Discretized temporal mode function. Amplitudes already carry the sqrt(dt)
// weight, f[t_j] = sqrt(T/M) f(t_j), so the L2 norm is the plain vector norm.
class Tmf
{
public:
    Tmf(TimeGrid grid, ComplexVector amp);

    // Samples a continuous profile f(t) at the bin instants and applies sqrt(dt).
    static Tmf sample(const TimeGrid &grid, const std::function<Complex(double)> &profile);

    const TimeGrid &grid() const noexcept { return grid_; }
    const ComplexVector &amp() const noexcept { return amp_; }
    Complex operator[](std::size_t bin) const { return amp_[static_cast<Eigen::Index>(bin)]; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(amp_.size()); }

    double norm() const { return amp_.norm(); }
    bool is_normalized(double tol = 1e-12) const;

    Tmf scaled(Complex factor) const { return Tmf(grid_, amp_ * factor); }

private:
    TimeGrid grid_;
    ComplexVector amp_;
};

// Tolerance used when an operation requires normalized inputs.
inline constexpr double kNormTolerance = 1e-9;

// sum_j conj(f_j) g_j; conjugate-linear in f.
Complex inner_product(const Tmf &f, const Tmf &g);

Tmf normalize(const Tmf &f);

// |<f, g>|^2 for normalized f and g.
double mode_match(const Tmf &f, const Tmf &g);

struct GramSchmidt
{
    Tmf e1;
    Tmf e2;
    // Row i holds the components of f_i in the basis (e1, e2).
    Eigen::Matrix2cd coeffs;
};

GramSchmidt gram_schmidt(const Tmf &f1, const Tmf &f2);

struct TimeBinPair
{
    Tmf w1;
    Tmf w2;
    // Set when either packet's 5/gamma tail extends beyond [0, T].
    bool truncated = false;
};

struct TimeBinParams
{
    double gamma_per_s = 1.1e8;
    double delta_t_s = 250e-9;
    // Defaults to 0.35 T when unset.
    double center1_s = -1.0;
};

TimeBinPair timebin_pair(const TimeGrid &grid, double gamma_per_s, double center1_s,
                         double delta_t_s);
TimeBinPair timebin_pair(const TimeGrid &grid, const TimeBinParams &params = {});

// Normalized sum_k coeffs[k] * fns[k]; fns must be orthonormal.
Tmf superpose(std::span<const Complex> coeffs, std::span<const Tmf> fns);

// Rotates the global phase so the largest-magnitude amplitude is real and
// positive. Ties within 1e-12 relative go to the lowest bin index.
Tmf canonicalize_phase(const Tmf &f);

// Checks mutual orthonormality within tol.
bool orthonormal(std::span<const Tmf> fns, double tol);

} // namespace cpca

#endif // CPCA_TEMPORAL_MODES_HPP
