#include "cpca/temporal_modes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpca/error.hpp"

namespace cpca
{

namespace
{

void require_compatible(const Tmf &f, const Tmf &g)
{
    if (!f.grid().compatible(g.grid())) {
        std::ostringstream msg;
        msg << "grid mismatch: (T=" << f.grid().duration() << ", M=" << f.grid().bins()
            << ") vs (T=" << g.grid().duration() << ", M=" << g.grid().bins() << ")";
        throw Error(ErrorCode::grid_mismatch, msg.str());
    }
}

void require_normalized(const Tmf &f, const char *what)
{
    if (!f.is_normalized(kNormTolerance)) {
        std::ostringstream msg;
        msg << what << " must be normalized (norm = " << f.norm() << ")";
        throw Error(ErrorCode::contract_violation, msg.str());
    }
}

} // namespace

TimeGrid::TimeGrid(double duration_s, std::size_t bins) : duration_(duration_s), bins_(bins)
{
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw Error(ErrorCode::config, "time grid duration must be positive and finite");
    }
    if (bins == 0) {
        throw Error(ErrorCode::config, "time grid needs at least one bin");
    }
}

Tmf::Tmf(TimeGrid grid, ComplexVector amp) : grid_(grid), amp_(std::move(amp))
{
    if (static_cast<std::size_t>(amp_.size()) != grid_.bins()) {
        std::ostringstream msg;
        msg << "TMF has " << amp_.size() << " amplitudes but grid has " << grid_.bins()
            << " bins";
        throw Error(ErrorCode::grid_mismatch, msg.str());
    }
}

Tmf Tmf::sample(const TimeGrid &grid, const std::function<Complex(double)> &profile)
{
    ComplexVector amp(static_cast<Eigen::Index>(grid.bins()));
    const double weight = std::sqrt(grid.dt());
    for (std::size_t j = 0; j < grid.bins(); ++j) {
        amp[static_cast<Eigen::Index>(j)] = weight * profile(grid.time_at(j));
    }
    return Tmf(grid, std::move(amp));
}

bool Tmf::is_normalized(double tol) const
{
    return std::abs(amp_.squaredNorm() - 1.0) <= tol;
}

Complex inner_product(const Tmf &f, const Tmf &g)
{
    require_compatible(f, g);
    return f.amp().dot(g.amp()); // Eigen's dot conjugates the first argument
}

Tmf normalize(const Tmf &f)
{
    const double n = f.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::degenerate_input, "cannot normalize a zero or non-finite TMF");
    }
    return Tmf(f.grid(), f.amp() / n);
}

double mode_match(const Tmf &f, const Tmf &g)
{
    require_normalized(f, "first TMF");
    require_normalized(g, "second TMF");
    const double m = std::norm(inner_product(f, g));
    return std::min(1.0, m);
}

GramSchmidt gram_schmidt(const Tmf &f1, const Tmf &f2)
{
    require_normalized(f1, "f1");
    require_normalized(f2, "f2");
    const Complex overlap = inner_product(f1, f2);
    if (std::abs(overlap) > 1.0 - 1e-9) {
        throw Error(ErrorCode::linear_dependence,
                    "f1 and f2 are linearly dependent (|<f1,f2>| = 1)");
    }
    const ComplexVector residual = f2.amp() - overlap * f1.amp();
    Tmf e2 = normalize(Tmf(f1.grid(), residual));

    Eigen::Matrix2cd coeffs;
    coeffs(0, 0) = 1.0;
    coeffs(0, 1) = 0.0;
    coeffs(1, 0) = overlap;
    coeffs(1, 1) = inner_product(e2, f2);
    return GramSchmidt{f1, std::move(e2), coeffs};
}

TimeBinPair timebin_pair(const TimeGrid &grid, double gamma_per_s, double center1_s,
                         double delta_t_s)
{
    if (!(gamma_per_s > 0.0)) {
        throw Error(ErrorCode::config, "decay rate gamma must be positive");
    }
    const double tail = 5.0 / gamma_per_s;
    const double center2_s = center1_s + delta_t_s;
    const double lo = std::min(center1_s, center2_s) - tail;
    const double hi = std::max(center1_s, center2_s) + tail;
    const bool truncated = lo < 0.0 || hi > grid.duration();

    auto packet = [gamma_per_s](double center) {
        return [gamma_per_s, center](double t) -> Complex {
            return std::exp(-gamma_per_s * std::abs(t - center));
        };
    };
    Tmf w1 = normalize(Tmf::sample(grid, packet(center1_s)));
    Tmf w2 = normalize(Tmf::sample(grid, packet(center2_s)));
    return TimeBinPair{std::move(w1), std::move(w2), truncated};
}

TimeBinPair timebin_pair(const TimeGrid &grid, const TimeBinParams &params)
{
    const double center = params.center1_s >= 0.0 ? params.center1_s : 0.35 * grid.duration();
    return timebin_pair(grid, params.gamma_per_s, center, params.delta_t_s);
}

bool orthonormal(std::span<const Tmf> fns, double tol)
{
    for (std::size_t i = 0; i < fns.size(); ++i) {
        for (std::size_t k = i; k < fns.size(); ++k) {
            const Complex ip = inner_product(fns[i], fns[k]);
            const double expected = i == k ? 1.0 : 0.0;
            if (std::abs(ip - expected) > tol) {
                return false;
            }
        }
    }
    return true;
}

Tmf superpose(std::span<const Complex> coeffs, std::span<const Tmf> fns)
{
    if (coeffs.size() != fns.size() || fns.empty()) {
        throw Error(ErrorCode::contract_violation,
                    "superpose needs one coefficient per function and at least one function");
    }
    if (!orthonormal(fns, kNormTolerance)) {
        throw Error(ErrorCode::contract_violation, "superpose requires orthonormal functions");
    }
    double weight = 0.0;
    for (const Complex &c : coeffs) {
        weight += std::norm(c);
    }
    if (std::abs(weight - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "superposition coefficients must have unit norm (sum |c|^2 = " << weight << ")";
        throw Error(ErrorCode::contract_violation, msg.str());
    }
    ComplexVector amp = ComplexVector::Zero(static_cast<Eigen::Index>(fns.front().size()));
    for (std::size_t k = 0; k < fns.size(); ++k) {
        amp += coeffs[k] * fns[k].amp();
    }
    return normalize(Tmf(fns.front().grid(), std::move(amp)));
}

Tmf canonicalize_phase(const Tmf &f)
{
    const ComplexVector &a = f.amp();
    double peak = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        peak = std::max(peak, std::abs(a[j]));
    }
    if (peak == 0.0) {
        return f;
    }
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (std::abs(a[j]) >= peak * (1.0 - 1e-12)) {
            pivot = j;
            break;
        }
    }
    const Complex phase = std::conj(a[pivot]) / std::abs(a[pivot]);
    ComplexVector rotated = a * phase;
    rotated[pivot] = std::abs(a[pivot]);
    return Tmf(f.grid(), std::move(rotated));
}

} // namespace cpca
