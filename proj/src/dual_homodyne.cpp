#include "cpca/dual_homodyne.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cpca/error.hpp"
#include "cpca/parallel.hpp"

namespace cpca
{

namespace
{

constexpr double kWeightFloor = 1e-12;
constexpr double kComponentFloor = 1e-14;
const double kVacuumSigma = std::sqrt(0.5);

Complex complex_normal(Rng &rng, double scale)
{
    std::normal_distribution<double> normal(0.0, kVacuumSigma * scale);
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

// Proposal variance for the mode-1 marginal of psi(m, n): 1 + n_eff / 2,
// with n_eff the highest row carrying non-negligible weight (at least 1 so the
// envelope stays finite).
double proposal_variance(const Eigen::MatrixXcd &psi)
{
    int n_eff = 1;
    for (Eigen::Index m = psi.rows() - 1; m > 1; --m) {
        if (psi.row(m).squaredNorm() > kWeightFloor) {
            n_eff = static_cast<int>(m);
            break;
        }
    }
    return 1.0 + 0.5 * n_eff;
}

// K = s^2 sum_n (sum_m |psi_mn| b_m)^2 with b_m = sup_x x^m e^{-c x^2 / 2} / sqrt(m!)
//   = (m / (c e))^{m/2} / sqrt(m!), c = 1 - 1/s^2.
double envelope_constant(const Eigen::MatrixXcd &psi, double s2)
{
    const double c = 1.0 - 1.0 / s2;
    std::vector<double> b(static_cast<std::size_t>(psi.rows()));
    b[0] = 1.0;
    for (Eigen::Index m = 1; m < psi.rows(); ++m) {
        const double md = static_cast<double>(m);
        b[static_cast<std::size_t>(m)] =
            std::exp(0.5 * md * std::log(md / (c * std::numbers::e)) - 0.5 * log_factorial(static_cast<int>(m)));
    }
    double total = 0.0;
    for (Eigen::Index n = 0; n < psi.cols(); ++n) {
        double col = 0.0;
        for (Eigen::Index m = 0; m < psi.rows(); ++m) {
            col += std::abs(psi(m, n)) * b[static_cast<std::size_t>(m)];
        }
        total += col * col;
    }
    return s2 * total;
}

// Coherent-state overlaps conj(alpha)^m / sqrt(m!).
ComplexVector coherent_row(Complex alpha, Eigen::Index size)
{
    ComplexVector out(size);
    Complex term = 1.0;
    const Complex ca = std::conj(alpha);
    for (Eigen::Index m = 0; m < size; ++m) {
        out[m] = term;
        term *= ca / std::sqrt(static_cast<double>(m + 1));
    }
    return out;
}

// Draws alpha from the marginal Q1(alpha) = e^{-|alpha|^2} / pi *
// sum_n |sum_m psi_mn conj(alpha)^m / sqrt(m!)|^2.
Complex draw_marginal(const Eigen::MatrixXcd &psi, double s2, double envelope, Rng &rng)
{
    const double c = 1.0 - 1.0 / s2;
    const double scale = std::sqrt(s2);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int attempt = 0; attempt < QSampler::kMaxRetries; ++attempt) {
        const Complex alpha = complex_normal(rng, scale);
        const double r2 = std::norm(alpha);
        const ComplexVector overlaps = coherent_row(alpha, psi.rows());
        const double poly = (overlaps.transpose() * psi).squaredNorm();
        const double ratio = s2 * std::exp(-c * r2) * poly;
        if (uniform(rng) * envelope < ratio) {
            return alpha;
        }
    }
    throw Error(ErrorCode::sampler_configuration,
                "Q-function rejection sampler exceeded its retry budget");
}

} // namespace

QSampler::QSampler(const DensityMatrix &rho) : modes_(rho.space().modes())
{
    const FockSpace &space = rho.space();
    if (modes_ == 0) {
        return;
    }
    const int c1 = space.cutoff(0);
    const int c2 = modes_ == 2 ? space.cutoff(1) : 0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::numerical_failure, "eigendecomposition of density matrix failed");
    }
    double kept = 0.0;
    std::vector<double> weights;
    for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
        const double lambda = es.eigenvalues()[k];
        if (lambda < kComponentFloor) {
            continue;
        }
        const ComplexVector v = es.eigenvectors().col(k);
        Eigen::MatrixXcd psi(c1 + 1, c2 + 1);
        for (int m = 0; m <= c1; ++m) {
            for (int n = 0; n <= c2; ++n) {
                psi(m, n) = v[space.index(m, n)];
            }
        }
        const double s2 = proposal_variance(psi);
        const double envelope = envelope_constant(psi, s2);
        components_.push_back(Component{std::move(psi), s2, envelope});
        weights.push_back(lambda);
        kept += lambda;
    }
    if (components_.empty()) {
        throw Error(ErrorCode::sampler_configuration, "density matrix has no positive weight");
    }
    double acc = 0.0;
    for (double w : weights) {
        acc += w / kept;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
}

std::array<Complex, 2> QSampler::draw(Rng &rng) const
{
    std::array<Complex, 2> out{0.0, 0.0};
    if (modes_ == 0) {
        return out;
    }
    std::size_t pick = 0;
    if (components_.size() > 1) {
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const double u = uniform(rng);
        while (pick + 1 < cumulative_.size() && u >= cumulative_[pick]) {
            ++pick;
        }
    }
    const Component &comp = components_[pick];
    out[0] = draw_marginal(comp.psi, comp.proposal_var, comp.envelope, rng);
    if (modes_ == 2) {
        // conditional ket of mode 2 given alpha1
        const ComplexVector overlaps = coherent_row(out[0], comp.psi.rows());
        Eigen::MatrixXcd phi = (overlaps.transpose() * comp.psi).transpose();
        const double nrm = phi.norm();
        if (!(nrm > 0.0)) {
            throw Error(ErrorCode::numerical_failure, "conditional mode-2 state vanished");
        }
        phi /= nrm;
        const double s2 = proposal_variance(phi);
        out[1] = draw_marginal(phi, s2, envelope_constant(phi, s2), rng);
    }
    return out;
}

std::array<Complex, 2> sample_q(const DensityMatrix &rho, Rng &rng)
{
    return QSampler(rho).draw(rng);
}

Rng frame_rng(std::uint64_t seed, std::uint64_t frame)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32)};
    return Rng(seq);
}

FrameSet generate_frames(const ModalState &state, const TimeGrid &grid, std::size_t n,
                         std::uint64_t seed, std::size_t workers)
{
    if (n == 0) {
        throw Error(ErrorCode::contract_violation, "frame count must be at least 1");
    }
    const auto &carriers = state.carriers();
    for (const Tmf &c : carriers) {
        if (!c.grid().compatible(grid)) {
            throw Error(ErrorCode::grid_mismatch, "state carriers are not on the simulation grid");
        }
    }
    const auto m = static_cast<Eigen::Index>(grid.bins());
    const QSampler sampler(state.rho());

    FrameSet out{grid, FrameMatrix(static_cast<Eigen::Index>(n), m), FrameMeta{}};
    out.meta.seed = seed;
    out.meta.provenance = state.provenance();

    parallel_for(n, workers, [&](std::size_t i) {
        Rng rng = frame_rng(seed, i);
        ComplexVector v(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            v[j] = complex_normal(rng, 1.0);
        }
        const auto values = sampler.draw(rng);
        for (std::size_t k = 0; k < carriers.size(); ++k) {
            const ComplexVector &e = carriers[k].amp();
            v += e * (values[k] - e.dot(v));
        }
        out.data.row(static_cast<Eigen::Index>(i)) = v.transpose();
    });
    return out;
}

void validate_filter(const DetectorFilter &filt, const TimeGrid &grid)
{
    const double nyquist = 0.5 / grid.dt();
    const double hp = filt.highpass_enabled ? filt.highpass_hz : 0.0;
    const double lp = filt.lowpass_enabled ? filt.lowpass_hz : nyquist;
    std::ostringstream msg;
    if (filt.highpass_enabled && !(filt.highpass_hz > 0.0)) {
        msg << "high-pass cutoff must be positive";
    } else if (filt.lowpass_enabled && !(filt.lowpass_hz < nyquist)) {
        msg << "low-pass cutoff " << filt.lowpass_hz << " Hz must be below Nyquist " << nyquist
            << " Hz";
    } else if (filt.highpass_enabled && !(hp < lp)) {
        msg << "high-pass cutoff " << hp << " Hz must be below the low-pass cutoff " << lp
            << " Hz";
    } else {
        return;
    }
    throw Error(ErrorCode::config, msg.str());
}

FrameSet apply_detector_filters(const FrameSet &frames, const DetectorFilter &filt)
{
    FrameSet out = frames;
    out.meta.filter = filt;
    if (!filt.highpass_enabled && !filt.lowpass_enabled) {
        return out;
    }
    validate_filter(filt, frames.grid);
    const double dt = frames.grid.dt();
    const double rc = 1.0 / (2.0 * std::numbers::pi * filt.highpass_hz);
    const double b = rc / (rc + dt);
    const double a = 1.0 - std::exp(-2.0 * std::numbers::pi * filt.lowpass_hz * dt);
    const Eigen::Index m = frames.data.cols();

    // Real coefficients act on Re and Im independently.
    for (Eigen::Index i = 0; i < frames.data.rows(); ++i) {
        auto row = out.data.row(i);
        if (filt.highpass_enabled) {
            // starts at rest; seeding x[-1] = x[0] would subtract the first sample from
            // every bin and fake a common-mode eigenvector
            Complex x_prev = 0.0;
            Complex y_prev = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                const Complex x = row[j];
                const Complex y = b * (y_prev + x - x_prev);
                row[j] = y;
                x_prev = x;
                y_prev = y;
            }
        }
        if (filt.lowpass_enabled) {
            Complex y_prev = row[0];
            for (Eigen::Index j = 0; j < m; ++j) {
                y_prev += a * (row[j] - y_prev);
                row[j] = y_prev;
            }
        }
    }
    out.meta.filtered = true;
    out.meta.filter_design =
        "first-order IIR: RC high-pass y[j] = b (y[j-1] + x[j] - x[j-1]), b = RC/(RC+dt), "
        "RC = 1/(2 pi f_hp); then exponential low-pass y[j] = y[j-1] + a (x[j] - y[j-1]), "
        "a = 1 - exp(-2 pi f_lp dt); high-pass starts at rest (x[-1] = y[-1] = 0), low-pass "
        "starts at y[-1] = x[0]; applied to Re and Im separately";
    return out;
}

nlohmann::json frame_meta_json(const FrameMeta &meta)
{
    nlohmann::json j;
    j["seed"] = meta.seed;
    j["state"] = {{"constructor", meta.provenance.constructor}, {"params", meta.provenance.params}};
    j["filters"] = {{"applied", meta.filtered},
                    {"highpass_enabled", meta.filter.highpass_enabled},
                    {"lowpass_enabled", meta.filter.lowpass_enabled},
                    {"highpass_cutoff_hz", meta.filter.highpass_hz},
                    {"lowpass_cutoff_hz", meta.filter.lowpass_hz},
                    {"design", meta.filter_design}};
    return j;
}

} // namespace cpca
