#include "cpca/two_photon.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cpca/error.hpp"

namespace cpca
{

namespace
{

constexpr double kAnalyticZero = 1e-12;

// Delete-one jackknife standard error of a sample mean.
template <typename Vec> double jackknife_se(const Vec &x)
{
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) {
        return 0.0;
    }
    const auto total = x.sum();
    double acc = 0.0;
    const auto mean = total / n;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto loo = (total - x[i]) / (n - 1.0);
        acc += std::norm(loo - mean);
    }
    return std::sqrt((n - 1.0) / n * acc);
}

double canonical_angle(double theta)
{
    // (-pi, pi]
    double t = std::remainder(theta, 2.0 * std::numbers::pi);
    if (t <= -std::numbers::pi) {
        t += 2.0 * std::numbers::pi;
    }
    return t;
}

std::string spectrum_listing(const Eigen::VectorXd &eigenvalues, double threshold)
{
    std::ostringstream msg;
    msg << "spectrum (threshold " << threshold << "):";
    const Eigen::Index shown = std::min<Eigen::Index>(eigenvalues.size(), 8);
    for (Eigen::Index k = 0; k < shown; ++k) {
        msg << ' ' << eigenvalues[k];
    }
    if (shown < eigenvalues.size()) {
        msg << " ...";
    }
    return msg.str();
}

void require_two_modes(const ModeDecomposition &dec, double threshold)
{
    Eigen::Index above = 0;
    for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
        if (dec.eigenvalues[k] > threshold) {
            ++above;
        }
    }
    if (above != 2) {
        std::ostringstream msg;
        msg << "expected exactly two modes above vacuum, found " << above << "; "
            << spectrum_listing(dec.eigenvalues, threshold);
        throw Error(ErrorCode::mode_count_mismatch, msg.str());
    }
}

TwoPhotonSolution assemble(double n1, double n2, double se_n1, double se_n2,
                           const FourthMoments &moments, const Tmf &e1, const Tmf &e2,
                           const Eigen::VectorXd &eigenvalues, double threshold,
                           const SolveTolerances &tol)
{
    const double q_prime = std::abs(moments.m22);
    const double q = loss_normalized_q(q_prime, n1, n2);
    const double theta = q_prime > 0.0 ? canonical_angle(std::arg(moments.m22)) : 0.0;
    const Coefficients coeffs = solve_coefficients(n1, n2, q, theta, moments.m211, tol);
    const Eigen::Matrix2cd d = build_d(n1, n2, coeffs);
    RecoveredPair pair = recover_tmfs(d, e1, e2);
    return TwoPhotonSolution{n1,           n2,         se_n1,         se_n2,         moments,
                             q_prime,      coeffs.q,   coeffs.theta,  coeffs,        d,
                             e1,           e2,         pair.f1,       pair.f2,       pair.overlap,
                             eigenvalues,  threshold};
}

} // namespace

std::string_view to_string(Branch b)
{
    switch (b) {
    case Branch::nondegenerate: return "nondegenerate";
    case Branch::degenerate: return "degenerate";
    case Branch::exact_11: return "exact-|1,1>";
    }
    return "unknown";
}

FourthMoments estimate_fourth_moments(const FrameSet &frames, const Tmf &e1, const Tmf &e2,
                                      double target_relative_se)
{
    if (std::abs(inner_product(e1, e2)) > 1e-6) {
        throw Error(ErrorCode::contract_violation, "e1 and e2 must be orthogonal within 1e-6");
    }
    if (frames.frames() < 2) {
        throw Error(ErrorCode::contract_violation, "at least two frames are required");
    }
    const ComplexVector b1 = project(frames, e1);
    const ComplexVector b2 = project(frames, e2);
    const ComplexVector c1 = b1.conjugate();
    const ComplexVector x22 = (c1.array().square() * b2.array().square()).matrix();
    const ComplexVector x211 = (c1.array().square() * b1.array() * b2.array()).matrix();
    const auto n = static_cast<double>(frames.frames());

    FourthMoments out;
    out.m22 = x22.sum() / n;
    out.m211 = x211.sum() / n;
    out.se_m22 = jackknife_se(x22);
    out.se_m211 = jackknife_se(x211);
    out.frame_count = frames.frames();
    out.insufficient_frames = out.se_m22 > target_relative_se * std::abs(out.m22);
    return out;
}

double loss_normalized_q(double q_prime, double n1, double n2)
{
    const double total = n1 + n2;
    if (!(total > 0.0)) {
        throw Error(ErrorCode::contract_violation, "N1 + N2 must be positive");
    }
    return 4.0 * q_prime / (total * total);
}

Coefficients solve_coefficients(double n1, double n2, double q, double theta, Complex m211,
                                const SolveTolerances &tol)
{
    if (!(n2 > 0.0)) {
        std::ostringstream msg;
        msg << "second mode has N2 = " << n2 << " <= 0: not a two-mode two-photon state";
        throw Error(ErrorCode::single_mode_state, msg.str());
    }
    if (n1 < n2) {
        throw Error(ErrorCode::contract_violation, "requires N1 >= N2");
    }
    const double q_tol = std::max(1e-9, 3.0 * tol.se_q);
    if (q > 1.0 + q_tol) {
        std::ostringstream msg;
        msg << "loss-normalized moment Q = " << q << " exceeds 1";
        throw Error(ErrorCode::inconsistent_moments, msg.str());
    }
    Coefficients out;
    out.q = std::clamp(q, 0.0, 1.0);
    out.theta = canonical_angle(theta);
    const Complex e_theta = std::polar(1.0, out.theta);

    const double total = n1 + n2;
    const bool degenerate = std::abs(n1 - n2) <= std::max(0.05 * total, 3.0 * tol.se_n_diff);
    if (!degenerate) {
        out.branch = Branch::nondegenerate;
        out.alpha = std::sqrt(n1 / total);
        out.beta = 0.0;
        out.gamma = std::sqrt(n2 / total) * e_theta;
        return out;
    }

    const double q_zero = std::max(kAnalyticZero, 3.0 * tol.se_q);
    const double m211_zero = std::max(kAnalyticZero, 3.0 * tol.se_m211);
    if (out.q < q_zero && std::abs(m211) < m211_zero) {
        out.branch = Branch::exact_11;
        out.alpha = 0.0;
        out.beta = 1.0;
        out.gamma = 0.0;
        out.theta = 0.0;
        return out;
    }

    out.branch = Branch::degenerate;
    const Complex half = std::polar(1.0, 0.5 * out.theta);
    const Complex beta_plus = Complex(0.0, 1.0) * std::sqrt(1.0 - out.q) * half;
    // m211 = sqrt2 alpha beta with alpha >= 0 fixes the sign of beta
    out.sign = std::real(std::conj(beta_plus) * m211) >= 0.0 ? 1 : -1;
    out.alpha = std::sqrt(out.q / 2.0);
    out.beta = static_cast<double>(out.sign) * beta_plus;
    out.gamma = std::sqrt(out.q / 2.0) * e_theta;
    return out;
}

Eigen::Matrix2cd build_d(double n1, double n2, const Coefficients &coeffs)
{
    Eigen::Matrix2cd d;
    const Complex i(0.0, 1.0);
    const Complex half = std::polar(1.0, 0.5 * coeffs.theta);
    switch (coeffs.branch) {
    case Branch::exact_11:
        d.setIdentity();
        return d;
    case Branch::nondegenerate: {
        const double x = std::pow(n1, 0.25);
        const double y = std::pow(n2, 0.25);
        d << x, i * y * half, x, -i * y * half;
        break;
    }
    case Branch::degenerate: {
        const double root = std::sqrt(1.0 - coeffs.q);
        const double a = std::sqrt(1.0 + root);
        const double b = std::sqrt(1.0 - root);
        const double s = static_cast<double>(coeffs.sign);
        d << a, -s * i * b * half, b, s * i * a * half;
        break;
    }
    }
    for (int r = 0; r < 2; ++r) {
        d.row(r) /= d.row(r).norm();
    }
    return d;
}

RecoveredPair recover_tmfs(const Eigen::Matrix2cd &d, const Tmf &e1, const Tmf &e2)
{
    if (!e1.grid().compatible(e2.grid())) {
        throw Error(ErrorCode::grid_mismatch, "e1 and e2 are on different grids");
    }
    auto make = [&](int r) {
        return canonicalize_phase(normalize(Tmf(e1.grid(), d(r, 0) * e1.amp() + d(r, 1) * e2.amp())));
    };
    Tmf f1 = make(0);
    Tmf f2 = make(1);
    const Complex overlap = inner_product(f1, f2);
    return RecoveredPair{std::move(f1), std::move(f2), overlap};
}

double vacuum_edge(std::size_t bins, std::size_t frames)
{
    const double ratio = std::sqrt(static_cast<double>(bins) / static_cast<double>(frames));
    return (1.0 + ratio) * (1.0 + ratio);
}

TwoPhotonSolution decompose_analytic(const ModalState &state, double threshold)
{
    if (state.carriers().empty()) {
        throw Error(ErrorCode::mode_count_mismatch,
                    "expected exactly two modes above vacuum, found 0 (vacuum state)");
    }
    const TimeGrid grid = state.carriers().front().grid();
    const ModeDecomposition dec = eigendecompose(analytic_ct(state, grid));
    require_two_modes(dec, threshold);
    const Tmf &e1 = dec.modes[0];
    const Tmf &e2 = dec.modes[1];
    const FourthMoments moments = analytic_fourth_moments(state, e1, e2);
    return assemble(dec.nbar[0], dec.nbar[1], 0.0, 0.0, moments, e1, e2, dec.eigenvalues,
                    threshold, SolveTolerances{});
}

TwoPhotonSolution decompose_frames(const FrameSet &frames, double threshold, std::size_t workers)
{
    if (threshold <= 0.0) {
        threshold = 1.05 * vacuum_edge(frames.grid.bins(), frames.frames());
    }
    const ModeDecomposition dec = eigendecompose(accumulate_ct(frames, workers));
    require_two_modes(dec, threshold);
    const Tmf &e1 = dec.modes[0];
    const Tmf &e2 = dec.modes[1];
    const FourthMoments moments = estimate_fourth_moments(frames, e1, e2);

    const ComplexVector b1 = project(frames, e1);
    const ComplexVector b2 = project(frames, e2);
    const Eigen::VectorXd p1 = b1.cwiseAbs2();
    const Eigen::VectorXd p2 = b2.cwiseAbs2();
    const Eigen::VectorXd diff = p1 - p2;
    const double n1 = dec.nbar[0];
    const double n2 = dec.nbar[1];

    SolveTolerances tol;
    tol.se_n_diff = jackknife_se(diff);
    // first-order propagation of Q = 4 q' / (N1 + N2)^2
    const double total = n1 + n2;
    const double se_total = jackknife_se(Eigen::VectorXd(p1 + p2));
    const double q_prime = std::abs(moments.m22);
    tol.se_q = total > 0.0 ? 4.0 / (total * total) *
                                 std::hypot(moments.se_m22, 2.0 * q_prime * se_total / total)
                           : 0.0;
    tol.se_m211 = moments.se_m211;
    return assemble(n1, n2, jackknife_se(p1), jackknife_se(p2), moments, e1, e2, dec.eigenvalues,
                    threshold, tol);
}

} // namespace cpca
