#include "cpca/mode_analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "cpca/error.hpp"
#include "cpca/fock.hpp"
#include "cpca/parallel.hpp"

namespace cpca
{

namespace
{

constexpr std::size_t kMinSamples = 100;
constexpr double kConstraintScale = 1e2;

// (n+k)!/n!
double rising(int n, int k)
{
    double out = 1.0;
    for (int i = 1; i <= k; ++i) {
        out *= static_cast<double>(n + i);
    }
    return out;
}

struct Fit
{
    Eigen::VectorXd p;
    double residual = 0.0;
};

// Weighted NNLS with row 0 (the normalization row) enforced by a heavy weight.
Fit constrained_fit(const Eigen::MatrixXd &design, const Eigen::VectorXd &target,
                    const Eigen::VectorXd &weights)
{
    Eigen::MatrixXd a = design;
    Eigen::VectorXd b = target;
    for (Eigen::Index r = 1; r < a.rows(); ++r) {
        a.row(r) *= weights[r];
        b[r] *= weights[r];
    }
    const double big = kConstraintScale * std::max(1.0, a.bottomRows(a.rows() - 1).cwiseAbs().maxCoeff());
    a.row(0) = Eigen::RowVectorXd::Constant(a.cols(), big);
    b[0] = big;

    Fit fit;
    fit.p = nnls(a, b);
    const double total = fit.p.sum();
    if (total > 0.0) {
        fit.p /= total;
    }
    const Eigen::Index rows = a.rows() - 1;
    if (rows > 0) {
        const Eigen::VectorXd r = (a * fit.p - b).tail(rows);
        fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(rows));
    }
    return fit;
}

Eigen::VectorXd fit_weights(const Eigen::MatrixXd &design, const Eigen::VectorXd &se)
{
    Eigen::VectorXd w(design.rows());
    for (Eigen::Index r = 0; r < design.rows(); ++r) {
        const double row_max = std::max(design.row(r).cwiseAbs().maxCoeff(), 1e-300);
        if (se.size() == design.rows() && se[r] > 0.0) {
            w[r] = 1.0 / se[r];
        } else {
            w[r] = 1.0 / row_max;
        }
    }
    return w;
}

bool ill_conditioned(double residual, bool with_se)
{
    return with_se ? residual > 3.0 : residual > 1e-6;
}

Eigen::MatrixXd single_design(int k_max, int cutoff)
{
    Eigen::MatrixXd d(k_max + 1, cutoff + 1);
    for (int k = 0; k <= k_max; ++k) {
        for (int n = 0; n <= cutoff; ++n) {
            d(k, n) = rising(n, k);
        }
    }
    return d;
}

Eigen::MatrixXd joint_design(int k_max, int cutoff)
{
    const int rows = (k_max + 1) * (k_max + 1);
    const int cols = (cutoff + 1) * (cutoff + 1);
    Eigen::MatrixXd d(rows, cols);
    for (int j = 0; j <= k_max; ++j) {
        for (int k = 0; k <= k_max; ++k) {
            for (int m = 0; m <= cutoff; ++m) {
                for (int n = 0; n <= cutoff; ++n) {
                    d(j * (k_max + 1) + k, m * (cutoff + 1) + n) = rising(m, j) * rising(n, k);
                }
            }
        }
    }
    return d;
}

// Per-sample moment terms, one column per moment, for jackknife handling.
Eigen::MatrixXd single_terms(const ComplexVector &samples, int k_max)
{
    Eigen::MatrixXd t(samples.size(), k_max + 1);
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        const double r2 = std::norm(samples[i]);
        double acc = 1.0;
        for (int k = 0; k <= k_max; ++k) {
            t(i, k) = acc;
            acc *= r2;
        }
    }
    return t;
}

Eigen::MatrixXd joint_terms(const ComplexVector &s1, const ComplexVector &s2, int k_max)
{
    const int side = k_max + 1;
    Eigen::MatrixXd t(s1.size(), side * side);
    for (Eigen::Index i = 0; i < s1.size(); ++i) {
        const double r1 = std::norm(s1[i]);
        const double r2 = std::norm(s2[i]);
        double pj = 1.0;
        for (int j = 0; j <= k_max; ++j) {
            double pk = 1.0;
            for (int k = 0; k <= k_max; ++k) {
                t(i, j * side + k) = pj * pk;
                pk *= r2;
            }
            pj *= r1;
        }
    }
    return t;
}

// Column means and delete-one jackknife errors.
void mean_and_se(const Eigen::MatrixXd &terms, Eigen::VectorXd &mean, Eigen::VectorXd &se)
{
    const auto n = static_cast<double>(terms.rows());
    mean = terms.colwise().mean().transpose();
    se.resize(terms.cols());
    for (Eigen::Index c = 0; c < terms.cols(); ++c) {
        const double var = (terms.col(c).array() - mean[c]).square().sum() / (n - 1.0);
        se[c] = std::sqrt(var / n);
    }
}

// Leave-one-block-out refits; returns the jackknife SE of the fitted vector.
template <typename FitFn>
Eigen::VectorXd block_jackknife(const Eigen::MatrixXd &terms, int blocks, FitFn fit_fn)
{
    const Eigen::Index n = terms.rows();
    blocks = static_cast<int>(std::min<Eigen::Index>(blocks, n));
    if (blocks < 2) {
        return {};
    }
    Eigen::MatrixXd block_sums = Eigen::MatrixXd::Zero(blocks, terms.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(blocks), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index b = i * blocks / n;
        block_sums.row(b) += terms.row(i);
        ++counts[static_cast<std::size_t>(b)];
    }
    const Eigen::RowVectorXd total = block_sums.colwise().sum();
    std::vector<Eigen::VectorXd> estimates;
    for (int b = 0; b < blocks; ++b) {
        const double kept = static_cast<double>(n - counts[static_cast<std::size_t>(b)]);
        const Eigen::VectorXd moments = ((total - block_sums.row(b)) / kept).transpose();
        estimates.push_back(fit_fn(moments));
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(estimates.front().size());
    for (const auto &e : estimates) {
        mean += e;
    }
    mean /= blocks;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mean.size());
    for (const auto &e : estimates) {
        acc += (e - mean).cwiseAbs2();
    }
    return (acc * (blocks - 1.0) / blocks).cwiseSqrt();
}

void require_samples(Eigen::Index n)
{
    if (static_cast<std::size_t>(n) < kMinSamples) {
        std::ostringstream msg;
        msg << "at least " << kMinSamples << " samples are required, got " << n;
        throw Error(ErrorCode::contract_violation, msg.str());
    }
}

} // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd &a, const Eigen::VectorXd &b, int max_iter)
{
    const Eigen::Index n = a.cols();
    if (max_iter <= 0) {
        max_iter = static_cast<int>(30 * n);
    }
    const double tol =
        10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().colwise().sum().maxCoeff() *
        static_cast<double>(std::max(a.rows(), n));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (passive[static_cast<std::size_t>(j)]) {
                idx.push_back(j);
            }
        }
        Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            ap.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
        }
        const Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(b);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) {
            s[idx[c]] = sp[static_cast<Eigen::Index>(c)];
        }
        return s;
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::VectorXd w = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        }
        if (best < 0) {
            break;
        }
        passive[static_cast<std::size_t>(best)] = true;

        for (int inner = 0; inner < max_iter; ++inner) {
            const Eigen::VectorXd s = solve_passive();
            bool feasible = true;
            double step = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
                    feasible = false;
                    const double denom = x[j] - s[j];
                    if (denom > 0.0) {
                        step = std::min(step, x[j] / denom);
                    }
                }
            }
            if (feasible) {
                x = s;
                break;
            }
            x += step * (s - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    return x.cwiseMax(0.0);
}

AntinormalMoments antinormal_moments(const ComplexVector &samples, int k_max)
{
    if (k_max < 0 || k_max > kMaxMomentOrder) {
        throw Error(ErrorCode::contract_violation, "moment order must lie in [0, 6]");
    }
    require_samples(samples.size());
    AntinormalMoments out;
    mean_and_se(single_terms(samples, k_max), out.values, out.se);
    out.samples = static_cast<std::size_t>(samples.size());
    return out;
}

PhotonDistribution photon_distribution(const Eigen::VectorXd &moments, int cutoff,
                                       const Eigen::VectorXd &se)
{
    const int k_max = static_cast<int>(moments.size()) - 1;
    if (cutoff < 0 || cutoff > kMaxSingleCutoff || cutoff > k_max) {
        throw Error(ErrorCode::contract_violation,
                    "photon-number cutoff must satisfy 0 <= cutoff <= min(K, 5)");
    }
    const Eigen::MatrixXd design = single_design(k_max, cutoff);
    const bool with_se = se.size() == moments.size();
    const Fit fit = constrained_fit(design, moments, fit_weights(design, se));
    PhotonDistribution out;
    out.p = fit.p;
    out.se = Eigen::VectorXd::Zero(cutoff + 1);
    out.cutoff = cutoff;
    out.residual = fit.residual;
    out.ill_conditioned = ill_conditioned(fit.residual, with_se);
    return out;
}

PhotonDistribution photon_distribution_from_samples(const ComplexVector &samples, int k_max,
                                                    int cutoff, int blocks)
{
    const AntinormalMoments a = antinormal_moments(samples, k_max);
    PhotonDistribution out = photon_distribution(a.values, cutoff, a.se);
    const Eigen::MatrixXd design = single_design(k_max, cutoff);
    const Eigen::VectorXd weights = fit_weights(design, a.se);
    const Eigen::VectorXd se = block_jackknife(
        single_terms(samples, k_max), blocks,
        [&](const Eigen::VectorXd &m) { return constrained_fit(design, m, weights).p; });
    if (se.size() == out.p.size()) {
        out.se = se;
    }
    return out;
}

double pearson_from_joint(const Eigen::MatrixXd &p, bool *zero_variance)
{
    double em = 0.0, en = 0.0, emm = 0.0, enn = 0.0, emn = 0.0;
    for (Eigen::Index m = 0; m < p.rows(); ++m) {
        for (Eigen::Index n = 0; n < p.cols(); ++n) {
            const double w = p(m, n);
            const double dm = static_cast<double>(m);
            const double dn = static_cast<double>(n);
            em += w * dm;
            en += w * dn;
            emm += w * dm * dm;
            enn += w * dn * dn;
            emn += w * dm * dn;
        }
    }
    const double vm = emm - em * em;
    const double vn = enn - en * en;
    const bool flat = vm < 1e-12 || vn < 1e-12;
    if (zero_variance != nullptr) {
        *zero_variance = flat;
    }
    if (flat) {
        return 0.0;
    }
    return (emn - em * en) / std::sqrt(vm * vn);
}

JointPhotonDistribution joint_photon_distribution_from_moments(const Eigen::MatrixXd &moments,
                                                               int cutoff,
                                                               const Eigen::MatrixXd &se)
{
    const int k_max = static_cast<int>(moments.rows()) - 1;
    if (moments.rows() != moments.cols() || cutoff < 0 || cutoff > kMaxJointCutoff ||
        cutoff > k_max) {
        throw Error(ErrorCode::contract_violation,
                    "joint cutoff must satisfy 0 <= cutoff <= min(K, 4) with square moments");
    }
    const int side = k_max + 1;
    Eigen::VectorXd target(side * side);
    Eigen::VectorXd se_flat;
    const bool with_se = se.rows() == moments.rows() && se.cols() == moments.cols();
    if (with_se) {
        se_flat.resize(side * side);
    }
    for (int j = 0; j < side; ++j) {
        for (int k = 0; k < side; ++k) {
            target[j * side + k] = moments(j, k);
            if (with_se) {
                se_flat[j * side + k] = se(j, k);
            }
        }
    }
    const Eigen::MatrixXd design = joint_design(k_max, cutoff);
    const Fit fit = constrained_fit(design, target, fit_weights(design, se_flat));

    JointPhotonDistribution out;
    out.cutoff = cutoff;
    out.p = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        fit.p.data(), cutoff + 1, cutoff + 1);
    out.se = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
    out.residual = fit.residual;
    out.ill_conditioned = ill_conditioned(fit.residual, with_se);
    out.pearson_r = pearson_from_joint(out.p, &out.zero_variance);
    return out;
}

JointPhotonDistribution joint_photon_distribution(const ComplexVector &s1, const ComplexVector &s2,
                                                  int cutoff, int blocks)
{
    if (s1.size() != s2.size()) {
        throw Error(ErrorCode::contract_violation, "joint samples must have equal lengths");
    }
    require_samples(s1.size());
    const int k_max = cutoff;
    const int side = k_max + 1;
    const Eigen::MatrixXd terms = joint_terms(s1, s2, k_max);
    Eigen::VectorXd mean, se;
    mean_and_se(terms, mean, se);
    const Eigen::MatrixXd moments =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            mean.data(), side, side);
    const Eigen::MatrixXd se_m =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            se.data(), side, side);
    JointPhotonDistribution out = joint_photon_distribution_from_moments(moments, cutoff, se_m);

    const Eigen::MatrixXd design = joint_design(k_max, cutoff);
    const Eigen::VectorXd weights = fit_weights(design, se);
    const Eigen::VectorXd p_se = block_jackknife(
        terms, blocks, [&](const Eigen::VectorXd &m) { return constrained_fit(design, m, weights).p; });
    if (p_se.size() == (cutoff + 1) * (cutoff + 1)) {
        out.se = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            p_se.data(), cutoff + 1, cutoff + 1);
    }
    return out;
}

double wigner_at(const Eigen::MatrixXcd &rho, double x, double p)
{
    // W_alpha = sum_{m >= n} of (2/pi) (-1)^n sqrt(n!/m!) (2 conj(alpha))^{m-n}
    //           e^{-2|alpha|^2} L_n^{(m-n)}(4|alpha|^2) rho_mn, plus conjugates for m > n
    const Complex alpha(x / std::numbers::sqrt2, p / std::numbers::sqrt2);
    const double r2 = std::norm(alpha);
    const double gauss = std::exp(-2.0 * r2);
    const Complex two_ca = 2.0 * std::conj(alpha);
    const int dim = static_cast<int>(rho.rows());
    double w = 0.0;
    for (int n = 0; n < dim; ++n) {
        Complex power = 1.0;
        for (int m = n; m < dim; ++m) {
            const int d = m - n;
            if (d > 0) {
                power *= two_ca;
            }
            const double sign = n % 2 == 0 ? 1.0 : -1.0;
            const double norm = std::exp(0.5 * (log_factorial(n) - log_factorial(m)));
            const double lag = std::assoc_laguerre(static_cast<unsigned>(n),
                                                   static_cast<unsigned>(d), 4.0 * r2);
            const Complex term = sign * norm * power * lag * rho(m, n);
            w += d == 0 ? term.real() : 2.0 * term.real();
        }
    }
    // W(x, p) = W_alpha / 2 so that the vacuum peak is 1/pi
    return w * gauss * (2.0 / std::numbers::pi) / 2.0;
}

WignerGrid wigner_grid(const Eigen::MatrixXcd &rho, const WignerWindow &window, std::size_t workers)
{
    if (rho.rows() != rho.cols() || rho.rows() < 1 || rho.rows() > 31) {
        throw Error(ErrorCode::contract_violation, "Wigner grid needs a square rho with cutoff <= 30");
    }
    if (window.nx < 2 || window.np < 2 || !(window.x_max > window.x_min) ||
        !(window.p_max > window.p_min)) {
        throw Error(ErrorCode::config, "invalid Wigner window");
    }
    WignerGrid out;
    out.x = Eigen::VectorXd::LinSpaced(window.nx, window.x_min, window.x_max);
    out.p = Eigen::VectorXd::LinSpaced(window.np, window.p_min, window.p_max);
    out.w.resize(window.nx, window.np);
    parallel_for(static_cast<std::size_t>(window.nx), workers, [&](std::size_t i) {
        const auto ix = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < window.np; ++j) {
            out.w(ix, j) = wigner_at(rho, out.x[ix], out.p[j]);
        }
    });
    // trapezoid rule
    const double dx = (window.x_max - window.x_min) / (window.nx - 1);
    const double dp = (window.p_max - window.p_min) / (window.np - 1);
    double total = 0.0;
    for (Eigen::Index i = 0; i < window.nx; ++i) {
        const double wx = (i == 0 || i == window.nx - 1) ? 0.5 : 1.0;
        for (Eigen::Index j = 0; j < window.np; ++j) {
            const double wp = (j == 0 || j == window.np - 1) ? 0.5 : 1.0;
            total += wx * wp * out.w(i, j);
        }
    }
    out.integral = total * dx * dp;
    out.window_warning = std::abs(1.0 - out.integral) > 0.02;
    return out;
}

} // namespace cpca
