#include "cpca/fock.hpp"

#include <cmath>
#include <sstream>

#include "cpca/error.hpp"

namespace cpca
{

FockSpace::FockSpace(std::vector<int> cutoffs) : cutoffs_(std::move(cutoffs))
{
    if (cutoffs_.size() > 2) {
        throw Error(ErrorCode::contract_violation, "at most two carrier modes are supported");
    }
    size_ = 1;
    for (int c : cutoffs_) {
        if (c < 0) {
            throw Error(ErrorCode::contract_violation, "Fock cutoff must be non-negative");
        }
        size_ *= c + 1;
    }
}

Eigen::Index FockSpace::stride(std::size_t mode) const
{
    if (mode >= modes()) {
        throw Error(ErrorCode::contract_violation, "mode index out of range");
    }
    return mode + 1 == modes() ? 1 : cutoffs_[1] + 1;
}

std::array<int, 2> FockSpace::occupation(Eigen::Index index) const
{
    switch (modes()) {
    case 0: return {0, 0};
    case 1: return {static_cast<int>(index), 0};
    default: {
        const int d2 = cutoffs_[1] + 1;
        return {static_cast<int>(index / d2), static_cast<int>(index % d2)};
    }
    }
}

Eigen::Index FockSpace::index(int m, int n) const
{
    switch (modes()) {
    case 0: return 0;
    case 1: return m;
    default: return static_cast<Eigen::Index>(m) * (cutoffs_[1] + 1) + n;
    }
}

SparseOperator FockSpace::lowering(std::size_t mode) const
{
    const Eigen::Index s = stride(mode);
    std::vector<Eigen::Triplet<Complex>> entries;
    entries.reserve(static_cast<std::size_t>(size_));
    for (Eigen::Index i = 0; i < size_; ++i) {
        const int n = occupation(i)[mode];
        if (n > 0) {
            entries.emplace_back(i - s, i, std::sqrt(static_cast<double>(n)));
        }
    }
    SparseOperator op(size_, size_);
    op.setFromTriplets(entries.begin(), entries.end());
    return op;
}

double log_factorial(int n)
{
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(int n, int k)
{
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

Complex trace_product(const Eigen::MatrixXcd &rho, const SparseOperator &x,
                      const SparseOperator &y)
{
    // tr(rho X^dag Y) = tr(Y rho X^dag) = sum_ij (Y rho)_ij conj(X_ij)
    const Eigen::MatrixXcd z = y * rho;
    Complex acc = 0.0;
    for (Eigen::Index k = 0; k < x.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(x, k); it; ++it) {
            acc += z(it.row(), it.col()) * std::conj(it.value());
        }
    }
    return acc;
}

Eigen::MatrixXcd apply_mode_loss(const Eigen::MatrixXcd &rho, const FockSpace &space,
                                 std::size_t mode, double p)
{
    if (p == 0.0) {
        return rho;
    }
    const int cutoff = space.cutoff(mode);
    const Eigen::Index s = space.stride(mode);
    const double eta = 1.0 - p;

    // amp(n, k) = sqrt(C(n, k) eta^(n-k) p^k): Kraus amplitude for losing k of n photons
    Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
    for (int n = 0; n <= cutoff; ++n) {
        for (int k = 0; k <= n; ++k) {
            double log_w = log_binomial(n, k);
            if (n - k > 0) {
                log_w += (n - k) * std::log(eta);
            }
            if (k > 0) {
                log_w += k * std::log(p);
            }
            amp(n, k) = std::exp(0.5 * log_w);
        }
    }

    const Eigen::Index dim = space.size();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const int nj = space.occupation(j)[mode];
        for (Eigen::Index i = 0; i < dim; ++i) {
            const int ni = space.occupation(i)[mode];
            Complex acc = 0.0;
            for (int k = 0; ni + k <= cutoff && nj + k <= cutoff; ++k) {
                acc += amp(ni + k, k) * amp(nj + k, k) * rho(i + k * s, j + k * s);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Eigen::MatrixXcd partial_trace_keep(const Eigen::MatrixXcd &rho, const FockSpace &space,
                                    std::size_t keep)
{
    if (space.modes() == 1 && keep == 0) {
        return rho;
    }
    if (space.modes() != 2 || keep > 1) {
        throw Error(ErrorCode::contract_violation, "partial trace needs a two-mode space");
    }
    const int kept_cutoff = space.cutoff(keep);
    const int traced_cutoff = space.cutoff(1 - keep);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(kept_cutoff + 1, kept_cutoff + 1);
    for (int a = 0; a <= kept_cutoff; ++a) {
        for (int b = 0; b <= kept_cutoff; ++b) {
            Complex acc = 0.0;
            for (int t = 0; t <= traced_cutoff; ++t) {
                const Eigen::Index i = keep == 0 ? space.index(a, t) : space.index(t, a);
                const Eigen::Index j = keep == 0 ? space.index(b, t) : space.index(t, b);
                acc += rho(i, j);
            }
            out(a, b) = acc;
        }
    }
    return out;
}

namespace
{

std::vector<Complex> powers(Complex base, int count)
{
    std::vector<Complex> out(static_cast<std::size_t>(count) + 1);
    out[0] = 1.0;
    for (int i = 1; i <= count; ++i) {
        out[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i) - 1] * base;
    }
    return out;
}

} // namespace

Eigen::MatrixXcd rotate_two_mode(const Eigen::MatrixXcd &coeffs, const Eigen::Matrix2cd &u,
                                 int out_cutoff, double *dropped)
{
    const int rows = static_cast<int>(coeffs.rows());
    const int cols = static_cast<int>(coeffs.cols());
    const int total_max = rows + cols - 2;
    const int full = total_max;

    // a^dag_{c_k} = sum_i conj(u(i, k)) a^dag_{g_i}
    const auto x1 = powers(std::conj(u(0, 0)), rows);
    const auto x2 = powers(std::conj(u(1, 0)), rows);
    const auto y1 = powers(std::conj(u(0, 1)), cols);
    const auto y2 = powers(std::conj(u(1, 1)), cols);

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(full + 1, full + 1);
    for (int m = 0; m < rows; ++m) {
        for (int n = 0; n < cols; ++n) {
            const Complex c = coeffs(m, n);
            if (c == Complex(0.0)) {
                continue;
            }
            const double log_norm = -0.5 * (log_factorial(m) + log_factorial(n));
            for (int j = 0; j <= m; ++j) {
                const Complex xa = x1[static_cast<std::size_t>(j)] *
                                   x2[static_cast<std::size_t>(m - j)];
                for (int l = 0; l <= n; ++l) {
                    const int a = j + l;
                    const int b = m + n - a;
                    const double mag =
                        std::exp(log_binomial(m, j) + log_binomial(n, l) + log_norm +
                                 0.5 * (log_factorial(a) + log_factorial(b)));
                    out(a, b) += c * mag * xa * y1[static_cast<std::size_t>(l)] *
                                 y2[static_cast<std::size_t>(n - l)];
                }
            }
        }
    }

    const int keep = std::min(out_cutoff, full);
    Eigen::MatrixXcd kept = Eigen::MatrixXcd::Zero(out_cutoff + 1, out_cutoff + 1);
    kept.topLeftCorner(keep + 1, keep + 1) = out.topLeftCorner(keep + 1, keep + 1);
    if (dropped != nullptr) {
        *dropped = std::max(0.0, out.squaredNorm() - kept.squaredNorm());
    }
    return kept;
}

Eigen::VectorXd photon_numbers(const Eigen::MatrixXcd &rho)
{
    return rho.diagonal().real();
}

} // namespace cpca
