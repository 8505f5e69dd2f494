#ifndef CPCA_FOCK_HPP
#define CPCA_FOCK_HPP

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cpca/temporal_modes.hpp"

namespace cpca
{

using SparseOperator = Eigen::SparseMatrix<Complex>;

// Truncated Fock space over zero, one, or two bosonic modes. Basis states are
// laid out row-major in the occupations: index(m, n) = m * (cutoff2 + 1) + n.
class FockSpace
{
public:
    FockSpace() = default;
    explicit FockSpace(std::vector<int> cutoffs);

    std::size_t modes() const noexcept { return cutoffs_.size(); }
    int cutoff(std::size_t mode) const { return cutoffs_.at(mode); }
    const std::vector<int> &cutoffs() const noexcept { return cutoffs_; }
    Eigen::Index size() const noexcept { return size_; }

    Eigen::Index stride(std::size_t mode) const;
    std::array<int, 2> occupation(Eigen::Index index) const;
    Eigen::Index index(int m, int n = 0) const;

    // Truncated annihilation operator of one mode. Exact on every state of the
    // space: lowering never leaves the truncation.
    SparseOperator lowering(std::size_t mode) const;

    bool operator==(const FockSpace &other) const { return cutoffs_ == other.cutoffs_; }

private:
    std::vector<int> cutoffs_;
    Eigen::Index size_ = 1;
};

double log_factorial(int n);
double log_binomial(int n, int k);

// tr(rho X^dagger Y) for sparse X, Y.
Complex trace_product(const Eigen::MatrixXcd &rho, const SparseOperator &x,
                      const SparseOperator &y);

// Beam-splitter loss with transmittance 1 - p on one mode (Kraus form applied
// element-wise).
Eigen::MatrixXcd apply_mode_loss(const Eigen::MatrixXcd &rho, const FockSpace &space,
                                 std::size_t mode, double p);

// Reduced density matrix of one mode of a two-mode space.
Eigen::MatrixXcd partial_trace_keep(const Eigen::MatrixXcd &rho, const FockSpace &space,
                                    std::size_t keep);

// Passive two-mode basis change of a pure state. `coeffs(m, n)` are the
// amplitudes on |m, n> in carriers (c1, c2); `u` has the new carriers as rows,
// g_i = sum_k u(i, k) c_k. Returns amplitudes in (g1, g2) truncated at
// out_cutoff per mode; `dropped` receives the discarded weight.
Eigen::MatrixXcd rotate_two_mode(const Eigen::MatrixXcd &coeffs, const Eigen::Matrix2cd &u,
                                 int out_cutoff, double *dropped = nullptr);

// Photon-number distribution (diagonal) of a single-mode density matrix.
Eigen::VectorXd photon_numbers(const Eigen::MatrixXcd &rho);

} // namespace cpca

#endif // CPCA_FOCK_HPP
