#ifndef CPCA_MODE_ANALYSIS_HPP
#define CPCA_MODE_ANALYSIS_HPP

#include <string>

#include <Eigen/Dense>

#include "cpca/temporal_modes.hpp"

namespace cpca
{

inline constexpr int kMaxMomentOrder = 6;
inline constexpr int kMaxSingleCutoff = 5;
inline constexpr int kMaxJointCutoff = 4;

// A_k = mean(|beta|^{2k}), k = 0..K, estimating <a^k a^dag^k>.
struct AntinormalMoments
{
    Eigen::VectorXd values;
    Eigen::VectorXd se; // delete-one jackknife
    std::size_t samples = 0;
};

AntinormalMoments antinormal_moments(const ComplexVector &samples, int k_max);

struct PhotonDistribution
{
    Eigen::VectorXd p;
    Eigen::VectorXd se;
    int cutoff = 0;
    double residual = 0.0;
    bool ill_conditioned = false;
};

// Non-negative least squares fit of A_k = sum_n p_n (n+k)!/n! with sum p = 1.
// Rows are weighted by 1/se when se is given (non-empty), otherwise by the
// inverse row maximum.
PhotonDistribution photon_distribution(const Eigen::VectorXd &moments, int cutoff,
                                       const Eigen::VectorXd &se = {});

// Fit from raw samples; standard errors from a block jackknife over `blocks`
// contiguous blocks of samples.
PhotonDistribution photon_distribution_from_samples(const ComplexVector &samples, int k_max,
                                                    int cutoff, int blocks = 20);

struct JointPhotonDistribution
{
    Eigen::MatrixXd p; // p(m, n)
    Eigen::MatrixXd se;
    int cutoff = 0;
    double residual = 0.0;
    bool ill_conditioned = false;
    double pearson_r = 0.0;
    bool zero_variance = false;
};

// Joint moments A(j, k) = E[|b1|^{2j} |b2|^{2k}], fitted with
// (m+j)!/m! (n+k)!/n!.
JointPhotonDistribution joint_photon_distribution_from_moments(const Eigen::MatrixXd &moments,
                                                               int cutoff,
                                                               const Eigen::MatrixXd &se = {});

JointPhotonDistribution joint_photon_distribution(const ComplexVector &s1, const ComplexVector &s2,
                                                  int cutoff, int blocks = 20);

// Pearson correlation of the photon numbers under p(m, n). Sets zero_variance
// and returns 0 when either marginal is deterministic.
double pearson_from_joint(const Eigen::MatrixXd &p, bool *zero_variance = nullptr);

// Lawson-Hanson: min ||A x - b|| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd &a, const Eigen::VectorXd &b, int max_iter = 0);

struct WignerWindow
{
    double x_min = -5.0;
    double x_max = 5.0;
    double p_min = -5.0;
    double p_max = 5.0;
    int nx = 101;
    int np = 101;
};

inline constexpr const char *kWignerConvention =
    "alpha = (x + i p)/sqrt(2); integral of W dx dp = 1; vacuum W(0,0) = 1/pi";

struct WignerGrid
{
    Eigen::VectorXd x;
    Eigen::VectorXd p;
    Eigen::MatrixXd w; // w(ix, ip)
    double integral = 0.0;
    bool window_warning = false;
    std::string convention = kWignerConvention;
};

// Single-mode density matrix in the Fock basis, cutoff <= 30.
double wigner_at(const Eigen::MatrixXcd &rho, double x, double p);
WignerGrid wigner_grid(const Eigen::MatrixXcd &rho, const WignerWindow &window = {},
                       std::size_t workers = 0);

} // namespace cpca

#endif // CPCA_MODE_ANALYSIS_HPP
