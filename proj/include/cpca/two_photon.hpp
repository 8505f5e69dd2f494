#ifndef CPCA_TWO_PHOTON_HPP
#define CPCA_TWO_PHOTON_HPP

#include <string_view>

#include <Eigen/Dense>

#include "cpca/cpca_engine.hpp"
#include "cpca/dual_homodyne.hpp"
#include "cpca/observables.hpp"
#include "cpca/state_models.hpp"
#include "cpca/temporal_modes.hpp"

namespace cpca
{

enum class Branch
{
    nondegenerate,
    degenerate,
    exact_11, // |1_e1, 1_e2>: phases unidentifiable, D = I
};

std::string_view to_string(Branch b);

// Monte Carlo moments with delete-one jackknife errors. The flag is raised
// when se_m22 exceeds target_relative_se * |m22|.
FourthMoments estimate_fourth_moments(const FrameSet &frames, const Tmf &e1, const Tmf &e2,
                                      double target_relative_se = 0.1);

// Q = 4 q' / (N1 + N2)^2.
double loss_normalized_q(double q_prime, double n1, double n2);

// Uncertainties that widen the branch and consistency tests. All zero on the
// analytic path.
struct SolveTolerances
{
    double se_n_diff = 0.0;
    double se_q = 0.0;
    double se_m211 = 0.0;
};

struct Coefficients
{
    Complex alpha;
    Complex beta;
    Complex gamma;
    Branch branch = Branch::nondegenerate;
    int sign = 1; // degenerate branch: beta = sign * i sqrt(1 - Q) e^{i Theta / 2}
    double q = 0.0; // Q after clamping
    double theta = 0.0;
};

Coefficients solve_coefficients(double n1, double n2, double q, double theta, Complex m211,
                                const SolveTolerances &tol = {});

// Rows are unit vectors: (f1, f2)^T = D (e1, e2)^T.
Eigen::Matrix2cd build_d(double n1, double n2, const Coefficients &coeffs);

struct RecoveredPair
{
    Tmf f1;
    Tmf f2;
    Complex overlap;
};

RecoveredPair recover_tmfs(const Eigen::Matrix2cd &d, const Tmf &e1, const Tmf &e2);

struct TwoPhotonSolution
{
    double n1 = 0.0;
    double n2 = 0.0;
    double se_n1 = 0.0;
    double se_n2 = 0.0;
    FourthMoments moments;
    double q_prime = 0.0;
    double q = 0.0;
    double theta = 0.0;
    Coefficients coeffs;
    Eigen::Matrix2cd d;
    Tmf e1;
    Tmf e2;
    Tmf f1;
    Tmf f2;
    Complex overlap;
    Eigen::VectorXd eigenvalues; // full spectrum, for diagnostics
    double vacuum_threshold = 0.0;
};

// Eigenvalues above `threshold` count as occupied modes; exactly two are
// required, otherwise mode_count_mismatch lists the spectrum.
TwoPhotonSolution decompose_analytic(const ModalState &state, double threshold = 1.0 + 1e-9);

// Threshold defaults to 1.05 times the Marchenko-Pastur upper edge
// (1 + sqrt(M / N))^2 of a pure-vacuum record.
TwoPhotonSolution decompose_frames(const FrameSet &frames, double threshold = 0.0,
                                   std::size_t workers = 0);

double vacuum_edge(std::size_t bins, std::size_t frames);

} // namespace cpca

#endif // CPCA_TWO_PHOTON_HPP
