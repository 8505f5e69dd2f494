#ifndef CPCA_STATE_MODELS_HPP
#define CPCA_STATE_MODELS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cpca/fock.hpp"
#include "cpca/observables.hpp"
#include "cpca/temporal_modes.hpp"

namespace cpca
{

struct FockState1
{
    int cutoff = 0;
    ComplexVector coeffs; // c_0 .. c_cutoff
    double truncation_error = 0.0;
    bool truncation_warning = false;
};

struct FockState2
{
    int cutoff1 = 0;
    int cutoff2 = 0;
    Eigen::MatrixXcd coeffs; // c(m, n) on |m, n>
    double truncation_error = 0.0;
    bool truncation_warning = false;
};

// Validated density matrix on a truncated Fock space of up to two modes.
class DensityMatrix
{
public:
    DensityMatrix(FockSpace space, Eigen::MatrixXcd rho);

    static DensityMatrix from_ket(const FockSpace &space, const ComplexVector &ket);
    static DensityMatrix from_state(const FockState1 &s);
    static DensityMatrix from_state(const FockState2 &s);

    const FockSpace &space() const noexcept { return space_; }
    const Eigen::MatrixXcd &matrix() const noexcept { return rho_; }

private:
    FockSpace space_;
    Eigen::MatrixXcd rho_;
};

struct Provenance
{
    std::string constructor;
    nlohmann::json params = nlohmann::json::object();
};

// Up to two occupied orthonormal carriers with their joint state. Everything
// orthogonal to the carriers is vacuum.
class ModalState
{
public:
    ModalState(std::vector<Tmf> carriers, DensityMatrix rho, double loss_p, Provenance provenance);

    const std::vector<Tmf> &carriers() const noexcept { return carriers_; }
    const DensityMatrix &rho() const noexcept { return rho_; }
    double loss_p() const noexcept { return loss_p_; }
    const Provenance &provenance() const noexcept { return provenance_; }

    double truncation_error = 0.0;
    bool truncation_warning = false;

private:
    std::vector<Tmf> carriers_;
    DensityMatrix rho_;
    double loss_p_;
    Provenance provenance_;
};

struct TwoPhotonState
{
    ModalState state;
    // Amplitudes on |2,0>, |1,1>, |0,2> of the carriers; alpha real >= 0.
    Complex alpha;
    Complex beta;
    Complex gamma;
    Complex overlap; // <f1, f2>
};

ModalState vacuum_state();
ModalState fock_state(int n, const Tmf &carrier, int cutoff = -1);

ModalState single_photon_qubit(Complex p1, Complex p2, const Tmf &w1, const Tmf &w2,
                               int cutoff = 6);

// a^dag_f1 a^dag_f2 |0> over the Gram-Schmidt basis of (f1, f2).
TwoPhotonState two_photon_state(const Tmf &f1, const Tmf &f2, int cutoff = 6);
// Same state expressed over a given orthonormal basis (b1, b2) spanning f1, f2.
TwoPhotonState two_photon_state(const Tmf &f1, const Tmf &f2, const Tmf &b1, const Tmf &b2,
                                int cutoff = 6);
TwoPhotonState two_photon_from_coefficients(Complex alpha, Complex beta, Complex gamma,
                                            const Tmf &e1, const Tmf &e2, int cutoff = 6);

FockState1 squeezed_vacuum(double r, int cutoff = 20);
ModalState squeezed_state(double r, const Tmf &carrier, int cutoff = 20);

// Squeezed vacua of equal r in w1 and w2, one photon removed from
// u = s1 w1 + s2 w2. Carriers are the subtraction basis (u, u_perp), ordered
// by mean photon number.
ModalState photon_subtracted_dualrail(Complex s1, Complex s2, double r, const Tmf &w1,
                                      const Tmf &w2, int cutoff = 20);

// c(n+1, n) proportional to sqrt(n+1) tanh(r)^(n+1).
FockState2 photon_subtracted_epr(double r, int cutoff = 20);
// The same state on carriers ((w1 + i w2)/sqrt2, (w1 - i w2)/sqrt2).
ModalState photon_subtracted_epr_state(double r, const Tmf &w1, const Tmf &w2, int cutoff = 20);

// Uniform beam-splitter loss on every carrier. Losses compose.
ModalState apply_loss(const ModalState &state, double p);

// G_jk = <a^dag_{c_j} a_{c_k}> over the carriers.
Eigen::MatrixXcd coherence_matrix(const ModalState &state);

CorrelationMatrix analytic_ct(const ModalState &state, const TimeGrid &grid);

// Moments of the heterodyne variables of e1, e2 (see FourthMoments).
FourthMoments analytic_fourth_moments(const ModalState &state, const Tmf &e1, const Tmf &e2);

// Single-mode reduced state of the field in mode g (normalized).
Eigen::MatrixXcd reduced_density_in_mode(const ModalState &state, const Tmf &g);

// Total mean photon number.
double mean_photon_number(const ModalState &state);

} // namespace cpca

#endif // CPCA_STATE_MODELS_HPP
