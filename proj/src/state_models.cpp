#include "cpca/state_models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cpca/error.hpp"

namespace cpca
{

namespace
{

constexpr double kTraceTolerance = 1e-10;
constexpr double kPsdFloor = -1e-9;
constexpr double kCarrierTolerance = 1e-10;

nlohmann::json complex_json(Complex z)
{
    return nlohmann::json::array({z.real(), z.imag()});
}

void require_loss(double p)
{
    if (!(p >= 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << "loss probability must lie in [0, 1), got " << p;
        throw Error(ErrorCode::contract_violation, msg.str());
    }
}

void require_unit(Complex a, Complex b, const char *what)
{
    const double w = std::norm(a) + std::norm(b);
    if (std::abs(w - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << what << " must satisfy |a|^2 + |b|^2 = 1 (got " << w << ")";
        throw Error(ErrorCode::contract_violation, msg.str());
    }
}

void require_orthonormal_pair(const Tmf &w1, const Tmf &w2)
{
    const std::vector<Tmf> pair{w1, w2};
    if (!orthonormal(pair, kNormTolerance)) {
        throw Error(ErrorCode::contract_violation, "carrier functions must be orthonormal");
    }
}

// Amplitudes x_k = <e, c_k>, so that a_e restricted to the carriers is
// sum_k x_k a_{c_k}.
std::vector<Complex> carrier_projection(const ModalState &state, const Tmf &e)
{
    std::vector<Complex> x;
    for (const Tmf &c : state.carriers()) {
        x.push_back(inner_product(e, c));
    }
    return x;
}

SparseOperator mode_operator(const FockSpace &space, const std::vector<Complex> &x)
{
    SparseOperator op(space.size(), space.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] != Complex(0.0)) {
            op += x[k] * space.lowering(k);
        }
    }
    return op;
}

ComplexVector flatten(const Eigen::MatrixXcd &coeffs)
{
    ComplexVector ket(coeffs.size());
    Eigen::Index i = 0;
    for (Eigen::Index m = 0; m < coeffs.rows(); ++m) {
        for (Eigen::Index n = 0; n < coeffs.cols(); ++n) {
            ket[i++] = coeffs(m, n);
        }
    }
    return ket;
}

Eigen::MatrixXcd unflatten(const ComplexVector &ket, int cutoff1, int cutoff2)
{
    Eigen::MatrixXcd coeffs(cutoff1 + 1, cutoff2 + 1);
    Eigen::Index i = 0;
    for (int m = 0; m <= cutoff1; ++m) {
        for (int n = 0; n <= cutoff2; ++n) {
            coeffs(m, n) = ket[i++];
        }
    }
    return coeffs;
}

// Squeezed-vacuum amplitudes c_0..c_kmax before normalization, and the
// weight of the infinite series beyond kmax relative to the whole.
std::vector<double> squeezed_amplitudes(double r, int kmax, double *tail)
{
    const double t = std::tanh(r);
    std::vector<double> c(static_cast<std::size_t>(kmax) + 1, 0.0);
    double kept = 0.0;
    for (int n = 0; 2 * n <= kmax; ++n) {
        double mag = 1.0;
        if (n > 0) {
            const double log_mag = n * std::log(std::abs(t)) + 0.5 * log_factorial(2 * n) -
                                   n * std::log(2.0) - log_factorial(n);
            mag = std::exp(log_mag);
            if (t < 0.0 && n % 2 == 1) {
                mag = -mag;
            }
        }
        c[static_cast<std::size_t>(2 * n)] = mag;
        kept += mag * mag;
    }
    if (tail != nullptr) {
        // full series sums to cosh r
        *tail = std::max(0.0, 1.0 - kept / std::cosh(r));
    }
    return c;
}

ModalState two_photon_modal(const Eigen::Matrix2cd &u, const Tmf &e1, const Tmf &e2, int cutoff,
                            Provenance provenance, TwoPhotonState *out_coeffs)
{
    if (cutoff < 2) {
        throw Error(ErrorCode::contract_violation, "two-photon states need cutoff >= 2");
    }
    // rows of u: f_i = sum_k u(i, k) e_k
    Complex alpha = u(0, 0) * u(1, 0) * std::numbers::sqrt2;
    Complex beta = u(0, 0) * u(1, 1) + u(0, 1) * u(1, 0);
    Complex gamma = u(0, 1) * u(1, 1) * std::numbers::sqrt2;
    const double norm = std::sqrt(std::norm(alpha) + std::norm(beta) + std::norm(gamma));
    alpha /= norm;
    beta /= norm;
    gamma /= norm;

    Complex pivot = std::abs(alpha) > 1e-14 ? alpha : (std::abs(beta) > 1e-14 ? beta : gamma);
    const Complex phase = std::conj(pivot) / std::abs(pivot);
    alpha *= phase;
    beta *= phase;
    gamma *= phase;
    if (std::abs(alpha) <= 1e-14) {
        alpha = 0.0;
    } else {
        alpha = std::abs(alpha);
    }

    Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    coeffs(2, 0) = alpha;
    coeffs(1, 1) = beta;
    coeffs(0, 2) = gamma;
    const FockSpace space({cutoff, cutoff});
    ModalState state({e1, e2}, DensityMatrix::from_ket(space, flatten(coeffs)), 0.0,
                     std::move(provenance));
    if (out_coeffs != nullptr) {
        out_coeffs->alpha = alpha;
        out_coeffs->beta = beta;
        out_coeffs->gamma = gamma;
    }
    return state;
}

} // namespace

DensityMatrix::DensityMatrix(FockSpace space, Eigen::MatrixXcd rho)
    : space_(std::move(space)), rho_(std::move(rho))
{
    if (rho_.rows() != space_.size() || rho_.cols() != space_.size()) {
        throw Error(ErrorCode::contract_violation, "density matrix does not match its Fock space");
    }
    const double tr_err = std::abs(rho_.trace() - Complex(1.0));
    if (tr_err > kTraceTolerance) {
        std::ostringstream msg;
        msg << "density matrix trace deviates from 1 by " << tr_err;
        throw Error(ErrorCode::contract_violation, msg.str());
    }
    const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10) {
        throw Error(ErrorCode::contract_violation, "density matrix is not Hermitian");
    }
    rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
    if (rho_.rows() > 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < kPsdFloor) {
            std::ostringstream msg;
            msg << "density matrix has negative eigenvalue " << es.eigenvalues().minCoeff();
            throw Error(ErrorCode::contract_violation, msg.str());
        }
    }
}

DensityMatrix DensityMatrix::from_ket(const FockSpace &space, const ComplexVector &ket)
{
    return DensityMatrix(space, ket * ket.adjoint());
}

DensityMatrix DensityMatrix::from_state(const FockState1 &s)
{
    return from_ket(FockSpace({s.cutoff}), s.coeffs);
}

DensityMatrix DensityMatrix::from_state(const FockState2 &s)
{
    return from_ket(FockSpace({s.cutoff1, s.cutoff2}), flatten(s.coeffs));
}

ModalState::ModalState(std::vector<Tmf> carriers, DensityMatrix rho, double loss_p,
                       Provenance provenance)
    : carriers_(std::move(carriers)), rho_(std::move(rho)), loss_p_(loss_p),
      provenance_(std::move(provenance))
{
    if (carriers_.size() != rho_.space().modes()) {
        throw Error(ErrorCode::contract_violation,
                    "number of carriers must match the modes of the density matrix");
    }
    if (!orthonormal(carriers_, kCarrierTolerance)) {
        throw Error(ErrorCode::contract_violation, "carriers must be orthonormal");
    }
    require_loss(loss_p_);
}

ModalState vacuum_state()
{
    return ModalState({}, DensityMatrix(FockSpace(std::vector<int>{}), Eigen::MatrixXcd::Ones(1, 1)), 0.0,
                      Provenance{"vacuum", nlohmann::json::object()});
}

ModalState fock_state(int n, const Tmf &carrier, int cutoff)
{
    if (n < 0) {
        throw Error(ErrorCode::contract_violation, "photon number must be non-negative");
    }
    if (cutoff < 0) {
        cutoff = n;
    }
    if (cutoff < n) {
        throw Error(ErrorCode::contract_violation, "cutoff below requested photon number");
    }
    ComplexVector ket = ComplexVector::Zero(cutoff + 1);
    ket[n] = 1.0;
    return ModalState({normalize(carrier)}, DensityMatrix::from_ket(FockSpace({cutoff}), ket), 0.0,
                      Provenance{"fock", {{"n", n}, {"cutoff", cutoff}}});
}

ModalState single_photon_qubit(Complex p1, Complex p2, const Tmf &w1, const Tmf &w2, int cutoff)
{
    require_unit(p1, p2, "qubit amplitudes");
    require_orthonormal_pair(w1, w2);
    const std::vector<Complex> c{p1, p2};
    const std::vector<Tmf> w{w1, w2};
    ModalState s = fock_state(1, superpose(c, w), std::max(cutoff, 1));
    return ModalState(s.carriers(), s.rho(), 0.0,
                      Provenance{"single_photon_qubit",
                                 {{"p1", complex_json(p1)}, {"p2", complex_json(p2)},
                                  {"cutoff", std::max(cutoff, 1)}}});
}

TwoPhotonState two_photon_state(const Tmf &f1, const Tmf &f2, int cutoff)
{
    const GramSchmidt gs = gram_schmidt(f1, f2);
    TwoPhotonState out{vacuum_state(), 0.0, 0.0, 0.0, inner_product(f1, f2)};
    out.state = two_photon_modal(gs.coeffs, gs.e1, gs.e2, cutoff,
                                 Provenance{"two_photon", {{"cutoff", cutoff}}}, &out);
    return out;
}

TwoPhotonState two_photon_state(const Tmf &f1, const Tmf &f2, const Tmf &b1, const Tmf &b2,
                                int cutoff)
{
    require_orthonormal_pair(b1, b2);
    if (!f1.is_normalized(kNormTolerance) || !f2.is_normalized(kNormTolerance)) {
        throw Error(ErrorCode::contract_violation, "f1 and f2 must be normalized");
    }
    if (std::abs(inner_product(f1, f2)) > 1.0 - 1e-9) {
        throw Error(ErrorCode::linear_dependence, "f1 and f2 are linearly dependent");
    }
    Eigen::Matrix2cd u;
    const Tmf *f[2] = {&f1, &f2};
    for (int i = 0; i < 2; ++i) {
        u(i, 0) = inner_product(b1, *f[i]);
        u(i, 1) = inner_product(b2, *f[i]);
        const ComplexVector residual = f[i]->amp() - u(i, 0) * b1.amp() - u(i, 1) * b2.amp();
        if (residual.norm() > 1e-9) {
            throw Error(ErrorCode::contract_violation, "f1 and f2 must lie in span(b1, b2)");
        }
    }
    TwoPhotonState out{vacuum_state(), 0.0, 0.0, 0.0, inner_product(f1, f2)};
    out.state = two_photon_modal(u, b1, b2, cutoff,
                                 Provenance{"two_photon", {{"cutoff", cutoff}}}, &out);
    return out;
}

TwoPhotonState two_photon_from_coefficients(Complex alpha, Complex beta, Complex gamma,
                                            const Tmf &e1, const Tmf &e2, int cutoff)
{
    require_orthonormal_pair(e1, e2);
    const double w = std::norm(alpha) + std::norm(beta) + std::norm(gamma);
    if (std::abs(w - 1.0) > 1e-9) {
        throw Error(ErrorCode::contract_violation, "two-photon amplitudes must be normalized");
    }
    if (cutoff < 2) {
        throw Error(ErrorCode::contract_violation, "two-photon states need cutoff >= 2");
    }
    Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    coeffs(2, 0) = alpha;
    coeffs(1, 1) = beta;
    coeffs(0, 2) = gamma;
    ModalState s({e1, e2}, DensityMatrix::from_ket(FockSpace({cutoff, cutoff}), flatten(coeffs)),
                 0.0,
                 Provenance{"two_photon_coefficients",
                            {{"alpha", complex_json(alpha)},
                             {"beta", complex_json(beta)},
                             {"gamma", complex_json(gamma)},
                             {"cutoff", cutoff}}});
    return TwoPhotonState{std::move(s), alpha, beta, gamma, 0.0};
}

FockState1 squeezed_vacuum(double r, int cutoff)
{
    if (cutoff < 2 || cutoff % 2 != 0) {
        throw Error(ErrorCode::contract_violation, "squeezed vacuum cutoff must be even and >= 2");
    }
    double tail = 0.0;
    const auto amps = squeezed_amplitudes(r, cutoff, &tail);
    FockState1 s;
    s.cutoff = cutoff;
    s.coeffs = ComplexVector::Zero(cutoff + 1);
    for (int n = 0; n <= cutoff; ++n) {
        s.coeffs[n] = amps[static_cast<std::size_t>(n)];
    }
    s.coeffs.normalize();
    s.truncation_error = tail;
    s.truncation_warning = tail > 1e-6;
    return s;
}

ModalState squeezed_state(double r, const Tmf &carrier, int cutoff)
{
    const FockState1 sv = squeezed_vacuum(r, cutoff);
    ModalState s({normalize(carrier)}, DensityMatrix::from_state(sv), 0.0,
                 Provenance{"squeezed_vacuum", {{"r", r}, {"cutoff", cutoff}}});
    s.truncation_error = sv.truncation_error;
    s.truncation_warning = sv.truncation_warning;
    return s;
}

ModalState photon_subtracted_dualrail(Complex s1, Complex s2, double r, const Tmf &w1,
                                      const Tmf &w2, int cutoff)
{
    require_unit(s1, s2, "subtraction amplitudes");
    require_orthonormal_pair(w1, w2);
    if (cutoff < 2) {
        throw Error(ErrorCode::contract_violation, "cutoff must be at least 2");
    }
    // Build on a wider space so the basis change below is nearly exact.
    const int inner = 2 * cutoff;
    double tail = 0.0;
    const auto sv = squeezed_amplitudes(r, inner + 1, &tail);
    double sv_norm = 0.0;
    for (double c : sv) {
        sv_norm += c * c;
    }

    // a_u = conj(s1) a_w1 + conj(s2) a_w2
    Eigen::MatrixXcd sub = Eigen::MatrixXcd::Zero(inner + 1, inner + 1);
    for (int m = 0; m <= inner; ++m) {
        for (int n = 0; n <= inner; ++n) {
            const double c_m1n = sv[static_cast<std::size_t>(m + 1)] * sv[static_cast<std::size_t>(n)];
            const double c_mn1 = sv[static_cast<std::size_t>(m)] * sv[static_cast<std::size_t>(n + 1)];
            sub(m, n) = std::conj(s1) * std::sqrt(m + 1.0) * c_m1n +
                        std::conj(s2) * std::sqrt(n + 1.0) * c_mn1;
        }
    }
    sub /= sv_norm;
    const double weight = sub.norm();
    if (!(weight > 1e-12)) {
        throw Error(ErrorCode::degenerate_input,
                    "photon subtraction from vacuum gives the zero vector (r = 0)");
    }
    sub /= weight;

    Eigen::Matrix2cd u;
    u << s1, s2, -std::conj(s2), std::conj(s1);
    double dropped = 0.0;
    Eigen::MatrixXcd coeffs = rotate_two_mode(sub, u, cutoff, &dropped);

    const std::vector<Complex> g1c{s1, s2};
    const std::vector<Complex> g2c{-std::conj(s2), std::conj(s1)};
    const std::vector<Tmf> w{w1, w2};
    Tmf g1 = superpose(g1c, w);
    Tmf g2 = superpose(g2c, w);

    double n1 = 0.0;
    double n2 = 0.0;
    for (int m = 0; m <= cutoff; ++m) {
        for (int n = 0; n <= cutoff; ++n) {
            n1 += m * std::norm(coeffs(m, n));
            n2 += n * std::norm(coeffs(m, n));
        }
    }
    if (n2 > n1) {
        coeffs.transposeInPlace();
        std::swap(g1, g2);
    }

    // a^dag_{e^{i phi} g} = e^{i phi} a^dag_g, so |m> picks up e^{-i m phi}
    const Tmf h1 = canonicalize_phase(g1);
    const Tmf h2 = canonicalize_phase(g2);
    const Complex ph1 = std::conj(inner_product(g1, h1));
    const Complex ph2 = std::conj(inner_product(g2, h2));
    for (int m = 0; m <= cutoff; ++m) {
        for (int n = 0; n <= cutoff; ++n) {
            coeffs(m, n) *= std::pow(ph1, m) * std::pow(ph2, n);
        }
    }
    coeffs /= coeffs.norm();

    ModalState s({h1, h2},
                 DensityMatrix::from_ket(FockSpace({cutoff, cutoff}), flatten(coeffs)), 0.0,
                 Provenance{"photon_subtracted_dualrail",
                            {{"s1", complex_json(s1)},
                             {"s2", complex_json(s2)},
                             {"r", r},
                             {"cutoff", cutoff}}});
    s.truncation_error = dropped + tail;
    s.truncation_warning = s.truncation_error > 1e-6;
    return s;
}

FockState2 photon_subtracted_epr(double r, int cutoff)
{
    if (cutoff < 2) {
        throw Error(ErrorCode::contract_violation, "cutoff must be at least 2");
    }
    const double t = std::tanh(r);
    FockState2 s;
    s.cutoff1 = cutoff;
    s.cutoff2 = cutoff;
    s.coeffs = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    if (t == 0.0) {
        throw Error(ErrorCode::degenerate_input, "photon subtraction from vacuum (r = 0)");
    }
    double kept = 0.0;
    for (int n = 0; n + 1 <= cutoff; ++n) {
        const double c = std::sqrt(n + 1.0) * std::pow(t, n + 1);
        s.coeffs(n + 1, n) = c;
        kept += c * c;
    }
    const double t2 = t * t;
    const double total = t2 / ((1.0 - t2) * (1.0 - t2));
    s.coeffs /= std::sqrt(kept);
    s.truncation_error = std::max(0.0, 1.0 - kept / total);
    s.truncation_warning = s.truncation_error > 1e-4;
    return s;
}

ModalState photon_subtracted_epr_state(double r, const Tmf &w1, const Tmf &w2, int cutoff)
{
    require_orthonormal_pair(w1, w2);
    const FockState2 epr = photon_subtracted_epr(r, cutoff);
    const double h = 1.0 / std::numbers::sqrt2;
    const std::vector<Tmf> w{w1, w2};
    const std::vector<Complex> plus{h, Complex(0.0, h)};
    const std::vector<Complex> minus{h, Complex(0.0, -h)};
    ModalState s({superpose(plus, w), superpose(minus, w)}, DensityMatrix::from_state(epr), 0.0,
                 Provenance{"photon_subtracted_epr", {{"r", r}, {"cutoff", cutoff}}});
    s.truncation_error = epr.truncation_error;
    s.truncation_warning = epr.truncation_warning;
    return s;
}

ModalState apply_loss(const ModalState &state, double p)
{
    require_loss(p);
    if (p == 0.0) {
        return state;
    }
    const FockSpace &space = state.rho().space();
    Eigen::MatrixXcd rho = state.rho().matrix();
    for (std::size_t k = 0; k < space.modes(); ++k) {
        rho = apply_mode_loss(rho, space, k, p);
    }
    const double total = 1.0 - (1.0 - state.loss_p()) * (1.0 - p);
    ModalState out(state.carriers(), DensityMatrix(space, rho), total, state.provenance());
    out.truncation_error = state.truncation_error;
    out.truncation_warning = state.truncation_warning;
    return out;
}

Eigen::MatrixXcd coherence_matrix(const ModalState &state)
{
    const FockSpace &space = state.rho().space();
    const auto k = static_cast<Eigen::Index>(space.modes());
    Eigen::MatrixXcd g(k, k);
    std::vector<SparseOperator> a;
    for (std::size_t i = 0; i < space.modes(); ++i) {
        a.push_back(space.lowering(i));
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            g(i, j) = trace_product(state.rho().matrix(), a[static_cast<std::size_t>(i)],
                                    a[static_cast<std::size_t>(j)]);
        }
    }
    return 0.5 * (g + g.adjoint());
}

double mean_photon_number(const ModalState &state)
{
    return coherence_matrix(state).trace().real();
}

CorrelationMatrix analytic_ct(const ModalState &state, const TimeGrid &grid)
{
    const auto m = static_cast<Eigen::Index>(grid.bins());
    for (const Tmf &c : state.carriers()) {
        if (!c.grid().compatible(grid)) {
            throw Error(ErrorCode::grid_mismatch, "carrier is not defined on the requested grid");
        }
    }
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Identity(m, m);
    const auto &carriers = state.carriers();
    if (!carriers.empty()) {
        const Eigen::MatrixXcd g = coherence_matrix(state);
        Eigen::MatrixXcd basis(m, static_cast<Eigen::Index>(carriers.size()));
        for (std::size_t k = 0; k < carriers.size(); ++k) {
            basis.col(static_cast<Eigen::Index>(k)) = carriers[k].amp();
        }
        c += basis.conjugate() * g * basis.transpose();
        c = 0.5 * (c + c.adjoint()).eval();
    }
    return CorrelationMatrix{grid, std::move(c), 0};
}

FourthMoments analytic_fourth_moments(const ModalState &state, const Tmf &e1, const Tmf &e2)
{
    if (std::abs(inner_product(e1, e2)) > 1e-6) {
        throw Error(ErrorCode::contract_violation, "e1 and e2 must be orthogonal");
    }
    FourthMoments out;
    if (state.carriers().empty()) {
        return out;
    }
    const FockSpace &space = state.rho().space();
    const SparseOperator a1 = mode_operator(space, carrier_projection(state, e1));
    const SparseOperator a2 = mode_operator(space, carrier_projection(state, e2));
    const SparseOperator a11 = a1 * a1;
    const SparseOperator a22 = a2 * a2;
    const SparseOperator a12 = a1 * a2;
    const Eigen::MatrixXcd &rho = state.rho().matrix();
    out.m22 = trace_product(rho, a11, a22);
    out.m211 = trace_product(rho, a11, a12) + 2.0 * trace_product(rho, a1, a2);
    return out;
}

Eigen::MatrixXcd reduced_density_in_mode(const ModalState &state, const Tmf &g_in)
{
    const Tmf g = normalize(g_in);
    const auto &carriers = state.carriers();
    if (carriers.empty()) {
        return Eigen::MatrixXcd::Ones(1, 1);
    }
    std::vector<Complex> u;
    double eta = 0.0;
    for (const Tmf &c : carriers) {
        u.push_back(inner_product(c, g));
        eta += std::norm(u.back());
    }
    eta = std::min(eta, 1.0);
    if (eta < 1e-15) {
        return Eigen::MatrixXcd::Ones(1, 1);
    }
    const double scale = std::sqrt(eta);

    const FockSpace &space = state.rho().space();
    const Eigen::MatrixXcd &rho = state.rho().matrix();
    Eigen::MatrixXcd single;
    if (carriers.size() == 1) {
        // g_hat = e^{i phi} c1
        const Complex phase = u[0] / std::abs(u[0]);
        single = rho;
        for (Eigen::Index a = 0; a < rho.rows(); ++a) {
            for (Eigen::Index b = 0; b < rho.cols(); ++b) {
                single(a, b) *= std::pow(std::conj(phase), static_cast<double>(a)) *
                                std::pow(phase, static_cast<double>(b));
            }
        }
    } else {
        Eigen::Matrix2cd rot;
        rot(0, 0) = u[0] / scale;
        rot(0, 1) = u[1] / scale;
        rot(1, 0) = -std::conj(rot(0, 1));
        rot(1, 1) = std::conj(rot(0, 0));
        const int c1 = space.cutoff(0);
        const int c2 = space.cutoff(1);
        const int out_cutoff = c1 + c2;
        single = Eigen::MatrixXcd::Zero(out_cutoff + 1, out_cutoff + 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            const double lambda = es.eigenvalues()[k];
            if (lambda < 1e-14) {
                continue;
            }
            const Eigen::MatrixXcd coeffs = rotate_two_mode(
                unflatten(es.eigenvectors().col(k), c1, c2), rot, out_cutoff);
            single += lambda * coeffs * coeffs.adjoint();
        }
        single /= single.trace().real();
    }
    const FockSpace one({static_cast<int>(single.rows()) - 1});
    return apply_mode_loss(single, one, 0, 1.0 - eta);
}

} // namespace cpca
