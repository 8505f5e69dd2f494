#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cpca/dual_homodyne.hpp"
#include "cpca/error.hpp"
#include "cpca/mode_analysis.hpp"
#include "cpca/state_models.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cpca;

namespace
{

bool throws_code(const std::function<void()> &fn, ErrorCode code)
{
    try {
        fn();
    } catch (const Error &e) {
        return e.code() == code;
    }
    return false;
}

double rising(int n, int k)
{
    double out = 1.0;
    for (int i = 1; i <= k; ++i) {
        out *= n + i;
    }
    return out;
}

// Exact anti-normal moments E|beta|^{2k} of a diagonal distribution.
Eigen::VectorXd exact_moments(const Eigen::VectorXd &p, int k_max)
{
    Eigen::VectorXd m = Eigen::VectorXd::Zero(k_max + 1);
    for (int k = 0; k <= k_max; ++k) {
        for (Eigen::Index n = 0; n < p.size(); ++n) {
            m[k] += p[n] * rising(static_cast<int>(n), k);
        }
    }
    return m;
}

ComplexVector q_samples(const Eigen::MatrixXcd &rho, int n, std::uint64_t seed)
{
    const FockSpace sp({static_cast<int>(rho.rows()) - 1});
    const QSampler sampler(DensityMatrix(sp, rho));
    Rng rng(seed);
    ComplexVector out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = sampler.draw(rng)[0];
    }
    return out;
}

} // namespace

TEST_CASE("nnls matches an unconstrained solve when the optimum is interior")
{
    Eigen::MatrixXd a(4, 3);
    a << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
    const Eigen::VectorXd x_true = Eigen::Vector3d(0.2, 0.5, 0.3);
    const Eigen::VectorXd x = nnls(a, a * x_true);
    CHECK((x - x_true).norm() < 1e-12);
}

TEST_CASE("nnls clips negative directions")
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd x = nnls(a, Eigen::Vector3d(1.0, -2.0, 0.5));
    CHECK((x - Eigen::Vector3d(1.0, 0.0, 0.5)).norm() < 1e-14);
}

TEST_CASE("nnls satisfies the KKT conditions on random problems")
{
    test::Gen gen(81);
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::MatrixXd a(8, 5);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a.data()[i] = gen.normal();
        }
        Eigen::VectorXd b(8);
        for (Eigen::Index i = 0; i < 8; ++i) {
            b[i] = gen.normal();
        }
        const Eigen::VectorXd x = nnls(a, b);
        const Eigen::VectorXd grad = a.transpose() * (b - a * x);
        for (Eigen::Index j = 0; j < 5; ++j) {
            CHECK(x[j] >= 0.0);
            if (x[j] > 1e-12) {
                CHECK(std::abs(grad[j]) < 1e-9);
            } else {
                CHECK(grad[j] < 1e-9);
            }
        }
    }
}

TEST_CASE("exact moments invert to the photon distribution")
{
    test::Gen gen(82);
    for (int trial = 0; trial < 20; ++trial) {
        const int cutoff = gen.integer(1, kMaxSingleCutoff);
        Eigen::VectorXd p(cutoff + 1);
        for (int n = 0; n <= cutoff; ++n) {
            p[n] = gen.uniform(0.0, 1.0);
        }
        p /= p.sum();
        const PhotonDistribution d = photon_distribution(exact_moments(p, kMaxMomentOrder), cutoff);
        CHECK((d.p - p).cwiseAbs().maxCoeff() < 1e-8);
        CHECK_FALSE(d.ill_conditioned);
        CHECK(d.p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("too small a cutoff is flagged as ill-conditioned")
{
    Eigen::VectorXd p = Eigen::VectorXd::Zero(5);
    p[4] = 1.0;
    const PhotonDistribution d = photon_distribution(exact_moments(p, 4), 1);
    CHECK(d.ill_conditioned);
    CHECK(throws_code([&] { photon_distribution(exact_moments(p, 3), 4); },
                      ErrorCode::contract_violation));
}

TEST_CASE("vacuum samples: moments k! and p = (1, 0, ...)")
{
    ComplexVector s = q_samples(Eigen::MatrixXcd::Identity(1, 1), 50000, 3);
    const AntinormalMoments m = antinormal_moments(s, 4);
    for (int k = 0; k <= 4; ++k) {
        CHECK(std::abs(m.values[k] - std::tgamma(k + 1.0)) < 4 * m.se[k] + 1e-12);
    }
    const PhotonDistribution d = photon_distribution_from_samples(s, 5, 3);
    CHECK(d.p[0] > 0.97);
    CHECK(d.se[0] > 0.0);
    CHECK(throws_code([] { antinormal_moments(ComplexVector::Zero(10), 2); },
                      ErrorCode::contract_violation));
}

TEST_CASE("single-photon samples reconstruct p1 = 1")
{
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(3, 3);
    rho(1, 1) = 1.0;
    const PhotonDistribution d = photon_distribution_from_samples(q_samples(rho, 50000, 9), 5, 3);
    CHECK(std::abs(d.p[1] - 1.0) < 0.05);
}

TEST_CASE("joint distribution of independent modes factorizes")
{
    Eigen::VectorXd p1(3), p2(3);
    p1 << 0.5, 0.3, 0.2;
    p2 << 0.6, 0.4, 0.0;
    const Eigen::VectorXd m1 = exact_moments(p1, 3);
    const Eigen::VectorXd m2 = exact_moments(p2, 3);
    const Eigen::MatrixXd moments = m1 * m2.transpose();
    const JointPhotonDistribution j = joint_photon_distribution_from_moments(moments, 2);
    CHECK((j.p - p1 * p2.transpose()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(j.pearson_r) < 1e-6);
}

TEST_CASE("pearson of |n+1, n> support is one")
{
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
    p(1, 0) = 0.6;
    p(2, 1) = 0.3;
    p(3, 2) = 0.1;
    CHECK(pearson_from_joint(p) == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(2, 2);
    flat(1, 0) = 1.0;
    bool zero = false;
    CHECK(pearson_from_joint(flat, &zero) == 0.0);
    CHECK(zero);
}

TEST_CASE("Wigner function matches the displaced-parity oracle")
{
    test::Gen gen(83);
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::Index n = gen.integer(1, 5);
        Eigen::MatrixXcd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a.col(i) = gen.vector(n);
        }
        Eigen::MatrixXcd rho = a * a.adjoint();
        rho /= rho.trace().real();
        for (int pt = 0; pt < 5; ++pt) {
            const double x = gen.uniform(-2.5, 2.5);
            const double p = gen.uniform(-2.5, 2.5);
            CHECK(wigner_at(rho, x, p) ==
                  doctest::Approx(oracle::wigner_displaced_parity(rho, x, p)).epsilon(1e-9));
        }
    }
}

TEST_CASE("Wigner conventions: vacuum peak, Fock dip, normalization")
{
    Eigen::MatrixXcd vac = Eigen::MatrixXcd::Zero(1, 1);
    vac(0, 0) = 1.0;
    CHECK(wigner_at(vac, 0, 0) == doctest::Approx(1.0 / std::numbers::pi));
    Eigen::MatrixXcd one = Eigen::MatrixXcd::Zero(2, 2);
    one(1, 1) = 1.0;
    CHECK(wigner_at(one, 0, 0) == doctest::Approx(-1.0 / std::numbers::pi));
    const WignerGrid g = wigner_grid(one);
    CHECK(g.integral == doctest::Approx(1.0).epsilon(1e-4));
    CHECK_FALSE(g.window_warning);
    WignerWindow narrow;
    narrow.x_min = narrow.p_min = -1.0;
    narrow.x_max = narrow.p_max = 1.0;
    CHECK(wigner_grid(one, narrow).window_warning);
}

TEST_CASE("Wigner grid is independent of the worker count")
{
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(3, 3);
    rho(0, 0) = 0.5;
    rho(2, 2) = 0.5;
    rho(0, 2) = 0.3;
    rho(2, 0) = 0.3;
    WignerWindow w;
    w.nx = w.np = 31;
    CHECK(wigner_grid(rho, w, 1).w == wigner_grid(rho, w, 3).w);
}
