#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cpca/cpca_engine.hpp"
#include "cpca/dual_homodyne.hpp"
#include "cpca/state_models.hpp"
#include "support.hpp"

using namespace cpca;

namespace
{

const TimeGrid kGrid(1.5e-6, 64);

ModalState phi2_like(const TimeBinPair &tb)
{
    const double h = 1.0 / std::numbers::sqrt2;
    return single_photon_qubit(h, Complex(0, h), tb.w1, tb.w2);
}

} // namespace

TEST_CASE("streaming and batch accumulation agree bit for bit")
{
    const TimeBinPair tb = timebin_pair(kGrid);
    const FrameSet f = generate_frames(phi2_like(tb), kGrid, 1000, 4);
    const CorrelationMatrix batch = accumulate_ct(f, 1);
    const CorrelationMatrix threaded = accumulate_ct(f, 3);

    // uneven pieces straddling the chunk size
    CorrelationAccumulator acc(kGrid);
    Eigen::Index start = 0;
    for (Eigen::Index len : {1, 300, 17, 256, 426}) {
        acc.add(f.data.middleRows(start, len));
        start += len;
    }
    REQUIRE(start == 1000);
    CHECK(acc.count() == 1000);
    const CorrelationMatrix streamed = acc.finish();
    CHECK(batch.c == streamed.c);
    CHECK(batch.c == threaded.c);
    CHECK(batch.frame_count == 1000);
}

TEST_CASE("empirical correlation is Hermitian")
{
    const FrameSet f = generate_frames(vacuum_state(), kGrid, 500, 4);
    const CorrelationMatrix c = accumulate_ct(f);
    CHECK((c.c - c.c.adjoint()).norm() == 0.0);
}

TEST_CASE("analytic single photon: spectrum {2, 1, ..., 1} and e1 = f")
{
    test::Gen gen(61);
    for (int trial = 0; trial < 10; ++trial) {
        const Tmf f = gen.tmf(kGrid);
        const ModeDecomposition d = eigendecompose(analytic_ct(fock_state(1, f), kGrid));
        CHECK(d.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK((d.eigenvalues.tail(63).array() - 1.0).abs().maxCoeff() < 1e-9);
        CHECK(mode_match(d.modes[0], f) >= 1 - 1e-9);
        CHECK(d.unitarity_residual < 1e-10);
        // the unit eigenvalues form one degenerate block
        REQUIRE(d.degenerate_groups.size() == 1);
        CHECK(d.degenerate_groups[0].first == 1);
        CHECK(d.degenerate_groups[0].second == 64);
    }
}

TEST_CASE("eigendecomposition reconstructs the matrix")
{
    test::Gen gen(62);
    const TimeGrid grid(1.0, 12);
    for (int trial = 0; trial < 10; ++trial) {
        const auto [f1, f2] = gen.nonorthogonal_pair(grid);
        const CorrelationMatrix c = analytic_ct(two_photon_state(f1, f2).state, grid);
        const ModeDecomposition d = eigendecompose(c);
        Eigen::MatrixXcd v(12, 12);
        for (int k = 0; k < 12; ++k) {
            // eigenmode e_k = conj(eigenvector)
            v.col(k) = d.modes[static_cast<std::size_t>(k)].amp().conjugate();
        }
        const Eigen::MatrixXcd rebuilt = v * d.eigenvalues.cast<Complex>().asDiagonal() * v.adjoint();
        CHECK((rebuilt - c.c).norm() < 1e-10);
        for (Eigen::Index k = 1; k < d.eigenvalues.size(); ++k) {
            CHECK(d.eigenvalues[k] <= d.eigenvalues[k - 1]);
        }
        CHECK(d.eigenvalues.sum() == doctest::Approx(14.0).epsilon(1e-12));
    }
}

TEST_CASE("eigenmodes follow the carrier phase convention")
{
    // with a complex carrier the top mode matches it, not its conjugate
    const TimeBinPair tb = timebin_pair(kGrid);
    const ModalState s = phi2_like(tb);
    const ModeDecomposition d = eigendecompose(analytic_ct(s, kGrid));
    const Tmf plus = normalize(Tmf(kGrid, tb.w1.amp() + Complex(0, 1) * tb.w2.amp()));
    const Tmf minus = normalize(Tmf(kGrid, tb.w1.amp() - Complex(0, 1) * tb.w2.amp()));
    CHECK(mode_match(d.modes[0], plus) >= 1 - 1e-9);
    CHECK(mode_match(d.modes[0], minus) < 1e-9);
}

TEST_CASE("projection onto the top mode recovers the photon number")
{
    const TimeBinPair tb = timebin_pair(kGrid);
    const ModalState s = phi2_like(tb);
    const FrameSet f = generate_frames(s, kGrid, 20000, 12);
    const ComplexVector b = project(f, s.carriers()[0]);
    const Eigen::VectorXd n = b.cwiseAbs2();
    const double mean = n.mean();
    const double se = std::sqrt((n.array() - mean).square().mean() / 20000.0);
    CHECK(std::abs(mean - 2.0) < 3.5 * se);
}

TEST_CASE("real PCA of a real single photon finds the same mode")
{
    test::Gen gen(63);
    const Tmf f = gen.real_tmf(kGrid);
    const FrameSet frames = generate_frames(fock_state(1, f), kGrid, 20000, 6);
    const RealPcaDecomposition r = real_pca(frames);
    CHECK(mode_match(r.modes[0], f) >= 0.97);
    // single homodyne sees 1.5 vs 0.5; the split detector adds half a vacuum unit to each
    CHECK(r.variances[0] / r.variances[10] == doctest::Approx(2.0).epsilon(0.1));
}
