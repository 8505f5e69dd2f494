// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "cpca/cpca_engine.hpp"
#include "cpca/dual_homodyne.hpp"
#include "cpca/mode_analysis.hpp"
#include "cpca/serialization.hpp"
#include "cpca/state_models.hpp"
#include "cpca/two_photon.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cpca;
namespace fs = std::filesystem;

namespace
{

const TimeGrid kGrid(1.5e-6, 64);
const double kH = 1.0 / std::numbers::sqrt2;

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string &what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void criterion(int id, const std::function<void(Outcome &)> &body)
{
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception &e) {
        out.pass = false;
        out.detail << " [exception: " << e.what() << "]";
    }
    std::printf("criterion %2d: %s (%.2f s)%s\n", id, out.pass ? "PASS" : "FAIL",
                seconds_since(t0), out.detail.str().c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
}

std::vector<std::pair<Tmf, Tmf>> roundtrip_pairs()
{
    test::Gen gen(20240501);
    std::vector<std::pair<Tmf, Tmf>> pairs;
    for (int i = 0; i < 100; ++i) {
        const TimeGrid grid(1.0, static_cast<std::size_t>(gen.integer(3, 16)));
        pairs.push_back(gen.nonorthogonal_pair(grid));
    }
    return pairs;
}

Tmf plus_mode(const TimeBinPair &tb, double sign)
{
    return normalize(Tmf(tb.w1.grid(), tb.w1.amp() + Complex(0.0, sign) * tb.w2.amp()));
}

int run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "cpca");
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

int main()
{
    criterion(1, [](Outcome &o) {
        const auto t0 = std::chrono::steady_clock::now();
        test::Gen gen(1);
        double worst_lambda = 0.0;
        double worst_match = 1.0;
        for (int trial = 0; trial < 5; ++trial) {
            const Tmf f = gen.tmf(kGrid);
            const ModeDecomposition d = eigendecompose(analytic_ct(fock_state(1, f), kGrid));
            worst_lambda = std::max(worst_lambda, std::abs(d.eigenvalues[0] - 2.0));
            for (Eigen::Index k = 1; k < d.eigenvalues.size(); ++k) {
                worst_lambda = std::max(worst_lambda, std::abs(d.eigenvalues[k] - 1.0));
            }
            worst_match = std::min(worst_match, mode_match(d.modes[0], f));
        }
        const double elapsed = seconds_since(t0);
        o.detail << " max|dlambda|=" << worst_lambda << " min match=" << worst_match;
        o.require(worst_lambda <= 1e-9, "eigenvalues");
        o.require(worst_match >= 1 - 1e-9, "mode match");
        o.require(elapsed / 5 < 1.0, "runtime");
    });

    criterion(2, [](Outcome &o) {
        const auto t0 = std::chrono::steady_clock::now();
        const BuiltState b = build_state(preset_config("phi2"), kGrid);
        const FrameSet frames = generate_frames(b.state, kGrid, 20000, 2);
        const ModeDecomposition d = eigendecompose(accumulate_ct(frames));
        const double match = mode_match(d.modes[0], plus_mode(b.bins, 1.0));
        o.detail << " match=" << match << " nbar1=" << d.nbar[0];
        o.require(match >= 0.98, "mode match");
        o.require(std::abs(d.nbar[0] - 1.0) <= 0.05, "nbar1");
        o.require(seconds_since(t0) < 60.0, "runtime");
    });

    criterion(3, [](Outcome &o) {
        test::Gen gen(1);
        double worst_lambda = 0.0;
        double worst_match = 1.0;
        for (int trial = 0; trial < 5; ++trial) {
            const Tmf f = gen.tmf(kGrid);
            const ModalState s = fock_state(1, f);
            const Tmf e0 = eigendecompose(analytic_ct(s, kGrid)).modes[0];
            for (double p : {0.2, 0.5}) {
                const ModeDecomposition d = eigendecompose(analytic_ct(apply_loss(s, p), kGrid));
                worst_lambda = std::max(worst_lambda, std::abs(d.eigenvalues[0] - (2.0 - p)));
                worst_match = std::min(worst_match, mode_match(d.modes[0], e0));
            }
        }
        o.detail << " max|dlambda1|=" << worst_lambda << " min match=" << worst_match;
        o.require(worst_lambda <= 1e-9, "lambda1");
        o.require(worst_match >= 1 - 1e-9, "mode match");
    });

    criterion(4, [](Outcome &o) {
        const TimeBinPair tb = timebin_pair(kGrid);
        const FrameSet frames = generate_frames(fock_state(1, tb.w1), kGrid, 20000, 4);
        const RealPcaDecomposition r = real_pca(frames);
        const ModeDecomposition c = eigendecompose(accumulate_ct(frames));
        const double match = mode_match(r.modes[0], c.modes[0]);
        o.detail << " match=" << match << " variance ratio=" << r.variances[0] / r.variances[1];
        o.require(match >= 0.99, "real vs complex PCA mode match");
    });

    criterion(5, [](Outcome &o) {
        const auto t0 = std::chrono::steady_clock::now();
        double worst = 1.0;
        double worst_diff = 0.0;
        for (const auto &[f1, f2] : roundtrip_pairs()) {
            const ModalState s = two_photon_state(f1, f2).state;
            const TwoPhotonSolution a = decompose_analytic(s);
            const TwoPhotonSolution b = decompose_analytic(apply_loss(s, 0.5));
            const auto [m1, m2] = test::pair_match(a.f1, a.f2, f1, f2);
            const auto [l1, l2] = test::pair_match(b.f1, b.f2, f1, f2);
            worst = std::min({worst, m1, m2, l1, l2});
            worst_diff = std::max({worst_diff, (a.f1.amp() - b.f1.amp()).norm(),
                                   (a.f2.amp() - b.f2.amp()).norm()});
        }
        o.detail << " min match=" << worst << " max lossy/lossless diff=" << worst_diff;
        o.require(worst >= 0.999, "mode match");
        o.require(worst_diff < 1e-6, "lossy result differs");
        o.require(seconds_since(t0) < 30.0, "runtime");
    });

    criterion(6, [](Outcome &o) {
        const BuiltState p5 = build_state(preset_config("phi5"), kGrid);
        const TwoPhotonSolution s5 = decompose_analytic(p5.state);
        const auto [m1, m2] = test::pair_match(s5.f1, s5.f2, plus_mode(p5.bins, 1.0),
                                               plus_mode(p5.bins, -1.0));
        const BuiltState p6 = build_state(preset_config("phi6"), kGrid);
        const TwoPhotonSolution s6 = decompose_analytic(p6.state);
        o.detail << " phi5 branch=" << to_string(s5.coeffs.branch) << " matches=" << m1 << ","
                 << m2 << " phi6 |<f1,f2>|=" << std::abs(s6.overlap);
        o.require(s5.coeffs.branch == Branch::degenerate, "phi5 branch");
        o.require(std::min(m1, m2) >= 0.999, "phi5 modes");
        o.require(std::abs(std::abs(s6.overlap) - 0.707) <= 0.01, "phi6 overlap");
    });

    criterion(7, [](Outcome &o) {
        test::Gen gen(7);
        const TimeGrid grid(1.0, 6);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const GramSchmidt gs = gram_schmidt(gen.tmf(grid), gen.tmf(grid));
            ComplexVector v = gen.vector(3);
            v.normalize();
            const Complex alpha = std::abs(v[0]);
            const TwoPhotonState s = two_photon_from_coefficients(alpha, v[1], v[2], gs.e1, gs.e2, 4);
            for (double p : {0.0, 0.2, 0.5, 0.9}) {
                const FourthMoments m =
                    analytic_fourth_moments(apply_loss(s.state, p), gs.e1, gs.e2);
                const oracle::Moments ref = oracle::two_photon_moments(alpha, v[1], v[2], p, 3);
                const Complex ideal = (1 - p) * (1 - p) * 2.0 * std::conj(alpha) * v[2];
                worst = std::max({worst, std::abs(m.m22 - ref.m22), std::abs(m.m22 - ideal),
                                  std::abs(m.m211 - ref.m211)});
            }
        }
        o.detail << " max deviation=" << worst;
        o.require(worst <= 1e-10, "moment identity");
    });

    criterion(8, [](Outcome &o) {
        double worst = 0.0;
        for (const auto &[f1, f2] : roundtrip_pairs()) {
            const ModalState s = two_photon_state(f1, f2).state;
            const double q0 = decompose_analytic(s).q;
            for (double p : {0.2, 0.5, 0.8}) {
                worst = std::max(worst, std::abs(decompose_analytic(apply_loss(s, p)).q - q0));
            }
        }
        o.detail << " max|Q(p)-Q(0)|=" << worst;
        o.require(worst <= 1e-10, "Q invariance");
    });

    criterion(9, [](Outcome &o) {
        double worst_z = 0.0;
        for (int n = 0; n <= 3; ++n) {
            const FockSpace sp({n + 2});
            ComplexVector ket = ComplexVector::Zero(n + 3);
            ket[n] = 1.0;
            const QSampler sampler(DensityMatrix::from_ket(sp, ket));
            Rng rng(900 + static_cast<std::uint64_t>(n));
            const int draws = 100000;
            double s = 0.0, s2 = 0.0;
            for (int i = 0; i < draws; ++i) {
                const double v = std::norm(sampler.draw(rng)[0]);
                s += v;
                s2 += v * v;
            }
            const double mean = s / draws;
            const double se = std::sqrt((s2 / draws - mean * mean) / draws);
            worst_z = std::max(worst_z, std::abs(mean - (n + 1.0)) / se);
        }
        o.detail << " max |z| Fock=" << worst_z;
        o.require(worst_z <= 3.0, "Fock photon numbers");

        double worst_ratio = 0.0;
        const std::size_t frames = 5000;
        const double scale = std::sqrt(64.0 * 64.0 / static_cast<double>(frames));
        for (const char *name : {"phi1", "phi2", "phi3", "phi4", "phi5", "phi6"}) {
            const BuiltState b = build_state(preset_config(name), kGrid);
            const CorrelationMatrix exact = analytic_ct(b.state, kGrid);
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                const FrameSet f = generate_frames(b.state, kGrid, frames, seed);
                const double r = (accumulate_ct(f).c - exact.c).norm() / scale;
                worst_ratio = std::max(worst_ratio, r);
            }
        }
        o.detail << " max ||C_emp - C||_F / sqrt(M^2/N)=" << worst_ratio;
        o.require(worst_ratio <= 5.0, "correlation convergence");
    });

    criterion(10, [](Outcome &o) {
        const BuiltState b = build_state(preset_config("phi4"), kGrid);
        const FrameSet frames = generate_frames(b.state, kGrid, 50000, 10);
        const ModeDecomposition d = eigendecompose(accumulate_ct(frames));
        const double threshold = 1.05 * vacuum_edge(64, 50000);
        int above = 0;
        for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) {
            above += d.eigenvalues[k] > threshold ? 1 : 0;
        }
        const auto [m1, m2] =
            test::pair_match(d.modes[0], d.modes[1], plus_mode(b.bins, 1.0), plus_mode(b.bins, -1.0));
        const JointPhotonDistribution joint = joint_photon_distribution(
            project(frames, d.modes[0]), project(frames, d.modes[1]), 4);
        o.detail << " above vacuum=" << above << " lambda=" << d.eigenvalues[0] << ","
                 << d.eigenvalues[1] << "," << d.eigenvalues[2] << " matches=" << m1 << "," << m2
                 << " pearson_r=" << joint.pearson_r;
        o.require(above == 2, "two modes above vacuum");
        o.require(std::min(m1, m2) >= 0.95, "eigenmode match");
        o.require(joint.pearson_r > 0.3, "positive photon-number correlation");
    });

    criterion(11, [](Outcome &o) {
        // library level: worker counts
        const BuiltState b = build_state(preset_config("phi5"), kGrid);
        std::string reference;
        for (std::size_t workers : {1u, 2u, 4u}) {
            const FrameSet f = generate_frames(b.state, kGrid, 6000, 99, workers);
            const TwoPhotonSolution s = decompose_frames(f, 0.0, workers);
            const std::string dump = solution_json(s).dump();
            if (reference.empty()) {
                reference = dump;
            }
            o.require(dump == reference, "worker count " + std::to_string(workers));
        }
        // command level: two identical runs
        const fs::path root = fs::temp_directory_path() / "cpca_acceptance";
        fs::remove_all(root);
        const fs::path cwd = fs::current_path();
        for (const char *run : {"a", "b"}) {
            fs::create_directories(root / run);
            fs::current_path(root / run);
            o.require(run_cli({"simulate", "--state", "phi5", "--frames", "6000", "--seed", "5",
                               "--out", "f.bin"}) == 0, "simulate");
            o.require(run_cli({"analyze", "--frames", "f.bin", "--out", "a.json"}) == 0, "analyze");
            o.require(run_cli({"decompose2", "--frames", "f.bin", "--out", "d.json"}) == 0,
                      "decompose2");
            o.require(run_cli({"report", "--decomposition", "a.json", "--out", "rep"}) == 0,
                      "report");
        }
        fs::current_path(cwd);
        int compared = 0;
        for (const auto &entry : fs::recursive_directory_iterator(root / "a")) {
            if (!entry.is_regular_file()) {
                continue;
            }
            const fs::path other = root / "b" / fs::relative(entry.path(), root / "a");
            o.require(fs::exists(other) && slurp(entry.path()) == slurp(other),
                      "identical " + entry.path().filename().string());
            ++compared;
        }
        o.detail << " files compared=" << compared;
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
