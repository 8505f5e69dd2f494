#ifndef CPCA_DUAL_HOMODYNE_HPP
#define CPCA_DUAL_HOMODYNE_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cpca/state_models.hpp"
#include "cpca/temporal_modes.hpp"

namespace cpca
{

using Rng = std::mt19937_64;
using FrameMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DetectorFilter
{
    double highpass_hz = 100e3;
    double lowpass_hz = 14.3e6;
    bool highpass_enabled = true;
    bool lowpass_enabled = true;
};

struct FrameMeta
{
    std::uint64_t seed = 0;
    Provenance provenance;
    bool filtered = false;
    DetectorFilter filter;
    std::string filter_design;
};

// N frames x M bins of heterodyne samples. Vacuum convention: E|beta|^2 = 1.
struct FrameSet
{
    TimeGrid grid;
    FrameMatrix data;
    FrameMeta meta;

    std::size_t frames() const noexcept { return static_cast<std::size_t>(data.rows()); }
};

// Exact draws from the Husimi Q function of a one- or two-mode state by
// rejection from a complex Gaussian proposal. Mixed states are sampled by
// first picking an eigencomponent.
class QSampler
{
public:
    explicit QSampler(const DensityMatrix &rho);

    std::size_t modes() const noexcept { return modes_; }

    // Mode values; unused entries are zero.
    std::array<Complex, 2> draw(Rng &rng) const;

    static constexpr int kMaxRetries = 100000;

private:
    struct Component
    {
        Eigen::MatrixXcd psi; // psi(m, n); a single column for one mode
        double proposal_var;  // s^2 for mode 1 (marginal)
        double envelope;      // K for mode 1 (marginal)
    };

    std::size_t modes_;
    std::vector<double> cumulative_;
    std::vector<Component> components_;
};

// Single draw; builds a sampler each call.
std::array<Complex, 2> sample_q(const DensityMatrix &rho, Rng &rng);

// Per-frame generator: seed and frame index feed a seed_seq.
Rng frame_rng(std::uint64_t seed, std::uint64_t frame);

FrameSet generate_frames(const ModalState &state, const TimeGrid &grid, std::size_t n,
                         std::uint64_t seed, std::size_t workers = 0);

// Throws config when the cutoffs are not 0 < highpass < lowpass < Nyquist.
void validate_filter(const DetectorFilter &filt, const TimeGrid &grid);

// First-order IIR high-pass then low-pass, each started from steady state.
FrameSet apply_detector_filters(const FrameSet &frames, const DetectorFilter &filt);

nlohmann::json frame_meta_json(const FrameMeta &meta);

} // namespace cpca

#endif // CPCA_DUAL_HOMODYNE_HPP
