#ifndef CPCA_CPCA_ENGINE_HPP
#define CPCA_CPCA_ENGINE_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpca/dual_homodyne.hpp"
#include "cpca/observables.hpp"
#include "cpca/temporal_modes.hpp"

namespace cpca
{

// Frames are summed in fixed chunks and chunk partials are added in chunk
// order, so batch and streaming paths agree bit for bit.
inline constexpr std::size_t kAccumulationChunk = 256;

class CorrelationAccumulator
{
public:
    explicit CorrelationAccumulator(TimeGrid grid);

    void add(const FrameMatrix &rows);
    std::size_t count() const noexcept { return count_; }

    // Requires at least two frames.
    CorrelationMatrix finish();

private:
    void flush();

    TimeGrid grid_;
    FrameMatrix pending_;
    Eigen::Index pending_rows_ = 0;
    Eigen::MatrixXcd sum_;
    std::size_t count_ = 0;
};

CorrelationMatrix accumulate_ct(const FrameSet &frames, std::size_t workers = 0);

struct ModeDecomposition
{
    TimeGrid grid;
    std::vector<Tmf> modes;      // e_k, phase-canonicalized
    Eigen::VectorXd eigenvalues; // descending
    Eigen::VectorXd nbar;        // lambda - 1, not clamped
    double unitarity_residual = 0.0;
    // Half-open index ranges of eigenvalues equal within 1e-6 relative.
    std::vector<std::pair<std::size_t, std::size_t>> degenerate_groups;
    std::size_t frame_count = 0;
};

ModeDecomposition eigendecompose(const CorrelationMatrix &c);

struct RealPcaDecomposition
{
    TimeGrid grid;
    std::vector<Tmf> modes; // real eigenvectors of V
    Eigen::VectorXd variances;
};

// Diagonalizes V_jk = mean(X_j X_k) with X = Re(beta).
RealPcaDecomposition real_pca(const FrameSet &frames, std::size_t workers = 0);

// beta_f = sum_j conj(f_j) beta_j for every frame.
ComplexVector project(const FrameSet &frames, const Tmf &f);

} // namespace cpca

#endif // CPCA_CPCA_ENGINE_HPP
