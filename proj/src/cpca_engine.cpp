#include "cpca/cpca_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cpca/error.hpp"
#include "cpca/parallel.hpp"

namespace cpca
{

namespace
{

void require_frames(const FrameSet &frames)
{
    if (frames.frames() < 2) {
        throw Error(ErrorCode::contract_violation, "at least two frames are required");
    }
    if (static_cast<std::size_t>(frames.data.cols()) != frames.grid.bins()) {
        throw Error(ErrorCode::grid_mismatch, "frame width does not match the grid");
    }
}

std::size_t chunk_count(std::size_t n)
{
    return (n + kAccumulationChunk - 1) / kAccumulationChunk;
}

// Per-chunk partial sums of op(chunk), computed in parallel, combined in order.
template <typename Op>
auto chunked_sum(const FrameSet &frames, std::size_t workers, Op op)
{
    const std::size_t n = frames.frames();
    const std::size_t chunks = chunk_count(n);
    using Result = decltype(op(frames.data.topRows(1)));
    std::vector<Result> partial(chunks);
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t begin = c * kAccumulationChunk;
        const std::size_t rows = std::min(kAccumulationChunk, n - begin);
        partial[c] = op(frames.data.middleRows(static_cast<Eigen::Index>(begin),
                                               static_cast<Eigen::Index>(rows)));
    });
    Result total = partial[0];
    for (std::size_t c = 1; c < chunks; ++c) {
        total += partial[c];
    }
    return total;
}

} // namespace

CorrelationAccumulator::CorrelationAccumulator(TimeGrid grid)
    : grid_(grid), pending_(static_cast<Eigen::Index>(kAccumulationChunk),
                            static_cast<Eigen::Index>(grid.bins())),
      sum_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(grid.bins()),
                                  static_cast<Eigen::Index>(grid.bins())))
{
}

void CorrelationAccumulator::add(const FrameMatrix &rows)
{
    if (static_cast<std::size_t>(rows.cols()) != grid_.bins()) {
        throw Error(ErrorCode::grid_mismatch, "frame width does not match the accumulator grid");
    }
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        pending_.row(pending_rows_++) = rows.row(i);
        ++count_;
        if (pending_rows_ == pending_.rows()) {
            flush();
        }
    }
}

void CorrelationAccumulator::flush()
{
    if (pending_rows_ == 0) {
        return;
    }
    const auto chunk = pending_.topRows(pending_rows_);
    const Eigen::MatrixXcd partial = chunk.adjoint() * chunk;
    if (count_ <= static_cast<std::size_t>(pending_rows_)) {
        sum_ = partial;
    } else {
        sum_ += partial;
    }
    pending_rows_ = 0;
}

CorrelationMatrix CorrelationAccumulator::finish()
{
    flush();
    if (count_ < 2) {
        throw Error(ErrorCode::contract_violation, "at least two frames are required");
    }
    Eigen::MatrixXcd c = sum_ / static_cast<double>(count_);
    c = 0.5 * (c + c.adjoint()).eval();
    return CorrelationMatrix{grid_, std::move(c), count_};
}

CorrelationMatrix accumulate_ct(const FrameSet &frames, std::size_t workers)
{
    require_frames(frames);
    Eigen::MatrixXcd sum = chunked_sum(frames, workers, [](const auto &chunk) {
        return Eigen::MatrixXcd(chunk.adjoint() * chunk);
    });
    Eigen::MatrixXcd c = sum / static_cast<double>(frames.frames());
    c = 0.5 * (c + c.adjoint()).eval();
    return CorrelationMatrix{frames.grid, std::move(c), frames.frames()};
}

ModeDecomposition eigendecompose(const CorrelationMatrix &c)
{
    const Eigen::MatrixXcd &m = c.c;
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != c.grid.bins()) {
        throw Error(ErrorCode::grid_mismatch, "correlation matrix does not match its grid");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * scale) {
        std::ostringstream msg;
        msg << "correlation matrix is not Hermitian (max |C - C^H| = " << asym << ")";
        throw Error(ErrorCode::contract_violation, msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::numerical_failure, "Hermitian eigensolver did not converge");
    }

    const Eigen::Index dim = m.rows();
    ModeDecomposition out{c.grid, {}, Eigen::VectorXd(dim), Eigen::VectorXd(dim), 0.0, {},
                          c.frame_count};
    Eigen::MatrixXcd rows(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::Index src = dim - 1 - k;
        out.eigenvalues[k] = es.eigenvalues()[src];
        out.nbar[k] = out.eigenvalues[k] - 1.0;
        // C conj(e) = lambda conj(e): the mode is the conjugated eigenvector
        Tmf mode = canonicalize_phase(Tmf(c.grid, es.eigenvectors().col(src).conjugate()));
        rows.row(k) = mode.amp().transpose();
        out.modes.push_back(std::move(mode));
    }
    out.unitarity_residual =
        (rows * rows.adjoint() - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();

    std::size_t start = 0;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(dim); ++k) {
        const bool split =
            k == static_cast<std::size_t>(dim) ||
            std::abs(out.eigenvalues[static_cast<Eigen::Index>(k - 1)] -
                     out.eigenvalues[static_cast<Eigen::Index>(k)]) >
                1e-6 * std::max(1.0, std::abs(out.eigenvalues[static_cast<Eigen::Index>(k - 1)]));
        if (split) {
            if (k - start > 1) {
                out.degenerate_groups.emplace_back(start, k);
            }
            start = k;
        }
    }
    return out;
}

RealPcaDecomposition real_pca(const FrameSet &frames, std::size_t workers)
{
    require_frames(frames);
    Eigen::MatrixXd sum = chunked_sum(frames, workers, [](const auto &chunk) {
        const Eigen::MatrixXd x = chunk.real();
        return Eigen::MatrixXd(x.transpose() * x);
    });
    Eigen::MatrixXd v = sum / static_cast<double>(frames.frames());
    v = 0.5 * (v + v.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::numerical_failure, "symmetric eigensolver did not converge");
    }
    const Eigen::Index dim = v.rows();
    RealPcaDecomposition out{frames.grid, {}, Eigen::VectorXd(dim)};
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::Index src = dim - 1 - k;
        out.variances[k] = es.eigenvalues()[src];
        const ComplexVector amp = es.eigenvectors().col(src).cast<Complex>();
        out.modes.push_back(canonicalize_phase(Tmf(frames.grid, amp)));
    }
    return out;
}

ComplexVector project(const FrameSet &frames, const Tmf &f)
{
    if (!f.grid().compatible(frames.grid)) {
        throw Error(ErrorCode::grid_mismatch, "projection TMF is not on the frame grid");
    }
    return frames.data * f.amp().conjugate();
}

} // namespace cpca
