#ifndef CPCA_OBSERVABLES_HPP
#define CPCA_OBSERVABLES_HPP

#include <cstddef>

#include <Eigen/Dense>

#include "cpca/temporal_modes.hpp"

namespace cpca
{

// C_jk = <beta_j^dag beta_k> on the time-bin basis. frame_count is zero for
// analytically assembled matrices.
struct CorrelationMatrix
{
    TimeGrid grid;
    Eigen::MatrixXcd c;
    std::size_t frame_count = 0;
};

// Fourth-order dual-homodyne moments on an orthonormal mode pair:
//   m22  = <beta_e1^dag^2 beta_e2^2>
//   m211 = <beta_e1^dag^2 beta_e1 beta_e2>
// Standard errors are zero on the analytic path.
struct FourthMoments
{
    Complex m22{0.0};
    Complex m211{0.0};
    double se_m22 = 0.0;
    double se_m211 = 0.0;
    std::size_t frame_count = 0;
    bool insufficient_frames = false;
};

} // namespace cpca

#endif // CPCA_OBSERVABLES_HPP
