#ifndef CPCA_FRAME_IO_HPP
#define CPCA_FRAME_IO_HPP

#include <filesystem>

#include "cpca/dual_homodyne.hpp"

namespace cpca
{

// Binary layout: "CPCAFRM1", u32 N, u32 M, f64 T, then N*M (re, im) f64 pairs,
// frame-major, all little-endian.
inline constexpr char kFrameMagic[8] = {'C', 'P', 'C', 'A', 'F', 'R', 'M', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 24;

void write_frames(const std::filesystem::path &path, const FrameSet &frames);

// Metadata is not stored in the binary; `meta` is left default.
FrameSet read_frames(const std::filesystem::path &path);

std::filesystem::path sidecar_path(const std::filesystem::path &frames_path);

} // namespace cpca

#endif // CPCA_FRAME_IO_HPP
