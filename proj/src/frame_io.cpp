#include "cpca/frame_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "cpca/error.hpp"

namespace cpca
{

namespace
{

static_assert(std::endian::native == std::endian::little,
              "frame files are little-endian; big-endian hosts are not supported");

template <typename T> void put(std::vector<char> &buf, T value)
{
    const auto *bytes = reinterpret_cast<const char *>(&value);
    buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T> T get(const char *p)
{
    T value;
    std::memcpy(&value, p, sizeof(T));
    return value;
}

} // namespace

void write_frames(const std::filesystem::path &path, const FrameSet &frames)
{
    const std::size_t n = frames.frames();
    const std::size_t m = frames.grid.bins();
    if (n > std::numeric_limits<std::uint32_t>::max() ||
        m > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::io, "frame set too large for the u32 header fields");
    }
    std::vector<char> header;
    header.insert(header.end(), kFrameMagic, kFrameMagic + 8);
    put<std::uint32_t>(header, static_cast<std::uint32_t>(n));
    put<std::uint32_t>(header, static_cast<std::uint32_t>(m));
    put<double>(header, frames.grid.duration());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    }
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    // std::complex<double> is layout-compatible with double[2]; data is row-major
    out.write(reinterpret_cast<const char *>(frames.data.data()),
              static_cast<std::streamsize>(n * m * sizeof(Complex)));
    if (!out) {
        throw Error(ErrorCode::io, "failed writing " + path.string());
    }
}

FrameSet read_frames(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open frame file " + path.string());
    }
    char header[kFrameHeaderBytes];
    in.read(header, kFrameHeaderBytes);
    if (in.gcount() != static_cast<std::streamsize>(kFrameHeaderBytes)) {
        throw Error(ErrorCode::corrupt_data, "frame file shorter than its header");
    }
    if (std::memcmp(header, kFrameMagic, 8) != 0) {
        throw Error(ErrorCode::corrupt_data, "bad magic: not a CPCAFRM1 frame file");
    }
    const auto n = get<std::uint32_t>(header + 8);
    const auto m = get<std::uint32_t>(header + 12);
    const auto t = get<double>(header + 16);
    if (n == 0 || m == 0 || !(t > 0.0) || !std::isfinite(t)) {
        throw Error(ErrorCode::corrupt_data, "frame header has invalid N, M or T");
    }

    const std::uintmax_t expected =
        kFrameHeaderBytes + static_cast<std::uintmax_t>(n) * m * sizeof(Complex);
    std::error_code ec;
    const std::uintmax_t actual = std::filesystem::file_size(path, ec);
    if (ec || actual != expected) {
        std::ostringstream msg;
        msg << "frame file length " << actual << " bytes does not match header (expected "
            << expected << ")";
        throw Error(ErrorCode::corrupt_data, msg.str());
    }

    FrameSet frames{TimeGrid(t, m), FrameMatrix(n, m), FrameMeta{}};
    in.read(reinterpret_cast<char *>(frames.data.data()),
            static_cast<std::streamsize>(static_cast<std::size_t>(n) * m * sizeof(Complex)));
    if (!in) {
        throw Error(ErrorCode::corrupt_data, "truncated frame payload");
    }
    for (Eigen::Index i = 0; i < frames.data.size(); ++i) {
        const Complex z = frames.data.data()[i];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw Error(ErrorCode::corrupt_data, "frame payload contains non-finite values");
        }
    }
    return frames;
}

std::filesystem::path sidecar_path(const std::filesystem::path &frames_path)
{
    return std::filesystem::path(frames_path.string() + ".json");
}

} // namespace cpca
