#pragma once

#include <filesystem>

#include "motinv/grid.hpp"
#include "motinv/video.hpp"

namespace motinv {

VelocityField constant_flow(const Vec2& v, std::size_t frames, std::size_t height, std::size_t width);

// Horn-Schunck estimate for each consecutive frame pair (Jacobi iterations,
// 4-neighbour average, wrap-around boundary). Multichannel clips are reduced
// to luminance by channel mean. The last frame reuses the flow of the
// penultimate pair so the result has one vector per clip sample.
VelocityField horn_schunck(const VideoClip& clip, double alpha, std::size_t iters);

// Throws DimensionMismatch unless `flow` covers the same (T, H, W) as `shape`.
void check_flow_matches(const VelocityField& flow, const Shape& shape);

// Flat binary: ASCII line "FLOW v1 T H W\n", then little-endian IEEE-754
// doubles in (t, row, col, component) order.
void write_flow(const std::filesystem::path& path, const VelocityField& flow);
VelocityField read_flow(const std::filesystem::path& path);

}  // namespace motinv
