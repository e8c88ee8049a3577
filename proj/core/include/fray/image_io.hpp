#pragma once

#include <string>

#include "fray/renderer.hpp"

namespace fray {

/// Depth values are scaled by this factor when written as 16-bit grayscale
/// PNG, i.e. stored = round(depth * kDepthScale) clamped to [0, 65535].
/// The representable range is therefore [0, 6.5535] scene units.
inline constexpr double kDepthScale = 10000.0;

/// 8-bit RGB PNG; values are clamped to [0, 1] and scaled (no gamma curve).
void save_png(const std::string& path, const ImageBuffer& image);

/// Binary PPM (P6), same naive clamp as the PNG export.
void save_ppm(const std::string& path, const ImageBuffer& image);

/// Depth channel as 16-bit grayscale PNG scaled by kDepthScale.
/// Throws if the image has no depth channel.
void save_depth_png(const std::string& path, const ImageBuffer& image);

/// Reads an 8-bit RGB(A) or grayscale PNG into rgb floats in [0, 1].
ImageBuffer load_png(const std::string& path);

}  // namespace fray
