#pragma once

#include <filesystem>

#include "monostereo/raster.hpp"

namespace monostereo {

enum class PngDepth { k8 = 8, k16 = 16 };

/// Reads an 8/16-bit PNG (gray, gray+alpha, RGB, RGBA; alpha dropped) or a
/// PFM file. PNG samples are divided by 255 or 65535; PFM values are taken as
/// stored.
Image load_image(const std::filesystem::path& path);

/// Writes by extension: ".pfm" is lossless float32, anything else is PNG.
void save_image(const Image& img, const std::filesystem::path& path,
                PngDepth depth = PngDepth::k8);

/// Raw PFM access for arbitrary float maps (disparity, depth). Values are not
/// range-checked. Writes little-endian with a negative scale field.
Raster read_pfm(const std::filesystem::path& path);
void write_pfm(const Raster& raster, const std::filesystem::path& path);

/// Raw PNG samples (not normalized).
Raster read_png_samples(const std::filesystem::path& path, int* bit_depth = nullptr);
void write_png_samples(const Raster& samples, const std::filesystem::path& path, PngDepth depth);

/// KITTI convention: uint16 = round(depth * 256), 0 = invalid.
void save_depth_png16(const DepthMap& depth, const std::filesystem::path& path);
DepthMap load_depth_png16(const std::filesystem::path& path);

/// Normalized inverse-depth false-color rendering for inspection.
void save_depth_visualization(const DepthMap& depth, const std::filesystem::path& path);

}  // namespace monostereo
