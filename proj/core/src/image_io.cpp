#include "monostereo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "monostereo/error.hpp"

namespace monostereo {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

enum class Format { kPng, kPfm, kUnknown };

Format sniff(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got >= 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return Format::kPng;
  if (got >= 2 && sig[0] == 'P' && (sig[1] == 'f' || sig[1] == 'F')) return Format::kPfm;
  return Format::kUnknown;
}

void require_exists(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
}

// libpng reports through longjmp; errors are copied here before jumping.
struct PngErrorSink {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  if (sink) sink->message = msg ? msg : "libpng error";
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

bool is_pfm_path(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pfm";
}

}  // namespace

Raster read_png_samples(const fs::path& path, int* bit_depth_out) {
  require_exists(path);
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kMissingFile, path.string());

  PngErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::kCorruptFile, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::kCorruptFile, "libpng init failed");
  }

  // Locals touched after setjmp must be volatile or set before it.
  volatile bool header_done = false;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(header_done ? ErrorCode::kCorruptFile : ErrorCode::kCorruptHeader,
                path.string() + ": " + sink.message);
  }

  png_init_io(png, file.get());
  png_read_info(png, info);
  int color_type = 0;
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  header_done = true;

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": unexpected channel count");
  }
  Raster out(static_cast<int>(height), static_cast<int>(width), channels);
  auto dst = out.values();
  const std::size_t n = dst.size();
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      dst[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] = buffer[i];
  }
  if (bit_depth_out) *bit_depth_out = bit_depth;
  return out;
}

void write_png_samples(const Raster& samples, const fs::path& path, PngDepth depth) {
  const int c = samples.channels();
  if (c != 1 && c != 3) {
    throw Error(ErrorCode::kInvalidArgument, "PNG output needs 1 or 3 channels");
  }
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kWriteFailed, path.string());

  const int bits = static_cast<int>(depth);
  const double max_code = bits == 16 ? 65535.0 : 255.0;
  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t rowbytes = static_cast<std::size_t>(samples.width()) * c * bytes_per_sample;
  std::vector<unsigned char> buffer(rowbytes * samples.height());
  auto src = samples.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::clamp(std::round(src[i]), 0.0, max_code);
    if (bits == 16) {
      const auto code = static_cast<std::uint16_t>(v);
      buffer[2 * i] = static_cast<unsigned char>(code >> 8);  // PNG is big-endian
      buffer[2 * i + 1] = static_cast<unsigned char>(code & 0xff);
    } else {
      buffer[i] = static_cast<unsigned char>(v);
    }
  }

  PngErrorSink sink;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::kWriteFailed, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::kWriteFailed, "libpng init failed");
  }
  std::vector<png_bytep> rows(samples.height());
  for (int y = 0; y < samples.height(); ++y) rows[y] = buffer.data() + y * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kWriteFailed, path.string() + ": " + sink.message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, samples.width(), samples.height(), bits,
               c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(ErrorCode::kWriteFailed, path.string());
}

Raster read_pfm(const fs::path& path) {
  require_exists(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());

  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic;
  if (magic != "PF" && magic != "Pf") {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": not a PFM file");
  }
  if (!(in >> width >> height >> scale) || width <= 0 || height <= 0 || scale == 0.0) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": bad PFM header");
  }
  in.get();  // single whitespace byte before the payload
  const int channels = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<std::uint32_t> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(in.gcount()) != count * 4) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated PFM payload");
  }
  const bool swap = little != (std::endian::native == std::endian::little);
  Raster out(height, width, channels);
  // PFM stores rows bottom to top.
  for (int y = 0; y < height; ++y) {
    const int dst_y = height - 1 - y;
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        std::uint32_t bits = raw[(static_cast<std::size_t>(y) * width + x) * channels + c];
        if (swap) bits = __builtin_bswap32(bits);
        out.at(dst_y, x, c) = std::bit_cast<float>(bits);
      }
    }
  }
  return out;
}

void write_pfm(const Raster& raster, const fs::path& path) {
  const int c = raster.channels();
  if (c != 1 && c != 3) {
    throw Error(ErrorCode::kInvalidArgument, "PFM holds 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kWriteFailed, path.string());
  out << (c == 3 ? "PF" : "Pf") << '\n' << raster.width() << ' ' << raster.height() << '\n' << "-1.0\n";
  const int h = raster.height();
  const int w = raster.width();
  std::vector<std::uint32_t> raw(raster.size());
  const bool swap = std::endian::native != std::endian::little;
  for (int y = 0; y < h; ++y) {
    const int src_y = h - 1 - y;
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(raster.at(src_y, x, ch)));
        if (swap) bits = __builtin_bswap32(bits);
        raw[(static_cast<std::size_t>(y) * w + x) * c + ch] = bits;
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!out) throw Error(ErrorCode::kWriteFailed, path.string());
}

Image load_image(const fs::path& path) {
  require_exists(path);
  switch (sniff(path)) {
    case Format::kPng: {
      int bits = 8;
      Raster samples = read_png_samples(path, &bits);
      const double scale = bits == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
      for (double& v : samples.values()) v *= scale;
      return Image(std::move(samples));
    }
    case Format::kPfm: {
      Image img(read_pfm(path));
      img.validate();
      return img;
    }
    case Format::kUnknown:
      break;
  }
  throw Error(ErrorCode::kUnsupportedFormat, path.string());
}

void save_image(const Image& img, const fs::path& path, PngDepth depth) {
  if (is_pfm_path(path)) {
    write_pfm(img, path);
    return;
  }
  const double max_code = depth == PngDepth::k16 ? 65535.0 : 255.0;
  Raster samples = img;
  for (double& v : samples.values()) v = std::clamp(v, 0.0, 1.0) * max_code;
  write_png_samples(samples, path, depth);
}

void save_depth_png16(const DepthMap& depth, const fs::path& path) {
  Raster samples = depth;
  for (double& v : samples.values()) v = v > 0.0 ? std::min(std::round(v * 256.0), 65535.0) : 0.0;
  write_png_samples(samples, path, PngDepth::k16);
}

DepthMap load_depth_png16(const fs::path& path) {
  int bits = 0;
  Raster samples = read_png_samples(path, &bits);
  if (bits != 16 || samples.channels() != 1) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": expected 16-bit grayscale depth");
  }
  for (double& v : samples.values()) v /= 256.0;
  return DepthMap(std::move(samples));
}

namespace {

// Piecewise-linear dark-to-bright ramp (black, purple, orange, pale yellow).
std::array<double, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {0.001, 0.000, 0.014},
      {0.317, 0.072, 0.485},
      {0.716, 0.215, 0.475},
      {0.987, 0.535, 0.382},
      {0.987, 0.991, 0.750},
  }};
  t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - i;
  std::array<double, 3> rgb{};
  for (int c = 0; c < 3; ++c) rgb[c] = (1 - f) * kStops[i][c] + f * kStops[i + 1][c];
  return rgb;
}

}  // namespace

void save_depth_visualization(const DepthMap& depth, const fs::path& path) {
  double max_inv = 0.0;
  for (double v : depth.values()) {
    if (v > 0.0) max_inv = std::max(max_inv, 1.0 / v);
  }
  Image vis(depth.height(), depth.width(), 3, 0.0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double v = depth.at(y, x);
      if (v <= 0.0 || max_inv <= 0.0) continue;
      const auto rgb = colormap((1.0 / v) / max_inv);
      for (int c = 0; c < 3; ++c) vis.at(y, x, c) = rgb[c];
    }
  }
  save_image(vis, path);
}

}  // namespace monostereo
