#include "monostereo/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "monostereo/error.hpp"

namespace monostereo {

std::string to_string(Texture t) {
  switch (t) {
    case Texture::kNoise: return "noise";
    case Texture::kGradient: return "gradient";
    case Texture::kChecker: return "checker";
  }
  return "noise";
}

Texture parse_texture(const std::string& s) {
  if (s == "noise") return Texture::kNoise;
  if (s == "gradient") return Texture::kGradient;
  if (s == "checker") return Texture::kChecker;
  throw Error(ErrorCode::kInvalidArgument, "unknown texture '" + s + "'");
}

void SceneSpec::validate() const {
  if (width < 8 || height < 8) throw Error(ErrorCode::kInfeasibleScene, "scene must be at least 8x8");
  if (object_count < 0) throw Error(ErrorCode::kInfeasibleScene, "negative object count");
  if (disparity_min < 0 || disparity_max < disparity_min) {
    throw Error(ErrorCode::kInfeasibleScene, "disparity range must satisfy 0 <= min <= max");
  }
  if (disparity_max > 0.3 * width) {
    throw Error(ErrorCode::kInfeasibleScene, "disparity_max exceeds 0.3 * width");
  }
  if (object_count > 0 && disparity_max >= width - 2) {
    throw Error(ErrorCode::kInfeasibleScene, "objects cannot fit at this disparity");
  }
  if (!(haze >= 0.0 && haze <= 1.0)) throw Error(ErrorCode::kInfeasibleScene, "haze must be in [0, 1]");
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t key, long ix, long iy) {
  const std::uint64_t h = mix(key ^ mix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                       static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t key, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const long ix = static_cast<long>(fx);
  const long iy = static_cast<long>(fy);
  double tx = x - fx;
  double ty = y - fy;
  tx = tx * tx * (3 - 2 * tx);
  ty = ty * ty * (3 - 2 * ty);
  const double v00 = lattice(key, ix, iy);
  const double v10 = lattice(key, ix + 1, iy);
  const double v01 = lattice(key, ix, iy + 1);
  const double v11 = lattice(key, ix + 1, iy + 1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

struct Layer {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // left-view extent, half-open
  int disparity = 0;
  bool background = false;
  std::uint64_t key = 0;
  double cell = 4.0;      // noise cell / checker period / ramp period, pixels
  double angle = 0.0;     // ramp direction
  std::array<double, 3> base{};
  std::array<double, 3> alt{};
  double contrast = 0.5;
  double transmission = 1.0;  // 1 = no haze

  bool covers(int x, int y) const { return background || (x >= x0 && x < x1 && y >= y0 && y < y1); }
};

constexpr std::array<double, 3> kHazeColor = {0.72, 0.74, 0.78};

double texture_value(const Layer& l, Texture tex, int x, int y, int c) {
  double v = 0.0;
  switch (tex) {
    case Texture::kNoise: {
      // Octaves from 8x the base cell down to half of it, so every pyramid
      // level keeps some texture.
      double n = 0.0, amp_sum = 0.0, amp = 1.0, cell = 8.0 * l.cell;
      for (int o = 0; o < 5; ++o, cell *= 0.5, amp *= 0.5) {
        n += amp * value_noise(l.key + 0x5bd1e995ULL * static_cast<std::uint64_t>(o), x / cell, y / cell);
        amp_sum += amp;
      }
      n /= amp_sum;
      v = l.base[c] + l.contrast * (n - 0.5) * 2.0 * (0.6 + 0.4 * l.alt[c]);
      break;
    }
    case Texture::kGradient: {
      const double t = (x * std::cos(l.angle) + y * std::sin(l.angle)) / (4.0 * l.cell);
      const double tri = 2.0 * std::abs(t - std::floor(t) - 0.5);  // triangle wave in [0, 1]
      v = l.base[c] + l.contrast * (tri - 0.5) * 2.0;
      break;
    }
    case Texture::kChecker: {
      const long cx = static_cast<long>(std::floor(x / l.cell));
      const long cy = static_cast<long>(std::floor(y / l.cell));
      v = ((cx + cy) & 1) ? l.base[c] : l.alt[c];
      break;
    }
  }
  // Airlight: the layer's mean color drifts toward the haze color with
  // distance while its texture contrast is kept.
  v += (1.0 - l.transmission) * (kHazeColor[c] - l.base[c]);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) { return lo + static_cast<int>(unit(rng) * (hi - lo + 1) * (1 - 1e-12)); };

  const int w = spec.width;
  const int h = spec.height;
  const double span = std::max(1, spec.disparity_max - spec.disparity_min);

  auto dress = [&](Layer& l) {
    l.key = mix(spec.seed * 1315423911ULL + rng());
    l.cell = 2.0 + 4.0 * unit(rng);
    l.angle = unit(rng) * 3.141592653589793;
    for (int c = 0; c < 3; ++c) {
      l.base[c] = 0.25 + 0.5 * unit(rng);
      l.alt[c] = unit(rng);
    }
    l.contrast = 0.25 + 0.25 * unit(rng);
    l.transmission = 1.0 - spec.haze * (spec.disparity_max - l.disparity) / span;
  };

  std::vector<Layer> layers;
  Layer bg;
  bg.background = true;
  bg.disparity = spec.disparity_min;
  dress(bg);
  layers.push_back(bg);

  for (int i = 0; i < spec.object_count; ++i) {
    Layer l;
    l.disparity = spec.disparity_max > spec.disparity_min
                      ? uniform_int(spec.disparity_min + 1, spec.disparity_max)
                      : spec.disparity_min;
    const int max_w = std::max(2, std::min(w / 3, w - l.disparity));
    const int min_w = std::min(max_w, std::max(2, w / 8));
    const int ow = uniform_int(min_w, max_w);
    const int oh = uniform_int(std::max(2, h / 6), std::max(2, h / 2));
    if (ow > w - l.disparity) throw Error(ErrorCode::kInfeasibleScene, "object wider than visible span");
    l.x0 = uniform_int(l.disparity, w - ow);
    l.y0 = uniform_int(0, h - oh);
    l.x1 = l.x0 + ow;
    l.y1 = l.y0 + oh;
    dress(l);
    layers.push_back(l);
  }
  // Far to near; later entries are drawn on top.
  std::stable_sort(layers.begin() + 1, layers.end(),
                   [](const Layer& a, const Layer& b) { return a.disparity < b.disparity; });

  auto top_left = [&](int x, int y) {
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (layers[i].covers(x, y)) return i;
    }
    return std::size_t{0};
  };
  auto top_right = [&](int k, int y) {
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (layers[i].covers(k + layers[i].disparity, y)) return i;
    }
    return std::size_t{0};
  };

  Scene scene{Image(h, w, 3), Image(h, w, 3), DisparityMap(h, w), Raster(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t li = top_left(x, y);
      const Layer& l = layers[li];
      for (int c = 0; c < 3; ++c) scene.left.at(y, x, c) = texture_value(l, spec.texture, x, y, c);
      scene.gt_disparity.at(y, x) = l.disparity;
      const int k = x - l.disparity;
      scene.visible.at(y, x) = (k >= 0 && top_right(k, y) == li) ? 1.0 : 0.0;

      const std::size_t ri = top_right(x, y);
      const Layer& r = layers[ri];
      for (int c = 0; c < 3; ++c) scene.right.at(y, x, c) = texture_value(r, spec.texture, x + r.disparity, y, c);
    }
  }
  return scene;
}

std::vector<Scene> gen_scene_set(const SceneSpec& base, int count, int first_index) {
  if (count < 0) throw Error(ErrorCode::kInvalidArgument, "negative scene count");
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SceneSpec spec = base;
    spec.seed = mix(base.seed ^ mix(static_cast<std::uint64_t>(first_index + i)));
    out.push_back(gen_scene(spec));
  }
  return out;
}

}  // namespace monostereo
