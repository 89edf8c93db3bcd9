#include "sfcn/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sfcn/image_io.hpp"
#include "sfcn/metrics.hpp"
#include "sfcn/rng.hpp"

namespace sfcn {
namespace {

constexpr double kRoadFracLo = 0.05, kRoadFracHi = 0.8;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Position-hashed value noise for the side/ground texture; independent of
// the additive noise amplitude so noise_amp=0 still leaves the road exact.
double texture_noise(std::uint64_t scene_seed, std::size_t y, std::size_t x) {
  Rng r(mix_seed(scene_seed, (y << 20) ^ x));
  return r.uniform(-0.06, 0.06);
}

struct Occluder {
  bool ellipse;
  double cy, cx, ry, rx;
  std::array<double, 3> color;

  bool contains(double y, double x) const {
    const double dy = (y - cy) / ry, dx = (x - cx) / rx;
    return ellipse ? dy * dy + dx * dx <= 1.0
                   : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
  }
};

Sample draw_scene(const SceneParams& p, std::uint64_t scene_seed, bool allow_occluders) {
  Rng rng(scene_seed);
  const double H = double(p.h), W = double(p.w);

  Sample s;
  static const char* kLabels[3] = {"uu", "um", "umm"};
  s.label = kLabels[rng.below(3)];

  const double horizon = H * rng.uniform(0.30, 0.42);
  const double vp_x = W * (0.5 + rng.uniform(-p.vp_jitter, p.vp_jitter));
  const double base_half = 0.5 * W * rng.uniform(p.base_width_lo, p.base_width_hi);
  // um scenes push the road off-center; umm get the widest bottoms
  double center_off = rng.uniform(-0.08, 0.08);
  if (s.label == "um") center_off += rng.uniform(0.0, 1.0) < 0.5 ? -0.12 : 0.12;
  const double bottom_cx = W * (0.5 + center_off);

  // road mask: filled trapezoid from the bottom edge toward the vanishing point
  s.mask.assign(p.h * p.w, 0);
  auto road_geom = [&](double y, double& cx, double& half) {
    const double t = (y - horizon) / (H - 1.0 - horizon);
    cx = vp_x + (bottom_cx - vp_x) * t;
    half = 0.75 + (base_half - 0.75) * t;
  };
  for (std::size_t y = std::size_t(std::ceil(horizon)); y < p.h; ++y) {
    double cx, half;
    road_geom(double(y), cx, half);
    for (std::size_t x = 0; x < p.w; ++x)
      if (std::abs(double(x) - cx) <= half) s.mask[y * p.w + x] = 1;
  }

  // base image: sky gradient, textured ground sides, exact road color
  s.image = Tensor(Shape{1, 3, p.h, p.w});
  static const double kSkyTop[3] = {0.55, 0.70, 0.92};
  static const double kSkyHor[3] = {0.82, 0.86, 0.95};
  static const double kGround[3] = {0.26, 0.34, 0.18};
  // Per-scene ground albedo blends toward the road color by a random amount,
  // so color contrast is unreliable across scenes; the ground texture and the
  // trapezoid boundary remain the dependable cues.
  const double blend = rng.uniform(0.3, 1.0);
  double ground[3];
  for (std::size_t c = 0; c < 3; ++c)
    ground[c] = clamp01(kGround[c] + blend * (p.road_color[c] - kGround[c]) +
                        rng.uniform(-0.04, 0.04));
  for (std::size_t y = 0; y < p.h; ++y)
    for (std::size_t x = 0; x < p.w; ++x) {
      if (s.mask[y * p.w + x]) {
        for (std::size_t c = 0; c < 3; ++c) s.image.at(0, c, y, x) = p.road_color[c];
      } else if (double(y) < horizon) {
        const double t = horizon > 0 ? double(y) / horizon : 0.0;
        for (std::size_t c = 0; c < 3; ++c)
          s.image.at(0, c, y, x) = kSkyTop[c] + t * (kSkyHor[c] - kSkyTop[c]);
      } else {
        const double tex = texture_noise(scene_seed, y, x);
        for (std::size_t c = 0; c < 3; ++c)
          s.image.at(0, c, y, x) = clamp01(ground[c] + tex);
      }
    }

  // occluders: drawn over the road, carved out of the mask
  const int occ_n =
      allow_occluders
          ? p.occluder_lo + int(rng.below(std::uint64_t(p.occluder_hi - p.occluder_lo + 1)))
          : 0;
  for (int k = 0; k < occ_n; ++k) {
    Occluder o;
    o.ellipse = rng.below(2) == 1;
    const double oy = rng.uniform(horizon + 0.25 * (H - horizon), H - 1.0);
    double cx, half;
    road_geom(oy, cx, half);
    o.cy = oy;
    o.cx = cx + rng.uniform(-half, half);
    o.ry = rng.uniform(0.04, 0.12) * H;
    o.rx = rng.uniform(0.04, 0.12) * W;
    const double shade = rng.uniform(0.1, 0.9);
    o.color = {clamp01(shade + rng.uniform(-0.1, 0.1)),
               clamp01(shade + rng.uniform(-0.1, 0.1)),
               clamp01(shade + rng.uniform(-0.1, 0.1))};
    for (std::size_t y = 0; y < p.h; ++y)
      for (std::size_t x = 0; x < p.w; ++x)
        if (o.contains(double(y), double(x))) {
          for (std::size_t c = 0; c < 3; ++c) s.image.at(0, c, y, x) = o.color[c];
          s.mask[y * p.w + x] = 0;
        }
  }

  // road-colored distractor patches on the upper ground band: image only,
  // never labeled road. Appearance (color and smoothness) matches the road,
  // so absolute position is the one cue that rejects them.
  const int distract_n = 1 + int(rng.below(3));
  for (int k = 0; k < distract_n; ++k) {
    Occluder o;
    o.ellipse = rng.below(2) == 1;
    o.cy = horizon + rng.uniform(0.05, 0.35) * (H - horizon);
    o.cx = rng.below(2) == 0 ? rng.uniform(0.02, 0.25) * W : rng.uniform(0.75, 0.98) * W;
    o.ry = rng.uniform(0.08, 0.20) * H;
    o.rx = rng.uniform(0.10, 0.24) * W;
    for (std::size_t y = std::size_t(std::ceil(horizon)); y < p.h; ++y)
      for (std::size_t x = 0; x < p.w; ++x)
        if (!s.mask[y * p.w + x] && o.contains(double(y), double(x)))
          for (std::size_t c = 0; c < 3; ++c) s.image.at(0, c, y, x) = p.road_color[c];
  }

  // shadow bands darken the image only; the mask is unchanged
  const int shadow_n =
      p.shadow_lo + int(rng.below(std::uint64_t(p.shadow_hi - p.shadow_lo + 1)));
  for (int k = 0; k < shadow_n; ++k) {
    const double ang = rng.uniform(0.0, 3.14159265358979323846);
    const double nx = std::cos(ang), ny = std::sin(ang);
    const double d0 = nx * rng.uniform(0.0, W) + ny * rng.uniform(horizon, H);
    const double bw = rng.uniform(0.05, 0.18) * W;
    for (std::size_t y = std::size_t(std::ceil(horizon)); y < p.h; ++y)
      for (std::size_t x = 0; x < p.w; ++x)
        if (std::abs(nx * double(x) + ny * double(y) - d0) <= bw)
          for (std::size_t c = 0; c < 3; ++c) s.image.at(0, c, y, x) *= 0.6;
  }

  // seeded additive noise
  if (p.noise_amp > 0.0) {
    for (std::size_t i = 0; i < s.image.size(); ++i)
      s.image[i] = clamp01(s.image[i] + rng.uniform(-p.noise_amp, p.noise_amp));
  }
  return s;
}

double road_fraction(const Sample& s) {
  std::size_t road = 0;
  for (int m : s.mask) road += m == 1;
  return double(road) / double(s.mask.size());
}

std::string index_name(const char* prefix, std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu.%s", prefix, i, ext);
  return buf;
}

}  // namespace

void SceneParams::validate() const {
  if (h % 32 != 0 || w % 32 != 0 || h == 0 || w == 0)
    throw std::invalid_argument("scene: extents must be positive multiples of 32");
  if (!(base_width_lo > 0 && base_width_lo <= base_width_hi && base_width_hi <= 1.0))
    throw std::invalid_argument("scene: base width range invalid");
  if (occluder_lo < 0 || occluder_lo > occluder_hi)
    throw std::invalid_argument("scene: occluder count range invalid");
  if (shadow_lo < 0 || shadow_lo > shadow_hi)
    throw std::invalid_argument("scene: shadow count range invalid");
  if (noise_amp < 0 || noise_amp > 0.5)
    throw std::invalid_argument("scene: noise amplitude out of range");
  if (vp_jitter < 0 || vp_jitter > 0.4)
    throw std::invalid_argument("scene: vanishing-point jitter out of range");
}

Sample generate_scene(const SceneParams& p, std::size_t index) {
  p.validate();
  const std::uint64_t base = mix_seed(p.seed, index);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Sample s = draw_scene(p, mix_seed(base, std::uint64_t(attempt)), true);
    const double f = road_fraction(s);
    if (f >= kRoadFracLo && f <= kRoadFracHi) return s;
  }
  // occluder-free fallback: the bare trapezoid always satisfies the bounds
  return draw_scene(p, mix_seed(base, 999), false);
}

std::filesystem::path generate_dataset(const SceneParams& p, std::size_t count,
                                       const std::filesystem::path& out_dir,
                                       std::size_t first) {
  if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path manifest = out_dir / "manifest.tsv";
  std::ofstream mf(manifest);
  if (!mf) throw IoError("cannot write " + manifest.string());
  mf << "# sfcn synthetic dataset: count=" << count << " seed=" << p.seed
     << " first=" << first << " extent=" << p.h << "x" << p.w << "\n";
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = first + k;
    const Sample s = generate_scene(p, i);
    RgbImage img{p.h, p.w, std::vector<std::uint8_t>(p.h * p.w * 3)};
    for (std::size_t y = 0; y < p.h; ++y)
      for (std::size_t x = 0; x < p.w; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          img.pix[(y * p.w + x) * 3 + c] =
              std::uint8_t(std::lround(s.image.at(0, c, y, x) * 255.0));
    GrayImage mask{p.h, p.w, std::vector<std::uint8_t>(p.h * p.w)};
    for (std::size_t i2 = 0; i2 < s.mask.size(); ++i2)
      mask.pix[i2] = s.mask[i2] == 1 ? 255 : (s.mask[i2] == kVoidLabel ? 128 : 0);
    const std::string iname = index_name("img", i, "ppm");
    const std::string mname = index_name("mask", i, "pgm");
    write_ppm(out_dir / iname, img);
    write_pgm(out_dir / mname, mask);
    mf << iname << '\t' << mname << '\t' << s.label << '\n';
  }
  if (!mf) throw IoError("short write to " + manifest.string());
  return manifest;
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const std::filesystem::path dir = manifest.parent_path();
  Dataset d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string img, msk, label, contour;
    if (!std::getline(ss, img, '\t') || !std::getline(ss, msk, '\t') ||
        !std::getline(ss, label, '\t'))
      throw IoError("malformed manifest line: " + line);
    std::getline(ss, contour, '\t');

    const RgbImage ri = read_ppm(dir / img);
    const GrayImage mi = read_pgm(dir / msk);
    if (mi.h != ri.h || mi.w != ri.w)
      throw IoError("manifest pair extent mismatch: " + img + " vs " + msk);
    Sample s;
    s.label = label;
    s.image = Tensor(Shape{1, 3, ri.h, ri.w});
    for (std::size_t y = 0; y < ri.h; ++y)
      for (std::size_t x = 0; x < ri.w; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          s.image.at(0, c, y, x) = ri.pix[(y * ri.w + x) * 3 + c] / 255.0;
    s.mask.resize(mi.pix.size());
    for (std::size_t i = 0; i < mi.pix.size(); ++i) {
      const int v = mi.pix[i];
      if (v == 255)
        s.mask[i] = 1;
      else if (v == 0)
        s.mask[i] = 0;
      else if (v == 128)
        s.mask[i] = kVoidLabel;
      else
        throw IoError("mask " + msk + " has unexpected value " + std::to_string(v));
    }
    d.samples.push_back(std::move(s));
    d.image_paths.push_back((dir / img).string());
    d.mask_paths.push_back((dir / msk).string());
    d.labels.push_back(label);
    d.contour_paths.push_back(contour.empty() ? "" : (dir / contour).string());
  }
  if (d.samples.empty())
    throw IoError("manifest " + manifest.string() + " lists no samples");
  return d;
}

LabelMap mask_to_labels(const std::vector<int>& mask, std::size_t h, std::size_t w) {
  LabelMap lm{1, h, w, {}};
  lm.v.reserve(mask.size());
  for (int m : mask) lm.v.push_back(m == kVoidLabel ? LabelMap::kIgnore : m);
  return lm;
}

}  // namespace sfcn
