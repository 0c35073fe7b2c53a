#include "bubbleseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bubbleseg/config.hpp"
#include "bubbleseg/io.hpp"
#include "bubbleseg/json_util.hpp"
#include "bubbleseg/raster.hpp"

namespace bubbleseg::synth {

namespace fs = std::filesystem;
using json = nlohmann::json;

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, "synth config: " + m); };
  if (width < 8 || height < 8) fail("image must be at least 8x8");
  if (n_bubbles_min < 0 || n_bubbles_max < n_bubbles_min) fail("require 0 <= n_bubbles_min <= n_bubbles_max");
  if (touching_pairs < 0) fail("touching_pairs must be >= 0");
  if (!(radius_sigma >= 0.0)) fail("radius_sigma must be >= 0");
  if (!(small_fraction >= 0.0 && small_fraction <= 1.0)) fail("small_fraction must be in [0,1]");
  if (!(grey_fraction >= 0.0 && grey_fraction <= 1.0)) fail("grey_fraction must be in [0,1]");
  if (!(small_radius_min > 0.0 && small_radius_max >= small_radius_min)) fail("invalid small radius range");
  if (!(max_eccentricity >= 0.0 && max_eccentricity < 1.0)) fail("max_eccentricity must be in [0,1)");
  for (double v : {background_level, bubble_level, grey_level})
    if (!(v >= 0.0 && v <= 1.0)) fail("intensity levels must be in [0,1]");
  if (rim_darkening < 0.0 || rim_width < 0.0 || level_jitter < 0.0 || noise_sigma < 0.0 || texture_amplitude < 0.0 ||
      psf_sigma < 0.0)
    fail("amplitudes and widths must be non-negative");
  if (min_gap < 0 || margin < 0 || small_max_area <= 0) fail("invalid gap, margin or small_max_area");
}

BinaryMask rasterize(const BubbleShape& s, int width, int height) {
  BinaryMask m(width, height);
  const double c = std::cos(s.angle), sn = std::sin(s.angle);
  const int r = static_cast<int>(std::ceil(s.semi_major)) + 1;
  const int x0 = std::max(0, static_cast<int>(std::floor(s.cx)) - r), x1 = std::min(width - 1, static_cast<int>(std::ceil(s.cx)) + r);
  const int y0 = std::max(0, static_cast<int>(std::floor(s.cy)) - r), y1 = std::min(height - 1, static_cast<int>(std::ceil(s.cy)) + r);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - s.cx, dy = y - s.cy;
      const double u = (dx * c + dy * sn) / s.semi_major;
      const double v = (-dx * sn + dy * c) / s.semi_minor;
      if (u * u + v * v <= 1.0) m(x, y) = 1;
    }
  return m;
}

double sample_main_radius(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::lognormal_distribution<double> d(cfg.radius_mu, cfg.radius_sigma);
  return d(rng);
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

class Placer {
 public:
  explicit Placer(const SynthConfig& cfg) : cfg_(cfg), forbidden_(cfg.width, cfg.height) {}

  // Pixels of a candidate, or empty when it leaves the margin or enters the
  // clearance zone of an already placed bubble.
  std::vector<std::uint32_t> fit(const BubbleShape& s) const {
    const BinaryMask m = rasterize(s, cfg_.width, cfg_.height);
    std::vector<std::uint32_t> px;
    for (int y = 0; y < cfg_.height; ++y)
      for (int x = 0; x < cfg_.width; ++x) {
        if (!m(x, y)) continue;
        if (x < cfg_.margin || y < cfg_.margin || x >= cfg_.width - cfg_.margin || y >= cfg_.height - cfg_.margin) return {};
        if (forbidden_(x, y)) return {};
        px.push_back(static_cast<std::uint32_t>(y * cfg_.width + x));
      }
    return px;
  }

  void commit(const std::vector<std::uint32_t>& px) {
    const int g = cfg_.min_gap;
    for (auto p : px) {
      const int x = static_cast<int>(p) % cfg_.width, y = static_cast<int>(p) / cfg_.width;
      for (int dy = -g; dy <= g; ++dy)
        for (int dx = -g; dx <= g; ++dx)
          if (forbidden_.in_bounds(x + dx, y + dy)) forbidden_(x + dx, y + dy) = 1;
    }
  }

 private:
  const SynthConfig& cfg_;
  BinaryMask forbidden_;
};

bool touches(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b, int width, int height) {
  BinaryMask ma(width, height);
  for (auto p : a) ma[p] = 1;
  for (auto p : b) {
    const int x = static_cast<int>(p) % width, y = static_cast<int>(p) / width;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (ma.in_bounds(x + dx, y + dy) && ma(x + dx, y + dy)) return true;
  }
  return false;
}

bool intersects(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) ++i;
    else ++j;
  }
  return false;
}

std::vector<std::uint32_t> raster_pixels_of(const BubbleShape& s, int width, int height) {
  const BinaryMask m = rasterize(s, width, height);
  std::vector<std::uint32_t> px;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) px.push_back(static_cast<std::uint32_t>(i));
  return px;
}

struct Levels {
  double background, dark, grey;
};

}  // namespace

SynthSample generate(const SynthConfig& cfg, const std::string& image_id) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const int w = cfg.width, h = cfg.height;

  auto draw_shape = [&](bool allow_small, const Levels& lv) {
    BubbleShape s;
    const bool small = allow_small && uniform(rng, 0.0, 1.0) < cfg.small_fraction;
    const double r = small ? uniform(rng, cfg.small_radius_min, cfg.small_radius_max) : sample_main_radius(cfg, rng);
    const double ecc = uniform(rng, 0.0, cfg.max_eccentricity);
    s.semi_major = std::max(r, 0.5);
    s.semi_minor = std::max(s.semi_major * std::sqrt(1.0 - ecc * ecc), 0.5);
    s.angle = uniform(rng, 0.0, std::numbers::pi);
    s.grey = uniform(rng, 0.0, 1.0) < cfg.grey_fraction;
    const double jitter = uniform(rng, -0.03, 0.03);
    s.level = std::clamp((s.grey ? lv.grey : lv.dark) + jitter, 0.0, 1.0);
    return s;
  };

  Levels lv{cfg.background_level, cfg.bubble_level, cfg.grey_level};
  if (cfg.level_jitter > 0.0) {
    const double shift = uniform(rng, -cfg.level_jitter, cfg.level_jitter);
    lv.background = std::clamp(lv.background + shift, 0.0, 1.0);
    lv.grey = std::clamp(lv.grey + shift, 0.0, 1.0);
    lv.dark = std::clamp(lv.dark + uniform(rng, -cfg.level_jitter, cfg.level_jitter), 0.0, 1.0);
  }

  Placer placer(cfg);
  std::vector<BubbleShape> shapes;
  std::vector<std::vector<std::uint32_t>> pixels;
  constexpr int kAttempts = 300;

  for (int pair = 0; pair < cfg.touching_pairs; ++pair) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      BubbleShape a = draw_shape(false, lv);
      a.cx = uniform(rng, 0.0, w - 1.0);
      a.cy = uniform(rng, 0.0, h - 1.0);
      auto pa = placer.fit(a);
      if (pa.empty()) continue;
      BubbleShape b = draw_shape(false, lv);
      const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      // Slide b outward from a's center until the rasterized sets separate;
      // the first separated position leaves them 8-adjacent.
      std::vector<std::uint32_t> pb;
      for (double d = 0.5 * a.semi_minor; d < a.semi_major + b.semi_major + 2.0; d += 0.25) {
        b.cx = a.cx + d * std::cos(phi);
        b.cy = a.cy + d * std::sin(phi);
        const auto raw = raster_pixels_of(b, w, h);
        if (intersects(raw, pa)) continue;
        if (touches(pa, raw, w, h)) pb = placer.fit(b);
        break;
      }
      if (pb.empty() || intersects(pb, pa) || !touches(pa, pb, w, h)) continue;
      // The pair must clear other bubbles but not each other.
      a.pair = b.pair = pair;
      placer.commit(pa);
      placer.commit(pb);
      shapes.push_back(a);
      pixels.push_back(std::move(pa));
      shapes.push_back(b);
      pixels.push_back(std::move(pb));
      break;
    }
  }

  const int n_free = std::uniform_int_distribution<int>(cfg.n_bubbles_min, cfg.n_bubbles_max)(rng);
  for (int i = 0; i < n_free; ++i) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      BubbleShape s = draw_shape(true, lv);
      s.cx = uniform(rng, 0.0, w - 1.0);
      s.cy = uniform(rng, 0.0, h - 1.0);
      auto px = placer.fit(s);
      if (px.empty()) continue;
      placer.commit(px);
      shapes.push_back(s);
      pixels.push_back(std::move(px));
      break;
    }
  }

  // Background with low-frequency modulation.
  std::vector<float> data(static_cast<std::size_t>(w) * h);
  const double fx = uniform(rng, 0.5, 1.5), fy = uniform(rng, 0.5, 1.5);
  const double p1 = uniform(rng, 0.0, 2.0 * std::numbers::pi), p2 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = 0.5 * std::sin(2.0 * std::numbers::pi * fx * x / w + p1) +
                       0.5 * std::sin(2.0 * std::numbers::pi * fy * y / h + p2);
      data[static_cast<std::size_t>(y) * w + x] = static_cast<float>(lv.background + cfg.texture_amplitude * t);
    }

  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto& s = shapes[k];
    const double c = std::cos(s.angle), sn = std::sin(s.angle);
    for (auto p : pixels[k]) {
      const int x = static_cast<int>(p) % w, y = static_cast<int>(p) / w;
      double v = s.level;
      if (s.grey && cfg.rim_width > 0.0) {
        const double dx = x - s.cx, dy = y - s.cy;
        const double u = (dx * c + dy * sn) / s.semi_major;
        const double q = (-dx * sn + dy * c) / s.semi_minor;
        const double rho = std::sqrt(u * u + q * q);
        if ((1.0 - rho) * s.semi_minor < cfg.rim_width) v -= cfg.rim_darkening;
      }
      data[p] = static_cast<float>(v);
    }
  }
  for (auto& v : data) v = std::clamp(v, 0.0f, 1.0f);
  GrayImage image(w, h, std::move(data));
  if (cfg.psf_sigma > 0.0) image = raster::gaussian_blur(image, cfg.psf_sigma);
  if (cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (auto& v : image.data()) v = std::clamp(static_cast<float>(v + noise(rng)), 0.0f, 1.0f);
  }

  AnnotationSet ann;
  ann.image_id = image_id;
  ann.width = w;
  ann.height = h;
  ann.fully_labeled = true;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto cls = pixels[k].size() <= static_cast<std::size_t>(cfg.small_max_area) ? SizeClass::Small : SizeClass::MediumLarge;
    ann.instances.push_back(Instance::from_pixels(static_cast<int>(k) + 1, w, h, pixels[k], InstanceSource::Human, cls));
  }
  return {std::move(image), std::move(ann), std::move(shapes)};
}

AnnotationSet simulate_partial_labels(const AnnotationSet& full, std::uint64_t seed, double drop_fraction) {
  std::mt19937_64 rng(seed);
  AnnotationSet out = full;
  out.fully_labeled = false;
  out.instances.clear();
  std::vector<const Instance*> kept;
  for (const auto& inst : full.instances)
    if (inst.size_class() != SizeClass::Small) kept.push_back(&inst);
  const auto n_drop = static_cast<std::size_t>(std::lround(drop_fraction * static_cast<double>(kept.size())));
  std::shuffle(kept.begin(), kept.end(), rng);
  kept.erase(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(std::min(n_drop, kept.size())));
  std::sort(kept.begin(), kept.end(), [](const Instance* a, const Instance* b) { return a->id() < b->id(); });
  for (const auto* inst : kept) out.instances.push_back(*inst);
  return out;
}

const ManifestEntry* Manifest::find(const std::string& id) const {
  for (const auto* split : {&train, &test})
    for (const auto& e : *split)
      if (e.id == id) return &e;
  return nullptr;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 over the combined state
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

SynthSample regenerate_entry(const Manifest& manifest, const ManifestEntry& entry, bool train_split) {
  SynthConfig cfg = manifest.config;
  cfg.seed = entry.seed;
  SynthSample s = generate(cfg, entry.id);
  if (train_split && manifest.partial_train) s.annotation = simulate_partial_labels(s.annotation, derive_seed(entry.seed, 0x5EED));
  return s;
}

Manifest generate_dataset(const SynthConfig& cfg, const DatasetSpec& spec, const fs::path& out_dir) {
  cfg.validate();
  if (spec.n_train < 0 || spec.n_test < 0 || spec.n_train + spec.n_test < 1)
    throw Error(ErrorCode::ConfigInvalid, "generate_dataset: need at least one image");
  Manifest manifest;
  manifest.config = cfg;
  manifest.partial_train = spec.partial_train;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "annotations");

  std::uint64_t index = 0;
  auto make = [&](const std::string& split, int n, std::vector<ManifestEntry>& entries) {
    for (int i = 0; i < n; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%03d", split.c_str(), i);
      ManifestEntry e{id, std::string("images/") + id + ".png", std::string("annotations/") + id + ".json",
                      derive_seed(cfg.seed, index++)};
      entries.push_back(e);
    }
  };
  make("train", spec.n_train, manifest.train);
  make("test", spec.n_test, manifest.test);

  for (const auto* split : {&manifest.train, &manifest.test})
    for (const auto& e : *split) {
      const auto s = regenerate_entry(manifest, e, split == &manifest.train);
      io::write_png(s.image, out_dir / e.image);
      io::write_annotation(s.annotation, out_dir / e.annotation);
    }
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  auto entries = [](const std::vector<ManifestEntry>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back({{"id", e.id}, {"image", e.image}, {"annotation", e.annotation}, {"seed", e.seed}});
    return a;
  };
  json j = {{"train", entries(m.train)},
            {"test", entries(m.test)},
            {"partial_train", m.partial_train},
            {"synth", config::to_json(m.config)}};
  io::write_atomic(path, j.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "manifest not found: " + path.string());
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("manifest: malformed JSON: ") + e.what());
  }
  Manifest m;
  StrictObject obj(j, "manifest");
  auto read_entries = [&](const char* key, std::vector<ManifestEntry>& out) {
    const json* arr = obj.child(key);
    if (!arr) return;
    if (!arr->is_array()) throw Error(ErrorCode::ConfigInvalid, std::string("manifest.") + key + ": expected an array");
    for (const auto& je : *arr) {
      StrictObject eo(je, std::string("manifest.") + key + "[]");
      ManifestEntry e;
      eo.get("id", e.id);
      eo.get("image", e.image);
      eo.get("annotation", e.annotation);
      eo.get("seed", e.seed);
      eo.finish();
      if (e.id.empty()) e.id = fs::path(e.image).stem().string();
      if (e.image.empty() || e.annotation.empty())
        throw Error(ErrorCode::ConfigInvalid, "manifest entry requires image and annotation");
      out.push_back(std::move(e));
    }
  };
  read_entries("train", m.train);
  read_entries("test", m.test);
  obj.get("partial_train", m.partial_train);
  if (const json* sc = obj.child("synth")) config::read(*sc, m.config, "manifest.synth");
  obj.finish();
  return m;
}

}  // namespace bubbleseg::synth
