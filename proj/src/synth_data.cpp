#include "ssllab/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ssllab/rng.hpp"

namespace ssllab {

namespace {

constexpr float kPi = 3.14159265358979323846f;

// ---------------------------------------------------------------------------
// Soft rasterization. Signed distances are negative inside; paint()
// alpha-blends coverage with a ~1px anti-aliased edge.

float sd_disk(float y, float x, float r) { return std::hypot(x, y) - r; }

float sd_ellipse(float y, float x, float a, float b) {
  // scaled-radius approximation, adequate for anti-aliasing
  const float k = std::hypot(x / a, y / b);
  return (k - 1.0f) * std::min(a, b);
}

float sd_bar(float y, float x, float half_l, float half_w, float ang) {
  const float c = std::cos(ang), s = std::sin(ang);
  const float u = x * c + y * s;
  const float v = -x * s + y * c;
  return std::max(std::fabs(u) - half_l, std::fabs(v) - half_w);
}

template <typename Sdf>
void paint(Image& img, float cy, float cx, float fg, const Sdf& sdf,
           float edge = 1.0f) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float d = sdf(float(y) - cy, float(x) - cx);
      const float cov = std::clamp(0.5f - d / edge, 0.0f, 1.0f);
      if (cov > 0.0f) {
        float& p = img.at(y, x);
        p += (fg - p) * cov;
      }
    }
  }
}

struct SampleStyle {
  float bg;      // canvas level
  float fg;      // shape level
  float cy, cx;  // jittered center
  float scale;
};

SampleStyle draw_style(int h, int w, RngStream& rng) {
  SampleStyle st;
  st.bg = rng.uniform(0.08f, 0.28f);
  st.fg = rng.uniform(0.55f, 0.95f);
  st.cy = 0.5f * float(h - 1) + rng.uniform(-3.0f, 3.0f);
  st.cx = 0.5f * float(w - 1) + rng.uniform(-3.0f, 3.0f);
  st.scale = rng.uniform(0.8f, 1.15f);
  return st;
}

// Periodic patterns are anchored to the jittered center with only a small
// phase wobble so class-mean templates stay structured.
float pattern_phase(RngStream& rng) { return rng.uniform(-0.9f, 0.9f); }

void render_ellipse(Image& img, const SampleStyle& st, RngStream& rng) {
  const float a = st.scale * rng.uniform(7.0f, 10.0f);
  const float b = st.scale * rng.uniform(4.0f, 6.5f);
  const float ang = rng.uniform(0.0f, kPi);
  const float c = std::cos(ang), s = std::sin(ang);
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    const float u = x * c + y * s;
    const float v = -x * s + y * c;
    return sd_ellipse(v, u, a, b);
  });
}

void render_bar(Image& img, const SampleStyle& st, RngStream& rng) {
  const float hl = st.scale * rng.uniform(9.0f, 13.0f);
  const float hw = st.scale * rng.uniform(1.6f, 2.6f);
  const float ang = rng.uniform(-0.4f, 0.4f);
  paint(img, st.cy, st.cx, st.fg,
        [&](float y, float x) { return sd_bar(y, x, hl, hw, ang); });
}

void render_ring(Image& img, const SampleStyle& st, RngStream& rng) {
  const float r = st.scale * rng.uniform(7.5f, 10.5f);
  const float half_th = st.scale * rng.uniform(1.2f, 2.0f);
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    return std::fabs(sd_disk(y, x, r)) - half_th;
  });
}

void render_cross(Image& img, const SampleStyle& st, RngStream& rng) {
  const float hl = st.scale * rng.uniform(8.5f, 12.0f);
  const float hw = st.scale * rng.uniform(1.4f, 2.2f);
  const float ang = rng.uniform(-0.35f, 0.35f);
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    return std::min(sd_bar(y, x, hl, hw, ang),
                    sd_bar(y, x, hl, hw, ang + 0.5f * kPi));
  });
}

void render_checker(Image& img, const SampleStyle& st, RngStream& rng) {
  const float period = st.scale * rng.uniform(10.0f, 14.0f);
  const float ang = rng.uniform(-0.2f, 0.2f);
  const float ph_u = pattern_phase(rng), ph_v = pattern_phase(rng);
  const float k = 2.0f * kPi / period;
  const float c = std::cos(ang), s = std::sin(ang);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float ry = float(y) - st.cy, rx = float(x) - st.cx;
      const float u = rx * c + ry * s;
      const float v = -rx * s + ry * c;
      const float m = std::cos(k * u + ph_u) * std::cos(k * v + ph_v);
      const float cov = 0.5f + 0.5f * std::tanh(4.0f * m);
      float& p = img.at(y, x);
      p += (st.fg - p) * cov;
    }
}

void render_stripes(Image& img, const SampleStyle& st, RngStream& rng,
                    bool fine) {
  const float period = st.scale * (fine ? rng.uniform(2.9f, 4.2f)
                                        : rng.uniform(8.0f, 12.0f));
  // fine stripes run near vertical, coarse near horizontal
  const float base = fine ? 0.0f : 0.5f * kPi;
  const float ang = base + rng.uniform(-0.26f, 0.26f);
  const float ph = pattern_phase(rng);
  const float k = 2.0f * kPi / period;
  const float c = std::cos(ang), s = std::sin(ang);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float u = (float(x) - st.cx) * c + (float(y) - st.cy) * s;
      const float m = std::cos(k * u + ph);
      const float cov = 0.5f + 0.5f * std::tanh(3.0f * m);
      float& p = img.at(y, x);
      p += (st.fg - p) * cov;
    }
}

void render_two_disks(Image& img, const SampleStyle& st, RngStream& rng) {
  const float r1 = st.scale * rng.uniform(3.2f, 4.8f);
  const float r2 = st.scale * rng.uniform(3.2f, 4.8f);
  const float sep = st.scale * rng.uniform(11.0f, 14.0f);
  const float ang = rng.uniform(-0.5f, 0.5f);
  const float dy = 0.5f * sep * std::sin(ang);
  const float dx = 0.5f * sep * std::cos(ang);
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    return std::min(sd_disk(y - dy, x - dx, r1), sd_disk(y + dy, x + dx, r2));
  });
}

void render_dot_grid(Image& img, const SampleStyle& st, RngStream& rng) {
  const float pitch = st.scale * rng.uniform(7.0f, 10.0f);
  const float dot_r = st.scale * rng.uniform(1.6f, 2.3f);
  const float ang = rng.uniform(-0.2f, 0.2f);
  const float jy = rng.uniform(-1.0f, 1.0f), jx = rng.uniform(-1.0f, 1.0f);
  const float c = std::cos(ang), s = std::sin(ang);
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    const float u = (x + jx) * c + (y + jy) * s;
    const float v = -(x + jx) * s + (y + jy) * c;
    const float fu = u - pitch * std::round(u / pitch);
    const float fv = v - pitch * std::round(v / pitch);
    return sd_disk(fv, fu, dot_r);
  });
}

void render_distinct(Image& img, int family, const SampleStyle& st,
                     RngStream& rng) {
  switch (family) {
    case 0: render_ellipse(img, st, rng); break;
    case 1: render_bar(img, st, rng); break;
    case 2: render_ring(img, st, rng); break;
    case 3: render_cross(img, st, rng); break;
    case 4: render_checker(img, st, rng); break;
    case 5: render_stripes(img, st, rng, true); break;
    case 6: render_stripes(img, st, rng, false); break;
    case 7: render_two_disks(img, st, rng); break;
    case 8: render_dot_grid(img, st, rng); break;
    default:
      throw std::invalid_argument("generator defines 9 distinct families");
  }
}

// Confusable cluster: one shared base shape (elliptical shell with internal
// cross walls) whose variants differ only in the angular position of a small
// internal landmark dot.
void render_cluster(Image& img, int variant, int cluster_size,
                    const SampleStyle& st, RngStream& rng) {
  const float a = st.scale * rng.uniform(9.0f, 11.0f);
  const float b = st.scale * rng.uniform(6.0f, 7.5f);
  const float glob = rng.uniform(-0.26f, 0.26f);
  const float phi = 2.0f * kPi * float(variant) / float(cluster_size) +
                    rng.uniform(-0.42f, 0.42f);
  const float rho = st.scale * rng.uniform(3.6f, 4.8f);
  const float dot_r = st.scale * rng.uniform(1.6f, 2.1f);
  const float c = std::cos(glob), s = std::sin(glob);
  const float dy = rho * std::sin(phi), dx = rho * std::cos(phi);

  auto frame_u = [&](float y, float x) { return x * c + y * s; };
  auto frame_v = [&](float y, float x) { return -x * s + y * c; };

  // chamber interior
  paint(img, st.cy, st.cx, st.bg + 0.30f * (st.fg - st.bg),
        [&](float y, float x) {
          return sd_ellipse(frame_v(y, x), frame_u(y, x), a, b);
        });
  // bright shell
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    return std::fabs(sd_ellipse(frame_v(y, x), frame_u(y, x), a, b)) - 1.2f;
  });
  // internal walls along both axes, clipped to the ellipse
  const float wall = st.bg + 0.75f * (st.fg - st.bg);
  paint(img, st.cy, st.cx, wall, [&](float y, float x) {
    const float u = frame_u(y, x), v = frame_v(y, x);
    return std::max(std::min(sd_bar(v, u, a * 0.85f, 0.7f, 0.0f),
                             sd_bar(v, u, b * 0.85f, 0.7f, 0.5f * kPi)),
                    sd_ellipse(v, u, a, b));
  });
  // variant landmark dot (in the ellipse frame)
  paint(img, st.cy, st.cx, st.fg, [&](float y, float x) {
    return sd_disk(frame_v(y, x) - dy, frame_u(y, x) - dx, dot_r);
  });
}

// ---------------------------------------------------------------------------
// Background class: heterogeneous mixture of texture fields plus distorted
// near-class lookalikes.

constexpr float kLookalikeProb = 0.15f;

void render_texture(Image& img, const SampleStyle& st, RngStream& rng) {
  const int kind = rng.uniform_int(4);
  const int h = img.height, w = img.width;
  switch (kind) {
    case 0: {  // bilinearly upsampled value-noise grid
      const int n = 3 + rng.uniform_int(4);
      std::vector<float> grid(size_t(n) * n);
      for (auto& g : grid) g = rng.uniform(st.bg, st.fg);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const float gy = float(y) * float(n - 1) / float(h - 1);
          const float gx = float(x) * float(n - 1) / float(w - 1);
          const int y0 = std::min(int(gy), n - 2), x0 = std::min(int(gx), n - 2);
          const float fy = gy - float(y0), fx = gx - float(x0);
          const float top = (1 - fx) * grid[size_t(y0) * n + x0] +
                            fx * grid[size_t(y0) * n + x0 + 1];
          const float bot = (1 - fx) * grid[size_t(y0 + 1) * n + x0] +
                            fx * grid[size_t(y0 + 1) * n + x0 + 1];
          img.at(y, x) = (1 - fy) * top + fy * bot;
        }
      break;
    }
    case 1: {  // gaussian blob field
      const int k = 3 + rng.uniform_int(4);
      for (int i = 0; i < k; ++i) {
        const float by = rng.uniform(2.0f, float(h - 3));
        const float bx = rng.uniform(2.0f, float(w - 3));
        const float sigma = rng.uniform(2.5f, 6.0f);
        const float amp = rng.uniform(0.3f, 0.9f) * (st.fg - st.bg);
        const float inv = 1.0f / (2.0f * sigma * sigma);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const float dy = float(y) - by, dx = float(x) - bx;
            img.at(y, x) += amp * std::exp(-(dy * dy + dx * dx) * inv);
          }
      }
      break;
    }
    case 2: {  // line clutter
      const int k = 3 + rng.uniform_int(5);
      for (int i = 0; i < k; ++i) {
        const float cy = rng.uniform(4.0f, float(h - 5));
        const float cx = rng.uniform(4.0f, float(w - 5));
        const float hl = rng.uniform(5.0f, 15.0f);
        const float hw = rng.uniform(0.7f, 1.8f);
        const float ang = rng.uniform(0.0f, kPi);
        const float level = rng.uniform(st.bg + 0.2f, st.fg);
        paint(img, cy, cx, level,
              [&](float y, float x) { return sd_bar(y, x, hl, hw, ang); });
      }
      break;
    }
    default: {  // oriented ramp with mild value noise
      const float ang = rng.uniform(0.0f, 2.0f * kPi);
      const float c = std::cos(ang), s = std::sin(ang);
      const float diag = std::hypot(float(h), float(w));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const float t =
              ((float(x) - 0.5f * float(w)) * c + (float(y) - 0.5f * float(h)) * s) /
                  diag +
              0.5f;
          img.at(y, x) = st.bg + (st.fg - st.bg) * std::clamp(t, 0.0f, 1.0f);
        }
      break;
    }
  }
}

void render_background(Image& img, const DatasetSpec& spec,
                       const SampleStyle& st, RngStream& rng,
                       float* noise_mult) {
  *noise_mult = 1.0f;
  if (rng.uniform() < kLookalikeProb) {
    // near-class lookalike: an anatomical template under heavy distortion
    const int anatomical =
        rng.uniform_int(spec.num_distinct_classes + spec.confusable_cluster_size);
    SampleStyle distorted = st;
    distorted.scale = rng.bernoulli(0.5f) ? st.scale * rng.uniform(0.55f, 0.78f)
                                          : st.scale * rng.uniform(1.22f, 1.45f);
    // squeeze contrast toward the canvas level
    distorted.fg = st.bg + rng.uniform(0.45f, 0.7f) * (st.fg - st.bg);
    if (anatomical < spec.num_distinct_classes) {
      render_distinct(img, anatomical, distorted, rng);
    } else {
      render_cluster(img, anatomical - spec.num_distinct_classes,
                     spec.confusable_cluster_size, distorted, rng);
    }
    if (rng.bernoulli(0.4f)) {  // occluding streak
      const float ang = rng.uniform(0.0f, kPi);
      const float hw = rng.uniform(1.5f, 3.5f);
      paint(img, st.cy + rng.uniform(-6.0f, 6.0f),
            st.cx + rng.uniform(-6.0f, 6.0f), st.bg,
            [&](float y, float x) { return sd_bar(y, x, 40.0f, hw, ang); });
    }
    *noise_mult = 1.8f;
  } else {
    render_texture(img, st, rng);
  }
}

Image render_sample(int cls, const DatasetSpec& spec, RngStream& rng) {
  Image img(spec.image_h, spec.image_w);
  const SampleStyle st = draw_style(spec.image_h, spec.image_w, rng);
  for (auto& p : img.pixels) p = st.bg;

  float noise_mult = 1.0f;
  if (cls < spec.num_distinct_classes) {
    render_distinct(img, cls, st, rng);
  } else if (cls < spec.num_distinct_classes + spec.confusable_cluster_size) {
    render_cluster(img, cls - spec.num_distinct_classes,
                   spec.confusable_cluster_size, st, rng);
  } else {
    render_background(img, spec, st, rng, &noise_mult);
  }

  const float sigma = spec.noise_sigma * noise_mult;
  if (sigma > 0.0f)
    for (auto& p : img.pixels) p += rng.normal(sigma);
  // quantize to the 8-bit grid so disk round-trips are lossless
  for (auto& p : img.pixels) {
    const int q = int(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f));
    p = float(q) / 255.0f;
  }
  return img;
}

}  // namespace

// ---------------------------------------------------------------------------
// DatasetSpec / Dataset

std::vector<std::string> DatasetSpec::class_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < num_distinct_classes; ++i)
    names.push_back("distinct_" + std::to_string(i));
  for (int i = 0; i < confusable_cluster_size; ++i)
    names.push_back("cardiac_" + std::to_string(i));
  if (include_background) names.push_back("background");
  return names;
}

void DatasetSpec::finalize() {
  if (num_distinct_classes < 1 || num_distinct_classes > 9)
    throw std::invalid_argument(
        "dataset: num_distinct_classes must be in [1,9] (9 shape families)");
  if (confusable_cluster_size < 2)
    throw std::invalid_argument("dataset: cluster needs at least 2 variants");
  if (image_h < 16 || image_w < 16)
    throw std::invalid_argument("dataset: image size must be at least 16x16");
  if (noise_sigma < 0.0f)
    throw std::invalid_argument("dataset: negative noise_sigma");

  const int anat = num_distinct_classes + confusable_cluster_size;
  auto fill = [&](std::map<int, int>& m, int anat_count, int bg_count) {
    if (m.empty()) {
      for (int c = 0; c < anat; ++c) m[c] = anat_count;
      if (include_background) m[anat] = bg_count;
    }
  };
  fill(train_per_class, 200, 600);
  fill(test_per_class, 60, 180);

  for (auto* m : {&train_per_class, &test_per_class}) {
    if (int(m->size()) != total_classes())
      throw std::invalid_argument(
          "dataset: per-class count map must cover every class");
    int max_anat = 0;
    for (const auto& [cls, count] : *m) {
      if (cls < 0 || cls >= total_classes())
        throw std::invalid_argument("dataset: count for unknown class " +
                                    std::to_string(cls));
      if (count <= 0)
        throw std::invalid_argument("dataset: class counts must be positive");
      if (cls < anat) max_anat = std::max(max_anat, count);
    }
    if (include_background && m->at(anat) < max_anat)
      throw std::invalid_argument(
          "dataset: background count must be at least the largest anatomical "
          "class count");
  }
}

int Dataset::background_index() const {
  return spec.include_background ? num_classes() - 1 : -1;
}

std::vector<int> Dataset::cluster_indices() const {
  std::vector<int> out;
  for (int i = 0; i < spec.confusable_cluster_size; ++i)
    out.push_back(spec.num_distinct_classes + i);
  return out;
}

std::vector<int> Dataset::split_indices(Split split) const {
  std::vector<int> out;
  for (int i = 0; i < int(samples.size()); ++i)
    if (samples[size_t(i)].split == split) out.push_back(i);
  return out;
}

std::vector<int> Dataset::class_counts(Split split) const {
  std::vector<int> counts(size_t(num_classes()), 0);
  for (const auto& s : samples)
    if (s.split == split) counts[size_t(s.label)]++;
  return counts;
}

uint64_t Dataset::content_hash() const {
  uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001B3ull;
  };
  for (const auto& name : class_names)
    for (char c : name) mix(uint64_t(uint8_t(c)));
  for (const auto& s : samples) {
    mix(uint64_t(s.label));
    mix(s.split == Split::train ? 1u : 2u);
    for (float p : s.image.pixels)
      mix(uint64_t(std::lround(p * 255.0f)));
  }
  return h;
}

Dataset Dataset::without_background() const {
  if (!spec.include_background) return *this;
  Dataset out;
  out.spec = spec;
  out.spec.include_background = false;
  out.spec.train_per_class.erase(background_index());
  out.spec.test_per_class.erase(background_index());
  out.class_names = class_names;
  out.class_names.pop_back();
  const int bg = background_index();
  for (const auto& s : samples)
    if (s.label != bg) out.samples.push_back(s);
  return out;
}

Dataset generate_dataset(DatasetSpec spec) {
  spec.finalize();
  Dataset ds;
  ds.spec = spec;
  ds.class_names = spec.class_names();
  for (int cls = 0; cls < spec.total_classes(); ++cls) {
    for (Split split : {Split::train, Split::test}) {
      const auto& counts =
          split == Split::train ? spec.train_per_class : spec.test_per_class;
      const auto purpose = split == Split::train ? StreamPurpose::data_train
                                                 : StreamPurpose::data_test;
      const int count = counts.at(cls);
      for (int i = 0; i < count; ++i) {
        auto rng = derive_stream(spec.seed, purpose, uint64_t(cls), uint64_t(i));
        Sample s;
        s.image = render_sample(cls, spec, rng);
        s.label = cls;
        s.split = split;
        ds.samples.push_back(std::move(s));
      }
    }
  }
  return ds;
}

LabelSplit subset_labels(const Dataset& ds, int per_class, uint64_t seed) {
  if (per_class <= 0)
    throw std::invalid_argument("subset_labels: per_class must be positive");
  const int C = ds.num_classes();
  std::vector<std::vector<int>> by_class(size_t(C));
  for (int i = 0; i < int(ds.samples.size()); ++i)
    if (ds.samples[size_t(i)].split == Split::train)
      by_class[size_t(ds.samples[size_t(i)].label)].push_back(i);

  LabelSplit out;
  for (int c = 0; c < C; ++c) {
    auto& idx = by_class[size_t(c)];
    if (int(idx.size()) < per_class)
      throw std::invalid_argument(
          "subset_labels: budget " + std::to_string(per_class) +
          " exceeds class " + std::to_string(c) + " size " +
          std::to_string(idx.size()));
    auto rng = derive_stream(seed, StreamPurpose::label_subset, uint64_t(c));
    // Fisher-Yates, then the first per_class entries are labelled
    for (int i = int(idx.size()) - 1; i > 0; --i)
      std::swap(idx[size_t(i)], idx[size_t(rng.uniform_int(i + 1))]);
    for (int i = 0; i < int(idx.size()); ++i)
      (i < per_class ? out.labelled : out.unlabelled).push_back(idx[size_t(i)]);
  }
  std::sort(out.labelled.begin(), out.labelled.end());
  std::sort(out.unlabelled.begin(), out.unlabelled.end());
  return out;
}

// ---------------------------------------------------------------------------
// PGM + manifest IO

void write_pgm(const Image& img, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> bytes(img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i)
    bytes[i] = uint8_t(std::lround(std::clamp(img.pixels[i], 0.0f, 1.0f) * 255.0f));
  os.write(reinterpret_cast<const char*>(bytes.data()),
           std::streamsize(bytes.size()));
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P5")
    throw std::runtime_error("not a binary PGM (P5): " + path.string());
  int w = 0, h = 0, maxval = 0;
  is >> w >> h >> maxval;
  if (!is || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported PGM header in " + path.string());
  is.get();  // single whitespace after header
  std::vector<uint8_t> bytes(size_t(w) * size_t(h));
  is.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!is) throw std::runtime_error("truncated PGM data in " + path.string());
  Image img(h, w);
  for (size_t i = 0; i < bytes.size(); ++i)
    img.pixels[i] = float(bytes[i]) / 255.0f;
  return img;
}

namespace {
std::string split_name(Split s) { return s == Split::train ? "train" : "test"; }
}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest)
    throw std::runtime_error("cannot write manifest in " + dir.string());
  manifest << "# classes: ";
  for (size_t i = 0; i < ds.class_names.size(); ++i)
    manifest << (i ? "," : "") << ds.class_names[i];
  manifest << "\npath,label,split\n";

  std::vector<int> counter(size_t(ds.num_classes()) * 2, 0);
  for (const auto& s : ds.samples) {
    const int slot = s.label * 2 + (s.split == Split::train ? 0 : 1);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.pgm", counter[size_t(slot)]++);
    const fs::path rel = fs::path(split_name(s.split)) /
                         ds.class_names[size_t(s.label)] / name;
    fs::create_directories(dir / rel.parent_path());
    write_pgm(s.image, dir / rel);
    manifest << rel.generic_string() << "," << s.label << ","
             << split_name(s.split) << "\n";
  }
  if (!manifest)
    throw std::runtime_error("manifest write failed in " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = dir / "manifest.csv";
  std::ifstream manifest(manifest_path);
  if (!manifest)
    throw std::runtime_error("missing manifest: " + manifest_path.string());

  std::string line;
  if (!std::getline(manifest, line) || line.rfind("# classes: ", 0) != 0)
    throw std::runtime_error("manifest must start with '# classes: ...' in " +
                             manifest_path.string());
  Dataset ds;
  {
    std::stringstream ss(line.substr(11));
    std::string name;
    while (std::getline(ss, name, ',')) ds.class_names.push_back(name);
  }
  if (ds.class_names.empty())
    throw std::runtime_error("manifest lists no classes");
  if (!std::getline(manifest, line) || line != "path,label,split")
    throw std::runtime_error("manifest missing 'path,label,split' header");

  int line_no = 2;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string path_str, label_str, split_str;
    if (!std::getline(ss, path_str, ',') || !std::getline(ss, label_str, ',') ||
        !std::getline(ss, split_str))
      throw std::runtime_error("malformed manifest row at line " +
                               std::to_string(line_no));
    Sample s;
    s.label = std::stoi(label_str);
    if (s.label < 0 || s.label >= int(ds.class_names.size()))
      throw std::runtime_error("manifest label " + label_str +
                               " out of range for header classes (line " +
                               std::to_string(line_no) + ")");
    if (split_str == "train")
      s.split = Split::train;
    else if (split_str == "test")
      s.split = Split::test;
    else
      throw std::runtime_error("manifest split must be train|test (line " +
                               std::to_string(line_no) + ")");
    const fs::path img_path = dir / path_str;
    if (!fs::exists(img_path))
      throw std::runtime_error("manifest references missing file: " +
                               img_path.string());
    s.image = read_pgm(img_path);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("dataset is empty");

  // Reconstruct a spec echo consistent with the files.
  DatasetSpec spec;
  int distinct = 0, cluster = 0;
  bool background = false;
  for (const auto& n : ds.class_names) {
    if (n.rfind("distinct_", 0) == 0) distinct++;
    else if (n.rfind("cardiac_", 0) == 0) cluster++;
    else if (n == "background") background = true;
  }
  // Unrecognized naming still loads; fall back to treating every class as
  // distinct with no cluster.
  if (distinct + cluster + (background ? 1 : 0) != int(ds.class_names.size())) {
    distinct = int(ds.class_names.size());
    cluster = 0;
    background = false;
  }
  spec.num_distinct_classes = distinct;
  spec.confusable_cluster_size = cluster;
  spec.include_background = background;
  spec.image_h = ds.samples.front().image.height;
  spec.image_w = ds.samples.front().image.width;
  for (const auto& s : ds.samples) {
    auto& m = s.split == Split::train ? spec.train_per_class
                                      : spec.test_per_class;
    m[s.label]++;
  }
  ds.spec = spec;
  return ds;
}

}  // namespace ssllab
