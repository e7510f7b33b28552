#include "ssllab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssllab {

void AugmentPolicy::validate() const {
  if (flip_prob < 0.0f || flip_prob > 1.0f)
    throw std::invalid_argument("augment: flip_prob must be in [0,1]");
  if (contrast_min > contrast_max || rotation_min > rotation_max ||
      crop_min > crop_max)
    throw std::invalid_argument("augment: range bounds out of order");
  if (crop_min < 0.0f || crop_max >= 1.0f)
    throw std::invalid_argument("augment: crop fraction must be in [0,1)");
}

AugmentPolicy AugmentPolicy::identity() {
  AugmentPolicy p;
  p.flip_prob = 0.0f;
  p.contrast_min = p.contrast_max = 1.0f;
  p.rotation_min = p.rotation_max = 0.0f;
  p.crop_min = p.crop_max = 0.0f;
  return p;
}

AugmentParams sample_augment_params(const AugmentPolicy& policy,
                                    RngStream& rng) {
  policy.validate();
  AugmentParams p;
  // Fixed draw order keeps a stream's consumption independent of outcomes.
  p.flip = rng.bernoulli(policy.flip_prob);
  p.contrast = rng.uniform(policy.contrast_min, policy.contrast_max);
  p.rotation = rng.uniform(policy.rotation_min, policy.rotation_max);
  p.crop_fraction = rng.uniform(policy.crop_min, policy.crop_max);
  p.crop_off_y = rng.uniform();
  p.crop_off_x = rng.uniform();
  return p;
}

namespace {

Image flip_horizontal(const Image& in) {
  Image out(in.height, in.width);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      out.at(y, x) = in.at(y, in.width - 1 - x);
  return out;
}

Image contrast_about_mean(const Image& in, float factor) {
  float mean = 0.0f;
  for (float v : in.pixels) mean += v;
  mean /= float(in.pixels.size());
  Image out(in.height, in.width);
  for (size_t i = 0; i < in.pixels.size(); ++i)
    out.pixels[i] =
        std::clamp(mean + factor * (in.pixels[i] - mean), 0.0f, 1.0f);
  return out;
}

Image rotate(const Image& in, float angle) {
  Image out(in.height, in.width);
  const float c = std::cos(angle), s = std::sin(angle);
  const float cy = 0.5f * float(in.height - 1);
  const float cx = 0.5f * float(in.width - 1);
  for (int y = 0; y < in.height; ++y) {
    const float ry = float(y) - cy;
    for (int x = 0; x < in.width; ++x) {
      const float rx = float(x) - cx;
      const float sx = cx + c * rx + s * ry;
      const float sy = cy - s * rx + c * ry;
      out.at(y, x) = bilinear_sample(in, sy, sx);
    }
  }
  return out;
}

// Crops fraction f of each linear extent at the given window position and
// resizes back to the original shape.
Image crop_resize(const Image& in, float fraction, float off_y, float off_x) {
  const float new_h = float(in.height) * (1.0f - fraction);
  const float new_w = float(in.width) * (1.0f - fraction);
  const float oy = off_y * (float(in.height) - new_h);
  const float ox = off_x * (float(in.width) - new_w);
  const float sy_scale = new_h / float(in.height);
  const float sx_scale = new_w / float(in.width);
  Image out(in.height, in.width);
  for (int y = 0; y < in.height; ++y) {
    const float sy = oy + (float(y) + 0.5f) * sy_scale - 0.5f;
    for (int x = 0; x < in.width; ++x) {
      const float sx = ox + (float(x) + 0.5f) * sx_scale - 0.5f;
      out.at(y, x) = bilinear_sample(in, sy, sx);
    }
  }
  return out;
}

}  // namespace

Image apply_augment(const Image& image, const AugmentParams& params) {
  Image out = image;
  if (params.flip) out = flip_horizontal(out);
  if (params.contrast != 1.0f) out = contrast_about_mean(out, params.contrast);
  if (params.rotation != 0.0f) out = rotate(out, params.rotation);
  if (params.crop_fraction != 0.0f)
    out = crop_resize(out, params.crop_fraction, params.crop_off_y,
                      params.crop_off_x);
  for (auto& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

Image augment(const Image& image, const AugmentPolicy& policy,
              RngStream& rng) {
  return apply_augment(image, sample_augment_params(policy, rng));
}

}  // namespace ssllab
