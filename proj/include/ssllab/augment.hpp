#pragma once

#include "ssllab/image.hpp"
#include "ssllab/rng.hpp"

namespace ssllab {

// Stochastic augmentation pipeline, applied in fixed order:
// horizontal flip -> contrast about the image mean -> rotation (bilinear,
// zero padding) -> crop of a sampled fraction of each linear extent,
// resized back. The flip fires with flip_prob; the other three always apply
// with a parameter drawn from their range.
struct AugmentPolicy {
  float flip_prob = 0.5f;
  float contrast_min = 0.7f;
  float contrast_max = 1.3f;
  float rotation_min = -0.78539816339744830962f;  // -pi/4
  float rotation_max = 0.78539816339744830962f;   // +pi/4
  float crop_min = 0.01f;
  float crop_max = 0.20f;

  void validate() const;

  // All ranges collapsed so augment() is the identity map.
  static AugmentPolicy identity();

  bool operator==(const AugmentPolicy&) const = default;
};

// One concrete draw from the policy; exposed so tests can assert sampled
// parameters stay inside the policy ranges.
struct AugmentParams {
  bool flip = false;
  float contrast = 1.0f;
  float rotation = 0.0f;   // radians
  float crop_fraction = 0.0f;
  float crop_off_y = 0.0f;  // in [0,1], position of the crop window
  float crop_off_x = 0.0f;
};

AugmentParams sample_augment_params(const AugmentPolicy& policy,
                                    RngStream& rng);
Image apply_augment(const Image& image, const AugmentParams& params);

// Sample + apply. Output has the input's shape and values clamped to [0,1].
Image augment(const Image& image, const AugmentPolicy& policy,
              RngStream& rng);

}  // namespace ssllab
