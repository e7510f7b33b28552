#pragma once

#include <vector>

namespace ssllab {

// Grayscale image, values nominally in [0,1], row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(size_t(h) * size_t(w), fill) {}

  float& at(int y, int x) { return pixels[size_t(y) * width + x]; }
  float at(int y, int x) const { return pixels[size_t(y) * width + x]; }

  bool operator==(const Image&) const = default;
};

// Bilinear sample at fractional coordinates; zero outside the image.
float bilinear_sample(const Image& img, float y, float x);

}  // namespace ssllab
