#include "ssllab/image.hpp"

#include <cmath>

namespace ssllab {

float bilinear_sample(const Image& img, float y, float x) {
  const int y0 = int(std::floor(y));
  const int x0 = int(std::floor(x));
  const float fy = y - float(y0);
  const float fx = x - float(x0);
  auto pick = [&](int yy, int xx) -> float {
    if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) return 0.0f;
    return img.at(yy, xx);
  };
  const float top = (1.0f - fx) * pick(y0, x0) + fx * pick(y0, x0 + 1);
  const float bot = (1.0f - fx) * pick(y0 + 1, x0) + fx * pick(y0 + 1, x0 + 1);
  return (1.0f - fy) * top + fy * bot;
}

}  // namespace ssllab
