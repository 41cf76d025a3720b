#include "apm/data/normalize.hpp"

#include <string>

#include "apm/core/errors.hpp"

namespace apm::data {

namespace {

void check_dims(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw ConfigError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
}

}  // namespace

Point2 normalize_2d(Point2 pixel, double width, double height) {
  check_dims(width, height);
  return {(2.0 * pixel[0] - width) / width, (2.0 * pixel[1] - height) / width};
}

Point2 denormalize_2d(Point2 normalized, double width, double height) {
  check_dims(width, height);
  return {(normalized[0] * width + width) / 2.0, (normalized[1] * width + height) / 2.0};
}

}  // namespace apm::data
