#pragma once

#include <array>

namespace apm::data {

using Point2 = std::array<double, 2>;

/// Maps pixel coordinates to the normalized image plane, scaling both axes by
/// the image width so the aspect ratio is preserved:
///   x' = (2x - width) / width,  y' = (2y - height) / width.
Point2 normalize_2d(Point2 pixel, double width, double height);
Point2 denormalize_2d(Point2 normalized, double width, double height);

}  // namespace apm::data
