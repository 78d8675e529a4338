#include "tacteit/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tacteit {

namespace {

bool inside(const Circle& c, const Point2& p) {
  const double dx = p.x() - c.center.x();
  const double dy = p.y() - c.center.y();
  return dx * dx + dy * dy <= c.radius * c.radius;
}

}  // namespace

void TouchPhantom::validate() const {
  if (!(background_conductivity > 0.0)) throw std::invalid_argument("background conductivity must be > 0");
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const auto& c = circles[i];
    if (!(c.radius > 0.0) || c.center.norm() + c.radius > 1.0) {
      throw std::invalid_argument("circle " + std::to_string(i) + " is not inside the unit disk");
    }
    if (c.conductivity < kMinTouchConductivity || c.conductivity > background_conductivity) {
      throw std::invalid_argument("circle " + std::to_string(i) + " conductivity out of range");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((c.center - circles[j].center).norm() < c.radius + circles[j].radius) {
        throw std::invalid_argument("circles " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

ConductivityField phantom_field(const SensorMesh& mesh, const TouchPhantom& phantom) {
  std::vector<double> values(mesh.element_count(), phantom.background_conductivity);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Point2 p = mesh.element_centroid(k);
    for (const auto& c : phantom.circles) {
      if (inside(c, p)) {
        values[k] = c.conductivity;
        break;
      }
    }
  }
  return ConductivityField(std::move(values));
}

LabelImage::LabelImage(Grid pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() != kImageSize || pixels_.cols() != kImageSize) {
    throw std::invalid_argument("label image must be 64x64");
  }
}

Point2 LabelImage::pixel_center(int r, int c) {
  constexpr double half = kImageSize / 2.0;
  return {(c + 0.5) / half - 1.0, 1.0 - (r + 0.5) / half};
}

double normalized_contrast(double sigma, double background) {
  return (background - sigma) / (kBackgroundConductivity - kMinTouchConductivity);
}

LabelImage rasterize(const TouchPhantom& phantom) {
  LabelImage img;
  for (int r = 0; r < kImageSize; ++r) {
    for (int c = 0; c < kImageSize; ++c) {
      const Point2 p = LabelImage::pixel_center(r, c);
      if (p.x() * p.x() + p.y() * p.y() > 1.0) continue;
      for (const auto& circle : phantom.circles) {
        if (inside(circle, p)) {
          img(r, c) = std::abs(normalized_contrast(circle.conductivity, phantom.background_conductivity));
          break;
        }
      }
    }
  }
  return img;
}

TouchPhantom transform_phantom(const TouchPhantom& phantom, const SymmetryTransform& t) {
  TouchPhantom out = phantom;
  for (auto& c : out.circles) c.center = t.apply(c.center);
  return out;
}

}  // namespace tacteit
