#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "tacteit/forward.hpp"
#include "tacteit/mesh.hpp"

namespace tacteit {

inline constexpr double kBackgroundConductivity = 0.05;  // S/m
inline constexpr double kMinTouchConductivity = 0.0001;  // S/m
inline constexpr int kImageSize = 64;

struct Circle {
  Point2 center{0.0, 0.0};
  double radius = 0.1;
  double conductivity = 0.01;  // S/m
};

struct TouchPhantom {
  std::vector<Circle> circles;
  double background_conductivity = kBackgroundConductivity;

  /// Throws std::invalid_argument if a circle leaves the disk, circles
  /// overlap, or a conductivity is outside [0.0001, background].
  void validate() const;
};

/// Conductivity at element centroids: circle value inside, background elsewhere.
ConductivityField phantom_field(const SensorMesh& mesh, const TouchPhantom& phantom);

/// 64x64 row-major map of normalized conductivity decrease.
///
/// Pixel (r, c) has center x = (c + 0.5)/32 - 1, y = 1 - (r + 0.5)/32, so
/// row 0 is the top of the sensor (electrode 1) and x grows to the right.
class LabelImage {
 public:
  using Grid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  LabelImage() : pixels_(Grid::Zero(kImageSize, kImageSize)) {}
  explicit LabelImage(Grid pixels);

  const Grid& pixels() const { return pixels_; }
  Grid& pixels() { return pixels_; }
  double operator()(int r, int c) const { return pixels_(r, c); }
  double& operator()(int r, int c) { return pixels_(r, c); }
  const double* data() const { return pixels_.data(); }

  static Point2 pixel_center(int r, int c);
  bool operator==(const LabelImage& o) const { return pixels_ == o.pixels_; }

 private:
  Grid pixels_;
};

LabelImage rasterize(const TouchPhantom& phantom);

/// Maps a conductivity to the label scale: (background - sigma) / (0.05 - 0.0001).
double normalized_contrast(double sigma, double background = kBackgroundConductivity);

TouchPhantom transform_phantom(const TouchPhantom& phantom, const SymmetryTransform& t);

}  // namespace tacteit
