#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>

#include "tacteit/mesh.hpp"
#include "tacteit/phantom.hpp"

namespace fixtures {

/// Max entrywise |a - b| / |b|.
inline double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
  }
  return worst;
}

/// Generic asymmetric phantom built by a naive sampler independent of the dataset module.
inline tacteit::TouchPhantom random_phantom(std::mt19937_64& rng, int n_circles) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tacteit::TouchPhantom p;
  while (static_cast<int>(p.circles.size()) < n_circles) {
    tacteit::Circle c;
    c.radius = 0.08 + 0.15 * u(rng);
    const double rho = (1.0 - c.radius) * std::sqrt(u(rng));
    const double phi = 2.0 * tacteit::kPi * u(rng);
    c.center = {rho * std::cos(phi), rho * std::sin(phi)};
    c.conductivity = 0.0001 + 0.04 * u(rng);
    bool ok = true;
    for (const auto& o : p.circles) ok = ok && (o.center - c.center).norm() >= o.radius + c.radius;
    if (ok) p.circles.push_back(c);
  }
  return p;
}

inline const tacteit::SensorMesh& mesh_level(int level) {
  static const tacteit::SensorMesh m1 = tacteit::SensorMesh::build({.refinement_level = 1});
  static const tacteit::SensorMesh m2 = tacteit::SensorMesh::build({.refinement_level = 2});
  return level == 1 ? m1 : m2;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tacteit-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
