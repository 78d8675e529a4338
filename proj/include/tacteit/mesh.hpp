#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace tacteit {

inline constexpr int kNumElectrodes = 16;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kElectrodePitchRad = 2.0 * kPi / kNumElectrodes;

/// Wraps an arbitrary integer onto the 1-based electrode (or pair) range 1..16.
constexpr int wrap16(int i) {
  int r = (i - 1) % kNumElectrodes;
  if (r < 0) r += kNumElectrodes;
  return r + 1;
}

using Point2 = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

struct MeshOptions {
  int refinement_level = 1;
  double contact_impedance = 0.01;  // Ohm*m, shared by all electrodes
  double electrode_coverage = 0.5;  // fraction of the circumference under electrodes
};

/// Triangulated unit disk carrying 16 boundary electrodes.
///
/// Electrode 1 is centered at 90 degrees; electrodes are numbered
/// counterclockwise with a 22.5 degree pitch. The node and element sets are
/// exactly invariant under the dihedral group generated by a one-pitch
/// rotation and the reflection x -> -x (axis through electrodes 1 and 9).
class SensorMesh {
 public:
  static SensorMesh build(const MeshOptions& options);

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& elements() const { return elements_; }
  /// Boundary node indices of electrode `e` (1-based), ordered counterclockwise.
  const std::vector<int>& electrode_nodes(int e) const { return electrodes_.at(e - 1); }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return elements_.size(); }
  int refinement_level() const { return options_.refinement_level; }
  double contact_impedance() const { return options_.contact_impedance; }
  double electrode_coverage() const { return options_.electrode_coverage; }
  const MeshOptions& options() const { return options_; }

  double element_area(std::size_t k) const;
  Point2 element_centroid(std::size_t k) const;
  double total_area() const;

  /// Index of the element containing `p`, or -1 when `p` is outside the mesh.
  int locate(const Point2& p) const;

  /// Plain-text node/element listing for debugging.
  void write_listing(std::ostream& os) const;

 private:
  MeshOptions options_;
  std::vector<Point2> nodes_;
  std::vector<Triangle> elements_;
  std::array<std::vector<int>, kNumElectrodes> electrodes_;
  // Locator acceleration: elements bucketed by a uniform grid over [-1,1]^2.
  int grid_n_ = 0;
  std::vector<std::vector<int>> grid_;

  void build_locator();
};

/// One element of the dihedral group D16 acting on the sensor.
///
/// The transform maps a point x to R(rotation) * F^flip(x): the flip (when
/// set) is applied first, then a counterclockwise rotation by
/// rotation * 22.5 degrees.
struct SymmetryTransform {
  int rotation = 0;  // 0..15
  bool flip = false;

  static SymmetryTransform rotate(int k) { return {((k % 16) + 16) % 16, false}; }
  static SymmetryTransform mirror() { return {0, true}; }

  /// this ∘ other (apply `other` first).
  SymmetryTransform compose(const SymmetryTransform& other) const;
  SymmetryTransform inverse() const;
  Point2 apply(const Point2& p) const;
  int map_electrode(int e) const;

  bool operator==(const SymmetryTransform&) const = default;
};

struct SymmetryPermutation {
  SymmetryTransform transform;
  std::vector<int> node_map;     // node p -> node at transform(p)
  std::vector<int> element_map;  // element k -> element covering transform(k)
  std::array<int, kNumElectrodes> electrode_map{};  // 0-based slot of electrode e holds its image (1-based)

  /// this after other: (this ∘ other)(x) = this(other(x)).
  SymmetryPermutation compose(const SymmetryPermutation& other) const;
};

/// Builds the node/element/electrode permutations induced by `transform`.
/// Throws SymmetryError if some transformed node has no match within 1e-9.
SymmetryPermutation symmetry_permutation(const SensorMesh& mesh, const SymmetryTransform& transform);

}  // namespace tacteit
