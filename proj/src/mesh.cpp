#include "tacteit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tacteit/errors.hpp"

namespace tacteit {

namespace {

// Ring k (k >= 1) of a mesh with R rings carries 2k nodes per electrode pitch;
// the outer ring may use a non-uniform spacing so electrode edges are nodes.
struct RingLayout {
  int per_pitch = 0;
  // Angular offsets from the electrode center for centered indices 0..per_pitch/2.
  std::vector<double> half_offsets;
};

RingLayout uniform_ring(int per_pitch) {
  RingLayout ring;
  ring.per_pitch = per_pitch;
  ring.half_offsets.resize(per_pitch / 2 + 1);
  for (int c = 0; c <= per_pitch / 2; ++c) {
    ring.half_offsets[c] = kElectrodePitchRad * c / per_pitch;
  }
  return ring;
}

RingLayout boundary_ring(int per_pitch, int electrode_segments, double coverage) {
  RingLayout ring;
  ring.per_pitch = per_pitch;
  const int half = per_pitch / 2;
  const int gap_segments = half - electrode_segments;
  const double edge = 0.5 * coverage * kElectrodePitchRad;
  const double gap_center = 0.5 * kElectrodePitchRad;
  ring.half_offsets.resize(half + 1);
  for (int c = 0; c <= electrode_segments; ++c) {
    ring.half_offsets[c] = edge * c / electrode_segments;
  }
  for (int c = 1; c <= gap_segments; ++c) {
    ring.half_offsets[electrode_segments + c] = edge + (gap_center - edge) * c / gap_segments;
  }
  ring.half_offsets[half] = gap_center;
  return ring;
}

// Angle relative to electrode 1 of the node with signed angular index u.
double ring_angle(const RingLayout& ring, long u) {
  const long n = ring.per_pitch;
  long pitch = u / n;
  long c = u % n;
  if (c > n / 2) {
    c -= n;
    ++pitch;
  } else if (c <= -n / 2) {
    c += n;
    --pitch;
  }
  const double off = c >= 0 ? ring.half_offsets[c] : -ring.half_offsets[-c];
  return kElectrodePitchRad * static_cast<double>(pitch) + off;
}

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

SensorMesh SensorMesh::build(const MeshOptions& options) {
  if (options.refinement_level < 1) {
    throw std::invalid_argument("refinement_level must be >= 1");
  }
  if (!(options.contact_impedance > 0.0)) {
    throw std::invalid_argument("contact_impedance must be > 0");
  }
  if (!(options.electrode_coverage > 0.0 && options.electrode_coverage < 1.0)) {
    throw std::invalid_argument("electrode_coverage must lie in (0, 1)");
  }

  const int rings = 4 * options.refinement_level;
  const int boundary_half = rings;  // half-pitch segments on the outer ring
  const int electrode_segments =
      static_cast<int>(std::lround(boundary_half * options.electrode_coverage));
  if (electrode_segments < 1 || electrode_segments >= boundary_half) {
    throw std::invalid_argument(
        "refinement_level " + std::to_string(options.refinement_level) +
        " cannot resolve electrode coverage " + std::to_string(options.electrode_coverage) +
        " (need at least 2 boundary nodes per electrode and a non-empty gap)");
  }

  std::vector<RingLayout> layout(rings + 1);
  for (int k = 1; k < rings; ++k) layout[k] = uniform_ring(2 * k);
  layout[rings] = boundary_ring(2 * rings, electrode_segments, options.electrode_coverage);

  SensorMesh mesh;
  mesh.options_ = options;

  std::vector<int> ring_start(rings + 1, 0);
  mesh.nodes_.emplace_back(0.0, 0.0);
  for (int k = 1; k <= rings; ++k) {
    ring_start[k] = static_cast<int>(mesh.nodes_.size());
    const double r = static_cast<double>(k) / rings;
    const int count = kNumElectrodes * layout[k].per_pitch;
    for (int q = 0; q < count; ++q) {
      const double theta = 0.5 * kPi + ring_angle(layout[k], q);
      mesh.nodes_.emplace_back(r * std::cos(theta), r * std::sin(theta));
    }
  }

  auto node_id = [&](int ring, long u) -> int {
    if (ring == 0) return 0;
    const long count = kNumElectrodes * layout[ring].per_pitch;
    long q = u % count;
    if (q < 0) q += count;
    return ring_start[ring] + static_cast<int>(q);
  };

  // Triangulate the fundamental wedge (electrode-1 center to the adjacent gap
  // center) ring by ring, then replicate it with all 32 group elements.
  struct WedgeTri {
    std::array<int, 3> ring;
    std::array<long, 3> u;
  };
  std::vector<WedgeTri> wedge;
  for (int k = 1; k <= rings; ++k) {
    const int a = k == 1 ? 0 : layout[k - 1].per_pitch / 2;
    const int b = layout[k].per_pitch / 2;
    auto inner_angle = [&](int i) { return k == 1 ? 0.0 : ring_angle(layout[k - 1], i); };
    auto outer_angle = [&](int j) { return ring_angle(layout[k], j); };
    int i = 0;
    int j = 0;
    while (i < a || j < b) {
      const bool advance_outer =
          i == a || (j < b && outer_angle(j + 1) < inner_angle(i + 1));
      if (advance_outer) {
        wedge.push_back({{k - 1, k, k}, {i, j, j + 1}});
        ++j;
      } else {
        wedge.push_back({{k - 1, k - 1, k}, {i, i + 1, j}});
        ++i;
      }
    }
  }

  for (int flip = 0; flip < 2; ++flip) {
    for (int pitch = 0; pitch < kNumElectrodes; ++pitch) {
      for (const auto& t : wedge) {
        Triangle tri{};
        for (int v = 0; v < 3; ++v) {
          const int ring = t.ring[v];
          const long n = ring == 0 ? 0 : layout[ring].per_pitch;
          const long u = (flip ? -t.u[v] : t.u[v]) + pitch * n;
          tri[v] = node_id(ring, u);
        }
        const auto& p = mesh.nodes_;
        if (signed_area(p[tri[0]], p[tri[1]], p[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
        mesh.elements_.push_back(tri);
      }
    }
  }

  const int per_pitch = layout[rings].per_pitch;
  for (int e = 0; e < kNumElectrodes; ++e) {
    auto& list = mesh.electrodes_[e];
    for (int c = -electrode_segments; c <= electrode_segments; ++c) {
      list.push_back(node_id(rings, static_cast<long>(e) * per_pitch + c));
    }
  }

  mesh.build_locator();
  return mesh;
}

double SensorMesh::element_area(std::size_t k) const {
  const auto& t = elements_[k];
  return signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
}

Point2 SensorMesh::element_centroid(std::size_t k) const {
  const auto& t = elements_[k];
  return (nodes_[t[0]] + nodes_[t[1]] + nodes_[t[2]]) / 3.0;
}

double SensorMesh::total_area() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < elements_.size(); ++k) sum += element_area(k);
  return sum;
}

void SensorMesh::build_locator() {
  grid_n_ = std::max(8, 2 * options_.refinement_level * 8);
  grid_.assign(static_cast<std::size_t>(grid_n_) * grid_n_, {});
  auto cell = [&](double v) {
    int c = static_cast<int>(std::floor((v + 1.0) * 0.5 * grid_n_));
    return std::clamp(c, 0, grid_n_ - 1);
  };
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const auto& t = elements_[k];
    double x0 = 2, x1 = -2, y0 = 2, y1 = -2;
    for (int v : t) {
      x0 = std::min(x0, nodes_[v].x());
      x1 = std::max(x1, nodes_[v].x());
      y0 = std::min(y0, nodes_[v].y());
      y1 = std::max(y1, nodes_[v].y());
    }
    for (int cy = cell(y0); cy <= cell(y1); ++cy) {
      for (int cx = cell(x0); cx <= cell(x1); ++cx) {
        grid_[static_cast<std::size_t>(cy) * grid_n_ + cx].push_back(static_cast<int>(k));
      }
    }
  }
}

int SensorMesh::locate(const Point2& p) const {
  if (std::abs(p.x()) > 1.0 + 1e-12 || std::abs(p.y()) > 1.0 + 1e-12) return -1;
  auto cell = [&](double v) {
    int c = static_cast<int>(std::floor((v + 1.0) * 0.5 * grid_n_));
    return std::clamp(c, 0, grid_n_ - 1);
  };
  const auto& bucket = grid_[static_cast<std::size_t>(cell(p.y())) * grid_n_ + cell(p.x())];
  constexpr double tol = -1e-12;
  for (int k : bucket) {
    const auto& t = elements_[k];
    const Point2& a = nodes_[t[0]];
    const Point2& b = nodes_[t[1]];
    const Point2& c = nodes_[t[2]];
    const double area = signed_area(a, b, c);
    const double l0 = signed_area(p, b, c) / area;
    const double l1 = signed_area(a, p, c) / area;
    const double l2 = 1.0 - l0 - l1;
    if (l0 >= tol && l1 >= tol && l2 >= tol) return k;
  }
  return -1;
}

void SensorMesh::write_listing(std::ostream& os) const {
  os.precision(17);
  os << "# refinement_level " << options_.refinement_level << "\n";
  os << "nodes " << nodes_.size() << "\n";
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    os << i << ' ' << nodes_[i].x() << ' ' << nodes_[i].y() << "\n";
  }
  os << "elements " << elements_.size() << "\n";
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    os << k << ' ' << elements_[k][0] << ' ' << elements_[k][1] << ' ' << elements_[k][2] << "\n";
  }
  for (int e = 1; e <= kNumElectrodes; ++e) {
    os << "electrode " << e;
    for (int v : electrode_nodes(e)) os << ' ' << v;
    os << "\n";
  }
}

SymmetryTransform SymmetryTransform::compose(const SymmetryTransform& other) const {
  // r_a f^x r_b f^y, with f r_b = r_{-b} f.
  const int b = flip ? -other.rotation : other.rotation;
  SymmetryTransform out;
  out.rotation = ((rotation + b) % 16 + 16) % 16;
  out.flip = flip != other.flip;
  return out;
}

SymmetryTransform SymmetryTransform::inverse() const {
  if (flip) return *this;
  return rotate(-rotation);
}

Point2 SymmetryTransform::apply(const Point2& p) const {
  const double x = flip ? -p.x() : p.x();
  const double y = p.y();
  switch (rotation) {
    case 0: return {x, y};
    case 4: return {-y, x};
    case 8: return {-x, -y};
    case 12: return {y, -x};
    default: break;
  }
  const double angle = rotation * kElectrodePitchRad;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * x - s * y, s * x + c * y};
}

int SymmetryTransform::map_electrode(int e) const {
  const int mirrored = flip ? 2 - e : e;
  return wrap16(mirrored + rotation);
}

SymmetryPermutation SymmetryPermutation::compose(const SymmetryPermutation& other) const {
  SymmetryPermutation out;
  out.transform = transform.compose(other.transform);
  out.node_map.resize(other.node_map.size());
  for (std::size_t p = 0; p < node_map.size(); ++p) out.node_map[p] = node_map[other.node_map[p]];
  out.element_map.resize(other.element_map.size());
  for (std::size_t k = 0; k < element_map.size(); ++k) {
    out.element_map[k] = element_map[other.element_map[k]];
  }
  for (int e = 0; e < kNumElectrodes; ++e) {
    out.electrode_map[e] = electrode_map[other.electrode_map[e] - 1];
  }
  return out;
}

SymmetryPermutation symmetry_permutation(const SensorMesh& mesh, const SymmetryTransform& transform) {
  constexpr double match_tol = 1e-9;
  const auto& nodes = mesh.nodes();

  // Spatial hash of node positions.
  const int g = 256;
  auto cell = [&](double v) {
    int c = static_cast<int>(std::floor((v + 1.0 + 1e-6) / (2.0 + 2e-6) * g));
    return std::clamp(c, 0, g - 1);
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(g) * g);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    buckets[static_cast<std::size_t>(cell(nodes[i].y())) * g + cell(nodes[i].x())].push_back(
        static_cast<int>(i));
  }

  SymmetryPermutation perm;
  perm.transform = transform;
  perm.node_map.assign(nodes.size(), -1);
  std::vector<char> hit(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Point2 q = transform.apply(nodes[i]);
    int found = -1;
    const int cx = cell(q.x());
    const int cy = cell(q.y());
    for (int dy = -1; dy <= 1 && found < 0; ++dy) {
      for (int dx = -1; dx <= 1 && found < 0; ++dx) {
        const int x = cx + dx;
        const int y = cy + dy;
        if (x < 0 || y < 0 || x >= g || y >= g) continue;
        for (int j : buckets[static_cast<std::size_t>(y) * g + x]) {
          if ((nodes[j] - q).norm() < match_tol) {
            found = j;
            break;
          }
        }
      }
    }
    if (found < 0 || hit[found]) {
      throw SymmetryError("node " + std::to_string(i) + " has no symmetric partner under rotation " +
                          std::to_string(transform.rotation) + (transform.flip ? " with flip" : ""));
    }
    hit[found] = 1;
    perm.node_map[i] = found;
  }

  std::map<Triangle, int> by_nodes;
  const auto& elems = mesh.elements();
  for (std::size_t k = 0; k < elems.size(); ++k) {
    Triangle key = elems[k];
    std::sort(key.begin(), key.end());
    by_nodes.emplace(key, static_cast<int>(k));
  }
  perm.element_map.resize(elems.size());
  for (std::size_t k = 0; k < elems.size(); ++k) {
    Triangle key{perm.node_map[elems[k][0]], perm.node_map[elems[k][1]], perm.node_map[elems[k][2]]};
    std::sort(key.begin(), key.end());
    auto it = by_nodes.find(key);
    if (it == by_nodes.end()) {
      throw SymmetryError("element " + std::to_string(k) + " has no symmetric partner");
    }
    perm.element_map[k] = it->second;
  }

  for (int e = 1; e <= kNumElectrodes; ++e) perm.electrode_map[e - 1] = transform.map_electrode(e);
  return perm;
}

}  // namespace tacteit
