#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "tacteit/augment.hpp"
#include "tacteit/eim.hpp"
#include "tacteit/errors.hpp"
#include "tacteit/forward.hpp"

using namespace tacteit;
using fixtures::max_rel_error;

namespace {

MeasurementFrame random_frame(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MeasurementFrame f;
  f.values.resize(104);
  for (auto& v : f.values) v = n(rng);
  return f;
}

double value_at(const MeasurementFrame& f, int d, int m) {
  int idx = canonical_index(d, m);
  if (idx < 0) idx = canonical_index(m, d);
  return f.values[idx];
}

// Literal reading of the mirror step: reverse columns within each row only.
FrameBlock flip_columns_only(const EimMatrix& c) {
  EimMatrix reversed = c;
  reversed.entries = c.entries.rowwise().reverse();
  return rotate_frames(reversed);
}

}  // namespace

TEST_CASE("rotate_frames row 0 is the canonical sequence") {
  std::mt19937_64 rng(1);
  const auto f = random_frame(rng);
  const auto block = rotate_frames(compact_eim(f));
  CHECK(Eigen::VectorXd(block.row(0).transpose()) == f.values);
  CHECK(Eigen::VectorXd(block.row(0).transpose()) == eim_to_seq(compact_eim(f)).values);
}

TEST_CASE("single-cell voltage equivalences after rotation and mirroring") {
  std::mt19937_64 rng(2);
  const auto f = random_frame(rng);
  const auto c = compact_eim(f);
  const auto rot = rotate_frames(c);
  const auto mir = flip_frames(c);
  MeasurementFrame r1;
  r1.values = rot.row(1).transpose();
  // V_(3,4)^(1,2) of the rotated frame equals V_(4,5)^(2,3) of the source.
  CHECK(value_at(r1, 1, 3) == value_at(f, 2, 4));
  MeasurementFrame m0;
  m0.values = mir.row(0).transpose();
  // V_(3,4)^(1,2) of the mirrored frame equals V_(15,14)^(1,16) = V(pair 16, pair 14).
  CHECK(value_at(m0, 1, 3) == value_at(f, 16, 14));
}

TEST_CASE("algorithmic augmentation agrees with permutation algebra") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_frame(rng);
    const auto frames = augment_measurements(f);
    REQUIRE(frames.size() == 32);
    for (int slot = 0; slot < 32; ++slot) {
      CHECK(frames[slot].values == relabel_frame(f, augmented_transform(slot)).values);
    }
  }
}

TEST_CASE("slot bookkeeping") {
  for (int slot = 0; slot < 32; ++slot) CHECK(augmented_slot(augmented_transform(slot)) == slot);
  CHECK(block_row_transform(0, false) == SymmetryTransform{0, false});
  CHECK(block_row_transform(1, false) == SymmetryTransform{15, false});
  CHECK(block_row_transform(1, true) == SymmetryTransform{15, true});
  CHECK_THROWS(augmented_transform(32));
}

TEST_CASE("group structure on descriptors") {
  std::mt19937_64 rng(4);
  const auto f = random_frame(rng);
  const auto once = augment_measurements(f);
  for (int a = 0; a < 16; a += 3) {
    const auto twice = augment_measurements(once[a]);
    for (int b = 0; b < 16; ++b) CHECK(twice[b].values == once[(a + b) % 16].values);
  }
  // flip of the flipped identity returns the source.
  const auto back = augment_measurements(once[16]);
  CHECK(back[16].values == f.values);
}

TEST_CASE("zero frame augments to zeros; count is 32") {
  MeasurementFrame z;
  z.values = Eigen::VectorXd::Zero(104);
  TouchPhantom p;
  const auto set = augment_frame(z, p, 7);
  CHECK(set.frames.size() == 32);
  CHECK(set.labels.size() == 32);
  CHECK(set.source_id == 7);
  for (const auto& fr : set.frames) CHECK(fr.values.isZero(0.0));
  CHECK(700 * set.frames.size() == 22400);
}

TEST_CASE("malformed inputs are rejected") {
  EimMatrix bad;
  bad.form = EimForm::Compact16x13;
  bad.entries = Eigen::MatrixXd::Zero(16, 12);
  CHECK_THROWS_AS(rotate_frames(bad), FormError);
  CHECK_THROWS_AS(flip_frames(seq_to_eim(MeasurementFrame{FrameForm::NonRedundant104, Eigen::VectorXd::Zero(104)})),
                  FormError);
  MeasurementFrame raw{FrameForm::Raw208, Eigen::VectorXd::Zero(208)};
  CHECK_THROWS_AS(augment_measurements(raw), FormError);
}

TEST_CASE("noise variance is preserved entrywise by augmentation") {
  // Augmentation only permutes entries, so the multiset of values is unchanged.
  std::mt19937_64 rng(8);
  const auto f = random_frame(rng);
  std::vector<double> src(f.values.begin(), f.values.end());
  std::sort(src.begin(), src.end());
  for (const auto& fr : augment_measurements(f)) {
    std::vector<double> v(fr.values.begin(), fr.values.end());
    std::sort(v.begin(), v.end());
    CHECK(v == src);
  }
}

TEST_CASE("forward oracle: augmented frames equal solves of transformed phantoms") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  std::mt19937_64 rng(21);
  const auto phantom = fixtures::random_phantom(rng, 2);
  const auto sigma = phantom_field(mesh, phantom);
  const auto frames = augment_measurements(to_nonredundant(solver.solve(sigma)));
  double worst = 0.0;
  for (int slot = 0; slot < 32; ++slot) {
    const auto perm = symmetry_permutation(mesh, augmented_transform(slot));
    const auto truth = to_nonredundant(solver.solve(permute_field(sigma, perm)));
    worst = std::max(worst, max_rel_error(frames[slot].values, truth.values));
  }
  CHECK(worst < 1e-8);

  // Pairwise distinct for a generic phantom.
  double min_dist = 1e300;
  for (int a = 0; a < 32; ++a) {
    for (int b = a + 1; b < 32; ++b) {
      min_dist = std::min(min_dist, (frames[a].values - frames[b].values).cwiseAbs().maxCoeff());
    }
  }
  CHECK(min_dist > 1e-9 * frames[0].values.cwiseAbs().maxCoeff());
}

TEST_CASE("column-only reversal does not describe a mirrored touch") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  std::mt19937_64 rng(22);
  const auto sigma = phantom_field(mesh, fixtures::random_phantom(rng, 1));
  const auto c = compact_eim(to_nonredundant(solver.solve(sigma)));
  const auto literal = flip_columns_only(c);
  // No row of the column-only variant matches any of the 16 mirrored solves.
  double best = 1e300;
  for (int k = 0; k < 16; ++k) {
    const auto truth =
        to_nonredundant(solver.solve(permute_field(sigma, symmetry_permutation(mesh, {k, true})))).values;
    for (int row = 0; row < 16; ++row) {
      best = std::min(best, max_rel_error(literal.row(row).transpose(), truth));
    }
  }
  CHECK(best > 1e-3);
}

TEST_CASE("mirror of an axis-symmetric phantom reproduces the rotations") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  TouchPhantom p;
  p.circles.push_back({{0.0, 0.5}, 0.2, 0.005});
  p.circles.push_back({{0.0, -0.4}, 0.15, 0.02});
  const auto frame = to_nonredundant(solver.solve(phantom_field(mesh, p)));
  const auto c = compact_eim(frame);
  const auto rot = rotate_frames(c);
  const auto mir = flip_frames(c);
  for (int row = 0; row < 16; ++row) {
    double best = 1e300;
    for (int other = 0; other < 16; ++other) {
      best = std::min(best, max_rel_error(mir.row(row).transpose(), rot.row(other).transpose()));
    }
    CHECK(best < 1e-8);
  }
}

TEST_CASE("analytic label transforms") {
  TouchPhantom center;
  center.circles.push_back({{0.0, 0.0}, 0.3, 0.001});
  const auto base = rasterize(center);
  for (int slot = 0; slot < 32; ++slot) {
    if (augmented_transform(slot).rotation % 4 == 0) CHECK(transform_label(center, augmented_transform(slot)) == base);
  }
  CHECK(transform_label(center, {}) == base);

  TouchPhantom east;
  east.circles.push_back({{0.6, 0.0}, 0.2, 0.001});
  const auto moved = transform_phantom(east, SymmetryTransform::rotate(4));
  CHECK(moved.circles[0].center.x() == 0.0);
  CHECK(moved.circles[0].center.y() == 0.6);
  CHECK(moved.circles[0].radius == 0.2);
  TouchPhantom north;
  north.circles.push_back({{0.0, 0.6}, 0.2, 0.001});
  CHECK(transform_label(east, SymmetryTransform::rotate(4)) == rasterize(north));
}

TEST_CASE("raster label transform falls back to bilinear rotation") {
  TouchPhantom east;
  east.circles.push_back({{0.5, 0.1}, 0.2, 0.001});
  const auto img = rasterize(east);
  // Quarter turns and the mirror land on pixel centers, so they are exact.
  for (const SymmetryTransform t : {SymmetryTransform{4, false}, SymmetryTransform{8, true}, SymmetryTransform{0, true}}) {
    CHECK(transform_label(img, t) == transform_label(east, t));
  }
  // Off-grid rotations agree with the analytic label away from edges.
  const auto t = SymmetryTransform::rotate(3);
  const auto raster = transform_label(img, t);
  const auto analytic = transform_label(east, t);
  const double diff = (raster.pixels() - analytic.pixels()).cwiseAbs().sum();
  CHECK(diff / analytic.pixels().sum() < 0.2);
  CHECK(raster.pixels().sum() == doctest::Approx(analytic.pixels().sum()).epsilon(0.1));
}
