#include "tacteit/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tacteit/augment.hpp"
#include "tacteit/dataset.hpp"
#include "tacteit/eim.hpp"
#include "tacteit/forward.hpp"

namespace tacteit {

namespace {

double max_rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return ((got - want).array().abs() / want.array().abs()).maxCoeff();
}

PropertyResult make(std::string name, double measured, double tol, bool exact = false) {
  PropertyResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.tolerance = tol;
  r.passed = exact ? measured == 0.0 : measured < tol;
  return r;
}

}  // namespace

std::vector<PropertyResult> run_selftest(const SelftestOptions& options) {
  std::vector<PropertyResult> out;

  {
    int sum = 0;
    for (int i = 1; i <= 14; ++i) sum += canonical_block_length(i);
    auto r = make("counting: canonical prefix lengths sum to 104", std::abs(sum - kNonRedundantCount), 0, true);
    MeasurementFrame ones;
    ones.values = Eigen::VectorXd::Ones(kNonRedundantCount);
    const auto frames = augment_measurements(ones);
    r.passed = r.passed && frames.size() == kAugmentedCount;
    r.detail = "frames per input: " + std::to_string(frames.size());
    out.push_back(r);
  }

  {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      MeasurementFrame f;
      f.values.resize(kNonRedundantCount);
      for (auto& v : f.values) v = n(rng);
      auto c = compact_eim(f);
      if (options.fault == SelftestFault::EimTranspose) {
        c.entries = Eigen::Map<const Eigen::Matrix<double, 16, 13, Eigen::RowMajor>>(c.entries.data());
      }
      worst = std::max(worst, (eim_to_seq(c).values - f.values).cwiseAbs().maxCoeff());
      worst = std::max(worst, (eim_to_seq(seq_to_eim(f)).values - f.values).cwiseAbs().maxCoeff());
    }
    out.push_back(make("round trip: seq -> EIM -> compact -> seq is bit-exact", worst, 0, true));
  }

  {
    int violations = 0;
    for (int a = 0; a < 16; ++a) {
      const auto ta = SymmetryTransform::rotate(a);
      if (!(ta.compose(ta.inverse()) == SymmetryTransform{})) ++violations;
      for (int b = 0; b < 16; ++b) {
        if (!(ta.compose(SymmetryTransform::rotate(b)) == SymmetryTransform::rotate(a + b))) ++violations;
      }
      const auto m = SymmetryTransform::mirror();
      if (!(m.compose(ta).compose(m) == SymmetryTransform::rotate(16 - a))) ++violations;
    }
    if (!(SymmetryTransform::mirror().compose(SymmetryTransform::mirror()) == SymmetryTransform{})) ++violations;
    out.push_back(make("group laws: rotation composition and flip involution", violations, 0, true));
  }

  const SensorMesh mesh = SensorMesh::build({.refinement_level = options.refinement_level});
  ForwardSolver solver(mesh);
  std::vector<SymmetryPermutation> perms;
  for (int s = 0; s < kAugmentedCount; ++s) perms.push_back(symmetry_permutation(mesh, augmented_transform(s)));

  double recip = 0.0;
  double rot = 0.0;
  double flip = 0.0;
  for (int p = 0; p < options.phantoms; ++p) {
    const auto phantom = sample_phantom(derive_seed(options.seed, static_cast<std::uint64_t>(p), 0), 1 + p % 4);
    const auto field = phantom_field(mesh, phantom);
    const auto raw = solver.solve(field);
    recip = std::max(recip, reciprocity_mismatch(raw));
    const auto frame = to_nonredundant(raw);

    auto c = compact_eim(frame);
    if (options.fault == SelftestFault::EimTranspose) {
      c.entries = Eigen::Map<const Eigen::Matrix<double, 16, 13, Eigen::RowMajor>>(c.entries.data());
    }
    for (bool mirrored : {false, true}) {
      const FrameBlock block = mirrored ? flip_frames(c) : rotate_frames(c);
      for (int t = 0; t < kNumElectrodes; ++t) {
        const int slot = augmented_slot(block_row_transform(t, mirrored));
        const auto want = to_nonredundant(solver.solve(permute_field(field, perms[slot])));
        const double err = max_rel_error(block.row(t).transpose(), want.values);
        double& worst = mirrored ? flip : rot;
        worst = std::max(worst, err);
      }
    }
  }
  const std::string where = "refinement " + std::to_string(options.refinement_level) + ", " +
                            std::to_string(options.phantoms) + " phantoms";
  out.push_back(make("reciprocity: reciprocal pairs agree", recip, 1e-8));
  out.back().detail = where;
  out.push_back(make("oracle: rotated frames equal forward solves", rot, 1e-6));
  out.back().detail = where;
  out.push_back(make("oracle: flipped frames equal forward solves", flip, 1e-6));
  out.back().detail = where;
  return out;
}

}  // namespace tacteit
