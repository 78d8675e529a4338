// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "tacteit/augment.hpp"
#include "tacteit/dataset.hpp"
#include "tacteit/eim.hpp"
#include "tacteit/forward.hpp"
#include "tacteit/inverse.hpp"

using namespace tacteit;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail, Clock::time_point start) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s  %-28s %s  [%.1fs]\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int random_count(std::mt19937_64& rng) { return std::uniform_int_distribution<int>(1, 4)(rng); }

void oracle_equivalence() {
  const auto start = Clock::now();
  const auto& mesh = fixtures::mesh_level(2);
  ForwardSolver solver(mesh);
  std::mt19937_64 rng(501);
  double worst = 0.0;
  for (int p = 0; p < 50; ++p) {
    const auto phantom = fixtures::random_phantom(rng, random_count(rng));
    const auto frame = to_nonredundant(solver.solve(phantom_field(mesh, phantom)));
    const auto set = augment_frame(frame, phantom);
    for (int s = 0; s < kAugmentedCount; ++s) {
      const auto moved = transform_phantom(phantom, set.transforms[s]);
      const auto want = to_nonredundant(solver.solve(phantom_field(mesh, moved)));
      worst = std::max(worst, fixtures::max_rel_error(set.frames[s].values, want.values));
    }
  }
  report(worst < 1e-6, "oracle equivalence",
         fmt("50 phantoms x 32 frames, refinement 2: max entrywise rel err %.3g (< 1e-6)", worst), start);
}

void reciprocity() {
  const auto start = Clock::now();
  const auto& mesh = fixtures::mesh_level(2);
  ForwardSolver solver(mesh);
  std::mt19937_64 rng(502);
  double worst = 0.0;
  for (int p = 0; p < 100; ++p) {
    const auto raw = solver.solve(phantom_field(mesh, fixtures::random_phantom(rng, random_count(rng))));
    const auto& order = raw_order();
    for (int r = 0; r < kRawCount; ++r) {
      for (int q = 0; q < kRawCount; ++q) {
        if (order[q].drive == order[r].measure && order[q].measure == order[r].drive) {
          worst = std::max(worst, std::abs(raw.values[r] - raw.values[q]) / std::abs(raw.values[r]));
        }
      }
    }
  }
  report(worst < 1e-8, "reciprocity", fmt("100 phantoms: max reciprocal-pair rel mismatch %.3g (< 1e-8)", worst),
         start);
}

void counting_and_round_trips() {
  const auto start = Clock::now();
  int prefix = 0;
  for (int i = 1; i <= 14; ++i) prefix += std::min(13, 15 - i);
  bool ok = prefix == kNonRedundantCount && canonical_order().size() == static_cast<std::size_t>(prefix);
  int lengths_ok = 0;
  for (int i = 1; i <= 14; ++i) lengths_ok += canonical_block_length(i) == std::min(13, 15 - i);
  ok = ok && lengths_ok == 14;

  std::mt19937_64 rng(503);
  std::normal_distribution<double> n(0.0, 1.0);
  int trips = 0;
  bool exact = true;
  bool compose_exact = true;
  for (int t = 0; t < 20; ++t) {
    MeasurementFrame f;
    f.values.resize(kNonRedundantCount);
    for (auto& v : f.values) v = n(rng);
    const auto padded = seq_to_eim(f);
    const auto full = reciprocity_complete(padded);
    const auto c = compact(full);
    exact = exact && eim_to_seq(padded).values == f.values && eim_to_seq(full).values == f.values &&
            eim_to_seq(c).values == f.values;
    ++trips;

    const auto frames = augment_measurements(f);
    ok = ok && frames.size() == kAugmentedCount;
    for (int b = 0; b < kAugmentedCount; ++b) {
      const auto twice = augment_measurements(frames[b]);
      for (int a = 0; a < kAugmentedCount; ++a) {
        const int slot = augmented_slot(augmented_transform(a).compose(augmented_transform(b)));
        compose_exact = compose_exact && twice[a].values == frames[slot].values;
      }
    }
  }
  const auto m = SymmetryTransform::mirror();
  bool laws = m.compose(m) == SymmetryTransform{};
  for (int a = 0; a < 16; ++a) {
    for (int b = 0; b < 16; ++b) {
      laws = laws && SymmetryTransform::rotate(a).compose(SymmetryTransform::rotate(b)) == SymmetryTransform::rotate(a + b);
    }
    laws = laws && m.compose(SymmetryTransform::rotate(a)).compose(m) == SymmetryTransform::rotate(-a);
  }
  const bool pass = ok && exact && compose_exact && laws;
  report(pass, "counting and round trips",
         std::string("104 prefix sum ") + (ok ? "ok" : "BAD") + ", " + std::to_string(trips) +
             " round trips bit-exact " + (exact ? "yes" : "NO") + ", 32x32 frame compositions exact " +
             (compose_exact ? "yes" : "NO") + ", group laws " + (laws ? "ok" : "BAD"),
         start);
}

void jacobian() {
  const auto start = Clock::now();
  const auto& mesh = fixtures::mesh_level(2);
  ForwardSolver solver(mesh);
  const auto bg = ConductivityField::homogeneous(mesh, kBackgroundConductivity);
  const auto jac = solver.jacobian(bg);
  std::mt19937_64 rng(504);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(mesh.element_count()) - 1);
  double worst_fd = 0.0;
  for (int c = 0; c < 24; ++c) {
    const int k = pick(rng);
    const double h = 1e-4 * kBackgroundConductivity;
    std::vector<double> plus = bg.values(), minus = bg.values();
    plus[k] += h;
    minus[k] -= h;
    const Eigen::VectorXd fd = (to_nonredundant(solver.solve(ConductivityField{plus})).values -
                                to_nonredundant(solver.solve(ConductivityField{minus})).values) /
                               (2.0 * h);
    worst_fd = std::max(worst_fd, (fd - jac.entries.col(k)).norm() / jac.entries.col(k).norm());
  }

  const Eigen::VectorXd v0 = to_nonredundant(solver.solve(bg)).values;
  double worst_lin = 0.0;
  for (int p = 0; p < 10; ++p) {
    auto phantom = fixtures::random_phantom(rng, random_count(rng));
    for (auto& c : phantom.circles) c.conductivity = 0.99 * kBackgroundConductivity;
    const auto field = phantom_field(mesh, phantom);
    const Eigen::VectorXd dv = to_nonredundant(solver.solve(field)).values - v0;
    Eigen::VectorXd ds(static_cast<Eigen::Index>(field.size()));
    for (std::size_t e = 0; e < field.size(); ++e) ds[static_cast<Eigen::Index>(e)] = field[e] - bg[e];
    const Eigen::VectorXd lin = jac.entries * ds;
    worst_lin = std::max(worst_lin, (dv - lin).norm() / dv.norm());
  }
  report(worst_fd < 1e-2 && worst_lin < 0.05, "Jacobian correctness",
         fmt("24 FD columns: max rel err %.3g (< 1e-2); 1%% contrast linearity residual %.3g (< 0.05)", worst_fd,
             worst_lin),
         start);
}

void reconstruction() {
  const auto start = Clock::now();
  const auto& mesh = fixtures::mesh_level(2);
  ForwardSolver solver(mesh);
  const auto bg = ConductivityField::homogeneous(mesh, kBackgroundConductivity);
  const Reconstructor rec(mesh, solver.jacobian(bg));
  const Eigen::VectorXd v0 = to_nonredundant(solver.solve(bg)).values;
  int hits = 0;
  double cc50 = 0.0, cc30 = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto phantom = sample_phantom(derive_seed(505, i, 0), 1);
    MeasurementFrame dv = to_nonredundant(solver.solve(phantom_field(mesh, phantom)));
    dv.values -= v0;
    const auto gt = rasterize(phantom);
    const auto r50 = rec.reconstruct(add_awgn(dv, 50.0, derive_seed(505, i, 1)));
    const auto r30 = rec.reconstruct(add_awgn(dv, 30.0, derive_seed(505, i, 1)));
    hits += (peak_location(r50.raw) - phantom.circles[0].center).norm() <= 0.15;
    cc50 += correlation_coefficient(r50.raw, gt) / 100.0;
    cc30 += correlation_coefficient(r30.raw, gt) / 100.0;
  }
  report(hits >= 90 && cc50 > cc30, "reconstruction sanity",
         fmt("peak within 0.15 radii in %.0f/100 (>= 90); mean CC %.4f at 50 dB vs %.4f at 30 dB", hits, cc50, cc30),
         start);
}

void awgn_calibration() {
  const auto start = Clock::now();
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  const Eigen::VectorXd v0 =
      to_nonredundant(solver.solve(ConductivityField::homogeneous(mesh, kBackgroundConductivity))).values;
  std::mt19937_64 rng(506);
  std::vector<MeasurementFrame> frames;
  for (int p = 0; p < 100; ++p) {
    auto f = to_nonredundant(solver.solve(phantom_field(mesh, fixtures::random_phantom(rng, random_count(rng)))));
    f.values -= v0;
    frames.push_back(f);
  }
  std::string detail;
  bool ok = true;
  for (double target : {50.0, 30.0}) {
    double signal = 0.0, noise = 0.0;
    for (std::uint64_t k = 0; k < 10000; ++k) {
      const auto& f = frames[k % frames.size()];
      const auto noisy = add_awgn(f, target, derive_seed(506, k, static_cast<std::uint64_t>(target)));
      signal += f.values.squaredNorm();
      noise += (noisy.values - f.values).squaredNorm();
    }
    const double snr = 10.0 * std::log10(signal / noise);
    ok = ok && std::abs(snr - target) <= 0.2;
    detail += fmt("target %.0f dB -> %.3f dB; ", target, snr);
  }
  report(ok, "AWGN calibration", detail + "10000 frames each (within +-0.2 dB)", start);
}

}  // namespace

int main() {
  oracle_equivalence();
  reciprocity();
  counting_and_round_trips();
  jacobian();
  reconstruction();
  awgn_calibration();
  std::printf("%d of 6 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
