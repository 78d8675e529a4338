#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "tacteit/errors.hpp"
#include "tacteit/forward.hpp"
#include "tacteit/phantom.hpp"
#include "tacteit/protocol.hpp"

using namespace tacteit;
using fixtures::max_rel_error;

TEST_CASE("protocol tables") {
  int sum = 0;
  for (int i = 1; i <= 14; ++i) sum += canonical_block_length(i);
  CHECK(sum == 104);
  CHECK(canonical_order()[0] == DriveMeasure{1, 3});
  CHECK(canonical_order()[103] == DriveMeasure{14, 16});
  CHECK(raw_order()[0] == DriveMeasure{1, 3});
  // Drive 3 skips pairs 2, 3, 4.
  CHECK(raw_order()[2 * 13] == DriveMeasure{3, 1});
  CHECK(raw_order()[2 * 13 + 1] == DriveMeasure{3, 5});
  // Each unordered non-overlapping pair appears exactly once in canonical order.
  int hits = 0;
  for (int a = 1; a <= 16; ++a) {
    for (int b = 1; b <= 16; ++b) {
      if (pairs_overlap(a, b)) continue;
      const bool direct = canonical_index(a, b) >= 0;
      const bool recip = canonical_index(b, a) >= 0;
      CHECK(direct != recip);
      hits += direct;
    }
  }
  CHECK(hits == 104);
  CHECK_THROWS(raw_index(1, 2));
}

TEST_CASE("homogeneous disk: every drive row is identical") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  const auto raw = solver.solve(ConductivityField::homogeneous(mesh, 0.05));
  REQUIRE(raw.values.size() == 208);
  // Row d in cyclic measurement order d+2 .. d+14.
  auto cyclic = [&](int d, int p) { return raw.values[raw_index(d, wrap16(d + 2 + p))]; };
  for (int d = 2; d <= 16; ++d) {
    for (int p = 0; p < 13; ++p) {
      CHECK(std::abs(cyclic(d, p) - cyclic(1, p)) <= 1e-9 * std::abs(cyclic(1, p)));
    }
  }
  CHECK(reciprocity_mismatch(raw) < 1e-9);
}

TEST_CASE("reciprocity and conductivity scaling") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  std::mt19937_64 rng(11);
  const auto phantom = fixtures::random_phantom(rng, 3);
  const auto raw = solver.solve(phantom_field(mesh, phantom));
  CHECK(reciprocity_mismatch(raw) < 1e-9);
  const double v12_34 = raw.values[raw_index(1, 3)];
  const double v34_12 = raw.values[raw_index(3, 1)];
  CHECK(std::abs(v12_34 - v34_12) <= 1e-9 * std::abs(v12_34));

  // Uniform scaling of sigma and contact admittance share units only when
  // the contact term is removed, so scale the homogeneous field in a mesh
  // whose contact impedance scales inversely.
  const double c = 3.7;
  const auto base = SensorMesh::build({.refinement_level = 1, .contact_impedance = 0.01});
  const auto scaled_mesh = SensorMesh::build({.refinement_level = 1, .contact_impedance = 0.01 / c});
  const auto v0 = solve_forward(base, ConductivityField::homogeneous(base, 0.05));
  const auto v1 = solve_forward(scaled_mesh, ConductivityField::homogeneous(scaled_mesh, 0.05 * c));
  CHECK(max_rel_error(v1.values * c, v0.values) < 1e-9);
}

TEST_CASE("excitation current scales voltages linearly") {
  const auto& mesh = fixtures::mesh_level(1);
  const auto sigma = ConductivityField::homogeneous(mesh, 0.05);
  const auto a = solve_forward(mesh, sigma, 1e-3);
  const auto b = solve_forward(mesh, sigma, 2e-3);
  CHECK(max_rel_error(b.values, 2.0 * a.values) < 1e-12);
}

TEST_CASE("invalid conductivity is rejected") {
  const auto& mesh = fixtures::mesh_level(1);
  std::vector<double> v(mesh.element_count(), 0.05);
  v[10] = 0.0;
  CHECK_THROWS_AS(ConductivityField{v}, std::invalid_argument);
  ForwardSolver solver(mesh);
  CHECK_THROWS_AS(solver.solve(ConductivityField(std::vector<double>(5, 0.05))), std::invalid_argument);
  CHECK_THROWS_AS(ForwardSolver(mesh, 0.0), std::invalid_argument);
}

TEST_CASE("near-zero conductivity region is reported as solver failure") {
  const auto& mesh = fixtures::mesh_level(1);
  std::vector<double> v(mesh.element_count(), 1e-300);
  ForwardSolver solver(mesh);
  CHECK_THROWS_AS(solver.solve(ConductivityField(v)), SolverError);
}

TEST_CASE("to_nonredundant keeps the canonical representatives") {
  const auto& mesh = fixtures::mesh_level(1);
  const auto raw = solve_forward(mesh, ConductivityField::homogeneous(mesh, 0.05));
  const auto nr = to_nonredundant(raw);
  CHECK(nr.values.size() == 104);
  CHECK(nr.form == FrameForm::NonRedundant104);
  for (int n = 0; n < 104; ++n) {
    const auto dm = canonical_order()[n];
    CHECK(nr.values[n] == raw.values[raw_index(dm.drive, dm.measure)]);
  }
  CHECK_THROWS_AS(to_nonredundant(nr), FormError);
}

TEST_CASE("symmetry equivariance of the forward solve") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  std::mt19937_64 rng(5);
  const auto phantom = fixtures::random_phantom(rng, 2);
  const auto sigma = phantom_field(mesh, phantom);
  const auto base = solver.solve(sigma);
  for (const SymmetryTransform t : {SymmetryTransform{3, false}, SymmetryTransform{0, true}, SymmetryTransform{7, true}}) {
    const auto perm = symmetry_permutation(mesh, t);
    const auto moved = solver.solve(permute_field(sigma, perm));
    // V'(g d, g m) = V(d, m) on pairs; reflections reverse both pairs.
    for (int r = 0; r < 208; ++r) {
      const auto dm = raw_order()[r];
      auto pair_image = [&](int p) {
        const int a = t.map_electrode(p);
        const int b = t.map_electrode(wrap16(p + 1));
        return wrap16(b - a) == 1 ? a : b;
      };
      const double expect = base.values[r];
      const double got = moved.values[raw_index(pair_image(dm.drive), pair_image(dm.measure))];
      CHECK(std::abs(got - expect) <= 1e-8 * std::abs(expect));
    }
  }
}

TEST_CASE("Jacobian matches finite differences") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  const double s0 = 0.05;
  const auto sigma0 = ConductivityField::homogeneous(mesh, s0);
  const auto jac = solver.jacobian(sigma0);
  CHECK(jac.entries.rows() == 104);
  CHECK(jac.entries.cols() == static_cast<Eigen::Index>(mesh.element_count()));
  const auto v0 = to_nonredundant(solver.solve(sigma0)).values;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(mesh.element_count()) - 1);
  const double eps = 1e-6 * s0;
  for (int trial = 0; trial < 5; ++trial) {
    const int k = pick(rng);
    std::vector<double> v = sigma0.values();
    v[k] += eps;
    const auto v1 = to_nonredundant(solver.solve(ConductivityField(v))).values;
    const Eigen::VectorXd fd = (v1 - v0) / eps;
    const Eigen::VectorXd col = jac.entries.col(k);
    CHECK((fd - col).norm() / col.norm() < 1e-2);
  }
}

TEST_CASE("Jacobian is symmetric under rotation on the homogeneous disk") {
  const auto& mesh = fixtures::mesh_level(1);
  const auto jac = compute_jacobian(mesh, ConductivityField::homogeneous(mesh, 0.05));
  const auto perm = symmetry_permutation(mesh, SymmetryTransform::rotate(5));
  const double scale = jac.entries.cwiseAbs().maxCoeff();
  for (int r = 0; r < 104; ++r) {
    const auto dm = canonical_order()[r];
    const int d = wrap16(dm.drive + 5);
    const int m = wrap16(dm.measure + 5);
    int row = canonical_index(d, m);
    if (row < 0) row = canonical_index(m, d);
    for (std::size_t k = 0; k < mesh.element_count(); k += 7) {
      CHECK(std::abs(jac.entries(row, perm.element_map[k]) - jac.entries(r, k)) < 1e-8 * scale);
    }
  }
}

TEST_CASE("Jacobian linearization at 1% contrast") {
  const auto& mesh = fixtures::mesh_level(1);
  ForwardSolver solver(mesh);
  const auto sigma0 = ConductivityField::homogeneous(mesh, 0.05);
  const auto jac = solver.jacobian(sigma0);
  std::mt19937_64 rng(9);
  const auto phantom = fixtures::random_phantom(rng, 2);
  std::vector<double> v(mesh.element_count());
  Eigen::VectorXd dsigma(mesh.element_count());
  const auto field = phantom_field(mesh, phantom);
  for (std::size_t k = 0; k < v.size(); ++k) {
    dsigma[k] = field[k] < 0.05 ? -0.01 * 0.05 : 0.0;
    v[k] = 0.05 + dsigma[k];
  }
  const Eigen::VectorXd dv = to_nonredundant(solver.solve(ConductivityField(v))).values -
                  to_nonredundant(solver.solve(sigma0)).values;
  const Eigen::VectorXd lin = jac.entries * dsigma;
  CHECK((dv - lin).norm() / lin.norm() < 0.05);
}
