#include "tacteit/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "tacteit/errors.hpp"

namespace tacteit {

ConductivityField::ConductivityField(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || !std::isfinite(values_[k])) {
      throw std::invalid_argument("conductivity must be finite and > 0 (element " + std::to_string(k) +
                                  ")");
    }
  }
}

ConductivityField ConductivityField::homogeneous(const SensorMesh& mesh, double value) {
  return ConductivityField(std::vector<double>(mesh.element_count(), value));
}

ConductivityField permute_field(const ConductivityField& sigma, const SymmetryPermutation& perm) {
  if (sigma.size() != perm.element_map.size()) {
    throw std::invalid_argument("field/permutation size mismatch");
  }
  std::vector<double> out(sigma.size());
  for (std::size_t k = 0; k < sigma.size(); ++k) out[perm.element_map[k]] = sigma[k];
  return ConductivityField(std::move(out));
}

void MeasurementFrame::require(FrameForm expected) const {
  const Eigen::Index n = expected == FrameForm::Raw208 ? kRawCount : kNonRedundantCount;
  if (form != expected || values.size() != n) {
    throw FormError(std::string("expected a ") + (expected == FrameForm::Raw208 ? "raw208" : "nonredundant104") +
                    " frame");
  }
}

MeasurementFrame to_nonredundant(const MeasurementFrame& raw) {
  raw.require(FrameForm::Raw208);
  MeasurementFrame out;
  out.form = FrameForm::NonRedundant104;
  out.excitation_current = raw.excitation_current;
  out.values.resize(kNonRedundantCount);
  const auto& order = canonical_order();
  for (int n = 0; n < kNonRedundantCount; ++n) {
    out.values[n] = raw.values[raw_index(order[n].drive, order[n].measure)];
  }
  return out;
}

double reciprocity_mismatch(const MeasurementFrame& raw) {
  raw.require(FrameForm::Raw208);
  const double scale = raw.values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& dm : canonical_order()) {
    const double a = raw.values[raw_index(dm.drive, dm.measure)];
    const double b = raw.values[raw_index(dm.measure, dm.drive)];
    worst = std::max(worst, std::abs(a - b));
  }
  return worst / scale;
}

struct ForwardSolver::Impl {
  using SpMat = Eigen::SparseMatrix<double>;

  std::size_t nodes = 0;
  // Per element: barycentric gradients (3x2) and area.
  std::vector<Eigen::Matrix<double, 3, 2>> grads;
  std::vector<double> areas;
  // Conductivity-independent part: electrode coupling and ground penalty.
  std::vector<Eigen::Triplet<double>> fixed;
  SpMat matrix;
  // Value slot in `matrix` for every (element, local i, local j) stiffness contribution.
  std::vector<std::array<int, 9>> slots;
  std::vector<double> fixed_values;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Eigen::MatrixXd rhs;
};

ForwardSolver::ForwardSolver(const SensorMesh& mesh, double excitation_current)
    : mesh_(&mesh), current_(excitation_current), impl_(std::make_unique<Impl>()) {
  if (!(excitation_current > 0.0)) throw std::invalid_argument("excitation_current must be > 0");
  auto& im = *impl_;
  const auto& nodes = mesh.nodes();
  const auto& elems = mesh.elements();
  im.nodes = nodes.size();
  const int n = static_cast<int>(im.nodes);
  const int size = n + kNumElectrodes;

  im.grads.resize(elems.size());
  im.areas.resize(elems.size());
  for (std::size_t k = 0; k < elems.size(); ++k) {
    const auto& t = elems[k];
    Eigen::Matrix3d m;
    for (int v = 0; v < 3; ++v) m.row(v) << 1.0, nodes[t[v]].x(), nodes[t[v]].y();
    const Eigen::Matrix3d inv = m.inverse();
    im.grads[k] = inv.bottomRows<2>().transpose();
    im.areas[k] = mesh.element_area(k);
  }

  const double z = mesh.contact_impedance();
  double diag_sum = 0.0;
  for (int e = 1; e <= kNumElectrodes; ++e) {
    const auto& list = mesh.electrode_nodes(e);
    const int col = n + e - 1;
    double length = 0.0;
    for (std::size_t s = 0; s + 1 < list.size(); ++s) {
      const int a = list[s];
      const int b = list[s + 1];
      const double h = (nodes[a] - nodes[b]).norm();
      length += h;
      im.fixed.emplace_back(a, a, h / (3.0 * z));
      im.fixed.emplace_back(b, b, h / (3.0 * z));
      im.fixed.emplace_back(a, b, h / (6.0 * z));
      im.fixed.emplace_back(b, a, h / (6.0 * z));
      im.fixed.emplace_back(a, col, -h / (2.0 * z));
      im.fixed.emplace_back(col, a, -h / (2.0 * z));
      im.fixed.emplace_back(b, col, -h / (2.0 * z));
      im.fixed.emplace_back(col, b, -h / (2.0 * z));
    }
    im.fixed.emplace_back(col, col, length / z);
    diag_sum += length / z;
  }
  // Rank-one penalty on the electrode block pins the mean electrode potential
  // to zero without changing the solution of the consistent singular system.
  const double penalty = diag_sum / kNumElectrodes;
  for (int a = 0; a < kNumElectrodes; ++a) {
    for (int b = 0; b < kNumElectrodes; ++b) im.fixed.emplace_back(n + a, n + b, penalty);
  }

  // Build the pattern with unit stiffness placeholders, then record value slots.
  std::vector<Eigen::Triplet<double>> pattern = im.fixed;
  for (const auto& t : elems) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) pattern.emplace_back(t[i], t[j], 0.0);
    }
  }
  im.matrix.resize(size, size);
  im.matrix.setFromTriplets(pattern.begin(), pattern.end());
  im.matrix.makeCompressed();

  auto slot_of = [&](int row, int col) {
    const int* outer = im.matrix.outerIndexPtr();
    const int* inner = im.matrix.innerIndexPtr();
    const int* begin = inner + outer[col];
    const int* end = inner + outer[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    return static_cast<int>(it - inner);
  };
  im.slots.resize(elems.size());
  for (std::size_t k = 0; k < elems.size(); ++k) {
    const auto& t = elems[k];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) im.slots[k][3 * i + j] = slot_of(t[i], t[j]);
    }
  }
  im.fixed_values.assign(im.matrix.nonZeros(), 0.0);
  for (const auto& tr : im.fixed) im.fixed_values[slot_of(tr.row(), tr.col())] += tr.value();

  im.ldlt.analyzePattern(im.matrix);

  im.rhs = Eigen::MatrixXd::Zero(size, kNumElectrodes);
  for (int d = 1; d <= kNumElectrodes; ++d) {
    im.rhs(n + d - 1, d - 1) += current_;
    im.rhs(n + wrap16(d + 1) - 1, d - 1) -= current_;
  }
}

ForwardSolver::~ForwardSolver() = default;
ForwardSolver::ForwardSolver(ForwardSolver&&) noexcept = default;
ForwardSolver& ForwardSolver::operator=(ForwardSolver&&) noexcept = default;

Eigen::MatrixXd ForwardSolver::solve_potentials(const ConductivityField& sigma) {
  auto& im = *impl_;
  if (sigma.size() != mesh_->element_count()) {
    throw std::invalid_argument("conductivity field does not match mesh element count");
  }
  double* values = im.matrix.valuePtr();
  std::copy(im.fixed_values.begin(), im.fixed_values.end(), values);
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const Eigen::Matrix3d local = (sigma[k] * im.areas[k]) * (im.grads[k] * im.grads[k].transpose());
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) values[im.slots[k][3 * i + j]] += local(i, j);
    }
  }
  im.ldlt.factorize(im.matrix);
  if (im.ldlt.info() != Eigen::Success) {
    throw SolverError("forward system factorization failed");
  }
  const auto& d = im.ldlt.vectorD();
  if (d.minCoeff() <= 1e-14 * d.maxCoeff()) {
    throw SolverError("forward system is singular (non-conducting region?)");
  }
  Eigen::MatrixXd x = im.ldlt.solve(im.rhs);
  if (im.ldlt.info() != Eigen::Success || !x.allFinite()) {
    throw SolverError("forward solve produced non-finite potentials");
  }
  return x;
}

MeasurementFrame ForwardSolver::frame_from_potentials(const Eigen::MatrixXd& potentials) const {
  const Eigen::Index n = static_cast<Eigen::Index>(impl_->nodes);
  MeasurementFrame frame;
  frame.form = FrameForm::Raw208;
  frame.excitation_current = current_;
  frame.values.resize(kRawCount);
  const auto& order = raw_order();
  for (int r = 0; r < kRawCount; ++r) {
    const int d = order[r].drive;
    const int m = order[r].measure;
    frame.values[r] = potentials(n + m - 1, d - 1) - potentials(n + wrap16(m + 1) - 1, d - 1);
  }
  return frame;
}

MeasurementFrame ForwardSolver::solve(const ConductivityField& sigma) {
  return frame_from_potentials(solve_potentials(sigma));
}

JacobianMatrix ForwardSolver::jacobian(const ConductivityField& sigma0) {
  const Eigen::MatrixXd u = solve_potentials(sigma0);
  const auto& im = *impl_;
  const auto& elems = mesh_->elements();
  const std::size_t ne = elems.size();

  // Element gradients of every drive pattern: grad[k] is 2 x 16.
  std::vector<Eigen::Matrix<double, 2, kNumElectrodes>> grad(ne);
  for (std::size_t k = 0; k < ne; ++k) {
    Eigen::Matrix<double, 3, kNumElectrodes> local;
    for (int v = 0; v < 3; ++v) local.row(v) = u.row(elems[k][v]);
    grad[k] = im.grads[k].transpose() * local;
  }

  JacobianMatrix jac;
  jac.reference = sigma0;
  jac.entries.resize(kNonRedundantCount, static_cast<Eigen::Index>(ne));
  const auto& order = canonical_order();
  // The measurement field is the drive field of the measurement pair at unit current.
  const double scale = 1.0 / current_;
  for (int r = 0; r < kNonRedundantCount; ++r) {
    const int d = order[r].drive - 1;
    const int m = order[r].measure - 1;
    for (std::size_t k = 0; k < ne; ++k) {
      jac.entries(r, static_cast<Eigen::Index>(k)) =
          -scale * im.areas[k] * grad[k].col(d).dot(grad[k].col(m));
    }
  }
  return jac;
}

MeasurementFrame solve_forward(const SensorMesh& mesh, const ConductivityField& sigma, double excitation_current) {
  ForwardSolver solver(mesh, excitation_current);
  return solver.solve(sigma);
}

JacobianMatrix compute_jacobian(const SensorMesh& mesh, const ConductivityField& sigma0, double excitation_current) {
  ForwardSolver solver(mesh, excitation_current);
  return solver.jacobian(sigma0);
}

}  // namespace tacteit
