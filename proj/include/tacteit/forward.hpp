#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "tacteit/mesh.hpp"
#include "tacteit/protocol.hpp"

namespace tacteit {

inline constexpr double kDefaultExcitationCurrent = 1e-3;  // amperes

/// Piecewise-constant conductivity (S/m), one strictly positive value per element.
class ConductivityField {
 public:
  ConductivityField() = default;
  explicit ConductivityField(std::vector<double> values);

  static ConductivityField homogeneous(const SensorMesh& mesh, double value);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

 private:
  std::vector<double> values_;
};

/// Pushes a field forward through a mesh symmetry: the result at element
/// element_map[k] equals the input at element k.
ConductivityField permute_field(const ConductivityField& sigma, const SymmetryPermutation& perm);

enum class FrameForm { Raw208, NonRedundant104 };

struct MeasurementFrame {
  FrameForm form = FrameForm::NonRedundant104;
  Eigen::VectorXd values;
  double excitation_current = kDefaultExcitationCurrent;

  /// Throws FormError unless the frame has the expected form and length.
  void require(FrameForm expected) const;
};

/// Keeps the canonical representative of every reciprocal pair.
MeasurementFrame to_nonredundant(const MeasurementFrame& raw);

/// Largest |V(d,m) - V(m,d)| over reciprocal pairs of a raw frame, divided by max |V|.
double reciprocity_mismatch(const MeasurementFrame& raw);

struct JacobianMatrix {
  Eigen::MatrixXd entries;  // 104 x elements, rows in canonical order, V per (S/m)
  ConductivityField reference;
};

/// Complete-electrode-model P1 solver on a SensorMesh.
///
/// The sparsity pattern is analyzed once; each solve refactorizes for the
/// given conductivity and reuses the factorization for all 16 drive patterns.
/// Instances hold factorization state and must not be shared between threads.
/// The mesh must outlive the solver.
class ForwardSolver {
 public:
  explicit ForwardSolver(const SensorMesh& mesh, double excitation_current = kDefaultExcitationCurrent);
  ~ForwardSolver();
  ForwardSolver(ForwardSolver&&) noexcept;
  ForwardSolver& operator=(ForwardSolver&&) noexcept;

  const SensorMesh& mesh() const { return *mesh_; }
  double excitation_current() const { return current_; }

  /// Nodal (rows 0..N-1) and electrode (rows N..N+15) potentials, one column
  /// per drive pair 1..16. Electrode potentials have zero mean.
  Eigen::MatrixXd solve_potentials(const ConductivityField& sigma);

  /// Full adjacent-protocol frame (raw208).
  MeasurementFrame solve(const ConductivityField& sigma);

  /// Sensitivity of the canonical 104 measurements to each element conductivity.
  JacobianMatrix jacobian(const ConductivityField& sigma0);

 private:
  struct Impl;
  const SensorMesh* mesh_;
  double current_;
  std::unique_ptr<Impl> impl_;

  MeasurementFrame frame_from_potentials(const Eigen::MatrixXd& potentials) const;
};

/// One-shot convenience wrapper around ForwardSolver::solve.
MeasurementFrame solve_forward(const SensorMesh& mesh, const ConductivityField& sigma,
                               double excitation_current = kDefaultExcitationCurrent);

JacobianMatrix compute_jacobian(const SensorMesh& mesh, const ConductivityField& sigma0,
                                double excitation_current = kDefaultExcitationCurrent);

}  // namespace tacteit
