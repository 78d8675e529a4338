#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tacteit/forward.hpp"
#include "tacteit/mesh.hpp"
#include "tacteit/phantom.hpp"

namespace tacteit {

enum class Regularizer { Identity, Noser, Laplacian };

std::string to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& s);

/// Frozen from an L-curve sweep on a noise-free calibration set (see `tacteit calibrate`).
inline constexpr double kDefaultTau = 1e-2;

struct ReconstructionConfig {
  /// Dimensionless; the penalty applied is tau * mean(diag(J^T J)) * P, with P scaled to unit mean diagonal.
  double tau = kDefaultTau;
  Regularizer regularizer = Regularizer::Noser;

  void validate() const;
};

/// Penalty matrix P = R^T R on elements, normalized to mean diagonal 1.
///
/// Identity: P = I. Noser: diagonal P = diag(J^T J)^0.5, which offsets the
/// stronger sensitivity of elements near the electrodes. Laplacian: L^T L for
/// the shared-edge element graph plus a small identity term.
Eigen::MatrixXd regularization_matrix(const SensorMesh& mesh, const JacobianMatrix& jacobian, Regularizer r);

struct Reconstruction {
  Eigen::VectorXd delta_sigma;  // per element, S/m
  LabelImage raw;               // -delta_sigma at pixel centers, before normalization
  LabelImage image;             // raw clamped at 0 and scaled to max 1
};

/// One-step linear reconstruction with a precomputed reconstruction matrix.
/// Thread-safe for concurrent reconstruct() calls.
class Reconstructor {
 public:
  Reconstructor(const SensorMesh& mesh, const JacobianMatrix& jacobian, ReconstructionConfig config = {});

  const ReconstructionConfig& config() const { return config_; }
  /// Argmin |J ds - dv|^2 + tau_eff ds^T P ds.
  Eigen::VectorXd solve(const MeasurementFrame& dv) const;
  Reconstruction reconstruct(const MeasurementFrame& dv) const;
  /// Samples -delta_sigma at the 64x64 pixel centers; 0 outside the disk.
  LabelImage to_image(const Eigen::VectorXd& delta_sigma) const;

 private:
  ReconstructionConfig config_;
  Eigen::MatrixXd operator_;          // elements x 104
  std::vector<int> pixel_element_;    // -1 outside the disk
};

LabelImage reconstruct(const SensorMesh& mesh, const JacobianMatrix& jacobian, const MeasurementFrame& dv,
                       const ReconstructionConfig& config = {});

/// Clamps at 0 and divides by the maximum; an image with no positive pixel becomes all zero.
LabelImage normalize_image(const LabelImage& img);

/// Pixel-center coordinates of the maximum (first in row-major order on ties).
Point2 peak_location(const LabelImage& img);

/// Pearson correlation over all pixels; 0 if either image is constant.
double correlation_coefficient(const LabelImage& a, const LabelImage& b);
/// |est - gt| / |gt| in the Euclidean norm. Throws std::invalid_argument if gt is zero.
double relative_error(const LabelImage& est, const LabelImage& gt);
/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), L = 1, mean over fully interior windows.
double ssim(const LabelImage& est, const LabelImage& gt);

struct MetricsReport {
  double cc = 0.0;
  double re = 0.0;
  double ssim = 0.0;
};

/// CC on the raw reconstruction, RE and SSIM on the normalized one.
MetricsReport evaluate(const Reconstruction& r, const LabelImage& gt);

struct LCurvePoint {
  double tau = 0.0;
  double residual_norm = 0.0;  // sum over frames of |J ds - dv|^2, square-rooted
  double penalty_norm = 0.0;   // sum over frames of ds^T P ds, square-rooted
};

std::vector<LCurvePoint> l_curve(const SensorMesh& mesh, const JacobianMatrix& jacobian,
                                 const std::vector<MeasurementFrame>& frames, const std::vector<double>& taus,
                                 Regularizer regularizer);
/// Tau at the point of maximum curvature of the log-log curve.
double l_curve_corner(const std::vector<LCurvePoint>& points);

/// 8-bit binary PGM with panels side by side, each panel scaled so its own
/// maximum maps to 255 (negative values clamp to 0). Panels are separated by a 2-pixel gap.
void write_pgm(const std::filesystem::path& path, const std::vector<LabelImage>& panels);

}  // namespace tacteit
