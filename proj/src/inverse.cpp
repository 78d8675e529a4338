#include "tacteit/inverse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "tacteit/errors.hpp"

namespace tacteit {

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::Identity: return "identity";
    case Regularizer::Noser: return "noser";
    case Regularizer::Laplacian: return "laplacian";
  }
  return "identity";
}

Regularizer regularizer_from_string(const std::string& s) {
  if (s == "identity") return Regularizer::Identity;
  if (s == "noser") return Regularizer::Noser;
  if (s == "laplacian") return Regularizer::Laplacian;
  throw std::invalid_argument("unknown regularizer '" + s + "' (expected identity, noser or laplacian)");
}

void ReconstructionConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive and finite");
}

Eigen::MatrixXd regularization_matrix(const SensorMesh& mesh, const JacobianMatrix& jacobian, Regularizer r) {
  const auto ne = static_cast<Eigen::Index>(mesh.element_count());
  if (jacobian.entries.cols() != ne) throw std::invalid_argument("Jacobian does not match the mesh");
  if (r == Regularizer::Identity) return Eigen::MatrixXd::Identity(ne, ne);
  if (r == Regularizer::Noser) {
    Eigen::VectorXd w = jacobian.entries.colwise().squaredNorm().transpose().cwiseSqrt();
    w /= w.mean();
    return w.asDiagonal();
  }

  std::map<std::pair<int, int>, std::vector<int>> edges;
  const auto& elems = mesh.elements();
  for (std::size_t k = 0; k < elems.size(); ++k) {
    for (int a = 0; a < 3; ++a) {
      const int u = elems[k][a];
      const int v = elems[k][(a + 1) % 3];
      edges[{std::min(u, v), std::max(u, v)}].push_back(static_cast<int>(k));
    }
  }
  // Graph Laplacian D - A of the element adjacency; L^T L for L = D - A.
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(ne, ne);
  for (const auto& [edge, owners] : edges) {
    if (owners.size() != 2) continue;
    const int i = owners[0];
    const int j = owners[1];
    lap(i, i) += 1.0;
    lap(j, j) += 1.0;
    lap(i, j) -= 1.0;
    lap(j, i) -= 1.0;
  }
  Eigen::MatrixXd p = lap.transpose() * lap;
  p.diagonal().array() += 1e-3 * p.diagonal().mean();
  p /= p.diagonal().mean();
  return p;
}

Reconstructor::Reconstructor(const SensorMesh& mesh, const JacobianMatrix& jacobian, ReconstructionConfig config)
    : config_(config) {
  config_.validate();
  const Eigen::MatrixXd& j = jacobian.entries;
  const auto ne = static_cast<Eigen::Index>(mesh.element_count());
  if (j.rows() != kNonRedundantCount || j.cols() != ne) {
    throw std::invalid_argument("Jacobian must be 104 x element_count for this mesh");
  }
  Eigen::MatrixXd a = j.transpose() * j;
  const double scale = a.diagonal().mean();
  a += (config_.tau * scale) * regularization_matrix(mesh, jacobian, config_.regularizer);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    std::ostringstream msg;
    msg << "regularized normal equations are ill-conditioned (rcond " << llt.rcond() << "); increase tau above "
        << config_.tau;
    throw SolverError(msg.str());
  }
  operator_ = llt.solve(j.transpose());

  pixel_element_.assign(kImageSize * kImageSize, -1);
  for (int r = 0; r < kImageSize; ++r) {
    for (int c = 0; c < kImageSize; ++c) {
      const Point2 p = LabelImage::pixel_center(r, c);
      if (p.norm() > 1.0) continue;
      int k = mesh.locate(p);
      if (k < 0) {
        // Between the polygonal boundary and the unit circle: nearest centroid.
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
          const double d = (mesh.element_centroid(e) - p).squaredNorm();
          if (d < best) {
            best = d;
            k = static_cast<int>(e);
          }
        }
      }
      pixel_element_[static_cast<std::size_t>(r * kImageSize + c)] = k;
    }
  }
}

Eigen::VectorXd Reconstructor::solve(const MeasurementFrame& dv) const {
  dv.require(FrameForm::NonRedundant104);
  return operator_ * dv.values;
}

LabelImage Reconstructor::to_image(const Eigen::VectorXd& delta_sigma) const {
  if (delta_sigma.size() != operator_.rows()) throw std::invalid_argument("delta_sigma has the wrong length");
  LabelImage img;
  for (int i = 0; i < kImageSize * kImageSize; ++i) {
    const int k = pixel_element_[static_cast<std::size_t>(i)];
    img.pixels().data()[i] = k < 0 ? 0.0 : -delta_sigma[k];
  }
  return img;
}

Reconstruction Reconstructor::reconstruct(const MeasurementFrame& dv) const {
  Reconstruction out;
  out.delta_sigma = solve(dv);
  out.raw = to_image(out.delta_sigma);
  out.image = normalize_image(out.raw);
  return out;
}

LabelImage reconstruct(const SensorMesh& mesh, const JacobianMatrix& jacobian, const MeasurementFrame& dv,
                       const ReconstructionConfig& config) {
  return Reconstructor(mesh, jacobian, config).reconstruct(dv).image;
}

LabelImage normalize_image(const LabelImage& img) {
  LabelImage out(img.pixels().cwiseMax(0.0));
  const double peak = out.pixels().maxCoeff();
  if (peak > 0.0) out.pixels() /= peak;
  else out.pixels().setZero();
  return out;
}

Point2 peak_location(const LabelImage& img) {
  Eigen::Index r = 0, c = 0;
  img.pixels().maxCoeff(&r, &c);
  return LabelImage::pixel_center(static_cast<int>(r), static_cast<int>(c));
}

double correlation_coefficient(const LabelImage& a, const LabelImage& b) {
  auto constant = [](const LabelImage& m) { return m.pixels().maxCoeff() == m.pixels().minCoeff(); };
  if (constant(a) || constant(b)) return 0.0;
  const Eigen::ArrayXd x = a.pixels().reshaped<Eigen::RowMajor>().array() - a.pixels().mean();
  const Eigen::ArrayXd y = b.pixels().reshaped<Eigen::RowMajor>().array() - b.pixels().mean();
  const double sx = std::sqrt((x * x).sum());
  const double sy = std::sqrt((y * y).sum());
  if (sx == 0.0 || sy == 0.0) return 0.0;
  return std::clamp((x * y).sum() / (sx * sy), -1.0, 1.0);
}

double relative_error(const LabelImage& est, const LabelImage& gt) {
  const double g = gt.pixels().norm();
  if (g == 0.0) throw std::invalid_argument("relative_error: ground truth is identically zero");
  return (est.pixels() - gt.pixels()).norm() / g;
}

double ssim(const LabelImage& est, const LabelImage& gt) {
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  std::array<double, kWin> g{};
  double total = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;

  const auto& x = est.pixels();
  const auto& y = gt.pixels();
  const int n = kImageSize - kWin + 1;
  double sum = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (int i = 0; i < kWin; ++i) {
        for (int j = 0; j < kWin; ++j) {
          const double w = g[i] * g[j];
          const double a = x(r + i, c + j);
          const double b = y(r + i, c + j);
          mx += w * a;
          my += w * b;
          xx += w * a * a;
          yy += w * b * b;
          xy += w * a * b;
        }
      }
      const double vx = xx - mx * mx;
      const double vy = yy - my * my;
      const double cov = xy - mx * my;
      sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return sum / (n * n);
}

MetricsReport evaluate(const Reconstruction& r, const LabelImage& gt) {
  return {correlation_coefficient(r.raw, gt), relative_error(r.image, gt), ssim(r.image, gt)};
}

std::vector<LCurvePoint> l_curve(const SensorMesh& mesh, const JacobianMatrix& jacobian,
                                 const std::vector<MeasurementFrame>& frames, const std::vector<double>& taus,
                                 Regularizer regularizer) {
  const Eigen::MatrixXd p = regularization_matrix(mesh, jacobian, regularizer);
  std::vector<LCurvePoint> out;
  for (double tau : taus) {
    const Reconstructor rec(mesh, jacobian, {tau, regularizer});
    LCurvePoint pt{tau, 0.0, 0.0};
    for (const auto& f : frames) {
      const Eigen::VectorXd ds = rec.solve(f);
      pt.residual_norm += (jacobian.entries * ds - f.values).squaredNorm();
      pt.penalty_norm += ds.dot(p * ds);
    }
    pt.residual_norm = std::sqrt(pt.residual_norm);
    pt.penalty_norm = std::sqrt(pt.penalty_norm);
    out.push_back(pt);
  }
  return out;
}

double l_curve_corner(const std::vector<LCurvePoint>& points) {
  if (points.size() < 3) throw std::invalid_argument("l_curve_corner needs at least 3 points");
  // Curvature of (log rho, log eta) parametrized by log tau, by finite differences.
  double best_kappa = -std::numeric_limits<double>::infinity();
  double best_tau = points[1].tau;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const auto& a = points[i - 1];
    const auto& b = points[i];
    const auto& c = points[i + 1];
    const double h1 = std::log(b.tau) - std::log(a.tau);
    const double h2 = std::log(c.tau) - std::log(b.tau);
    auto d1 = [&](double fa, double, double fc) { return (fc - fa) / (h1 + h2); };
    auto d2 = [&](double fa, double fb, double fc) {
      return 2.0 * ((fc - fb) / h2 - (fb - fa) / h1) / (h1 + h2);
    };
    const double xa = std::log(a.residual_norm), xb = std::log(b.residual_norm), xc = std::log(c.residual_norm);
    const double ya = std::log(a.penalty_norm), yb = std::log(b.penalty_norm), yc = std::log(c.penalty_norm);
    const double x1 = d1(xa, xb, xc), x2 = d2(xa, xb, xc);
    const double y1 = d1(ya, yb, yc), y2 = d2(ya, yb, yc);
    const double kappa = (x1 * y2 - x2 * y1) / std::pow(x1 * x1 + y1 * y1, 1.5);
    if (kappa > best_kappa) {
      best_kappa = kappa;
      best_tau = b.tau;
    }
  }
  return best_tau;
}

void write_pgm(const std::filesystem::path& path, const std::vector<LabelImage>& panels) {
  if (panels.empty()) throw std::invalid_argument("write_pgm needs at least one panel");
  constexpr int kGap = 2;
  const int n = static_cast<int>(panels.size());
  const int width = n * kImageSize + (n - 1) * kGap;
  std::vector<unsigned char> buf(static_cast<std::size_t>(width) * kImageSize, 0);
  for (int p = 0; p < n; ++p) {
    const double peak = panels[p].pixels().maxCoeff();
    for (int r = 0; r < kImageSize; ++r) {
      for (int c = 0; c < kImageSize; ++c) {
        const double v = peak > 0.0 ? std::clamp(panels[p](r, c) / peak, 0.0, 1.0) : 0.0;
        buf[static_cast<std::size_t>(r) * width + p * (kImageSize + kGap) + c] =
            static_cast<unsigned char>(std::lround(255.0 * v));
      }
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << width << " " << kImageSize << "\n255\n";
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace tacteit
