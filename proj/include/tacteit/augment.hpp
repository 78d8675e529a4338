#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "tacteit/eim.hpp"
#include "tacteit/forward.hpp"
#include "tacteit/phantom.hpp"

namespace tacteit {

inline constexpr int kAugmentedCount = 32;

/// 16 augmented frames, one canonical 104-vector per row.
using FrameBlock = Eigen::Matrix<double, kNumElectrodes, kNonRedundantCount, Eigen::RowMajor>;

/// Rotation augmentation on a compact EIM.
///
/// Row t (0-based) concatenates, for blocks i = 1..14, the first 13, 13, 12,
/// ..., 1 entries of compact rows t+1, t+2, ... (wrapping 16 -> 1). Row t is
/// the frame of the source touch turned clockwise by t * 22.5 degrees, i.e.
/// the transform SymmetryTransform::rotate(16 - t).
FrameBlock rotate_frames(const EimMatrix& compact_eim);

/// Mirror augmentation on a compact EIM.
///
/// The compact map is turned end-for-end (row order and the column order
/// inside every row are both reversed) and then read out exactly as in
/// rotate_frames. Row t is the source touch mirrored across the e1-e9 axis
/// and then turned clockwise by t * 22.5 degrees.
FrameBlock flip_frames(const EimMatrix& compact_eim);

/// Transform realized by row `row` of rotate_frames (flip = false) or flip_frames (flip = true).
SymmetryTransform block_row_transform(int row, bool flip);

/// Position of a transform inside an AugmentedSet: rotations k = 0..15 occupy
/// slots 0..15, mirrored rotations occupy 16..31.
int augmented_slot(const SymmetryTransform& t);
SymmetryTransform augmented_transform(int slot);

struct AugmentedSet {
  std::vector<MeasurementFrame> frames;     // 32, canonical 104 form
  std::vector<LabelImage> labels;           // 32, same order
  std::vector<SymmetryTransform> transforms;
  std::int64_t source_id = -1;
};

/// Expands one canonical frame and its analytic phantom into 32 pairs.
AugmentedSet augment_frame(const MeasurementFrame& frame, const TouchPhantom& phantom, std::int64_t source_id = -1);
/// Raster fallback for labels without phantom parameters.
AugmentedSet augment_frame(const MeasurementFrame& frame, const LabelImage& label, std::int64_t source_id = -1);

/// Frames only, in AugmentedSet slot order.
std::vector<MeasurementFrame> augment_measurements(const MeasurementFrame& frame);

/// Analytic label: move circle centers, then rasterize.
LabelImage transform_label(const TouchPhantom& phantom, const SymmetryTransform& t);
/// Raster label: mirror across the vertical image axis (if flipped), then
/// rotate counterclockwise about the image center with bilinear sampling.
LabelImage transform_label(const LabelImage& label, const SymmetryTransform& t);

/// Measurement relabeling by permutation algebra: V'(d, m) = V(g^-1 d, g^-1 m)
/// on electrode pairs, resolving stored reciprocals. Independent of the
/// EIM-based algorithms and used to cross-check them.
MeasurementFrame relabel_frame(const MeasurementFrame& frame, const SymmetryTransform& t);

}  // namespace tacteit
