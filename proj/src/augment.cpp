#include "tacteit/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "tacteit/errors.hpp"

namespace tacteit {

namespace {

void require_compact(const EimMatrix& eim) {
  if (eim.form != EimForm::Compact16x13 || eim.entries.rows() != kNumElectrodes ||
      eim.entries.cols() != kMeasPerDrive) {
    throw FormError("augmentation needs a 16x13 compact EIM");
  }
}

// Row-prefix concatenation shared by both augmentation strategies.
FrameBlock extract_rows(const Eigen::MatrixXd& eim) {
  FrameBlock out = FrameBlock::Zero();
  for (int time = 1; time <= kNumElectrodes; ++time) {
    int index = 0;
    int ele_index = time;
    for (int i = 1; i <= 14; ++i) {
      const int num = i == 1 ? 13 : 15 - i;
      out.row(time - 1).segment(index, num) = eim.row(ele_index - 1).head(num);
      index += num;
      ele_index += 1;
      if (ele_index == 17) ele_index = 1;
    }
  }
  return out;
}

MeasurementFrame frame_from_row(const FrameBlock& block, int row, double current) {
  MeasurementFrame f;
  f.form = FrameForm::NonRedundant104;
  f.excitation_current = current;
  f.values = block.row(row).transpose();
  return f;
}

double bilinear(const LabelImage& img, double r, double c) {
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const double fr = r - r0;
  const double fc = c - c0;
  auto at = [&](int rr, int cc) {
    if (rr < 0 || cc < 0 || rr >= kImageSize || cc >= kImageSize) return 0.0;
    return img(rr, cc);
  };
  double v = (1.0 - fr) * (1.0 - fc) * at(r0, c0);
  if (fc != 0.0) v += (1.0 - fr) * fc * at(r0, c0 + 1);
  if (fr != 0.0) v += fr * (1.0 - fc) * at(r0 + 1, c0);
  if (fr != 0.0 && fc != 0.0) v += fr * fc * at(r0 + 1, c0 + 1);
  return v;
}

}  // namespace

FrameBlock rotate_frames(const EimMatrix& compact_eim) {
  require_compact(compact_eim);
  return extract_rows(compact_eim.entries);
}

FrameBlock flip_frames(const EimMatrix& compact_eim) {
  require_compact(compact_eim);
  // Reversing the column order alone mirrors each drive row about its own
  // drive pair, which is a different axis for every row. Reversing the row
  // order as well makes all rows describe the same mirrored touch.
  const Eigen::MatrixXd flipped = compact_eim.entries.colwise().reverse().rowwise().reverse();
  return extract_rows(flipped);
}

SymmetryTransform block_row_transform(int row, bool flip) {
  if (row < 0 || row >= kNumElectrodes) throw std::out_of_range("block row out of range");
  return {(kNumElectrodes - row) % kNumElectrodes, flip};
}

int augmented_slot(const SymmetryTransform& t) { return t.rotation + (t.flip ? kNumElectrodes : 0); }

SymmetryTransform augmented_transform(int slot) {
  if (slot < 0 || slot >= kAugmentedCount) throw std::out_of_range("augmented slot out of range");
  return {slot % kNumElectrodes, slot >= kNumElectrodes};
}

std::vector<MeasurementFrame> augment_measurements(const MeasurementFrame& frame) {
  frame.require(FrameForm::NonRedundant104);
  const EimMatrix eim = compact_eim(frame);
  const FrameBlock rot = rotate_frames(eim);
  const FrameBlock mir = flip_frames(eim);
  std::vector<MeasurementFrame> out(kAugmentedCount);
  for (int row = 0; row < kNumElectrodes; ++row) {
    out[augmented_slot(block_row_transform(row, false))] = frame_from_row(rot, row, frame.excitation_current);
    out[augmented_slot(block_row_transform(row, true))] = frame_from_row(mir, row, frame.excitation_current);
  }
  return out;
}

AugmentedSet augment_frame(const MeasurementFrame& frame, const TouchPhantom& phantom, std::int64_t source_id) {
  AugmentedSet set;
  set.source_id = source_id;
  set.frames = augment_measurements(frame);
  for (int slot = 0; slot < kAugmentedCount; ++slot) {
    const auto t = augmented_transform(slot);
    set.transforms.push_back(t);
    set.labels.push_back(transform_label(phantom, t));
  }
  return set;
}

AugmentedSet augment_frame(const MeasurementFrame& frame, const LabelImage& label, std::int64_t source_id) {
  AugmentedSet set;
  set.source_id = source_id;
  set.frames = augment_measurements(frame);
  for (int slot = 0; slot < kAugmentedCount; ++slot) {
    const auto t = augmented_transform(slot);
    set.transforms.push_back(t);
    set.labels.push_back(transform_label(label, t));
  }
  return set;
}

LabelImage transform_label(const TouchPhantom& phantom, const SymmetryTransform& t) {
  if (t == SymmetryTransform{}) return rasterize(phantom);
  return rasterize(transform_phantom(phantom, t));
}

LabelImage transform_label(const LabelImage& label, const SymmetryTransform& t) {
  if (t == SymmetryTransform{}) return label;
  const SymmetryTransform back = t.inverse();
  constexpr double half = kImageSize / 2.0;
  LabelImage out;
  for (int r = 0; r < kImageSize; ++r) {
    for (int c = 0; c < kImageSize; ++c) {
      const Point2 p = LabelImage::pixel_center(r, c);
      if (p.squaredNorm() > 1.0) continue;
      const Point2 src = back.apply(p);
      out(r, c) = bilinear(label, (1.0 - src.y()) * half - 0.5, (src.x() + 1.0) * half - 0.5);
    }
  }
  return out;
}

MeasurementFrame relabel_frame(const MeasurementFrame& frame, const SymmetryTransform& t) {
  frame.require(FrameForm::NonRedundant104);
  const SymmetryTransform back = t.inverse();
  // Pair p = (p, p+1) maps to electrodes (h(p), h(p+1)); under a reflection
  // the pair reverses polarity, which cancels between drive and measurement.
  auto pair_image = [&](int p) {
    const int a = back.map_electrode(p);
    const int b = back.map_electrode(wrap16(p + 1));
    return wrap16(b - a) == 1 ? a : b;
  };
  MeasurementFrame out = frame;
  const auto& order = canonical_order();
  for (int n = 0; n < kNonRedundantCount; ++n) {
    const int d = pair_image(order[n].drive);
    const int m = pair_image(order[n].measure);
    int idx = canonical_index(d, m);
    if (idx < 0) idx = canonical_index(m, d);
    out.values[n] = frame.values[idx];
  }
  return out;
}

}  // namespace tacteit
