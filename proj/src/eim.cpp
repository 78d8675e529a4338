#include "tacteit/eim.hpp"

#include "tacteit/errors.hpp"

namespace tacteit {

namespace {

void require_shape(const EimMatrix& eim) {
  const bool padded = eim.form == EimForm::Padded16x16;
  const Eigen::Index cols = padded ? kNumElectrodes : kMeasPerDrive;
  if (eim.entries.rows() != kNumElectrodes || eim.entries.cols() != cols) {
    throw FormError("EIM entries have the wrong shape for their form");
  }
}

}  // namespace

int EimMatrix::entry_count() const {
  if (form == EimForm::Compact16x13) return kRawCount;
  return completed ? kRawCount : kNonRedundantCount;
}

EimMatrix seq_to_eim(const MeasurementFrame& frame) {
  frame.require(FrameForm::NonRedundant104);
  EimMatrix eim;
  eim.form = EimForm::Padded16x16;
  eim.excitation_current = frame.excitation_current;
  eim.entries = Eigen::MatrixXd::Zero(kNumElectrodes, kNumElectrodes);
  const auto& order = canonical_order();
  for (int n = 0; n < kNonRedundantCount; ++n) {
    eim.entries(order[n].measure - 1, order[n].drive - 1) = frame.values[n];
  }
  return eim;
}

EimMatrix reciprocity_complete(const EimMatrix& eim) {
  if (eim.form != EimForm::Padded16x16) throw FormError("reciprocity completion needs a padded EIM");
  require_shape(eim);
  EimMatrix out = eim;
  for (const auto& dm : canonical_order()) {
    out.entries(dm.drive - 1, dm.measure - 1) = eim.entries(dm.measure - 1, dm.drive - 1);
  }
  out.completed = true;
  return out;
}

EimMatrix compact(const EimMatrix& eim) {
  if (eim.form != EimForm::Padded16x16) throw FormError("compact() needs a padded EIM");
  require_shape(eim);
  if (!eim.completed) throw FormError("compact() needs a reciprocity-completed EIM (208 entries)");
  EimMatrix out;
  out.form = EimForm::Compact16x13;
  out.completed = true;
  out.excitation_current = eim.excitation_current;
  out.entries.resize(kNumElectrodes, kMeasPerDrive);
  for (int d = 1; d <= kNumElectrodes; ++d) {
    for (int p = 0; p < kMeasPerDrive; ++p) {
      out.entries(d - 1, p) = eim.entries(wrap16(d + 2 + p) - 1, d - 1);
    }
  }
  return out;
}

MeasurementFrame eim_to_seq(const EimMatrix& eim) {
  require_shape(eim);
  MeasurementFrame frame;
  frame.form = FrameForm::NonRedundant104;
  frame.excitation_current = eim.excitation_current;
  frame.values.resize(kNonRedundantCount);
  const auto& order = canonical_order();
  for (int n = 0; n < kNonRedundantCount; ++n) {
    const int d = order[n].drive;
    const int m = order[n].measure;
    if (eim.form == EimForm::Padded16x16) {
      frame.values[n] = eim.entries(m - 1, d - 1);
    } else {
      frame.values[n] = eim.entries(d - 1, wrap16(m - d - 1) - 1);
    }
  }
  return frame;
}

EimMatrix compact_eim(const MeasurementFrame& frame) {
  return compact(reciprocity_complete(seq_to_eim(frame)));
}

}  // namespace tacteit
