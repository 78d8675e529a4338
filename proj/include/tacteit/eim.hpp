#pragma once

#include <Eigen/Core>

#include "tacteit/forward.hpp"

namespace tacteit {

enum class EimForm { Padded16x16, Compact16x13 };

/// Electrical Impedance Map.
///
/// Padded16x16: entry (i-1, j-1) holds the measurement on pair i under drive
/// pair j; cells where the pairs share an electrode are structural zeros.
/// A padded map holds either the 104 canonical cells or all 208 valid cells.
///
/// Compact16x13: row j-1 holds the 13 measurements of drive pair j, ordered
/// by measurement pair j+2, j+3, ..., j+14 (cyclic).
struct EimMatrix {
  EimForm form = EimForm::Padded16x16;
  Eigen::MatrixXd entries;
  bool completed = false;  // padded only: all 208 valid cells populated
  double excitation_current = kDefaultExcitationCurrent;

  /// True for padded cells that can never hold a measurement.
  static bool structural_zero(int measure_pair, int drive_pair) { return pairs_overlap(measure_pair, drive_pair); }

  /// Number of populated measurement cells (104 or 208 padded; 208 compact).
  int entry_count() const;
};

EimMatrix seq_to_eim(const MeasurementFrame& frame);

/// Copies each canonical cell onto its reciprocal partner. Idempotent.
EimMatrix reciprocity_complete(const EimMatrix& eim);

/// 16x13 form of a completed padded map. Throws FormError otherwise.
EimMatrix compact(const EimMatrix& eim);

/// Canonical 104-vector from any map form.
MeasurementFrame eim_to_seq(const EimMatrix& eim);

/// seq_to_eim -> reciprocity_complete -> compact.
EimMatrix compact_eim(const MeasurementFrame& frame);

}  // namespace tacteit
