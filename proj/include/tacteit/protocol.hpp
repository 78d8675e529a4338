#pragma once

#include <array>

#include "tacteit/mesh.hpp"

namespace tacteit {

// Adjacent-drive / adjacent-measure protocol on 16 electrodes. Electrode pair
// p denotes electrodes (p, p+1), indices modulo 16 in 1..16, so pair 16 is (16, 1).

inline constexpr int kMeasPerDrive = 13;
inline constexpr int kRawCount = kNumElectrodes * kMeasPerDrive;  // 208
inline constexpr int kNonRedundantCount = kRawCount / 2;          // 104

struct DriveMeasure {
  int drive = 0;    // excitation pair, 1..16
  int measure = 0;  // measurement pair, 1..16
  bool operator==(const DriveMeasure&) const = default;
};

/// True when pairs a and b share an electrode (the measurement is not taken).
constexpr bool pairs_overlap(int a, int b) {
  const int d = wrap16(b - a + 1) - 1;  // 0..15
  return d == 0 || d == 1 || d == 15;
}

/// Raw ordering: drive-major; within a drive, measurement pairs in increasing
/// electrode order skipping the three pairs touching the drive electrodes.
const std::array<DriveMeasure, kRawCount>& raw_order();

/// Canonical non-redundant ordering: block i (i = 1..14) holds drive pair i
/// with measurement pairs i+2, i+3, ... for 13, 13, 12, ..., 1 entries.
const std::array<DriveMeasure, kNonRedundantCount>& canonical_order();

/// Length of canonical block i (1-based): 13 for i = 1, otherwise 15 - i.
constexpr int canonical_block_length(int i) { return i == 1 ? 13 : 15 - i; }

int raw_index(int drive, int measure);
/// Position of (drive, measure) in the canonical ordering, or -1 if the
/// canonical ordering stores its reciprocal (measure, drive) instead.
int canonical_index(int drive, int measure);

}  // namespace tacteit
