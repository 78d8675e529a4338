#include "tacteit/protocol.hpp"

#include <stdexcept>

namespace tacteit {

namespace {

struct Tables {
  std::array<DriveMeasure, kRawCount> raw{};
  std::array<DriveMeasure, kNonRedundantCount> canonical{};
  std::array<std::array<int, kNumElectrodes>, kNumElectrodes> raw_pos{};
  std::array<std::array<int, kNumElectrodes>, kNumElectrodes> canonical_pos{};

  Tables() {
    for (auto& row : raw_pos) row.fill(-1);
    for (auto& row : canonical_pos) row.fill(-1);
    int n = 0;
    for (int d = 1; d <= kNumElectrodes; ++d) {
      for (int m = 1; m <= kNumElectrodes; ++m) {
        if (pairs_overlap(d, m)) continue;
        raw_pos[d - 1][m - 1] = n;
        raw[n++] = {d, m};
      }
    }
    n = 0;
    for (int i = 1; i <= 14; ++i) {
      for (int p = 0; p < canonical_block_length(i); ++p) {
        const int m = wrap16(i + 2 + p);
        canonical_pos[i - 1][m - 1] = n;
        canonical[n++] = {i, m};
      }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

void check_pair(int p) {
  if (p < 1 || p > kNumElectrodes) throw std::out_of_range("electrode pair index out of range");
}

}  // namespace

const std::array<DriveMeasure, kRawCount>& raw_order() { return tables().raw; }

const std::array<DriveMeasure, kNonRedundantCount>& canonical_order() { return tables().canonical; }

int raw_index(int drive, int measure) {
  check_pair(drive);
  check_pair(measure);
  const int pos = tables().raw_pos[drive - 1][measure - 1];
  if (pos < 0) throw std::invalid_argument("drive and measurement pairs share an electrode");
  return pos;
}

int canonical_index(int drive, int measure) {
  check_pair(drive);
  check_pair(measure);
  if (pairs_overlap(drive, measure)) {
    throw std::invalid_argument("drive and measurement pairs share an electrode");
  }
  return tables().canonical_pos[drive - 1][measure - 1];
}

}  // namespace tacteit
