#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tacteit/forward.hpp"
#include "tacteit/mesh.hpp"
#include "tacteit/phantom.hpp"

namespace tacteit {

inline constexpr int kContainerFormatVersion = 1;
inline constexpr int kLabelPixels = kImageSize * kImageSize;

/// Independent 64-bit seed for (base seed, sample index, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

struct PhantomOptions {
  double radius_min = 0.05;
  double radius_max = 0.25;
  double conductivity_min = kMinTouchConductivity;
  double conductivity_max = kBackgroundConductivity;
  double background = kBackgroundConductivity;
  int max_attempts = 20000;
};

class PhantomSamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection-samples `n_circles` disjoint circles inside the unit disk.
TouchPhantom sample_phantom(std::uint64_t seed, int n_circles, const PhantomOptions& options = {});

/// Adds i.i.d. Gaussian noise with variance mean(v^2) / 10^(snr_db / 10).
/// An infinite snr_db returns the frame unchanged.
MeasurementFrame add_awgn(const MeasurementFrame& frame, double snr_db, std::uint64_t seed);

enum class Split { Train, Validation, Test };
enum class NoiseTarget { Difference, Absolute };
enum class NoiseStage { BeforeAugmentation, AfterAugmentation };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Sample counts per circle class. Training holds 1-3 circles, validation and test 4.
struct ClassCounts {
  int train_1 = 0;
  int train_2 = 0;
  int train_3 = 0;
  int val_4 = 0;
  int test_4 = 0;
  int total() const { return train_1 + train_2 + train_3 + val_4 + test_4; }
};

struct GeneratorConfig {
  ClassCounts counts;
  std::optional<double> snr_db = 50.0;  // nullopt: noise-free
  std::uint64_t seed = 0;
  MeshOptions mesh{.refinement_level = 2};
  double excitation_current = kDefaultExcitationCurrent;
  NoiseTarget noise_target = NoiseTarget::Difference;
  NoiseStage noise_stage = NoiseStage::BeforeAugmentation;
  PhantomOptions phantom;
  int threads = 0;
};

struct SampleRecord {
  Split split = Split::Train;
  int n_circles = 0;
  std::int64_t source = -1;  // raw sample index this entry derives from
  std::uint64_t phantom_seed = 0;
  SymmetryTransform transform;
  std::optional<TouchPhantom> phantom;
};

/// In-memory dataset: per-sample records plus float32 blobs.
///
/// On disk a container is a directory with manifest.json, measurements.f32
/// (samples x 104) and labels.f32 (samples x 64 x 64), both little-endian
/// IEEE-754 float32, row-major. Samples are grouped train, validation, test.
struct DatasetContainer {
  bool augmented = false;
  GeneratorConfig config;
  std::vector<SampleRecord> samples;
  std::vector<float> measurements;
  std::vector<float> labels;

  std::size_t size() const { return samples.size(); }
  MeasurementFrame frame(std::size_t i) const;
  LabelImage label(std::size_t i) const;
  std::vector<std::size_t> indices(Split split) const;
  /// Throws ContainerError if blob sizes or split grouping are inconsistent.
  void validate() const;
};

nlohmann::json manifest_json(const DatasetContainer& container);
void write_container(const DatasetContainer& container, const std::filesystem::path& dir);
DatasetContainer read_container(const std::filesystem::path& dir);

/// Simulates dV = V(phantom) - V(background) for every sample.
DatasetContainer generate_dataset(const GeneratorConfig& config);

/// Expands every sample 32x (rotations then mirrored rotations).
/// Throws ContainerError if the input is already augmented.
DatasetContainer augment_dataset(const DatasetContainer& container);

}  // namespace tacteit
