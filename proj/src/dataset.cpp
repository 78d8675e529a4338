#include "tacteit/dataset.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>

#include "tacteit/augment.hpp"
#include "tacteit/errors.hpp"
#include "tacteit/parallel.hpp"

namespace tacteit {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TouchPhantom sample_phantom(std::uint64_t seed, int n_circles, const PhantomOptions& options) {
  if (n_circles < 1 || n_circles > 4) throw std::invalid_argument("n_circles must be in 1..4");
  if (!(options.radius_min > 0.0 && options.radius_min <= options.radius_max && options.radius_max < 1.0)) {
    throw std::invalid_argument("invalid radius range");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> radius(options.radius_min, options.radius_max);
  std::uniform_real_distribution<double> conductivity(options.conductivity_min, options.conductivity_max);

  TouchPhantom phantom;
  phantom.background_conductivity = options.background;
  int attempts = 0;
  int failures_in_row = 0;
  while (static_cast<int>(phantom.circles.size()) < n_circles) {
    if (++attempts > options.max_attempts) {
      throw PhantomSamplingError("could not place " + std::to_string(n_circles) +
                                 " disjoint circles within the attempt budget");
    }
    Circle c;
    c.radius = radius(rng);
    const double rho = (1.0 - c.radius) * std::sqrt(unit(rng));
    const double phi = 2.0 * kPi * unit(rng);
    c.center = {rho * std::cos(phi), rho * std::sin(phi)};
    c.conductivity = conductivity(rng);
    bool ok = true;
    for (const auto& o : phantom.circles) {
      if ((o.center - c.center).norm() < o.radius + c.radius) {
        ok = false;
        break;
      }
    }
    if (ok) {
      phantom.circles.push_back(c);
      failures_in_row = 0;
    } else if (++failures_in_row > 200) {
      // Earlier circles may have crowded the disk; start over.
      phantom.circles.clear();
      failures_in_row = 0;
    }
  }
  return phantom;
}

MeasurementFrame add_awgn(const MeasurementFrame& frame, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return frame;
  if (!frame.values.allFinite()) throw std::invalid_argument("add_awgn needs finite values");
  const double power = frame.values.squaredNorm() / static_cast<double>(frame.values.size());
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  MeasurementFrame out = frame;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.values) v += noise(rng);
  return out;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Validation;
  if (s == "test") return Split::Test;
  throw ContainerError("unknown split '" + s + "'");
}

MeasurementFrame DatasetContainer::frame(std::size_t i) const {
  MeasurementFrame f;
  f.form = FrameForm::NonRedundant104;
  f.excitation_current = config.excitation_current;
  f.values.resize(kNonRedundantCount);
  const float* src = measurements.data() + i * kNonRedundantCount;
  for (int k = 0; k < kNonRedundantCount; ++k) f.values[k] = src[k];
  return f;
}

LabelImage DatasetContainer::label(std::size_t i) const {
  LabelImage img;
  const float* src = labels.data() + i * kLabelPixels;
  for (int k = 0; k < kLabelPixels; ++k) img.pixels().data()[k] = src[k];
  return img;
}

std::vector<std::size_t> DatasetContainer::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split) out.push_back(i);
  }
  return out;
}

void DatasetContainer::validate() const {
  if (measurements.size() != samples.size() * kNonRedundantCount) {
    throw ContainerError("measurement blob does not match sample count");
  }
  if (labels.size() != samples.size() * kLabelPixels) {
    throw ContainerError("label blob does not match sample count");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (static_cast<int>(samples[i].split) < static_cast<int>(samples[i - 1].split)) {
      throw ContainerError("samples are not grouped train, val, test");
    }
  }
}

namespace {

const char* noise_target_name(NoiseTarget t) { return t == NoiseTarget::Difference ? "difference" : "absolute"; }
const char* noise_stage_name(NoiseStage s) {
  return s == NoiseStage::BeforeAugmentation ? "before_augmentation" : "after_augmentation";
}

json phantom_json(const TouchPhantom& p) {
  json circles = json::array();
  for (const auto& c : p.circles) {
    circles.push_back({c.center.x(), c.center.y(), c.radius, c.conductivity});
  }
  return circles;
}

TouchPhantom phantom_from_json(const json& j, double background) {
  TouchPhantom p;
  p.background_conductivity = background;
  for (const auto& c : j) {
    if (!c.is_array() || c.size() != 4) throw ContainerError("circle entries must be [x, y, r, sigma]");
    p.circles.push_back({{c[0].get<double>(), c[1].get<double>()}, c[2].get<double>(), c[3].get<double>()});
  }
  return p;
}

void write_floats(const std::filesystem::path& path, const std::vector<float>& data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ContainerError("cannot open " + path.string() + " for writing");
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  } else {
    for (float f : data) {
      auto bits = std::bit_cast<std::uint32_t>(f);
      bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
      os.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  if (!os) throw ContainerError("write failed for " + path.string());
}

std::vector<float> read_floats(const std::filesystem::path& path, std::size_t expected) {
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) throw ContainerError("cannot stat " + path.string());
  if (bytes != expected * sizeof(float)) {
    throw ContainerError(path.filename().string() + " has " + std::to_string(bytes) + " bytes, manifest implies " +
                         std::to_string(expected * sizeof(float)));
  }
  std::vector<float> data(expected);
  std::ifstream is(path, std::ios::binary);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  if (!is) throw ContainerError("read failed for " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : data) {
      auto bits = std::bit_cast<std::uint32_t>(f);
      bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
      f = std::bit_cast<float>(bits);
    }
  }
  return data;
}

void store_sample(DatasetContainer& c, std::size_t i, const Eigen::VectorXd& dv, const LabelImage& label) {
  float* m = c.measurements.data() + i * kNonRedundantCount;
  for (int k = 0; k < kNonRedundantCount; ++k) m[k] = static_cast<float>(dv[k]);
  float* l = c.labels.data() + i * kLabelPixels;
  for (int k = 0; k < kLabelPixels; ++k) l[k] = static_cast<float>(label.data()[k]);
}

}  // namespace

json manifest_json(const DatasetContainer& c) {
  const auto& cfg = c.config;
  json splits = json::object();
  for (Split s : {Split::Train, Split::Validation, Split::Test}) {
    const auto idx = c.indices(s);
    splits[to_string(s)] = {{"offset", idx.empty() ? 0 : idx.front()}, {"count", idx.size()},
                            {"n_circles", s == Split::Train ? json{1, 2, 3} : json{4}}};
  }
  json samples = json::array();
  for (const auto& r : c.samples) {
    json s = {{"split", to_string(r.split)},
              {"n_circles", r.n_circles},
              {"source", r.source},
              {"phantom_seed", r.phantom_seed},
              {"rotation", r.transform.rotation},
              {"flip", r.transform.flip}};
    s["circles"] = r.phantom ? phantom_json(*r.phantom) : json(nullptr);
    samples.push_back(std::move(s));
  }
  json augmentation = nullptr;
  if (c.augmented) {
    augmentation = {{"factor", 32},
                    {"order", "slot k in 0..15: rotate k*22.5 deg ccw; slot 16+k: mirror x->-x then rotate k"}};
  }
  return {
      {"format", "tacteit-dataset"},
      {"format_version", kContainerFormatVersion},
      {"kind", c.augmented ? "augmented" : "raw"},
      {"sample_count", c.samples.size()},
      {"measurement_length", kNonRedundantCount},
      {"label_shape", {kImageSize, kImageSize}},
      {"dtype", "float32-le"},
      {"seed", cfg.seed},
      {"snr_db", cfg.snr_db ? json(*cfg.snr_db) : json(nullptr)},
      {"noise_target", noise_target_name(cfg.noise_target)},
      {"noise_stage", noise_stage_name(cfg.noise_stage)},
      {"split_rule", "train: 1-3 circles; val/test: 4 circles"},
      {"counts",
       {{"train_1", cfg.counts.train_1},
        {"train_2", cfg.counts.train_2},
        {"train_3", cfg.counts.train_3},
        {"val_4", cfg.counts.val_4},
        {"test_4", cfg.counts.test_4}}},
      {"splits", splits},
      {"generator",
       {{"refinement_level", cfg.mesh.refinement_level},
        {"contact_impedance", cfg.mesh.contact_impedance},
        {"electrode_coverage", cfg.mesh.electrode_coverage},
        {"excitation_current", cfg.excitation_current},
        {"background_conductivity", cfg.phantom.background},
        {"radius_range", {cfg.phantom.radius_min, cfg.phantom.radius_max}},
        {"conductivity_range", {cfg.phantom.conductivity_min, cfg.phantom.conductivity_max}}}},
      {"augmentation", augmentation},
      {"samples", samples},
  };
}

void write_container(const DatasetContainer& container, const std::filesystem::path& dir) {
  container.validate();
  std::filesystem::create_directories(dir);
  write_floats(dir / "measurements.f32", container.measurements);
  write_floats(dir / "labels.f32", container.labels);
  // Manifest last, via rename, so a readable manifest implies complete blobs.
  const auto tmp = dir / "manifest.json.tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw ContainerError("cannot write manifest in " + dir.string());
    os << manifest_json(container).dump(1) << "\n";
  }
  std::filesystem::rename(tmp, dir / "manifest.json");
}

DatasetContainer read_container(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw ContainerError("no manifest.json in " + dir.string());
  json m;
  try {
    m = json::parse(is);
  } catch (const json::exception& e) {
    throw ContainerError(std::string("manifest parse error: ") + e.what());
  }
  try {
    if (m.at("format") != "tacteit-dataset") throw ContainerError("not a tacteit dataset");
    if (m.at("format_version").get<int>() != kContainerFormatVersion) {
      throw ContainerError("unsupported container format_version");
    }
    if (m.at("measurement_length").get<int>() != kNonRedundantCount) throw ContainerError("measurement_length != 104");
    DatasetContainer c;
    const std::string kind = m.at("kind");
    if (kind != "raw" && kind != "augmented") throw ContainerError("unknown kind " + kind);
    c.augmented = kind == "augmented";
    auto& cfg = c.config;
    cfg.seed = m.at("seed").get<std::uint64_t>();
    if (!m.at("snr_db").is_null()) cfg.snr_db = m.at("snr_db").get<double>();
    else cfg.snr_db.reset();
    cfg.noise_target = m.at("noise_target") == "absolute" ? NoiseTarget::Absolute : NoiseTarget::Difference;
    cfg.noise_stage =
        m.at("noise_stage") == "after_augmentation" ? NoiseStage::AfterAugmentation : NoiseStage::BeforeAugmentation;
    const auto& counts = m.at("counts");
    cfg.counts = {counts.at("train_1"), counts.at("train_2"), counts.at("train_3"), counts.at("val_4"),
                  counts.at("test_4")};
    const auto& g = m.at("generator");
    cfg.mesh.refinement_level = g.at("refinement_level");
    cfg.mesh.contact_impedance = g.at("contact_impedance");
    cfg.mesh.electrode_coverage = g.at("electrode_coverage");
    cfg.excitation_current = g.at("excitation_current");
    cfg.phantom.background = g.at("background_conductivity");
    cfg.phantom.radius_min = g.at("radius_range").at(0);
    cfg.phantom.radius_max = g.at("radius_range").at(1);
    cfg.phantom.conductivity_min = g.at("conductivity_range").at(0);
    cfg.phantom.conductivity_max = g.at("conductivity_range").at(1);

    const std::size_t n = m.at("sample_count");
    const auto& samples = m.at("samples");
    if (samples.size() != n) throw ContainerError("samples list does not match sample_count");
    c.samples.reserve(n);
    for (const auto& s : samples) {
      SampleRecord r;
      r.split = split_from_string(s.at("split"));
      r.n_circles = s.at("n_circles");
      r.source = s.at("source");
      r.phantom_seed = s.at("phantom_seed");
      r.transform = {s.at("rotation").get<int>(), s.at("flip").get<bool>()};
      if (!s.at("circles").is_null()) r.phantom = phantom_from_json(s.at("circles"), cfg.phantom.background);
      c.samples.push_back(std::move(r));
    }
    c.measurements = read_floats(dir / "measurements.f32", n * kNonRedundantCount);
    c.labels = read_floats(dir / "labels.f32", n * kLabelPixels);
    c.validate();
    for (Split s : {Split::Train, Split::Validation, Split::Test}) {
      const auto& entry = m.at("splits").at(to_string(s));
      if (entry.at("count").get<std::size_t>() != c.indices(s).size()) {
        throw ContainerError("split counts disagree with samples");
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw ContainerError(std::string("malformed manifest: ") + e.what());
  }
}

DatasetContainer generate_dataset(const GeneratorConfig& config) {
  if (config.noise_target == NoiseTarget::Absolute && config.noise_stage == NoiseStage::AfterAugmentation) {
    throw std::invalid_argument("absolute-voltage noise is only available before augmentation");
  }
  const auto& k = config.counts;
  if (k.train_1 < 0 || k.train_2 < 0 || k.train_3 < 0 || k.val_4 < 0 || k.test_4 < 0) {
    throw std::invalid_argument("sample counts must be non-negative");
  }

  DatasetContainer c;
  c.config = config;
  const std::size_t n = static_cast<std::size_t>(k.total());
  c.samples.resize(n);
  c.measurements.assign(n * kNonRedundantCount, 0.0f);
  c.labels.assign(n * kLabelPixels, 0.0f);
  {
    std::size_t i = 0;
    auto fill = [&](int count, Split split, int circles) {
      for (int j = 0; j < count; ++j, ++i) {
        c.samples[i].split = split;
        c.samples[i].n_circles = circles;
        c.samples[i].source = static_cast<std::int64_t>(i);
      }
    };
    fill(k.train_1, Split::Train, 1);
    fill(k.train_2, Split::Train, 2);
    fill(k.train_3, Split::Train, 3);
    fill(k.val_4, Split::Validation, 4);
    fill(k.test_4, Split::Test, 4);
  }
  if (n == 0) return c;

  const SensorMesh mesh = SensorMesh::build(config.mesh);
  const auto background = ConductivityField::homogeneous(mesh, config.phantom.background);
  const Eigen::VectorXd reference =
      to_nonredundant(solve_forward(mesh, background, config.excitation_current)).values;
  const bool noisy = config.snr_db.has_value() && config.noise_stage == NoiseStage::BeforeAugmentation;

  const int workers = resolve_thread_count(config.threads);
  std::vector<std::unique_ptr<ForwardSolver>> solvers(static_cast<std::size_t>(workers));
  parallel_for(n, workers, [&](int worker, std::size_t i) {
    auto& solver = solvers[static_cast<std::size_t>(worker)];
    if (!solver) solver = std::make_unique<ForwardSolver>(mesh, config.excitation_current);
    auto& rec = c.samples[i];
    constexpr int kMaxAttempts = 8;
    for (int attempt = 0;; ++attempt) {
      const std::uint64_t pseed = derive_seed(config.seed, i, 2 * static_cast<std::uint64_t>(attempt));
      try {
        const auto phantom = sample_phantom(pseed, rec.n_circles, config.phantom);
        MeasurementFrame v = to_nonredundant(solver->solve(phantom_field(mesh, phantom)));
        const std::uint64_t nseed = derive_seed(config.seed, i, 1);
        if (noisy && config.noise_target == NoiseTarget::Absolute) v = add_awgn(v, *config.snr_db, nseed);
        MeasurementFrame dv = v;
        dv.values = v.values - reference;
        if (noisy && config.noise_target == NoiseTarget::Difference) dv = add_awgn(dv, *config.snr_db, nseed);
        rec.phantom_seed = pseed;
        rec.phantom = phantom;
        store_sample(c, i, dv.values, rasterize(phantom));
        return;
      } catch (const SolverError& e) {
        std::cerr << "sample " << i << " (phantom seed " << pseed << ") failed: " << e.what() << "; resampling\n";
        if (attempt + 1 >= kMaxAttempts) throw;
      }
    }
  });
  return c;
}

DatasetContainer augment_dataset(const DatasetContainer& container) {
  if (container.augmented) throw ContainerError("container is already augmented; refusing to augment twice");
  container.validate();
  DatasetContainer out;
  out.augmented = true;
  out.config = container.config;
  const std::size_t n = container.size();
  out.samples.resize(n * kAugmentedCount);
  out.measurements.resize(n * kAugmentedCount * kNonRedundantCount);
  out.labels.resize(n * kAugmentedCount * kLabelPixels);

  const auto& cfg = container.config;
  const bool noise_after = cfg.snr_db.has_value() && cfg.noise_stage == NoiseStage::AfterAugmentation;
  parallel_for(n, resolve_thread_count(cfg.threads), [&](int, std::size_t i) {
    const auto& rec = container.samples[i];
    const auto frame = container.frame(i);
    const AugmentedSet set = rec.phantom ? augment_frame(frame, *rec.phantom, static_cast<std::int64_t>(i))
                                         : augment_frame(frame, container.label(i), static_cast<std::int64_t>(i));
    for (int slot = 0; slot < kAugmentedCount; ++slot) {
      const std::size_t o = i * kAugmentedCount + static_cast<std::size_t>(slot);
      auto& r = out.samples[o];
      r.split = rec.split;
      r.n_circles = rec.n_circles;
      r.source = rec.source;
      r.phantom_seed = rec.phantom_seed;
      r.transform = set.transforms[slot];
      if (rec.phantom) r.phantom = transform_phantom(*rec.phantom, set.transforms[slot]);
      MeasurementFrame f = set.frames[slot];
      if (noise_after) f = add_awgn(f, *cfg.snr_db, derive_seed(cfg.seed, o, 3));
      store_sample(out, o, f.values, set.labels[slot]);
    }
  });
  return out;
}

}  // namespace tacteit
