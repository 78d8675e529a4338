#include "tacteit/cli.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "tacteit/dataset.hpp"
#include "tacteit/errors.hpp"
#include "tacteit/inverse.hpp"
#include "tacteit/parallel.hpp"
#include "tacteit/selftest.hpp"

namespace tacteit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exclusive marker file so two processes never write the same output directory.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".tacteit.lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" + path_.string() +
                               "); remove the file if no run is active");
    }
    std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::optional<double> parse_snr(const std::string& s) {
  if (s == "inf" || s == "none" || s == "off") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("--snr expects a number in dB or 'inf', got '" + s + "'");
  return v;
}

void require_output_dir(const fs::path& p) {
  if (fs::exists(p) && !fs::is_directory(p)) throw UsageError("--out " + p.string() + " exists and is not a directory");
}

void require_container(const fs::path& p) {
  if (!fs::is_regular_file(p / "manifest.json")) throw UsageError("--in " + p.string() + " is not a dataset container");
}

json summary(const DatasetContainer& c, const fs::path& out) {
  json m = manifest_json(c);
  m.erase("samples");
  return {{"output", out.string()}, {"manifest", m}};
}

struct GenerateArgs {
  ClassCounts counts;
  std::string snr = "50";
  std::optional<std::uint64_t> seed;
  std::string out;
  int refinement = 2;
  double contact_impedance = 0.01;
  double coverage = 0.5;
  double current = kDefaultExcitationCurrent;
  std::string noise_target = "difference";
  std::string noise_stage = "before";
  double radius_min = 0.05;
  double radius_max = 0.25;
  int threads = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (!a.seed) throw UsageError("generate requires --seed");
  require_output_dir(a.out);
  GeneratorConfig cfg;
  cfg.counts = a.counts;
  cfg.snr_db = parse_snr(a.snr);
  cfg.seed = *a.seed;
  cfg.mesh = {a.refinement, a.contact_impedance, a.coverage};
  cfg.excitation_current = a.current;
  cfg.noise_target = a.noise_target == "absolute" ? NoiseTarget::Absolute : NoiseTarget::Difference;
  cfg.noise_stage = a.noise_stage == "after" ? NoiseStage::AfterAugmentation : NoiseStage::BeforeAugmentation;
  cfg.phantom.radius_min = a.radius_min;
  cfg.phantom.radius_max = a.radius_max;
  cfg.threads = a.threads;
  if (cfg.noise_target == NoiseTarget::Absolute && cfg.noise_stage == NoiseStage::AfterAugmentation) {
    throw UsageError("--noise-target absolute needs --noise-stage before");
  }

  OutputLock lock(a.out);
  const auto c = generate_dataset(cfg);
  write_container(c, a.out);
  out << summary(c, a.out).dump(2) << "\n";
  return kExitOk;
}

struct AugmentArgs {
  std::string in;
  std::string out;
  int threads = 0;
};

int cmd_augment(const AugmentArgs& a, std::ostream& out) {
  require_container(a.in);
  require_output_dir(a.out);
  if (fs::exists(a.out) && fs::equivalent(a.in, a.out)) throw UsageError("--out must differ from --in");
  auto c = read_container(a.in);
  if (c.augmented) {
    throw ContainerError(a.in + " is already augmented (kind \"augmented\" in its manifest); augment a raw container");
  }
  if (a.threads > 0) c.config.threads = a.threads;
  OutputLock lock(a.out);
  const auto aug = augment_dataset(c);
  write_container(aug, a.out);
  out << summary(aug, a.out).dump(2) << "\n";
  return kExitOk;
}

struct ReconstructArgs {
  std::string in;
  std::string out;
  std::string split = "test";
  std::size_t limit = 0;
  double tau = kDefaultTau;
  std::string regularizer = to_string(ReconstructionConfig{}.regularizer);
  std::string snr = "inf";
  std::optional<std::uint64_t> noise_seed;
  std::size_t pgm = 0;
  int threads = 0;
};

std::vector<std::size_t> select(const DatasetContainer& c, const std::string& split, std::size_t limit) {
  std::vector<std::size_t> idx;
  if (split == "all") {
    for (std::size_t i = 0; i < c.size(); ++i) idx.push_back(i);
  } else {
    idx = c.indices(split_from_string(split));
  }
  if (limit > 0 && idx.size() > limit) idx.resize(limit);
  return idx;
}

Reconstructor make_reconstructor(const DatasetContainer& c, const SensorMesh& mesh, const ReconstructionConfig& rc) {
  const auto bg = ConductivityField::homogeneous(mesh, c.config.phantom.background);
  return Reconstructor(mesh, compute_jacobian(mesh, bg, c.config.excitation_current), rc);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out) {
  require_container(a.in);
  require_output_dir(a.out);
  const ReconstructionConfig rc{a.tau, regularizer_from_string(a.regularizer)};
  rc.validate();
  const auto snr = parse_snr(a.snr);
  const auto c = read_container(a.in);
  const auto idx = select(c, a.split, a.limit);
  const std::uint64_t noise_seed = a.noise_seed.value_or(c.config.seed);

  OutputLock lock(a.out);
  const SensorMesh mesh = SensorMesh::build(c.config.mesh);
  const Reconstructor rec = make_reconstructor(c, mesh, rc);

  struct Row {
    MetricsReport m;
    Point2 peak;
    bool has_re = true;
  };
  std::vector<Row> rows(idx.size());
  std::vector<Reconstruction> kept(std::min(a.pgm, idx.size()));
  parallel_for(idx.size(), resolve_thread_count(a.threads), [&](int, std::size_t k) {
    MeasurementFrame f = c.frame(idx[k]);
    if (snr) f = add_awgn(f, *snr, derive_seed(noise_seed, idx[k], 4));
    auto r = rec.reconstruct(f);
    const auto gt = c.label(idx[k]);
    auto& row = rows[k];
    row.peak = peak_location(r.raw);
    row.m.cc = correlation_coefficient(r.raw, gt);
    row.m.ssim = ssim(r.image, gt);
    if (gt.pixels().isZero(0.0)) {
      row.has_re = false;
      row.m.re = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.m.re = relative_error(r.image, gt);
    }
    if (k < kept.size()) kept[k] = std::move(r);
  });

  json samples = json::array();
  double cc = 0, re = 0, ss = 0;
  std::size_t re_count = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    samples.push_back({{"index", idx[k]},
                       {"cc", r.m.cc},
                       {"re", finite_or_null(r.m.re)},
                       {"ssim", r.m.ssim},
                       {"peak", {r.peak.x(), r.peak.y()}}});
    cc += r.m.cc;
    ss += r.m.ssim;
    if (r.has_re) {
      re += r.m.re;
      ++re_count;
    }
  }
  const double n = static_cast<double>(rows.size());
  json mean = {{"cc", rows.empty() ? json(nullptr) : json(cc / n)},
               {"re", re_count == 0 ? json(nullptr) : json(re / static_cast<double>(re_count))},
               {"ssim", rows.empty() ? json(nullptr) : json(ss / n)}};

  if (!kept.empty()) fs::create_directories(fs::path(a.out) / "images");
  for (std::size_t k = 0; k < kept.size(); ++k) {
    std::ostringstream name;
    name << "sample_" << std::setw(6) << std::setfill('0') << idx[k] << ".pgm";
    write_pgm(fs::path(a.out) / "images" / name.str(), {c.label(idx[k]), kept[k].image});
  }

  json report = {
      {"command", "reconstruct"},
      {"config",
       {{"input", a.in},
        {"split", a.split},
        {"limit", a.limit},
        {"tau", rc.tau},
        {"regularizer", to_string(rc.regularizer)},
        {"added_snr_db", snr ? json(*snr) : json(nullptr)},
        {"noise_seed", noise_seed},
        {"container_snr_db", c.config.snr_db ? json(*c.config.snr_db) : json(nullptr)},
        {"refinement_level", c.config.mesh.refinement_level},
        {"contact_impedance", c.config.mesh.contact_impedance},
        {"electrode_coverage", c.config.mesh.electrode_coverage},
        {"excitation_current", c.config.excitation_current},
        {"background_conductivity", c.config.phantom.background},
        {"pgm", kept.size()}}},
      {"count", rows.size()},
      {"mean", mean},
      {"samples", samples},
  };
  {
    std::ofstream os(fs::path(a.out) / "metrics.json", std::ios::trunc);
    os << report.dump(1) << "\n";
    if (!os) throw std::runtime_error("cannot write metrics.json in " + a.out);
  }
  json brief = report;
  brief.erase("samples");
  out << brief.dump(2) << "\n";
  return kExitOk;
}

struct CalibrateArgs {
  std::string in;
  std::string split = "all";
  std::size_t limit = 0;
  std::string regularizer = to_string(ReconstructionConfig{}.regularizer);
  double tau_min = 1e-8;
  double tau_max = 1.0;
  int per_decade = 2;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  require_container(a.in);
  if (!(a.tau_min > 0 && a.tau_min < a.tau_max)) throw UsageError("need 0 < --tau-min < --tau-max");
  if (a.per_decade < 1) throw UsageError("--per-decade must be at least 1");
  const auto reg = regularizer_from_string(a.regularizer);
  const auto c = read_container(a.in);
  const auto idx = select(c, a.split, a.limit);
  if (idx.empty()) throw std::runtime_error("no samples selected for calibration");
  std::vector<MeasurementFrame> frames;
  for (std::size_t i : idx) frames.push_back(c.frame(i));
  std::vector<double> taus;
  const double step = 1.0 / a.per_decade;
  for (double e = std::log10(a.tau_min); e <= std::log10(a.tau_max) + 1e-9; e += step) taus.push_back(std::pow(10.0, e));
  if (taus.size() < 3) throw UsageError("tau range too narrow for an L-curve (need 3 points)");

  const SensorMesh mesh = SensorMesh::build(c.config.mesh);
  const auto bg = ConductivityField::homogeneous(mesh, c.config.phantom.background);
  const auto jac = compute_jacobian(mesh, bg, c.config.excitation_current);
  const auto points = l_curve(mesh, jac, frames, taus, reg);
  json pts = json::array();
  for (const auto& p : points) pts.push_back({{"tau", p.tau}, {"residual", p.residual_norm}, {"penalty", p.penalty_norm}});
  out << json{{"command", "calibrate"},
              {"config", {{"input", a.in}, {"split", a.split}, {"samples", idx.size()}, {"regularizer", a.regularizer}}},
              {"points", pts},
              {"corner_tau", l_curve_corner(points)}}
             .dump(2)
      << "\n";
  return kExitOk;
}

struct SelftestArgs {
  int refinement = 1;
  int phantoms = 4;
  std::uint64_t seed = 1;
  std::string fault;
};

int cmd_selftest(const SelftestArgs& a, std::ostream& out) {
  SelftestOptions o;
  o.refinement_level = a.refinement;
  o.phantoms = a.phantoms;
  o.seed = a.seed;
  if (a.fault == "eim-transpose") o.fault = SelftestFault::EimTranspose;
  else if (!a.fault.empty()) throw UsageError("unknown fault '" + a.fault + "'");
  bool ok = true;
  for (const auto& r : run_selftest(o)) {
    ok = ok && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << "  (measured " << r.measured << ", tolerance " << r.tolerance;
    if (!r.detail.empty()) out << "; " << r.detail;
    out << ")\n";
  }
  return ok ? kExitOk : kExitFailure;
}

struct MeshArgs {
  int refinement = 2;
  std::string out;
};

int cmd_mesh(const MeshArgs& a, std::ostream& out) {
  const auto mesh = SensorMesh::build({.refinement_level = a.refinement});
  if (a.out.empty()) {
    mesh.write_listing(out);
  } else {
    std::ofstream os(a.out, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + a.out);
    mesh.write_listing(os);
    out << "nodes " << mesh.node_count() << ", elements " << mesh.element_count() << " -> " << a.out << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation, augmentation and reconstruction for a 16-electrode EIT tactile sensor", "tacteit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tacteit 1.0.0");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "simulate a dataset container");
  g->add_option("--train-1", gen.counts.train_1, "training samples with 1 circle")->check(CLI::NonNegativeNumber);
  g->add_option("--train-2", gen.counts.train_2, "training samples with 2 circles")->check(CLI::NonNegativeNumber);
  g->add_option("--train-3", gen.counts.train_3, "training samples with 3 circles")->check(CLI::NonNegativeNumber);
  g->add_option("--val-4", gen.counts.val_4, "validation samples with 4 circles")->check(CLI::NonNegativeNumber);
  g->add_option("--test-4", gen.counts.test_4, "test samples with 4 circles")->check(CLI::NonNegativeNumber);
  g->add_option("--snr", gen.snr, "noise level in dB, or 'inf' for none")->capture_default_str();
  g->add_option("--seed", gen.seed, "base seed (required)");
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--refinement", gen.refinement, "mesh refinement level")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--contact-impedance", gen.contact_impedance, "electrode contact impedance")->capture_default_str();
  g->add_option("--electrode-coverage", gen.coverage, "fraction of the boundary covered by electrodes")
      ->capture_default_str();
  g->add_option("--current", gen.current, "excitation current in amperes")->check(CLI::PositiveNumber);
  g->add_option("--noise-target", gen.noise_target, "difference or absolute")
      ->check(CLI::IsMember({"difference", "absolute"}))
      ->capture_default_str();
  g->add_option("--noise-stage", gen.noise_stage, "add noise before or after augmentation")
      ->check(CLI::IsMember({"before", "after"}))
      ->capture_default_str();
  g->add_option("--radius-min", gen.radius_min, "smallest circle radius")->capture_default_str();
  g->add_option("--radius-max", gen.radius_max, "largest circle radius")->capture_default_str();
  g->add_option("--threads", gen.threads, "worker threads (0: TACTEIT_THREADS or all cores)");

  AugmentArgs aug;
  auto* au = app.add_subcommand("augment", "expand a raw container 32x");
  au->add_option("--in", aug.in, "raw container")->required();
  au->add_option("--out", aug.out, "output directory")->required();
  au->add_option("--threads", aug.threads, "worker threads");

  ReconstructArgs rec;
  auto* r = app.add_subcommand("reconstruct", "reconstruct and score a container split");
  r->add_option("--in", rec.in, "container")->required();
  r->add_option("--out", rec.out, "output directory for metrics.json and images")->required();
  r->add_option("--split", rec.split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  r->add_option("--limit", rec.limit, "use at most this many samples (0: all)");
  r->add_option("--tau", rec.tau, "regularization factor")->check(CLI::PositiveNumber)->capture_default_str();
  r->add_option("--regularizer", rec.regularizer, "identity, noser or laplacian")
      ->check(CLI::IsMember({"identity", "noser", "laplacian"}))
      ->capture_default_str();
  r->add_option("--snr", rec.snr, "add noise at this SNR to each input before reconstruction")->capture_default_str();
  r->add_option("--noise-seed", rec.noise_seed, "seed for --snr noise (default: container seed)");
  r->add_option("--pgm", rec.pgm, "write ground truth | reconstruction PGM for the first N samples");
  r->add_option("--threads", rec.threads, "worker threads");

  CalibrateArgs cal;
  auto* ca = app.add_subcommand("calibrate", "L-curve sweep for tau on a noise-free container");
  ca->add_option("--in", cal.in, "container")->required();
  ca->add_option("--split", cal.split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  ca->add_option("--limit", cal.limit, "use at most this many samples");
  ca->add_option("--regularizer", cal.regularizer, "identity, noser or laplacian")
      ->check(CLI::IsMember({"identity", "noser", "laplacian"}))
      ->capture_default_str();
  ca->add_option("--tau-min", cal.tau_min)->capture_default_str();
  ca->add_option("--tau-max", cal.tau_max)->capture_default_str();
  ca->add_option("--per-decade", cal.per_decade, "sweep points per decade")->capture_default_str();

  SelftestArgs st;
  auto* s = app.add_subcommand("selftest", "oracle checks on a small mesh");
  s->add_option("--refinement", st.refinement, "mesh refinement level")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--phantoms", st.phantoms, "random phantoms for the oracle checks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s->add_option("--seed", st.seed)->capture_default_str();
  s->add_option("--inject-fault", st.fault)->group("");

  MeshArgs me;
  auto* m = app.add_subcommand("mesh", "write the node and element listing of a sensor mesh");
  m->add_option("--refinement", me.refinement)->check(CLI::PositiveNumber)->capture_default_str();
  m->add_option("--out", me.out, "listing file (default: stdout)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen, out);
    if (*au) return cmd_augment(aug, out);
    if (*r) return cmd_reconstruct(rec, out);
    if (*ca) return cmd_calibrate(cal, out);
    if (*s) return cmd_selftest(st, out);
    if (*m) return cmd_mesh(me, out);
  } catch (const UsageError& e) {
    err << "tacteit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "tacteit: error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace tacteit::cli
