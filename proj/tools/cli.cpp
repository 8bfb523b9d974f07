#include "cli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "kahs/errors.hpp"
#include "kahs/experiments.hpp"
#include "kahs/models.hpp"
#include "kahs/pgm.hpp"
#include "kahs/rng.hpp"
#include "kahs/sensing.hpp"
#include "kahs/transforms.hpp"
#include "kahs/version.hpp"

namespace kahs::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Collects output files and the manifest for one command invocation.
class RunContext {
 public:
  RunContext(std::string command, std::vector<std::string> args, fs::path dir)
      : command_(std::move(command)), args_(std::move(args)), dir_(std::move(dir)) {}

  GrayImage load_image(const std::string& path) {
    const std::string bytes = read_file(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
    const std::span<const std::uint8_t> view(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                             bytes.size());
    try {
      return parse_pgm(view);
    } catch (const IoError& e) {
      throw IoError(fmt::format("{}: {}", path, e.what()), e.offset());
    }
  }

  void write(const std::string& name, const std::string& bytes) {
    fs::create_directories(dir_);
    std::ofstream file(dir_ / name, std::ios::binary);
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw IoError(fmt::format("cannot write '{}'", (dir_ / name).string()), 0);
    outputs_[name] = sha256_hex(bytes);
  }

  void write_pgm(const std::string& name, const GrayImage& image) {
    std::ostringstream s;
    kahs::write_pgm(image, s);
    write(name, s.str());
  }

  json& config() { return config_; }

  void write_manifest(std::uint64_t seed) {
    json outputs = json::array();
    for (const auto& [name, sha] : outputs_) outputs.push_back({{"file", name}, {"sha256", sha}});
    const json manifest = {{"tool", "kahs"},
                           {"version", std::string(kVersion)},
                           {"command", command_},
                           {"args", args_},
                           {"config", config_},
                           {"seed", seed},
                           {"inputs", inputs_},
                           {"outputs", outputs}};
    fs::create_directories(dir_);
    std::ofstream file(dir_ / "manifest.json", std::ios::binary);
    file << manifest.dump(2) << '\n';
    if (!file) throw IoError("cannot write manifest.json", 0);
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path dir_;
  json config_ = json::object();
  json inputs_ = json::array();
  std::map<std::string, std::string> outputs_;
};

struct Common {
  std::string out_dir = ".";
  std::size_t threads = 0;
  std::uint64_t seed = 7;
};

void add_common(CLI::App* cmd, Common& common, bool with_seed = true) {
  cmd->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  if (with_seed) cmd->add_option("--seed", common.seed, "Master seed")->capture_default_str();
}

// Echoed into the manifest: everything except where outputs go and how many
// threads computed them, neither of which changes the bytes.
std::vector<std::string> replayable_args(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--out" || a == "--threads") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--threads=", 0) == 0) continue;
    kept.push_back(a);
  }
  return kept;
}

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> parts;
  std::stringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ':')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc{} || ptr != piece.data() + piece.size()) {
      throw InvalidParameter(fmt::format("bad ratio grid '{}', expected start:step:stop", text));
    }
    parts.push_back(v);
  }
  if (parts.size() == 1) return {parts[0]};
  if (parts.size() != 3) {
    throw InvalidParameter(fmt::format("bad ratio grid '{}', expected start:step:stop", text));
  }
  return ratio_grid(parts[0], parts[1], parts[2]);
}

std::string ratio_tag(double ratio) { return fmt::format("{:.4f}", ratio); }

GrayImage map_to_pgm(const SensingMap& map) {
  std::vector<double> scaled(map.values.size());
  std::transform(map.values.begin(), map.values.end(), scaled.begin(),
                 [](double v) { return 255.0 * v; });
  return to_gray_image(scaled, map.side, map.side);
}

// --- verify -----------------------------------------------------------------

struct CheckLine {
  std::string name;
  bool pass = true;
  std::string detail;
};

CheckLine check_count_law() {
  std::size_t runs = 0;
  std::size_t exact = 0;
  std::size_t bound_ok = 0;
  std::size_t equality_ok = 0;
  Rng rng(1);
  for (std::size_t padded = 16; padded <= 1024; padded *= 2) {
    std::vector<double> coeffs(padded);
    for (auto& v : coeffs) v = rng.normal();
    for (std::size_t k = 1; k < padded / 4; ++k) {
      RangeSumOracle oracle(coeffs);
      const auto cfg = SensingConfig::make(padded, k);
      k_ahs_sense(oracle, cfg);
      ++runs;
      const std::size_t expected =
          (padded >> cfg.initial_level) + 2 * k * static_cast<std::size_t>(cfg.initial_level);
      exact += oracle.queries() == expected;
      const double bound = measurement_bound(padded, k);
      const double count = static_cast<double>(oracle.queries());
      bound_ok += count <= bound + 1e-9;
      const bool equal = std::abs(count - bound) < 1e-9;
      equality_ok += equal == std::has_single_bit(k);
    }
  }
  const bool pass = exact == runs && bound_ok == runs && equality_ok == runs;
  return {"count-law", pass,
          fmt::format("{}/{} exact, {}/{} within bound, {}/{} equality iff K is a power of two",
                      exact, runs, bound_ok, runs, equality_ok, runs)};
}

CheckLine check_descent(TieBreak tie) {
  // Signals with many equal magnitudes, so the tie-break decides winners.
  Rng rng(2);
  std::size_t runs = 0;
  std::size_t clean = 0;
  std::string first;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t padded = std::size_t{64} << rng.below(4);
    std::vector<double> coeffs(padded);
    for (auto& v : coeffs) v = static_cast<double>(rng.below(3));
    const std::size_t k = 1 + rng.below(padded / 4 - 1);
    RangeSumOracle oracle(coeffs);
    const auto cfg = SensingConfig::make(padded, k);
    const auto result = k_ahs_sense(oracle, cfg, {tie});
    ++runs;
    const auto finding = audit_run_log(result.log, cfg);
    if (!finding) {
      ++clean;
    } else if (first.empty()) {
      first = *finding;
    }
  }
  std::string detail = fmt::format("{}/{} run logs pass the audit", clean, runs);
  if (!first.empty()) detail += fmt::format(" (first finding: {})", first);
  return {"descent", clean == runs, detail};
}

CheckLine check_transforms() {
  std::size_t pairs = 0;
  std::size_t ok = 0;
  double worst = 0.0;
  const std::vector<TransformPair> list{identity_pair(256), haar2d_pair(32), haar2d_pair(32, 2),
                                        cdf97_2d_pair(32), cdf97_2d_pair(64, 3)};
  Rng rng(3);
  for (const auto& t : list) {
    std::vector<double> x(t.dimension());
    for (auto& v : x) v = 100.0 * rng.normal();
    const auto back = t.synthesize(t.analyze(x));
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back[i] - x[i]));
    worst = std::max(worst, err);
    ++pairs;
    ok += err < 1e-9;
  }
  return {"round-trip", ok == pairs,
          fmt::format("{}/{} transforms reconstruct, worst max-abs error {:.3g}", ok, pairs, worst)};
}

CheckLine check_oracles() {
  std::size_t nodes = 0;
  double worst = 0.0;
  Rng rng(4);
  const std::vector<TransformPair> list{identity_pair(48), haar2d_pair(16), cdf97_2d_pair(16)};
  for (const auto& pair : list) {
    const auto t = permuted(pair, rng.next());
    std::vector<double> x(t.dimension());
    for (auto& v : x) v = 10.0 * rng.normal();
    RangeSumOracle fast(t.analyze(x));
    InnerProductOracle slow(x, t);
    const std::size_t padded = fast.padded_dimension();
    for (int level = 0; (std::size_t{1} << level) <= padded; ++level) {
      for (std::size_t n = 0; n < (padded >> level); ++n) {
        worst = std::max(worst, std::abs(fast.measure({level, n}) - slow.measure({level, n})));
        ++nodes;
      }
    }
  }
  return {"oracles", worst < 1e-8,
          fmt::format("{} nodes, worst disagreement {:.3g}", nodes, worst)};
}

std::vector<CheckLine> check_sufficiency(std::size_t threads) {
  const auto rep = sufficiency_sweep(10000, 5, threads);
  std::vector<CheckLine> lines;
  lines.push_back({"sufficiency", rep.extended.violations == 0,
                   fmt::format("extended tail: {} of {} instances meet u > r, {} missed a "
                               "significant coefficient",
                               rep.extended.held, rep.instances, rep.extended.violations)});
  lines.push_back({"narrow-tail", true,
                   fmt::format("info: {} instances meet u > r, {} missed a significant "
                               "coefficient",
                               rep.narrow.held, rep.narrow.violations)});
  return lines;
}

int cmd_verify(RunContext& ctx, const Common& common, const std::string& fault,
               std::ostream& out, std::ostream& err) {
  TieBreak tie = TieBreak::lower_index_first;
  if (fault == "tie-break") {
    tie = TieBreak::higher_index_first;
  } else if (!fault.empty()) {
    err << "error: unknown fault '" << fault << "'\n";
    return kUsage;
  }
  ctx.config() = {{"inject_fault", fault}};

  std::vector<CheckLine> lines{check_count_law(), check_descent(tie), check_transforms(),
                               check_oracles()};
  for (auto& l : check_sufficiency(common.threads)) lines.push_back(std::move(l));

  std::string table;
  bool all = true;
  for (const auto& l : lines) {
    table += fmt::format("{}  {:<15} {}\n", l.pass ? "PASS" : "FAIL", l.name, l.detail);
    all = all && l.pass;
  }
  out << table;
  ctx.write("verify.txt", table);
  ctx.write_manifest(0);
  return all ? kSuccess : kCheckFailure;
}

// --- experiments ------------------------------------------------------------

struct DetectionFlags {
  std::string model = "ksparse";
  std::size_t dimension = 1024;
  std::size_t k = 4;
  double q = 2.0;
  double alpha = 2.0;
  double scale = 1.0;
  std::size_t sparsity = 4;
  std::size_t trials = 1000;
};

int cmd_detection(RunContext& ctx, const Common& common, const DetectionFlags& f,
                  std::ostream& out) {
  ModelSpec spec;
  spec.kind = parse_model_kind(f.model);
  spec.dimension = f.dimension;
  spec.sparsity = f.k;
  spec.base = f.q;
  spec.exponent = f.alpha;
  spec.scale = f.scale;
  spec.validate();
  const auto rep = detection_experiment(spec, f.sparsity, f.trials, common.seed, common.threads);

  ctx.config() = {{"model", std::string(to_string(spec.kind))},
                  {"N", spec.dimension},
                  {"k", spec.sparsity},
                  {"q", spec.base},
                  {"alpha", spec.exponent},
                  {"R", spec.scale},
                  {"K", f.sparsity},
                  {"trials", f.trials},
                  {"trial_seed", "derive_seed(seed, trial)"}};
  std::string csv = "rank,probability\n";
  for (std::size_t r = 0; r < rep.probability.size(); ++r) {
    csv += fmt::format("{},{}\n", r + 1, rep.probability[r]);
  }
  ctx.write("detection.csv", csv);
  ctx.write_manifest(common.seed);
  out << fmt::format("detection: {} trials, P(rank 1..4) = {}\n", f.trials,
                     fmt::join(rep.probability.begin(),
                               rep.probability.begin() +
                                   static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                       4, rep.probability.size())),
                               ", "));
  return kSuccess;
}

struct EnergyFlags {
  std::vector<double> alphas{1.2, 1.5, 2.0, 5.0};
  std::vector<std::size_t> sparsities{1, 2, 4, 8, 16, 32, 64, 128, 255};
  std::size_t dimension = 1024;
  std::size_t trials = 1000;
};

int cmd_energy(RunContext& ctx, const Common& common, const EnergyFlags& f, std::ostream& out) {
  const auto rows =
      energy_experiment(f.alphas, f.sparsities, f.dimension, f.trials, common.seed, common.threads);
  ctx.config() = {{"alphas", f.alphas}, {"K", f.sparsities}, {"N", f.dimension},
                  {"trials", f.trials}};
  std::string csv = "alpha,K,energy\n";
  for (const auto& r : rows) csv += fmt::format("{},{},{}\n", r.alpha, r.sparsity, r.energy);
  ctx.write("energy.csv", csv);
  ctx.write_manifest(common.seed);
  out << fmt::format("energy: {} rows\n", rows.size());
  return kSuccess;
}

struct ImageFlags {
  std::string input;
  std::string basis = "cdf97";
  std::string ratios = "0.02:0.02:0.30";
  std::size_t trials = 10;
  int levels = -1;
  bool save_reconstructions = false;
};

int cmd_image(RunContext& ctx, const Common& common, const ImageFlags& f, std::ostream& out) {
  const auto kind = parse_transform_kind(f.basis);
  const auto grid = parse_ratios(f.ratios);
  const auto image = ctx.load_image(f.input);
  const auto points = image_experiment(image, kind, grid, f.trials, common.seed, common.threads,
                                       f.levels);
  ctx.config() = {{"basis", std::string(to_string(kind))}, {"ratios", grid},
                  {"trials", f.trials},                    {"levels", f.levels},
                  {"psnr", "reconstruction clipped to [0, 255]"}};
  std::string csv = "ratio,K,M,psnr_mean,psnr_std\n";
  for (const auto& p : points) {
    csv += fmt::format("{},{},{},{},{}\n", p.ratio, p.sparsity, p.measurements, p.psnr_mean,
                       p.psnr_std);
    out << fmt::format("M/N={:.2f} K={} M={} PSNR={:.2f} dB (sd {:.2f})\n", p.ratio, p.sparsity,
                       p.measurements, p.psnr_mean, p.psnr_std);
  }
  ctx.write("rate_distortion.csv", csv);

  if (f.save_reconstructions) {
    // Trial 0 of each grid point, same permutation as in the sweep.
    const auto base = make_transform(kind, image.width, f.levels);
    const auto coeffs = base.analyze(image.to_signal());
    for (const auto& p : points) {
      const auto run = sense_image(base, coeffs, p.sparsity, derive_seed(common.seed, 0));
      const auto recon = run.transform.synthesize(run.result.estimate.dense());
      ctx.write_pgm(fmt::format("recon_{}.pgm", ratio_tag(p.ratio)),
                    to_gray_image(recon, image.width, image.height));
    }
  }
  ctx.write_manifest(common.seed);
  return kSuccess;
}

struct MapsFlags {
  std::string input;
  std::string basis = "cdf97";
  std::size_t sparsity = 4095;
  int levels = -1;
};

int cmd_maps(RunContext& ctx, const Common& common, const MapsFlags& f, std::ostream& out) {
  const auto kind = parse_transform_kind(f.basis);
  const auto image = ctx.load_image(f.input);
  const auto maps = sensing_maps(image, kind, f.sparsity, common.seed, common.threads, f.levels);
  ctx.config() = {{"basis", std::string(to_string(kind))}, {"K", f.sparsity}, {"levels", f.levels},
                  {"scaling", "max-normalized, x255, rounded"}};
  for (const auto& m : maps) {
    ctx.write_pgm(fmt::format("map_level_{}.pgm", m.level), map_to_pgm(m));
  }
  ctx.write_manifest(common.seed);
  out << fmt::format("maps: {} levels written\n", maps.size());
  return kSuccess;
}

struct CapturedFlags {
  std::string input;
  std::string basis = "cdf97";
  std::size_t sparsity = 4506;
  std::size_t runs = 100;
  int levels = -1;
};

int cmd_captured(RunContext& ctx, const Common& common, const CapturedFlags& f,
                 std::ostream& out) {
  const auto kind = parse_transform_kind(f.basis);
  const auto image = ctx.load_image(f.input);
  const auto rep =
      captured_coefficients(image, kind, f.sparsity, f.runs, common.seed, common.threads, f.levels);
  ctx.config() = {{"basis", std::string(to_string(kind))}, {"K", f.sparsity}, {"runs", f.runs},
                  {"levels", f.levels}};
  std::string overlaps = "run,overlap,rank_matches\n";
  for (std::size_t r = 0; r < rep.overlaps.size(); ++r) {
    overlaps += fmt::format("{},{},{}\n", r, rep.overlaps[r], rep.rank_matches[r]);
  }
  std::string mags = "rank,optimal,sensed\n";
  for (std::size_t i = 0; i < rep.optimal_magnitudes.size(); ++i) {
    mags += fmt::format("{},{},{}\n", i + 1, rep.optimal_magnitudes[i], rep.sensed_magnitudes[i]);
  }
  ctx.write("captured_overlap.csv", overlaps);
  ctx.write("captured_magnitudes.csv", mags);
  ctx.write_manifest(common.seed);
  out << fmt::format(
      "captured: {} runs, rank matches {:.2f} (sd {:.2f}), set overlap {:.2f} (sd {:.2f}), "
      "dominated: {}\n",
      f.runs, rep.rank_match_mean, rep.rank_match_std, rep.mean, rep.std,
      rep.dominated ? "yes" : "no");
  return kSuccess;
}

// --- replay -----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path, const std::string& out_dir,
               std::size_t threads, std::ostream& out, std::ostream& err) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("{}: {}", manifest_path, e.what()), 0);
  }
  if (!manifest.contains("command") || !manifest.contains("args") ||
      !manifest.contains("outputs")) {
    throw IoError(fmt::format("{}: not a kahs manifest", manifest_path), 0);
  }
  for (const auto& input : manifest.value("inputs", json::array())) {
    const auto path = input.at("path").get<std::string>();
    if (sha256_hex(read_file(path)) != input.at("sha256").get<std::string>()) {
      err << "error: input '" << path << "' changed since the manifest was written\n";
      return kIo;
    }
  }

  std::vector<std::string> args{manifest.at("command").get<std::string>()};
  for (const auto& a : manifest.at("args")) args.push_back(a.get<std::string>());
  args.insert(args.end(), {"--out", out_dir});
  if (threads != 0) args.insert(args.end(), {"--threads", std::to_string(threads)});
  std::ostringstream inner_out;
  const int code = run(args, inner_out, err);
  if (code != kSuccess && code != kCheckFailure) return code;

  std::map<std::string, std::string> recorded;
  for (const auto& o : manifest.at("outputs")) {
    recorded[o.at("file").get<std::string>()] = o.at("sha256").get<std::string>();
  }
  std::size_t same = 0;
  std::size_t differ = 0;
  for (const auto& [name, sha] : recorded) {
    const fs::path fresh = fs::path(out_dir) / name;
    const bool match = fs::exists(fresh) && sha256_hex(read_file(fresh)) == sha;
    if (match) {
      ++same;
    } else {
      ++differ;
      out << "differs: " << name << '\n';
    }
  }
  const bool manifest_same = read_file(fs::path(out_dir) / "manifest.json") ==
                             manifest.dump(2) + "\n";
  if (!manifest_same) out << "differs: manifest.json\n";
  out << fmt::format("replay: {} of {} outputs byte-identical\n", same, recorded.size());
  return differ == 0 && manifest_same ? kSuccess : kCheckFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive hierarchical sensing experiments", "kahs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  std::string fault;
  DetectionFlags det;
  EnergyFlags energy;
  ImageFlags img;
  MapsFlags maps;
  CapturedFlags cap;
  std::string manifest_path;
  std::string replay_out = "replay";

  auto* verify = app.add_subcommand("verify", "Run the invariant checks and print a table");
  add_common(verify, common, false);
  verify->add_option("--inject-fault", fault)->group("");

  auto* detection = app.add_subcommand("synth-detection", "Detection probability per rank");
  add_common(detection, common);
  detection->add_option("--model", det.model, "ksparse | exponential | powerlaw")
      ->capture_default_str();
  detection->add_option("--N", det.dimension, "Signal dimension")->capture_default_str();
  detection->add_option("--k", det.k, "Nonzeros of the k-sparse model")->capture_default_str();
  detection->add_option("--q", det.q, "Exponential base")->capture_default_str();
  detection->add_option("--alpha", det.alpha, "Power-law exponent")->capture_default_str();
  detection->add_option("--R", det.scale, "Magnitude scale")->capture_default_str();
  detection->add_option("--K", det.sparsity, "Target sparsity")->capture_default_str();
  detection->add_option("--trials", det.trials)->capture_default_str();

  auto* synth_energy = app.add_subcommand("synth-energy", "Captured energy of power-law signals");
  add_common(synth_energy, common);
  synth_energy->add_option("--alphas", energy.alphas)->delimiter(',')->capture_default_str();
  synth_energy->add_option("--K", energy.sparsities)->delimiter(',')->capture_default_str();
  synth_energy->add_option("--N", energy.dimension)->capture_default_str();
  synth_energy->add_option("--trials", energy.trials)->capture_default_str();

  auto* image = app.add_subcommand("image", "Rate-distortion sweep on a PGM image");
  add_common(image, common);
  image->add_option("--input", img.input, "512x512 8-bit PGM")->required();
  image->add_option("--basis", img.basis, "haar | cdf97")->capture_default_str();
  image->add_option("--ratios", img.ratios, "M/N grid start:step:stop")->capture_default_str();
  image->add_option("--trials", img.trials)->capture_default_str();
  image->add_option("--levels", img.levels, "Wavelet levels (-1 = full depth)");
  image->add_flag("--save-reconstructions", img.save_reconstructions,
                  "Write the trial-0 reconstruction of each grid point");

  auto* map_cmd = app.add_subcommand("maps", "Spatial sensing maps, one PGM per level");
  add_common(map_cmd, common);
  map_cmd->add_option("--input", maps.input)->required();
  map_cmd->add_option("--basis", maps.basis)->capture_default_str();
  map_cmd->add_option("--K", maps.sparsity)->capture_default_str();
  map_cmd->add_option("--levels", maps.levels);

  auto* captured = app.add_subcommand("captured", "Overlap with the optimal K-term set");
  add_common(captured, common);
  captured->add_option("--input", cap.input)->required();
  captured->add_option("--basis", cap.basis)->capture_default_str();
  captured->add_option("--K", cap.sparsity)->capture_default_str();
  captured->add_option("--runs", cap.runs)->capture_default_str();
  captured->add_option("--levels", cap.levels);

  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare outputs");
  replay->add_option("--manifest", manifest_path)->required();
  replay->add_option("--out", replay_out, "Directory for the fresh outputs")
      ->capture_default_str();
  replay->add_option("--threads", common.threads);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (replay->parsed()) return cmd_replay(manifest_path, replay_out, common.threads, out, err);
    auto* sub = app.get_subcommands().front();
    RunContext ctx(sub->get_name(), replayable_args(args), common.out_dir);
    if (verify->parsed()) return cmd_verify(ctx, common, fault, out, err);
    if (detection->parsed()) return cmd_detection(ctx, common, det, out);
    if (synth_energy->parsed()) return cmd_energy(ctx, common, energy, out);
    if (image->parsed()) return cmd_image(ctx, common, img, out);
    if (map_cmd->parsed()) return cmd_maps(ctx, common, maps, out);
    if (captured->parsed()) return cmd_captured(ctx, common, cap, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << " (byte offset " << e.offset() << ")\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace kahs::cli
