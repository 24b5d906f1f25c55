#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualiso/dualiso.hpp"

namespace fs = std::filesystem;
using namespace dualiso;

namespace {

std::string ev_suffix(double ev) {
  std::ostringstream os;
  os << ev;
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

std::vector<ExperimentSource> load_hdr_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".hdr" || ext == ".pfm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ExperimentSource> out;
  for (const auto& f : files) out.push_back({f.filename().string(), io::read_hdr_any(f)});
  return out;
}

struct SimulateArgs {
  std::string in;
  std::string out_dir = ".";
  double ev = 2.0;
  std::string cfa = "RGGB";
  std::string format = "png";
};

int cmd_simulate(const SimulateArgs& a) {
  const HdrImage hdr = crop_for_layout(io::read_hdr_any(a.in));
  const CfaPattern cfa = CfaPattern::parse(a.cfa);
  const RawMosaic x = simulate_capture(hdr, EvSpread{a.ev}, cfa);
  fs::create_directories(a.out_dir);
  const fs::path out = fs::path(a.out_dir) / (fs::path(a.in).stem().string() + "_ev" + ev_suffix(a.ev) + "." + a.format);
  io::MosaicMetadata meta;
  meta.ev_low = -a.ev;
  meta.ev_high = a.ev;
  if (!(a.ev > 0.0)) throw DegenerateInput("--ev must be positive for a dual-ISO capture");
  io::write_mosaic(out, x, meta);
  std::cout << out.string() << '\n';
  return 0;
}

struct FuseArgs {
  std::string in;
  std::string out;
  std::string mode = "proposed";
  std::string demosaic = "gradient";
  std::string config;
  std::string report;
  std::string dump_dir;
  std::uint64_t seed = 0;
  int bits = 8;
  bool save_weights = false;
  bool save_luminance = false;
  bool save_segmentation = false;
  bool save_stack = false;
};

int cmd_fuse(const FuseArgs& a, CLI::App& app) {
  PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : load_config(a.config);
  // Explicit flags win over the config file.
  if (a.config.empty() || app.count("--mode")) cfg.mode = parse_mode(a.mode);
  if (a.config.empty() || app.count("--demosaic")) cfg.demosaic = parse_demosaic_algo(a.demosaic);
  if (a.config.empty() || app.count("--seed")) cfg.vb.seed = a.seed;
  const bool dumps = a.save_weights || a.save_luminance || a.save_segmentation || a.save_stack;
  cfg.keep_intermediates = dumps;

  const io::LoadedMosaic loaded = io::read_mosaic(a.in);
  cfg.layout = loaded.meta.layout();
  RunResult run = run_pipeline(loaded.mosaic, cfg);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  io::write_png(a.out, run.image, a.bits);
  run.report.outputs["fused"] = a.out;

  const fs::path dump = a.dump_dir.empty() ? fs::path(a.out).parent_path() : fs::path(a.dump_dir);
  const std::string stem = fs::path(a.out).stem().string();
  if (dumps) fs::create_directories(dump.empty() ? fs::path(".") : dump);
  auto record = [&](const std::string& key, const fs::path& p) { run.report.outputs[key] = p.string(); };
  if (a.save_weights && run.weights) {
    for (std::size_t k = 0; k < run.weights->maps.size(); ++k) {
      const fs::path p = dump / (stem + "_weight" + std::to_string(k) + ".pfm");
      io::write_pfm(p, run.weights->maps[k]);
      record("weight" + std::to_string(k), p);
    }
  }
  if (a.save_luminance && run.low && run.high) {
    const std::pair<const char*, const LuminanceMap*> maps[] = {
        {"lum_low", &run.low->original},   {"lum_high", &run.high->original},
        {"lum_low_enhanced", &run.low->enhanced}, {"lum_high_enhanced", &run.high->enhanced}};
    for (const auto& [name, m] : maps) {
      const fs::path p = dump / (stem + "_" + name + ".pfm");
      io::write_pfm(p, *m);
      record(name, p);
    }
  }
  if (a.save_segmentation && run.segmentation && run.model) {
    const fs::path p = dump / (stem + "_segments.png");
    io::write_segmentation_png(p, *run.segmentation);
    record("segments", p);
    const fs::path g = dump / (stem + "_gmm.json");
    write_json(g, to_json(*run.model));
    record("gmm", g);
  }
  if (a.save_stack && run.stack) {
    for (const auto& e : run.stack->entries) {
      const std::string name = "xhat_s" + std::to_string(e.segment) + "_" + to_string(e.kind);
      const fs::path p = dump / (stem + "_" + name + ".pfm");
      io::write_pfm(p, e.mosaic.plane);
      record(name, p);
    }
  }
  const nlohmann::json rep = to_json(run.report);
  if (!a.report.empty())
    write_json(a.report, rep);
  else
    std::cout << rep.dump(2) << '\n';
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> fused;
  std::string mosaic;
  std::string hdr;
  std::string demosaic = "gradient";
  std::string report;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const io::LoadedMosaic loaded = io::read_mosaic(a.mosaic);
  const DualIsoLayout layout = loaded.meta.layout();
  const DemosaicAlgo algo = parse_demosaic_algo(a.demosaic);
  const SeparatedMosaics halves = separate(loaded.mosaic, layout);
  const std::vector<RgbImage> pair{
      clipped(demosaic(interpolate_rows(halves.low, ExposureKind::low, layout), algo)),
      clipped(demosaic(interpolate_rows(halves.high, ExposureKind::high, layout), algo))};
  std::optional<HdrImage> reference;
  if (!a.hdr.empty()) reference = crop_for_layout(io::read_hdr_any(a.hdr), layout);

  nlohmann::json images = nlohmann::json::array();
  nlohmann::json sums = {{"mef_ssim", 0.0}, {"entropy", 0.0}, {"naturalness", 0.0}, {"tmqi", 0.0}};
  for (const auto& f : a.fused) {
    const RgbImage img = io::read_png_rgb(f);
    if (!img.same_size(pair[0])) throw DimensionError("fused image " + f + " does not match the mosaic size");
    const MetricScores s = evaluate(img, pair, reference ? &*reference : nullptr);
    nlohmann::json j = to_json(s);
    j["image"] = f;
    images.push_back(j);
    sums["mef_ssim"] = sums["mef_ssim"].get<double>() + s.mef_ssim;
    sums["entropy"] = sums["entropy"].get<double>() + s.entropy;
    sums["naturalness"] = sums["naturalness"].get<double>() + s.naturalness;
    if (s.tmqi) sums["tmqi"] = sums["tmqi"].get<double>() + s.tmqi->q;
  }
  const double n = static_cast<double>(a.fused.size());
  nlohmann::json mean;
  for (auto& [k, v] : sums.items()) mean[k] = v.get<double>() / n;
  if (!reference) mean["tmqi"] = nullptr;
  const nlohmann::json out{{"images", images},
                           {"mean", mean},
                           {"ev", nlohmann::json::array({loaded.meta.ev_low, loaded.meta.ev_high})}};
  if (!a.report.empty())
    write_json(a.report, out);
  else
    std::cout << out.dump(2) << '\n';
  return 0;
}

struct ExperimentArgs {
  std::string hdr_dir;
  int synthetic = 0;
  int size = 256;
  std::string evs = "1,2,3,4";
  std::string modes = "baseline,proposed";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string config;
  std::string report = "report.json";
  bool no_timings = false;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(tok);
  return out;
}

int cmd_experiment(const ExperimentArgs& a) {
  ExperimentOptions opts;
  if (!a.config.empty()) opts.base = load_config(a.config);
  opts.seed = a.seed;
  opts.threads = a.threads;
  opts.evs.clear();
  for (const auto& t : split(a.evs)) opts.evs.push_back(std::stod(t));
  opts.modes.clear();
  for (const auto& t : split(a.modes)) opts.modes.push_back(parse_mode(t));

  std::vector<ExperimentSource> sources;
  if (!a.hdr_dir.empty()) sources = load_hdr_dir(a.hdr_dir);
  for (int i = 0; i < a.synthetic; ++i)
    sources.push_back({"synthetic_" + std::to_string(i),
                       synthetic::make_scene(a.seed * 1000003ull + static_cast<std::uint64_t>(i), a.size, a.size)});
  if (sources.empty()) throw InputCountError("no HDR inputs: pass --hdr-dir with .hdr/.pfm files or --synthetic N");

  const ExperimentReport rep = run_experiment(sources, opts);
  nlohmann::json j = to_json(rep);
  j["seed"] = a.seed;
  if (a.no_timings)
    for (auto& row : j["rows"]) row.erase("timings_ms");
  write_json(a.report, j);
  std::size_t failed = 0;
  for (const auto& r : rep.rows)
    if (!r.ok) {
      ++failed;
      std::cerr << "failed: " << r.image << " ev " << r.ev << " " << to_string(r.mode) << ": " << r.error << '\n';
    }
  std::cout << rep.rows.size() - failed << "/" << rep.rows.size() << " cells succeeded; report " << a.report << '\n';
  return failed == 0 ? 0 : 1;
}

struct SynthArgs {
  int count = 1;
  int size = 256;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int cmd_synth(const SynthArgs& a) {
  fs::create_directories(a.out_dir);
  for (int i = 0; i < a.count; ++i) {
    const fs::path p = fs::path(a.out_dir) / ("synthetic_" + std::to_string(i) + ".hdr");
    io::write_rgbe(p, synthetic::make_scene(a.seed * 1000003ull + static_cast<std::uint64_t>(i), a.size, a.size));
    std::cout << p.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-ISO single-shot HDR: simulation, segmentation-based exposure compensation, fusion, metrics"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a dual-ISO raw capture from an HDR image");
  s->add_option("--in,input", sim.in, "HDR input (.hdr or .pfm)")->required()->check(CLI::ExistingFile);
  s->add_option("--ev", sim.ev, "EV spread k (exposures at +k and -k stops)")->required();
  s->add_option("--cfa", sim.cfa, "CFA tile, e.g. RGGB");
  s->add_option("--out", sim.out_dir, "Output directory");
  s->add_option("--format", sim.format, "Mosaic container")->check(CLI::IsMember({"png", "pgm"}));

  FuseArgs fz;
  auto* f = app.add_subcommand("fuse", "Reconstruct a fused LDR image from a dual-ISO mosaic");
  f->add_option("--in", fz.in, "Mosaic (.png/.pgm with .json sidecar)")->required()->check(CLI::ExistingFile);
  f->add_option("--out", fz.out, "Output PNG")->required();
  f->add_option("--mode", fz.mode, "baseline | proposed | proposed-no-enhancement | proposed-simple-demosaic");
  f->add_option("--demosaic", fz.demosaic, "simple | gradient");
  f->add_option("--config", fz.config, "JSON configuration file")->check(CLI::ExistingFile);
  f->add_option("--seed", fz.seed, "Seed for segmentation initialisation");
  f->add_option("--report", fz.report, "Write the run report (S, alpha table, timings) here");
  f->add_option("--bits", fz.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  f->add_option("--dump-dir", fz.dump_dir, "Directory for debug dumps (default: next to --out)");
  f->add_flag("--save-weights", fz.save_weights, "Dump fusion weight maps as PFM");
  f->add_flag("--save-luminance", fz.save_luminance, "Dump luminance and enhanced luminance maps as PFM");
  f->add_flag("--save-segmentation", fz.save_segmentation, "Dump the label map (PNG) and fitted mixture (JSON)");
  f->add_flag("--save-stack", fz.save_stack, "Dump the compensated mosaics as PFM");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score fused images against their capture");
  e->add_option("--fused", ev.fused, "Fused PNG(s)")->required()->check(CLI::ExistingFile);
  e->add_option("--mosaic", ev.mosaic, "Source mosaic with sidecar")->required()->check(CLI::ExistingFile);
  e->add_option("--hdr", ev.hdr, "Reference HDR (enables TMQI)")->check(CLI::ExistingFile);
  e->add_option("--demosaic", ev.demosaic, "Demosaic used for the reference exposure pair");
  e->add_option("--report", ev.report, "JSON output path (default: stdout)");

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "Simulate, reconstruct and score over HDR sources and EV spreads");
  x->add_option("--hdr-dir", ex.hdr_dir, "Directory of .hdr/.pfm sources")->check(CLI::ExistingDirectory);
  x->add_option("--synthetic", ex.synthetic, "Add N procedural scenes");
  x->add_option("--size", ex.size, "Procedural scene size in pixels");
  x->add_option("--evs", ex.evs, "Comma-separated EV spreads");
  x->add_option("--modes", ex.modes, "Comma-separated pipeline modes");
  x->add_option("--seed", ex.seed, "Seed");
  x->add_option("--threads", ex.threads, "Worker threads (0 = all cores)");
  x->add_option("--config", ex.config, "JSON configuration file")->check(CLI::ExistingFile);
  x->add_option("--report", ex.report, "JSON report path");
  x->add_flag("--no-timings", ex.no_timings, "Omit per-stage timings from the report");

  SynthArgs sy;
  auto* y = app.add_subcommand("synth", "Write procedural HDR scenes as Radiance .hdr");
  y->add_option("--count", sy.count, "Number of scenes");
  y->add_option("--size", sy.size, "Scene size in pixels");
  y->add_option("--seed", sy.seed, "Seed");
  y->add_option("--out", sy.out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*s) return cmd_simulate(sim);
    if (*f) return cmd_fuse(fz, *f);
    if (*e) return cmd_evaluate(ev);
    if (*x) return cmd_experiment(ex);
    if (*y) return cmd_synth(sy);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
