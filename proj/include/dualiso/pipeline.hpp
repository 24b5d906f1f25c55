#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dualiso/demosaic.hpp"
#include "dualiso/exposure.hpp"
#include "dualiso/fusion.hpp"
#include "dualiso/image.hpp"
#include "dualiso/luminance.hpp"
#include "dualiso/metrics.hpp"
#include "dualiso/segmentation.hpp"
#include "dualiso/sve_raw.hpp"
#include "dualiso/sve_sim.hpp"

namespace dualiso {

enum class PipelineMode { baseline, proposed, proposed_no_enhancement, proposed_simple_demosaic };

inline std::string to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::baseline: return "baseline";
    case PipelineMode::proposed: return "proposed";
    case PipelineMode::proposed_no_enhancement: return "proposed-no-enhancement";
    case PipelineMode::proposed_simple_demosaic: return "proposed-simple-demosaic";
  }
  return "unknown";
}

inline PipelineMode parse_mode(std::string_view s) {
  for (auto m : {PipelineMode::baseline, PipelineMode::proposed, PipelineMode::proposed_no_enhancement,
                 PipelineMode::proposed_simple_demosaic})
    if (s == to_string(m)) return m;
  throw Error("unknown pipeline mode: " + std::string(s));
}

struct PipelineConfig {
  PipelineMode mode = PipelineMode::proposed;
  BilateralParams bilateral{};
  VbConfig vb{};
  DemosaicAlgo demosaic = DemosaicAlgo::gradient_corrected;
  FusionParams fusion{};
  DualIsoLayout layout{};
  double epsilon = kEpsilon;
  double target_mean = kMiddleGray;
  bool keep_intermediates = false;  // retain luminance maps, X-hat stack and weights for dumps

  bool enhancement() const {
    return mode == PipelineMode::proposed || mode == PipelineMode::proposed_simple_demosaic;
  }
  DemosaicAlgo stack_demosaic() const {
    return mode == PipelineMode::proposed_simple_demosaic ? DemosaicAlgo::neighborhood_average : demosaic;
  }
};

struct AlphaEntry {
  int segment = 0;
  ExposureKind kind = ExposureKind::low;
  double alpha = 1.0;
};

struct RunReport {
  PipelineMode mode = PipelineMode::baseline;
  int segments = 0;  // S; 0 for the baseline
  std::size_t fusion_inputs = 0;
  std::vector<AlphaEntry> alphas;
  int vb_iterations = 0;
  bool vb_converged = true;
  std::vector<std::pair<std::string, double>> timings_ms;  // stage order
  std::map<std::string, std::string> outputs;

  double stage_ms(const std::string& name) const {
    for (const auto& [k, v] : timings_ms)
      if (k == name) return v;
    return 0.0;
  }
};

struct RunResult {
  RgbImage image;
  RunReport report;
  std::optional<SegmentationMap> segmentation;
  std::optional<GmmModel> model;
  std::vector<RgbImage> fusion_inputs;
  // Populated only with keep_intermediates.
  std::optional<ExposureInputs> low, high;
  std::optional<AdjustedStack> stack;
  std::optional<FusionWeights> weights;
};

namespace detail {

class StageTimer {
 public:
  explicit StageTimer(RunReport& r) : report_(r), start_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    report_.timings_ms.emplace_back(stage, std::chrono::duration<double, std::milli>(now - start_).count());
    start_ = now;
  }

 private:
  RunReport& report_;
  std::chrono::steady_clock::time_point start_;
};

struct FrontEnd {
  RawMosaic low;   // X_low, full height
  RawMosaic high;  // X_high, full height
};

inline FrontEnd separate_and_interpolate(const RawMosaic& x, const DualIsoLayout& layout, StageTimer& t) {
  const SeparatedMosaics halves = separate(x, layout);
  t.lap("separate");
  FrontEnd fe{interpolate_rows(halves.low, ExposureKind::low, layout),
              interpolate_rows(halves.high, ExposureKind::high, layout)};
  t.lap("interpolate");
  return fe;
}

}  // namespace detail

/// Conventional path: separate, interpolate, demosaic both exposures, fuse the pair.
inline RunResult run_baseline(const RawMosaic& x, const PipelineConfig& cfg = {}) {
  RunResult res;
  res.report.mode = PipelineMode::baseline;
  detail::StageTimer t(res.report);
  const detail::FrontEnd fe = detail::separate_and_interpolate(x, cfg.layout, t);
  res.fusion_inputs.push_back(clipped(demosaic(fe.low, cfg.demosaic)));
  res.fusion_inputs.push_back(clipped(demosaic(fe.high, cfg.demosaic)));
  t.lap("demosaic");
  FusionWeights w;
  res.image = fuse(res.fusion_inputs, cfg.fusion, cfg.keep_intermediates ? &w : nullptr);
  t.lap("fuse");
  res.report.fusion_inputs = res.fusion_inputs.size();
  if (cfg.keep_intermediates) res.weights = std::move(w);
  return res;
}

/// Scene-segmentation based exposure compensation followed by fusion of the
/// 2S adjusted exposures.
inline RunResult run_proposed(const RawMosaic& x, const PipelineConfig& cfg = {}) {
  if (cfg.mode == PipelineMode::baseline) return run_baseline(x, cfg);
  RunResult res;
  res.report.mode = cfg.mode;
  detail::StageTimer t(res.report);
  const detail::FrontEnd fe = detail::separate_and_interpolate(x, cfg.layout, t);

  ExposureInputs low{fe.low, bayer_luminance(fe.low), {}};
  ExposureInputs high{fe.high, bayer_luminance(fe.high), {}};
  t.lap("luminance");
  if (cfg.enhancement()) {
    low.enhanced = enhance(low.original, cfg.bilateral);
    high.enhanced = enhance(high.original, cfg.bilateral);
  } else {
    low.enhanced = low.original;
    high.enhanced = high.original;
  }
  t.lap("enhance");

  const LumaPairField pairs = build_pairs(low.enhanced, high.enhanced);
  GmmModel model = fit_vb_gmm(pairs, cfg.vb);
  SegmentationMap seg = assign(model, pairs);
  t.lap("segmentation");

  AdjustedStack stack = build_stack(low, high, seg, 1.0, cfg.epsilon, cfg.target_mean);
  t.lap("compensate");

  const DemosaicAlgo algo = cfg.stack_demosaic();
  for (const auto& e : stack.entries) {
    res.fusion_inputs.push_back(clipped(demosaic(e.mosaic, algo)));
    res.report.alphas.push_back({e.segment, e.kind, e.scale.alpha});
  }
  t.lap("demosaic");
  FusionWeights w;
  res.image = fuse(res.fusion_inputs, cfg.fusion, cfg.keep_intermediates ? &w : nullptr);
  t.lap("fuse");

  if (cfg.keep_intermediates) {
    res.weights = std::move(w);
    res.low = std::move(low);
    res.high = std::move(high);
    res.stack = std::move(stack);
  }
  res.report.segments = seg.segments;
  res.report.fusion_inputs = res.fusion_inputs.size();
  res.report.vb_iterations = model.iterations;
  res.report.vb_converged = model.converged;
  res.segmentation = std::move(seg);
  res.model = std::move(model);
  return res;
}

inline RunResult run_pipeline(const RawMosaic& x, const PipelineConfig& cfg) {
  return cfg.mode == PipelineMode::baseline ? run_baseline(x, cfg) : run_proposed(x, cfg);
}

// ---------------------------------------------------------------------------
// Batch evaluation over HDR sources, EV spreads and modes.

struct MetricScores {
  std::optional<TmqiResult> tmqi;  // absent for real captures
  double mef_ssim = 0.0;
  double entropy = 0.0;
  double naturalness = 0.0;
};

/// Scores a fused image. MEF-SSIM is measured against the demosaiced exposure
/// pair of the capture, the same stack for every method.
inline MetricScores evaluate(const RgbImage& fused, std::span<const RgbImage> exposure_pair,
                             const HdrImage* reference) {
  MetricScores m;
  if (reference) m.tmqi = tmqi(fused, *reference);
  m.mef_ssim = mef_ssim(fused, exposure_pair).score;
  m.entropy = discrete_entropy(fused);
  m.naturalness = statistical_naturalness(fused);
  return m;
}

struct ExperimentSource {
  std::string name;
  HdrImage hdr;
};

struct ExperimentRow {
  std::string image;
  double ev = 0.0;
  PipelineMode mode = PipelineMode::baseline;
  bool ok = false;
  std::string error;
  int segments = 0;
  bool vb_converged = true;
  MetricScores scores;
  std::vector<std::pair<std::string, double>> timings_ms;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::vector<double> evs;
  std::vector<PipelineMode> modes;

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
  }

  /// Mean of a metric over successful rows for one (mode, ev) cell.
  template <typename Fn>
  std::optional<double> mean(PipelineMode mode, double ev, Fn metric) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.ok && r.mode == mode && r.ev == ev) {
        const std::optional<double> v = metric(r.scores);
        if (!v) continue;
        sum += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / n;
  }
};

struct ExperimentOptions {
  std::vector<double> evs{1, 2, 3, 4};
  std::vector<PipelineMode> modes{PipelineMode::baseline, PipelineMode::proposed};
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
  PipelineConfig base{};
  CfaPattern cfa{};
};

/// Crops to the largest size the dual-ISO layout accepts (height multiple of
/// 2 * line_period, even width).
inline HdrImage crop_for_layout(const HdrImage& img, const DualIsoLayout& layout = {}) {
  const int period = 2 * layout.line_period;
  const int h = img.height() / period * period;
  const int w = img.width() / 2 * 2;
  if (h == 0 || w == 0) throw DimensionError("image too small for the dual-ISO layout");
  if (h == img.height() && w == img.width()) return img;
  HdrImage out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) out(r, c, ch) = img(r, c, ch);
  return out;
}

inline ExperimentRow run_cell(const ExperimentSource& src, double ev, PipelineMode mode,
                              const ExperimentOptions& opts) {
  ExperimentRow row;
  row.image = src.name;
  row.ev = ev;
  row.mode = mode;
  try {
    PipelineConfig cfg = opts.base;
    cfg.mode = mode;
    cfg.vb.seed = opts.seed;
    const HdrImage hdr = crop_for_layout(src.hdr, cfg.layout);
    const RawMosaic x = simulate_capture(hdr, EvSpread{ev}, opts.cfa, cfg.layout);
    const RunResult run = run_pipeline(x, cfg);
    // Common MEF-SSIM stack: the demosaiced exposure pair of the conventional path.
    std::vector<RgbImage> pair;
    if (mode == PipelineMode::baseline) {
      pair = run.fusion_inputs;
    } else {
      PipelineConfig b = cfg;
      b.mode = PipelineMode::baseline;
      const SeparatedMosaics halves = separate(x, b.layout);
      pair.push_back(clipped(demosaic(interpolate_rows(halves.low, ExposureKind::low, b.layout), b.demosaic)));
      pair.push_back(clipped(demosaic(interpolate_rows(halves.high, ExposureKind::high, b.layout), b.demosaic)));
    }
    row.scores = evaluate(run.image, pair, &hdr);
    row.segments = run.report.segments;
    row.vb_converged = run.report.vb_converged;
    row.timings_ms = run.report.timings_ms;
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

inline ExperimentReport run_experiment(const std::vector<ExperimentSource>& sources, const ExperimentOptions& opts) {
  if (sources.empty()) throw InputCountError("experiment needs at least one HDR source");
  struct Cell {
    std::size_t src;
    double ev;
    PipelineMode mode;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < sources.size(); ++s)
    for (double ev : opts.evs)
      for (auto mode : opts.modes) cells.push_back({s, ev, mode});

  ExperimentReport report;
  report.evs = opts.evs;
  report.modes = opts.modes;
  report.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      report.rows[i] = run_cell(sources[cells[i].src], cells[i].ev, cells[i].mode, opts);
  };
  unsigned n = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, cells.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

inline const char* to_string(ExposureKind k) { return k == ExposureKind::low ? "low" : "high"; }

inline nlohmann::json timings_json(const std::vector<std::pair<std::string, double>>& t) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : t) j[k] = v;
  return j;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json alphas = nlohmann::json::array();
  for (const auto& a : r.alphas) alphas.push_back({{"segment", a.segment}, {"exposure", to_string(a.kind)}, {"alpha", a.alpha}});
  return {{"mode", to_string(r.mode)},         {"segments", r.segments},
          {"fusion_inputs", r.fusion_inputs},  {"alphas", alphas},
          {"vb_iterations", r.vb_iterations},  {"vb_converged", r.vb_converged},
          {"timings_ms", timings_json(r.timings_ms)}, {"outputs", r.outputs}};
}

inline nlohmann::json to_json(const GmmModel& m) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : m.components)
    comps.push_back({{"weight", c.weight},
                     {"mean", {c.mean.x(), c.mean.y()}},
                     {"covariance", {{c.covariance(0, 0), c.covariance(0, 1)}, {c.covariance(1, 0), c.covariance(1, 1)}}},
                     {"active", c.active}});
  return {{"components", comps},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"samples_used", m.samples_used},
          {"elbo", m.elbo_trace.empty() ? 0.0 : m.elbo_trace.back()}};
}

inline nlohmann::json to_json(const MetricScores& s) {
  nlohmann::json j;
  if (s.tmqi)
    j["tmqi"] = {{"Q", s.tmqi->q}, {"S", s.tmqi->fidelity}, {"N", s.tmqi->naturalness}};
  else
    j["tmqi"] = nullptr;
  j["mef_ssim"] = s.mef_ssim;
  j["entropy"] = s.entropy;
  j["naturalness"] = s.naturalness;
  return j;
}

inline std::string ev_label(double ev) {
  nlohmann::json j = ev;
  return "+-" + j.dump() + "EV";
}

inline nlohmann::json to_json(const ExperimentReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json j{{"image", r.image}, {"ev", r.ev}, {"mode", to_string(r.mode)}, {"ok", r.ok}};
    if (r.ok) {
      j["segments"] = r.segments;
      j["vb_converged"] = r.vb_converged;
      j["scores"] = to_json(r.scores);
      j["timings_ms"] = timings_json(r.timings_ms);
    } else {
      j["error"] = r.error;
    }
    rows.push_back(std::move(j));
  }
  // Tables: rows are methods, columns EV spreads, one table per metric.
  nlohmann::json tables;
  const std::vector<std::pair<std::string, std::function<std::optional<double>(const MetricScores&)>>> metrics{
      {"tmqi", [](const MetricScores& s) { return s.tmqi ? std::optional<double>(s.tmqi->q) : std::nullopt; }},
      {"mef_ssim", [](const MetricScores& s) { return std::optional<double>(s.mef_ssim); }},
      {"naturalness", [](const MetricScores& s) { return std::optional<double>(s.naturalness); }},
      {"entropy", [](const MetricScores& s) { return std::optional<double>(s.entropy); }},
  };
  for (const auto& [name, fn] : metrics) {
    nlohmann::json table{{"columns", nlohmann::json::array()}, {"rows", nlohmann::json::array()}};
    for (double ev : rep.evs) table["columns"].push_back(ev_label(ev));
    for (auto mode : rep.modes) {
      nlohmann::json values = nlohmann::json::array();
      for (double ev : rep.evs) {
        const auto m = rep.mean(mode, ev, fn);
        values.push_back(m ? nlohmann::json(*m) : nlohmann::json(nullptr));
      }
      table["rows"].push_back({{"method", to_string(mode)}, {"values", values}});
    }
    tables[name] = std::move(table);
  }
  return {{"rows", rows}, {"tables", tables}, {"all_ok", rep.all_ok()}};
}

}  // namespace dualiso
