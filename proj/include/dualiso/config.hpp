#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "dualiso/pipeline.hpp"

// JSON configuration for the pipeline. Absent keys keep their defaults.
namespace dualiso {

inline void apply_config(const nlohmann::json& j, PipelineConfig& cfg) {
  if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("demosaic")) cfg.demosaic = parse_demosaic_algo(j.at("demosaic").get<std::string>());
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.target_mean = j.value("target_mean", cfg.target_mean);
  if (const auto it = j.find("bilateral"); it != j.end()) {
    cfg.bilateral.sigma_spatial = it->value("sigma_spatial", cfg.bilateral.sigma_spatial);
    cfg.bilateral.sigma_range = it->value("sigma_range", cfg.bilateral.sigma_range);
    cfg.bilateral.radius = it->value("radius", cfg.bilateral.radius);
  }
  if (const auto it = j.find("vb"); it != j.end()) {
    cfg.vb.max_components = it->value("max_components", cfg.vb.max_components);
    cfg.vb.dirichlet_alpha0 = it->value("dirichlet_alpha0", cfg.vb.dirichlet_alpha0);
    cfg.vb.beta0 = it->value("beta0", cfg.vb.beta0);
    cfg.vb.nu0 = it->value("nu0", cfg.vb.nu0);
    cfg.vb.max_iters = it->value("max_iters", cfg.vb.max_iters);
    cfg.vb.elbo_tol = it->value("elbo_tol", cfg.vb.elbo_tol);
    cfg.vb.seed = it->value("seed", cfg.vb.seed);
    cfg.vb.subsample_cap = it->value("subsample_cap", cfg.vb.subsample_cap);
    cfg.vb.prune_threshold = it->value("prune_threshold", cfg.vb.prune_threshold);
  }
  if (const auto it = j.find("fusion"); it != j.end()) {
    cfg.fusion.w_contrast = it->value("w_contrast", cfg.fusion.w_contrast);
    cfg.fusion.w_saturation = it->value("w_saturation", cfg.fusion.w_saturation);
    cfg.fusion.w_exposedness = it->value("w_exposedness", cfg.fusion.w_exposedness);
    cfg.fusion.exposedness_center = it->value("exposedness_center", cfg.fusion.exposedness_center);
    cfg.fusion.exposedness_sigma = it->value("exposedness_sigma", cfg.fusion.exposedness_sigma);
    cfg.fusion.depth = it->value("depth", cfg.fusion.depth);
  }
  cfg.bilateral.validate();
  cfg.vb.validate();
}

inline PipelineConfig load_config(const std::string& path, PipelineConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  apply_config(nlohmann::json::parse(in), cfg);
  return cfg;
}

}  // namespace dualiso
