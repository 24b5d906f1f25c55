#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "dualiso/image.hpp"

namespace dualiso {

/// Per-pixel (L'_low, L'_high) vectors. Channel 0 is low, channel 1 is high.
using LumaPairField = Raster<double, 2>;

inline LumaPairField build_pairs(const LuminanceMap& low, const LuminanceMap& high) {
  if (!low.same_shape(high)) throw DimensionError("luminance maps differ in size");
  LumaPairField out(low.width(), low.height());
  for (std::size_t i = 0; i < low.pixel_count(); ++i) {
    out.values()[2 * i] = low.values()[i];
    out.values()[2 * i + 1] = high.values()[i];
  }
  return out;
}

struct VbConfig {
  int max_components = 10;
  double dirichlet_alpha0 = 1e-3;
  double beta0 = 1.0;
  double nu0 = 3.0;
  int max_iters = 200;
  double elbo_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t subsample_cap = 50000;
  double prune_threshold = 1e-3;

  void validate() const {
    if (max_components < 1) throw DegenerateInput("max_components must be >= 1");
    if (!(dirichlet_alpha0 > 0.0) || !(beta0 > 0.0) || !(nu0 > 1.0))
      throw DegenerateInput("VB priors must be positive (nu0 > dimension - 1)");
    if (max_iters < 1 || !(elbo_tol > 0.0) || subsample_cap < 1 || !(prune_threshold > 0.0))
      throw DegenerateInput("VB iteration settings must be positive");
  }
};

struct GmmComponent {
  double weight = 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  bool active = true;

  // Variational posterior: Dirichlet alpha, Gaussian-Wishart (beta, m, W, nu).
  double alpha = 0.0;
  double beta = 0.0;
  double nu = 0.0;
  Eigen::Matrix2d wishart_scale = Eigen::Matrix2d::Identity();
};

struct GmmModel {
  std::vector<GmmComponent> components;
  int iterations = 0;
  bool converged = true;  // false means max_iters was hit (convergence warning)
  std::vector<double> elbo_trace;
  std::size_t samples_used = 0;

  std::size_t active_count() const {
    return static_cast<std::size_t>(
        std::count_if(components.begin(), components.end(), [](const auto& c) { return c.active; }));
  }
  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < components.size(); ++k)
      if (components[k].active) idx.push_back(k);
    return idx;
  }
};

struct SegmentationMap {
  Raster<int, 1> labels;  // 1..segments
  int segments = 0;
  std::vector<std::size_t> component_of_label;  // GMM component behind label s (index s - 1)

  int width() const noexcept { return labels.width(); }
  int height() const noexcept { return labels.height(); }
};

namespace detail {

inline constexpr double kMinEigenvalue = 1e-10;

inline Eigen::Matrix2d floor_spd(const Eigen::Matrix2d& m) {
  const Eigen::Matrix2d sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sym);
  Eigen::Vector2d ev = es.eigenvalues().cwiseMax(kMinEigenvalue);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// ln B(W, nu) of the Wishart normaliser for dimension 2.
inline double log_wishart_norm(const Eigen::Matrix2d& w, double nu) {
  return -0.5 * nu * std::log(w.determinant()) -
         (nu * std::numbers::ln2 + 0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * nu) +
          std::lgamma(0.5 * (nu - 1.0)));
}

inline double log_dirichlet_norm(const std::vector<double>& alpha) {
  double sum = 0.0;
  double lg = 0.0;
  for (double a : alpha) {
    sum += a;
    lg += std::lgamma(a);
  }
  return std::lgamma(sum) - lg;
}

inline std::vector<Eigen::Vector2d> draw_samples(const LumaPairField& field, std::size_t cap, std::mt19937_64& rng) {
  const std::size_t n = field.pixel_count();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n > cap) {
    for (std::size_t i = 0; i < cap; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<Eigen::Vector2d> out;
  out.reserve(idx.size());
  for (auto i : idx) out.emplace_back(field.values()[2 * i], field.values()[2 * i + 1]);
  return out;
}

// k-means++ seeds; stops early when every remaining sample coincides with a seed.
inline std::vector<Eigen::Vector2d> kmeanspp_seeds(const std::vector<Eigen::Vector2d>& x, int count,
                                                   std::mt19937_64& rng) {
  std::vector<Eigen::Vector2d> seeds;
  std::uniform_int_distribution<std::size_t> first(0, x.size() - 1);
  seeds.push_back(x[first(rng)]);
  std::vector<double> d2(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) d2[n] = (x[n] - seeds[0]).squaredNorm();
  while (static_cast<int>(seeds.size()) < count) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (!(total > 0.0)) break;
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = x.size() - 1;
    for (std::size_t n = 0; n < x.size(); ++n) {
      target -= d2[n];
      if (target < 0.0 && d2[n] > 0.0) {
        chosen = n;
        break;
      }
    }
    if (!(d2[chosen] > 0.0)) break;
    seeds.push_back(x[chosen]);
    for (std::size_t n = 0; n < x.size(); ++n) d2[n] = std::min(d2[n], (x[n] - seeds.back()).squaredNorm());
  }
  return seeds;
}

struct VbState {
  std::vector<GmmComponent> comps;
  std::vector<double> e_log_pi;
  std::vector<double> e_log_lambda;
};

}  // namespace detail

/// Bayesian Gaussian mixture on the pixel pairs by coordinate-ascent
/// variational inference (Dirichlet prior on weights, Gaussian-Wishart prior
/// on each component). Components whose expected weight falls below
/// cfg.prune_threshold are marked inactive after convergence.
inline GmmModel fit_vb_gmm(const LumaPairField& field, const VbConfig& cfg = {}) {
  cfg.validate();
  if (field.pixel_count() == 0) throw DegenerateInput("no samples to fit");
  for (double v : field.values())
    if (!std::isfinite(v)) throw DegenerateInput("non-finite luminance pair");

  std::mt19937_64 rng(cfg.seed);
  const std::vector<Eigen::Vector2d> x = detail::draw_samples(field, cfg.subsample_cap, rng);
  const std::size_t n = x.size();

  Eigen::Vector2d m0 = Eigen::Vector2d::Zero();
  for (const auto& v : x) m0 += v;
  m0 /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& v : x) cov += (v - m0) * (v - m0).transpose();
  cov /= static_cast<double>(n);

  GmmModel model;
  model.samples_used = n;

  const std::vector<Eigen::Vector2d> seeds = detail::kmeanspp_seeds(x, cfg.max_components, rng);
  if (seeds.size() == 1 && cov.trace() == 0.0) {
    // Single-atom input: the posterior collapses onto the point.
    GmmComponent c;
    c.weight = 1.0;
    c.mean = m0;
    c.covariance = Eigen::Matrix2d::Identity() * detail::kMinEigenvalue;
    c.alpha = cfg.dirichlet_alpha0 + static_cast<double>(n);
    c.beta = cfg.beta0 + static_cast<double>(n);
    c.nu = cfg.nu0 + static_cast<double>(n);
    model.components.push_back(c);
    model.iterations = 0;
    return model;
  }

  // Ridge keeps the prior scale invertible when the pairs are collinear.
  const double ridge = 1e-6 * cov.trace() + 1e-12;
  const Eigen::Matrix2d prior_scatter = cfg.nu0 * (cov + ridge * Eigen::Matrix2d::Identity());  // W0^-1
  const Eigen::Matrix2d w0 = prior_scatter.inverse();
  const double log_b0 = detail::log_wishart_norm(w0, cfg.nu0);

  const std::size_t kc = seeds.size();
  std::vector<double> resp(n * kc, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kc; ++k) {
      const double d = (x[i] - seeds[k]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    resp[i * kc + best] = 1.0;
  }

  detail::VbState st;
  st.comps.resize(kc);
  st.e_log_pi.resize(kc);
  st.e_log_lambda.resize(kc);
  std::vector<double> nk(kc);
  std::vector<Eigen::Vector2d> xbar(kc);
  std::vector<Eigen::Matrix2d> sk(kc);
  const double log2pi = std::log(2.0 * std::numbers::pi);

  double prev_elbo = -std::numeric_limits<double>::infinity();
  model.converged = false;
  int iter = 0;
  for (iter = 1; iter <= cfg.max_iters; ++iter) {
    // M-step: sufficient statistics and posterior hyperparameters.
    for (std::size_t k = 0; k < kc; ++k) {
      long double s = 0.0L, sx = 0.0L, sy = 0.0L;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * kc + k];
        s += r;
        sx += r * x[i].x();
        sy += r * x[i].y();
      }
      nk[k] = static_cast<double>(s);
      xbar[k] = nk[k] > 0.0 ? Eigen::Vector2d(static_cast<double>(sx / s), static_cast<double>(sy / s)) : m0;
      long double sxx = 0.0L, sxy = 0.0L, syy = 0.0L;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * kc + k];
        const Eigen::Vector2d d = x[i] - xbar[k];
        sxx += r * d.x() * d.x();
        sxy += r * d.x() * d.y();
        syy += r * d.y() * d.y();
      }
      sk[k] = Eigen::Matrix2d::Zero();
      if (nk[k] > 0.0) {
        sk[k] << static_cast<double>(sxx / s), static_cast<double>(sxy / s), static_cast<double>(sxy / s),
            static_cast<double>(syy / s);
      }
      GmmComponent& c = st.comps[k];
      c.alpha = cfg.dirichlet_alpha0 + nk[k];
      c.beta = cfg.beta0 + nk[k];
      c.nu = cfg.nu0 + nk[k];
      c.mean = (cfg.beta0 * m0 + nk[k] * xbar[k]) / c.beta;
      const Eigen::Vector2d dm = xbar[k] - m0;
      const Eigen::Matrix2d winv =
          prior_scatter + nk[k] * sk[k] + (cfg.beta0 * nk[k] / (cfg.beta0 + nk[k])) * dm * dm.transpose();
      c.wishart_scale = winv.inverse();
    }
    double alpha_sum = 0.0;
    for (const auto& c : st.comps) alpha_sum += c.alpha;
    const double psi_sum = boost::math::digamma(alpha_sum);
    for (std::size_t k = 0; k < kc; ++k) {
      const GmmComponent& c = st.comps[k];
      st.e_log_pi[k] = boost::math::digamma(c.alpha) - psi_sum;
      st.e_log_lambda[k] = boost::math::digamma(0.5 * c.nu) + boost::math::digamma(0.5 * (c.nu - 1.0)) +
                           2.0 * std::numbers::ln2 + std::log(c.wishart_scale.determinant());
    }

    // Evidence lower bound for the current (responsibilities, posterior) pair.
    long double elbo = 0.0L;
    std::vector<double> alphas(kc);
    for (std::size_t k = 0; k < kc; ++k) {
      const GmmComponent& c = st.comps[k];
      alphas[k] = c.alpha;
      const Eigen::Matrix2d& w = c.wishart_scale;
      const Eigen::Vector2d dx = xbar[k] - c.mean;
      const Eigen::Vector2d dm = c.mean - m0;
      // E[ln p(X | Z, mu, Lambda)]
      elbo += 0.5L * nk[k] *
              (st.e_log_lambda[k] - 2.0 / c.beta - c.nu * (sk[k] * w).trace() - c.nu * dx.dot(w * dx) - 2.0 * log2pi);
      // E[ln p(Z | pi)] + (alpha0 - 1) E[ln pi]  (prior on pi)
      elbo += nk[k] * st.e_log_pi[k] + (cfg.dirichlet_alpha0 - 1.0) * st.e_log_pi[k];
      // E[ln p(mu, Lambda)]
      elbo += 0.5L * (2.0 * std::log(cfg.beta0 / (2.0 * std::numbers::pi)) + st.e_log_lambda[k] -
                      2.0 * cfg.beta0 / c.beta - cfg.beta0 * c.nu * dm.dot(w * dm));
      elbo += log_b0 + 0.5L * (cfg.nu0 - 3.0) * st.e_log_lambda[k] - 0.5L * c.nu * (prior_scatter * w).trace();
      // - E[ln q(pi)] (component part)
      elbo -= (c.alpha - 1.0) * st.e_log_pi[k];
      // - E[ln q(mu, Lambda)]
      const double entropy_lambda =
          -detail::log_wishart_norm(w, c.nu) - 0.5 * (c.nu - 3.0) * st.e_log_lambda[k] + c.nu;
      elbo -= 0.5L * st.e_log_lambda[k] + std::log(c.beta / (2.0 * std::numbers::pi)) - 1.0 - entropy_lambda;
    }
    elbo += detail::log_dirichlet_norm(std::vector<double>(kc, cfg.dirichlet_alpha0));
    elbo -= detail::log_dirichlet_norm(alphas);
    for (double r : resp)
      if (r > 0.0) elbo -= static_cast<long double>(r) * std::log(r);
    const double elbo_d = static_cast<double>(elbo);
    model.elbo_trace.push_back(elbo_d);

    const bool done = std::isfinite(prev_elbo) && std::abs(elbo_d - prev_elbo) <= cfg.elbo_tol * std::abs(elbo_d);
    prev_elbo = elbo_d;
    if (done) {
      model.converged = true;
      break;
    }
    if (iter == cfg.max_iters) break;

    // E-step: new responsibilities.
    std::vector<double> lr(kc);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < kc; ++k) {
        const GmmComponent& c = st.comps[k];
        const Eigen::Vector2d d = x[i] - c.mean;
        lr[k] = st.e_log_pi[k] + 0.5 * st.e_log_lambda[k] - log2pi - 1.0 / c.beta -
                0.5 * c.nu * d.dot(c.wishart_scale * d);
        mx = std::max(mx, lr[k]);
      }
      double z = 0.0;
      for (std::size_t k = 0; k < kc; ++k) {
        lr[k] = std::exp(lr[k] - mx);
        z += lr[k];
      }
      for (std::size_t k = 0; k < kc; ++k) resp[i * kc + k] = lr[k] / z;
    }
  }
  model.iterations = std::min(iter, cfg.max_iters);

  double alpha_sum = 0.0;
  for (const auto& c : st.comps) alpha_sum += c.alpha;
  double active_weight = 0.0;
  for (auto& c : st.comps) {
    c.weight = c.alpha / alpha_sum;
    c.active = c.weight >= cfg.prune_threshold;
    c.covariance = detail::floor_spd((c.nu * c.wishart_scale).inverse());
    if (c.active) active_weight += c.weight;
  }
  for (auto& c : st.comps) c.weight = c.active ? c.weight / active_weight : 0.0;
  model.components = std::move(st.comps);
  return model;
}

namespace detail {

inline double log_gaussian(const Eigen::Vector2d& v, const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
  const Eigen::Vector2d d = v - mean;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) - 0.5 * d.dot(cov.inverse() * d);
}

struct ActiveTerms {
  std::vector<std::size_t> index;
  std::vector<double> log_weight;
  std::vector<Eigen::Vector2d> mean;
  std::vector<Eigen::Matrix2d> precision;
  std::vector<double> log_norm;  // ln pi - ln(2 pi) - 0.5 ln|Sigma|
};

inline ActiveTerms active_terms(const GmmModel& m) {
  ActiveTerms t;
  for (std::size_t k = 0; k < m.components.size(); ++k) {
    const auto& c = m.components[k];
    if (!c.active) continue;
    t.index.push_back(k);
    t.mean.push_back(c.mean);
    t.precision.push_back(c.covariance.inverse());
    t.log_norm.push_back(std::log(c.weight) - std::log(2.0 * std::numbers::pi) -
                         0.5 * std::log(c.covariance.determinant()));
  }
  if (t.index.empty()) throw DegenerateInput("model has no active components");
  return t;
}

}  // namespace detail

/// Posterior component probabilities pi_d G(v | mu_d, Sigma_d) / sum, over
/// active components (in component order), evaluated in log space.
inline std::vector<double> responsibilities(const GmmModel& m, const Eigen::Vector2d& v) {
  const detail::ActiveTerms t = detail::active_terms(m);
  std::vector<double> lg(t.index.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < lg.size(); ++a) {
    const Eigen::Vector2d d = v - t.mean[a];
    lg[a] = t.log_norm[a] - 0.5 * d.dot(t.precision[a] * d);
    mx = std::max(mx, lg[a]);
  }
  if (!std::isfinite(mx)) throw NumericalError("all component densities underflowed");
  double z = 0.0;
  for (double& l : lg) {
    l = std::exp(l - mx);
    z += l;
  }
  for (double& l : lg) l /= z;
  return lg;
}

/// Hard assignment by maximum responsibility (ties to the lowest component
/// index); labels are compacted to 1..S over non-empty segments.
inline SegmentationMap assign(const GmmModel& m, const LumaPairField& field) {
  const detail::ActiveTerms t = detail::active_terms(m);
  const std::size_t na = t.index.size();
  std::vector<int> raw(field.pixel_count());
  std::vector<std::size_t> counts(na, 0);
  for (std::size_t i = 0; i < field.pixel_count(); ++i) {
    const Eigen::Vector2d v(field.values()[2 * i], field.values()[2 * i + 1]);
    std::size_t best = 0;
    double best_l = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < na; ++a) {
      const Eigen::Vector2d d = v - t.mean[a];
      const double l = t.log_norm[a] - 0.5 * d.dot(t.precision[a] * d);
      if (l > best_l) {
        best_l = l;
        best = a;
      }
    }
    raw[i] = static_cast<int>(best);
    ++counts[best];
  }
  SegmentationMap seg;
  std::vector<int> compact(na, 0);
  for (std::size_t a = 0; a < na; ++a)
    if (counts[a] > 0) {
      compact[a] = ++seg.segments;
      seg.component_of_label.push_back(t.index[a]);
    }
  seg.labels = Raster<int, 1>(field.width(), field.height());
  for (std::size_t i = 0; i < raw.size(); ++i) seg.labels.values()[i] = compact[static_cast<std::size_t>(raw[i])];
  return seg;
}

}  // namespace dualiso
