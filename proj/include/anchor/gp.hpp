#pragma once

// Exact Gaussian-process regression with the wide-network kernels, used as
// the reference posterior throughout. Cubic in the training size; fine at
// benchmark scale.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "anchor/kernels.hpp"
#include "anchor/linalg.hpp"

namespace anchor {

// Per-point Gaussian predictions. Total variance includes the data noise;
// epistemic is the model part alone.
struct PredictiveDist {
  Vector mean;
  Vector epistemic_var;
  Vector total_var;
};

struct GpModel {
  KernelSpec kernel;
  double noise_var = 0.0;
  Matrix train_x;
  Vector train_y;
  Matrix chol;   // lower factor of K + noise_var * I (jitter included)
  Vector alpha;  // (K + noise_var * I)^-1 y
};

inline GpModel gp_fit(const KernelSpec& spec, double noise_var,
                      const Matrix& x, const Vector& y) {
  if (x.rows() == 0) throw EmptyData("gp_fit: no training points");
  if (x.rows() != y.size()) throw ShapeMismatch("gp_fit: X/y row mismatch");
  if (noise_var < 0.0) throw NonPositiveVariance("gp_fit: noise_var < 0");
  Matrix k = gram_matrix(spec, x);
  k.diagonal().array() += noise_var;
  GpModel m;
  m.kernel = spec;
  m.noise_var = noise_var;
  m.train_x = x;
  m.train_y = y;
  m.chol = cholesky_spd(k);
  Vector tmp = m.chol.triangularView<Eigen::Lower>().solve(y);
  m.alpha = m.chol.transpose().triangularView<Eigen::Upper>().solve(tmp);
  return m;
}

inline PredictiveDist gp_predict(const GpModel& m, const Matrix& x_star) {
  const auto n_star = x_star.rows();
  Matrix ks = cross_gram(m.kernel, m.train_x, x_star);  // N x N*
  PredictiveDist out;
  out.mean = ks.transpose() * m.alpha;
  out.epistemic_var.resize(n_star);
  Matrix v = m.chol.triangularView<Eigen::Lower>().solve(ks);
  for (Eigen::Index j = 0; j < n_star; ++j) {
    double kss =
        kernel_eval(m.kernel, x_star.row(j).transpose(), x_star.row(j).transpose());
    out.epistemic_var[j] = std::max(0.0, kss - v.col(j).squaredNorm());
  }
  out.total_var = out.epistemic_var.array() + m.noise_var;
  return out;
}

inline double gp_marginal_loglik(const GpModel& m) {
  const double n = static_cast<double>(m.train_y.size());
  double logdet_half = m.chol.diagonal().array().log().sum();
  return -0.5 * m.train_y.dot(m.alpha) - logdet_half -
         0.5 * n * std::log(2.0 * M_PI);
}

struct HyperCandidate {
  double bias_var;
  double noise_var;
};

struct GridSearchResult {
  KernelSpec spec;
  double noise_var = 0.0;
  double train_mll = 0.0;
  double val_nll = 0.0;
};

// Hyperparameter selection on a single 80/20 train/validation split. The
// first-layer weight variance is tied to bias_var / D. Candidates are
// shortlisted by training marginal log likelihood (top half), then the
// shortlist is ranked by validation NLL; ties prefer smaller noise_var, then
// smaller bias_var. Training inference is capped at 2000 points.
inline GridSearchResult grid_search_hypers(const Matrix& x, const Vector& y,
                                           const std::vector<HyperCandidate>& grid,
                                           KernelFamily family, Rng& rng) {
  if (grid.empty()) throw ConfigInvalid("grid_search_hypers: empty grid");
  const auto n = x.rows();
  const auto d = x.cols();
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  Eigen::Index n_train = std::max<Eigen::Index>(1, (n * 8) / 10);
  Eigen::Index n_fit = std::min<Eigen::Index>(n_train, 2000);
  Eigen::Index n_val = n - n_train;
  if (n_val < 1) throw ConfigInvalid("grid_search_hypers: too few points");

  Matrix x_fit(n_fit, d), x_val(n_val, d);
  Vector y_fit(n_fit), y_val(n_val);
  for (Eigen::Index i = 0; i < n_fit; ++i) {
    x_fit.row(i) = x.row(idx[i]);
    y_fit[i] = y[idx[i]];
  }
  for (Eigen::Index i = 0; i < n_val; ++i) {
    x_val.row(i) = x.row(idx[n_train + i]);
    y_val[i] = y[idx[n_train + i]];
  }

  struct Scored {
    GridSearchResult res;
    bool ok = false;
  };
  std::vector<Scored> scored(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    KernelSpec spec{family, grid[c].bias_var,
                    grid[c].bias_var / static_cast<double>(d)};
    try {
      GpModel m = gp_fit(spec, grid[c].noise_var, x_fit, y_fit);
      PredictiveDist pred = gp_predict(m, x_val);
      double nll = 0.0;
      for (Eigen::Index i = 0; i < n_val; ++i) {
        double var = pred.total_var[i];
        if (var <= 0.0) var = 1e-12;
        double err = y_val[i] - pred.mean[i];
        nll += 0.5 * std::log(2.0 * M_PI * var) + err * err / (2.0 * var);
      }
      scored[c] = {{spec, grid[c].noise_var, gp_marginal_loglik(m),
                    nll / static_cast<double>(n_val)},
                   true};
    } catch (const NotPositiveDefinite&) {
      scored[c].ok = false;
    }
  }

  std::vector<const Scored*> ok;
  for (const auto& s : scored)
    if (s.ok) ok.push_back(&s);
  if (ok.empty())
    throw AllCandidatesFailed("grid_search_hypers: every candidate failed");

  std::vector<const Scored*> shortlist = ok;
  std::sort(shortlist.begin(), shortlist.end(),
            [](const Scored* a, const Scored* b) {
              return a->res.train_mll > b->res.train_mll;
            });
  shortlist.resize((shortlist.size() + 1) / 2);

  const Scored* best = shortlist.front();
  for (const Scored* s : shortlist) {
    if (s->res.val_nll < best->res.val_nll ||
        (s->res.val_nll == best->res.val_nll &&
         (s->res.noise_var < best->res.noise_var ||
          (s->res.noise_var == best->res.noise_var &&
           s->res.spec.bias_var < best->res.spec.bias_var))))
      best = s;
  }
  return best->res;
}

}  // namespace anchor
