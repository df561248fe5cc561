#pragma once

// Closed-form Gaussian posterior algebra and randomised anchored MAP
// sampling for linear/Gaussian models.
//
// Beliefs are held in whichever of the two natural parameterizations they
// were built from - moments (mean, covariance) or information form
// (precision, precision*mean) - and the other is materialized on demand.
// Likelihoods with singular precision (perfect multicollinearity) stay
// usable in information form: products and MAP maps never need the
// likelihood covariance itself.

#include <cmath>
#include <optional>
#include <vector>

#include "anchor/linalg.hpp"

namespace anchor {

class GaussianBelief {
 public:
  static GaussianBelief from_moments(Vector mean, Matrix cov) {
    check_square(cov, mean.size());
    GaussianBelief b;
    b.mean_ = std::move(mean);
    b.cov_ = checked_symmetric(std::move(cov));
    return b;
  }

  static GaussianBelief from_precision(Vector info, Matrix precision) {
    check_square(precision, info.size());
    GaussianBelief b;
    b.info_ = std::move(info);
    b.prec_ = checked_symmetric(std::move(precision));
    return b;
  }

  Eigen::Index dim() const {
    return cov_ ? cov_->rows() : prec_->rows();
  }

  bool has_moments() const { return cov_.has_value(); }
  bool has_precision() const { return prec_.has_value(); }

  // True when the covariance can be materialized (precision has full
  // numerical rank). The jitter policy must not paper over a genuinely
  // rank-deficient precision, so this is an eigenvalue check.
  bool precision_invertible() const {
    if (cov_) return true;
    return numerically_spd(*prec_);
  }

  const Matrix& cov() const {
    if (!cov_) {
      if (!numerically_spd(*prec_))
        throw NotPositiveDefinite(
            "GaussianBelief: precision is singular, covariance undefined");
      cov_ = spd_inverse(*prec_);
    }
    return *cov_;
  }

  const Matrix& precision() const {
    if (!prec_) {
      if (!numerically_spd(*cov_))
        throw NotPositiveDefinite(
            "GaussianBelief: covariance is singular, precision undefined");
      prec_ = spd_inverse(*cov_);
    }
    return *prec_;
  }

  const Vector& mean() const {
    if (!mean_) {
      if (!numerically_spd(*prec_))
        throw NotPositiveDefinite(
            "GaussianBelief: precision is singular, mean undefined");
      mean_ = solve_spd(*prec_, *info_);
    }
    return *mean_;
  }

  // Information vector, precision * mean.
  const Vector& info() const {
    if (!info_) info_ = precision() * (*mean_);
    return *info_;
  }

 private:
  GaussianBelief() = default;

  static void check_square(const Matrix& m, Eigen::Index n) {
    if (m.rows() != m.cols() || m.rows() != n)
      throw ShapeMismatch("GaussianBelief: matrix/vector size mismatch");
  }

  static Matrix checked_symmetric(Matrix m) {
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    double asym = (m - m.transpose().eval()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale)
      throw ShapeMismatch("GaussianBelief: matrix is not symmetric");
    return symmetrized(m);
  }

  static bool numerically_spd(const Matrix& m) {
    if (m.rows() == 0) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    return lo > 1e-12 * std::max(1.0, hi);
  }

  mutable std::optional<Vector> mean_;
  mutable std::optional<Vector> info_;
  mutable std::optional<Matrix> cov_;
  mutable std::optional<Matrix> prec_;
};

// Product of two Gaussian densities, renormalized: precisions add,
// information vectors add.
inline GaussianBelief product_posterior(const GaussianBelief& prior,
                                        const GaussianBelief& like) {
  if (prior.dim() != like.dim())
    throw ShapeMismatch("product_posterior: dimension mismatch");
  Matrix prec = symmetrized(prior.precision() + like.precision());
  Vector info = prior.info() + like.info();
  Matrix cov = spd_inverse(prec);
  Vector mean = cov * info;
  return GaussianBelief::from_moments(std::move(mean), std::move(cov));
}

// MAP estimate when the prior is recentred at theta0 and combined with the
// given likelihood. Affine in theta0.
inline Vector map_given_anchor(const Vector& theta0, const Matrix& prior_cov,
                               const GaussianBelief& like) {
  Matrix prior_prec = spd_inverse(prior_cov);
  return solve_spd(symmetrized(prior_prec + like.precision()),
                   like.info() + prior_prec * theta0);
}

// Anchor noise distribution that makes the distribution of MAP estimates
// reproduce the posterior exactly: mean is the prior mean, covariance is
// S_prior + S_prior S_like^-1 S_prior (the transpose-exact reading of the
// S_prior^2 S_like^-1 correction; identical whenever the prior is isotropic).
inline GaussianBelief anchor_dist_exact(const GaussianBelief& prior,
                                        const GaussianBelief& like) {
  const Matrix& sp = prior.cov();
  Matrix cov = symmetrized(sp + sp * like.precision() * sp);
  return GaussianBelief::from_moments(prior.mean(), std::move(cov));
}

// The practical approximation: anchor noise equal to the prior itself.
inline GaussianBelief anchor_dist_approx(const GaussianBelief& prior) {
  return GaussianBelief::from_moments(prior.mean(), prior.cov());
}

// Closed-form covariance of the MAP-estimate distribution when anchors are
// drawn from the prior: S_post S_prior^-1 S_post (equals S_post^2 S_prior^-1
// for isotropic priors). No Monte Carlo involved.
inline Matrix anchored_posterior_cov_analytic(const GaussianBelief& prior,
                                              const GaussianBelief& like) {
  GaussianBelief post = product_posterior(prior, like);
  const Matrix& sp = post.cov();
  return symmetrized(sp * prior.precision() * sp);
}

// Posterior covariance in the perfectly-correlated limit with isotropic
// prior lambda*I over n parameters: lambda*I - (lambda/n)*J.
inline Matrix sherman_ideal_posterior(double lambda, int n) {
  if (lambda <= 0.0) throw ConfigInvalid("sherman_ideal_posterior: lambda <= 0");
  if (n < 1) throw ConfigInvalid("sherman_ideal_posterior: n < 1");
  Matrix out = Matrix::Constant(n, n, -lambda / n);
  out.diagonal().array() += lambda;
  return out;
}

struct LinearRegressionProblem {
  Matrix x;          // N x D design
  Vector y;          // N targets
  double noise_var;  // data noise variance
  GaussianBelief prior;
};

// Likelihood over regression weights in information form: precision
// X^T X / noise_var, information vector X^T y / noise_var. Stays valid for
// rank-deficient designs, where only the information form exists.
inline GaussianBelief linreg_likelihood(const LinearRegressionProblem& p) {
  if (p.x.rows() == 0) throw DegenerateLikelihood("linreg_likelihood: N = 0");
  if (p.x.rows() != p.y.size())
    throw ShapeMismatch("linreg_likelihood: X/y row mismatch");
  if (p.noise_var <= 0.0)
    throw NonPositiveVariance("linreg_likelihood: noise_var <= 0");
  Matrix prec = symmetrized(p.x.transpose() * p.x / p.noise_var);
  Vector info = p.x.transpose() * p.y / p.noise_var;
  return GaussianBelief::from_precision(std::move(info), std::move(prec));
}

struct TheoremSweepRow {
  double eps;
  double frob_rel_err_analytic;  // Eq-41 closed form vs true posterior
  double frob_rel_err_mc;        // sampled anchored covariance vs true posterior
};

namespace detail {

inline double rel_frobenius(const Matrix& a, const Matrix& ref) {
  return (a - ref).norm() / ref.norm();
}

}  // namespace detail

// Regenerates the correlated-design linear regression study for each eps:
// X ~ N(0, [[1, 1-eps], [1-eps, 1]]), y = x1/2 + x2/2 + N(0, 0.1^2), prior
// N(0, I/2). Reports how far the anchored-sampler covariance is from the
// true posterior, via the closed form and via Monte Carlo, averaged over
// `repeats` regenerations.
inline std::vector<TheoremSweepRow> verify_theorem2_sweep(
    const std::vector<double>& eps_list, Rng& rng, int n_points = 6,
    int repeats = 10, int mc_draws = 4000) {
  const double noise_sd = 0.1;
  GaussianBelief prior = GaussianBelief::from_moments(
      Vector::Zero(2), 0.5 * Matrix::Identity(2, 2));

  std::vector<TheoremSweepRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0.0 && eps <= 1.0))
      throw ConfigInvalid("verify_theorem2_sweep: eps must lie in (0, 1]");
    Matrix gen(2, 2);
    gen << 1.0, 1.0 - eps, 1.0 - eps, 1.0;

    double acc_analytic = 0.0;
    double acc_mc = 0.0;
    for (int r = 0; r < repeats; ++r) {
      Matrix x(n_points, 2);
      for (int i = 0; i < n_points; ++i)
        x.row(i) = sample_mvn(Vector::Zero(2), gen, rng).transpose();
      Vector y = 0.5 * x.col(0) + 0.5 * x.col(1) +
                 noise_sd * rng.normal_vector(n_points);

      GaussianBelief like =
          linreg_likelihood({x, y, noise_sd * noise_sd, prior});
      GaussianBelief post = product_posterior(prior, like);
      Matrix map_cov = anchored_posterior_cov_analytic(prior, like);
      acc_analytic += detail::rel_frobenius(map_cov, post.cov());

      // Same discrepancy, estimated by actually running the
      // anchor-then-optimize sampler with S0 = S_prior.
      Eigen::MatrixXd draws(mc_draws, 2);
      for (int s = 0; s < mc_draws; ++s) {
        Vector theta0 = sample_mvn(prior.mean(), prior.cov(), rng);
        draws.row(s) = map_given_anchor(theta0, prior.cov(), like).transpose();
      }
      Eigen::RowVectorXd m = draws.colwise().mean();
      Matrix emp = (draws.rowwise() - m).transpose() *
                   (draws.rowwise() - m) / (mc_draws - 1);
      acc_mc += detail::rel_frobenius(emp, post.cov());
    }
    rows.push_back({eps, acc_analytic / repeats, acc_mc / repeats});
  }
  return rows;
}

}  // namespace anchor
