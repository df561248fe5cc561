#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "anchor/dataset.hpp"
#include "anchor/gp.hpp"
#include "oracles.hpp"

using anchor::KernelFamily;
using anchor::KernelSpec;
using anchor::Matrix;
using anchor::Rng;
using anchor::Vector;

namespace {

// y = x sin(5x) at six fixed abscissae, the toy set used all over the
// single-hidden-layer comparisons.
Matrix toy_x() {
  Matrix x(6, 1);
  x << -0.8, -0.1, 0.02, 0.2, 0.6, 0.8;
  return x;
}

Vector toy_y() {
  Matrix x = toy_x();
  Vector y(6);
  for (int i = 0; i < 6; ++i) y[i] = x(i, 0) * std::sin(5.0 * x(i, 0));
  return y;
}

std::string data_file(const char* name) {
  const char* dir = std::getenv("ANCHOR_ENS_DATA");
  if (!dir) return {};
  std::string path = std::string(dir) + "/" + name;
  std::ifstream probe(path);
  return probe ? path : std::string();
}

}  // namespace

TEST_CASE("single-point fit halves the target") {
  // bias_var 2 makes k(0,0) = 1; with unit noise alpha = y / 2.
  KernelSpec spec{KernelFamily::Relu, 2.0, 1.0};
  Matrix x = Matrix::Zero(1, 1);
  Vector y(1);
  y << 3.0;
  auto m = anchor::gp_fit(spec, 1.0, x, y);
  REQUIRE(m.alpha[0] == Catch::Approx(1.5));
}

TEST_CASE("toy-set fit tracks the targets at the inputs") {
  KernelSpec spec{KernelFamily::Relu, 10.0, 10.0};
  auto m = anchor::gp_fit(spec, 0.001, toy_x(), toy_y());
  auto pred = anchor::gp_predict(m, toy_x());
  for (int i = 0; i < 6; ++i)
    REQUIRE(std::abs(pred.mean[i] - toy_y()[i]) < 0.1);
}

TEST_CASE("duplicate points with zero noise exercise the jitter path") {
  KernelSpec spec{KernelFamily::Relu, 1.0, 1.0};
  Matrix x(3, 1);
  x << 0.5, 0.5, -0.2;
  Vector y(3);
  y << 1.0, 1.0, 0.0;
  REQUIRE_NOTHROW(anchor::gp_fit(spec, 0.0, x, y));
}

TEST_CASE("predictions revert to the prior far from data") {
  KernelSpec spec{KernelFamily::Relu, 1.0, 1.0};
  Matrix x(2, 1);
  x << 0.3, -0.4;
  Vector y(2);
  y << 0.2, -0.1;
  auto m = anchor::gp_fit(spec, 0.1, x, y);
  Matrix far(1, 1);
  far << 100.0;
  auto pred = anchor::gp_predict(m, far);
  double prior_var = anchor::kernel_eval(spec, far.row(0).transpose(),
                                         far.row(0).transpose());
  REQUIRE(pred.epistemic_var[0] >= 0.5 * prior_var);
  REQUIRE(std::abs(pred.mean[0]) <= 0.25 * std::sqrt(prior_var));
}

TEST_CASE("interpolation limit at vanishing noise") {
  KernelSpec spec{KernelFamily::Relu, 1.0, 1.0};
  Matrix x(2, 1);
  x << 0.3, -0.4;
  Vector y(2);
  y << 0.2, -0.1;
  auto m = anchor::gp_fit(spec, 1e-10, x, y);
  auto pred = anchor::gp_predict(m, x);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(std::abs(pred.mean[i] - y[i]) < 1e-4);
    REQUIRE(pred.total_var[i] < 1e-6);
  }
}

TEST_CASE("two-point prediction matches hand inversion") {
  KernelSpec spec{KernelFamily::Erf, 0.8, 1.2};
  Matrix x(2, 1);
  x << 0.5, -1.0;
  Vector y(2);
  y << 1.0, -0.5;
  const double noise = 0.3;
  auto m = anchor::gp_fit(spec, noise, x, y);
  Matrix xs(1, 1);
  xs << 0.2;
  auto pred = anchor::gp_predict(m, xs);

  auto k = [&](double a, double b) {
    Vector va(1), vb(1);
    va << a;
    vb << b;
    return anchor::kernel_eval(spec, va, vb);
  };
  double a11 = k(0.5, 0.5) + noise, a22 = k(-1.0, -1.0) + noise;
  double a12 = k(0.5, -1.0);
  double det = a11 * a22 - a12 * a12;
  double i11 = a22 / det, i22 = a11 / det, i12 = -a12 / det;
  double k1 = k(0.2, 0.5), k2 = k(0.2, -1.0);
  double mean = k1 * (i11 * y[0] + i12 * y[1]) + k2 * (i12 * y[0] + i22 * y[1]);
  double quad = k1 * (i11 * k1 + i12 * k2) + k2 * (i12 * k1 + i22 * k2);
  double var = k(0.2, 0.2) - quad + noise;

  REQUIRE(pred.mean[0] == Catch::Approx(mean).margin(1e-10));
  REQUIRE(pred.total_var[0] == Catch::Approx(var).margin(1e-10));
}

TEST_CASE("marginal log likelihood closed forms") {
  // k(0,0) = 0.5 with bias_var 1, plus noise 0.5 gives unit variance.
  KernelSpec spec{KernelFamily::Relu, 1.0, 1.0};
  Matrix x = Matrix::Zero(1, 1);
  Vector y = Vector::Zero(1);
  auto m = anchor::gp_fit(spec, 0.5, x, y);
  REQUIRE(anchor::gp_marginal_loglik(m) ==
          Catch::Approx(-0.5 * std::log(2.0 * M_PI)).margin(1e-9));

  Vector y2(1);
  y2 << 2.0;
  auto m2 = anchor::gp_fit(spec, 0.5, x, y2);
  REQUIRE(anchor::gp_marginal_loglik(m2) < anchor::gp_marginal_loglik(m));
  auto m3 = anchor::gp_fit(spec, 0.5, x, 10.0 * y2);
  REQUIRE(anchor::gp_marginal_loglik(m3) < anchor::gp_marginal_loglik(m2));
}

TEST_CASE("marginal log likelihood matches a dense density oracle") {
  Rng rng(404);
  KernelSpec spec{KernelFamily::Relu, 1.5, 0.7};
  Matrix x(5, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Vector y = oracles::random_vector(5, rng, 1.0);
  const double noise = 0.2;
  auto m = anchor::gp_fit(spec, noise, x, y);

  Matrix cov = anchor::gram_matrix(spec, x);
  cov.diagonal().array() += noise;
  Matrix inv = oracles::gauss_jordan_inverse(cov);
  double logdet = std::log(cov.determinant());
  double ref = -0.5 * y.dot(inv * y) - 0.5 * logdet -
               2.5 * std::log(2.0 * M_PI);
  REQUIRE(anchor::gp_marginal_loglik(m) == Catch::Approx(ref).margin(1e-8));
}

TEST_CASE("predictive variance never drops below the data noise") {
  Rng rng(55);
  KernelSpec spec{KernelFamily::Erf, 1.0, 1.0};
  Matrix x(20, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Vector y = oracles::random_vector(20, rng, 1.0);
  auto m = anchor::gp_fit(spec, 0.05, x, y);
  Matrix xs(30, 3);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = 2.0 * rng.normal();
  auto pred = anchor::gp_predict(m, xs);
  for (int i = 0; i < 30; ++i) REQUIRE(pred.total_var[i] >= 0.05 - 1e-12);
}

TEST_CASE("training-point permutation leaves predictions unchanged") {
  Rng rng(66);
  KernelSpec spec{KernelFamily::Relu, 1.0, 1.0};
  Matrix x(10, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Vector y = oracles::random_vector(10, rng, 1.0);
  std::vector<Eigen::Index> perm{3, 1, 4, 0, 9, 2, 6, 8, 7, 5};
  Matrix xp = anchor::take_rows(x, perm);
  Vector yp = anchor::take(y, perm);
  Matrix xs(5, 2);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = rng.normal();

  auto p1 = anchor::gp_predict(anchor::gp_fit(spec, 0.1, x, y), xs);
  auto p2 = anchor::gp_predict(anchor::gp_fit(spec, 0.1, xp, yp), xs);
  REQUIRE((p1.mean - p2.mean).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE((p1.total_var - p2.total_var).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("grid search with one candidate returns it") {
  Rng rng(77);
  Matrix x(40, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Vector y = oracles::random_vector(40, rng, 1.0);
  auto res = anchor::grid_search_hypers(x, y, {{2.0, 0.1}},
                                        KernelFamily::Relu, rng);
  REQUIRE(res.spec.bias_var == 2.0);
  REQUIRE(res.noise_var == 0.1);
  REQUIRE(res.spec.weight_var == Catch::Approx(1.0));
}

TEST_CASE("grid search recovers generating hyperparameters") {
  Rng rng(88);
  const int n = 200;
  Matrix x(n, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  KernelSpec truth{KernelFamily::Relu, 2.0, 1.0};
  const double true_noise = 0.1;
  Matrix cov = anchor::gram_matrix(truth, x);
  cov.diagonal().array() += true_noise;
  Vector y = anchor::cholesky_spd(cov) * rng.normal_vector(n);

  std::vector<double> biases{0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> noises{0.025, 0.05, 0.1, 0.2, 0.4};
  std::vector<anchor::HyperCandidate> grid;
  for (double b : biases)
    for (double s : noises) grid.push_back({b, s});
  auto res = anchor::grid_search_hypers(x, y, grid, KernelFamily::Relu, rng);

  auto index_of = [](const std::vector<double>& v, double t) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i] - t) < 1e-12) return static_cast<long>(i);
    return -1L;
  };
  REQUIRE(std::abs(index_of(biases, res.spec.bias_var) - index_of(biases, 2.0)) <=
          1);
  REQUIRE(std::abs(index_of(noises, res.noise_var) - index_of(noises, 0.1)) <=
          1);
}

TEST_CASE("grid search on the housing data picks the tuned noise level") {
  std::string path = data_file("boston.csv");
  if (path.empty()) SKIP("boston.csv not available");
  auto ds = anchor::load_csv(path, anchor::Schema::Regression);
  REQUIRE(ds.size() == 506);
  REQUIRE(ds.dim() == 13);
  std::vector<Eigen::Index> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  auto std_ds = anchor::standardize(ds, all);

  std::vector<double> noises{0.018, 0.027, 0.04, 0.06, 0.09, 0.135, 0.2};
  std::vector<anchor::HyperCandidate> grid;
  for (double b : {5.0, 10.0, 20.0})
    for (double s : noises) grid.push_back({b, s});
  Rng rng(31415);
  auto res = anchor::grid_search_hypers(std_ds.features, std_ds.targets, grid,
                                        KernelFamily::Relu, rng);
  long sel = -1, ref = -1;
  for (std::size_t i = 0; i < noises.size(); ++i) {
    if (std::abs(noises[i] - res.noise_var) < 1e-12) sel = long(i);
    if (std::abs(noises[i] - 0.06) < 1e-12) ref = long(i);
  }
  REQUIRE(std::abs(sel - ref) <= 1);
}

TEST_CASE("grid search failure taxonomy") {
  Rng rng(5);
  Matrix x(20, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Vector y = oracles::random_vector(20, rng, 1.0);
  REQUIRE_THROWS_AS(anchor::grid_search_hypers(x, y, {}, KernelFamily::Relu,
                                               rng),
                    anchor::ConfigInvalid);
}
