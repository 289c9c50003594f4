#include <catch2/catch_amalgamated.hpp>

#include "modal/mixture.hpp"
#include "test_util.hpp"

using Catch::Approx;
using namespace modal;

namespace {

MixtureModel standard_normal_1d() {
  GaussianComponent c;
  c.mean = Eigen::VectorXd::Zero(1);
  c.covariance = Eigen::MatrixXd::Identity(1, 1);
  c.weight = 1.0;
  return MixtureModel({c});
}

MixtureModel figure3() {
  GaussianComponent a, b;
  a.mean.resize(2);
  a.mean << -1.5, 0.0;
  a.covariance = Eigen::MatrixXd::Identity(2, 2);
  a.weight = 0.5;
  b = a;
  b.mean << 1.5, 0.0;
  return MixtureModel({a, b});
}

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("density of the standard normal at the origin") {
  auto m = standard_normal_1d();
  REQUIRE(m.density(vec1(0.0)) == Approx(0.3989422804).epsilon(1e-9));
}

TEST_CASE("density of the two-component bivariate example at the origin") {
  // 2 * 0.5 * phi2((1.5, 0)) = exp(-1.125) / (2 pi)
  auto m = figure3();
  REQUIRE(m.density(vec2(0.0, 0.0)) == Approx(0.05167004496706156).epsilon(1e-12));
}

TEST_CASE("density far in the tails underflows gracefully") {
  auto m = figure3();
  double far = m.density(vec2(60.0, 0.0));
  REQUIRE(std::isfinite(far));
  REQUIRE(far >= 0.0);
  REQUIRE(far < 1e-300);
}

TEST_CASE("density rejects dimension mismatch") {
  auto m = figure3();
  REQUIRE_THROWS_AS(m.density(vec1(0.0)), std::invalid_argument);
  REQUIRE_THROWS_AS(m.gradient(vec1(0.0)), std::invalid_argument);
  REQUIRE_THROWS_AS(m.hessian(vec1(0.0)), std::invalid_argument);
}

TEST_CASE("model construction validates invariants") {
  GaussianComponent c;
  c.mean = Eigen::VectorXd::Zero(1);
  c.covariance = -Eigen::MatrixXd::Identity(1, 1);
  c.weight = 1.0;
  REQUIRE_THROWS_AS(MixtureModel({c}), std::invalid_argument);  // not SPD

  c.covariance = Eigen::MatrixXd::Identity(1, 1);
  c.weight = 0.5;
  REQUIRE_THROWS_AS(MixtureModel({c}), std::invalid_argument);  // weights != 1
  REQUIRE_NOTHROW(MixtureModel({c}, /*normalize_weights=*/true));
}

TEST_CASE("gradient vanishes at symmetric critical points") {
  auto m1 = standard_normal_1d();
  REQUIRE(m1.gradient(vec1(0.0)).norm() == Approx(0.0).margin(1e-15));
  auto m2 = figure3();
  REQUIRE(m2.gradient(vec2(0.0, 0.0)).norm() == Approx(0.0).margin(1e-15));
}

TEST_CASE("gradient and hessian match finite differences at random points") {
  Rng rng(20240811);
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 1 + static_cast<int>(rng.uniform() * 3);
    auto model = testutil::random_model(rng, dim, 1 + static_cast<int>(rng.uniform() * 4));
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x(i) = 6.0 * (rng.uniform() - 0.5);

    Eigen::VectorXd g = model.gradient(x);
    Eigen::VectorXd g_fd = testutil::fd_gradient(model, x);
    REQUIRE((g - g_fd).norm() <= 1e-6 * std::max(1.0, g.norm()) + 1e-10);

    Eigen::MatrixXd h = model.hessian(x);
    Eigen::MatrixXd h_fd = testutil::fd_hessian(model, x);
    REQUIRE((h - h_fd).norm() <= 1e-5 * std::max(1.0, h.norm()) + 1e-9);
  }
}

TEST_CASE("hessian is symmetric and negative at a 1D mode") {
  auto m = standard_normal_1d();
  REQUIRE(m.hessian(vec1(0.0))(0, 0) == Approx(-0.3989422804).epsilon(1e-9));

  Rng rng(7);
  auto model = testutil::random_model(rng, 3, 3);
  Eigen::VectorXd x(3);
  x << 0.3, -1.0, 0.7;
  Eigen::MatrixXd h = model.hessian(x);
  REQUIRE((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("figure-3 origin is a saddle of the density") {
  auto m = figure3();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.hessian(vec2(0.0, 0.0)));
  REQUIRE(es.eigenvalues()(0) < 0.0);
  REQUIRE(es.eigenvalues()(1) > 0.0);
}

TEST_CASE("cdf1d basics") {
  auto m = standard_normal_1d();
  REQUIRE(m.cdf1d(0.0) == Approx(0.5).epsilon(1e-14));
  REQUIRE(m.cdf1d(-1e9) <= 1e-15);
  REQUIRE(m.cdf1d(1e9) >= 1.0 - 1e-15);

  GaussianComponent a, b;
  a.mean = vec1(-1.5);
  a.covariance = Eigen::MatrixXd::Identity(1, 1);
  a.weight = 0.5;
  b = a;
  b.mean = vec1(1.5);
  MixtureModel mix({a, b});
  REQUIRE(mix.cdf1d(0.0) == Approx(0.5).epsilon(1e-14));
  REQUIRE(mix.cdf1d(1e9) - mix.cdf1d(-1e9) == Approx(1.0).epsilon(1e-12));

  auto m2 = figure3();
  REQUIRE_THROWS_AS(m2.cdf1d(0.0), std::invalid_argument);
}

TEST_CASE("cdf1d is monotone on a grid") {
  Rng rng(99);
  auto model = testutil::random_model(rng, 1, 4);
  double prev = model.cdf1d(-10.0);
  for (int i = 1; i <= 400; ++i) {
    double x = -10.0 + 20.0 * i / 400.0;
    double f = model.cdf1d(x);
    REQUIRE(f >= prev - 1e-15);
    prev = f;
  }
}

TEST_CASE("sampling is deterministic and unbiased") {
  auto m = standard_normal_1d();
  SampleSet s1 = m.sample(1000, 42);
  SampleSet s2 = m.sample(1000, 42);
  REQUIRE((s1.points.array() == s2.points.array()).all());
  REQUIRE(std::abs(s1.points.col(0).mean()) <= 4.0 / std::sqrt(1000.0));

  SampleSet s3 = m.sample(1000, 43);
  REQUIRE(!(s1.points.array() == s3.points.array()).all());
}

TEST_CASE("component occupancy follows the weights") {
  GaussianComponent a, b;
  a.mean = vec1(-100.0);
  a.covariance = Eigen::MatrixXd::Identity(1, 1);
  a.weight = 0.3;
  b = a;
  b.mean = vec1(100.0);
  b.weight = 0.7;
  MixtureModel m({a, b});
  const long n = 100000;
  SampleSet s = m.sample(n, 7);
  long count_a = 0;
  for (long i = 0; i < n; ++i)
    if (s.points(i, 0) < 0.0) ++count_a;
  double bound = 4.0 * std::sqrt(n * 0.3 * 0.7);
  REQUIRE(std::abs(count_a - n * 0.3) <= bound);
}

TEST_CASE("self-importance-sampled integral of the density is one") {
  // E_f[f(X)/f(X)] = 1 identically; checks the sampler targets the density.
  Rng rng(3);
  auto model = testutil::random_model(rng, 2, 3);
  SampleSet s = model.sample(2000, 11);
  double acc = 0.0;
  for (long i = 0; i < s.size(); ++i) {
    Eigen::VectorXd x = s.points.row(i).transpose();
    acc += model.density(x) / model.density(x);
  }
  REQUIRE(acc / s.size() == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("posterior label picks the dominant component") {
  auto m = figure3();
  REQUIRE(m.posterior_label(vec2(-2.0, 0.0)) == 0);
  REQUIRE(m.posterior_label(vec2(2.0, 0.0)) == 1);

  auto single = standard_normal_1d();
  REQUIRE(single.posterior_label(vec1(5.0)) == 0);
}

TEST_CASE("posterior boundary of an equal pair is the bisector hyperplane") {
  auto m = figure3();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x = vec2(8.0 * (rng.uniform() - 0.5), 8.0 * (rng.uniform() - 0.5));
    if (std::abs(x(0)) < 1e-9) continue;
    int expected = x(0) < 0.0 ? 0 : 1;
    REQUIRE(m.posterior_label(x) == expected);
  }
}

TEST_CASE("posterior label is invariant under weight rescaling") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = testutil::random_model(rng, 2, 3);
    std::vector<GaussianComponent> scaled;
    for (int k = 0; k < model.component_count(); ++k) {
      GaussianComponent c = model.component(k);
      c.weight *= 3.7;
      scaled.push_back(c);
    }
    MixtureModel rescaled(scaled, /*normalize_weights=*/true);
    Eigen::VectorXd x(2);
    x << 6.0 * (rng.uniform() - 0.5), 6.0 * (rng.uniform() - 0.5);
    REQUIRE(model.posterior_label(x) == rescaled.posterior_label(x));
  }
}

TEST_CASE("voronoi label agrees with an exhaustive scan") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform() * 6);
    std::vector<Eigen::VectorXd> centers;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd c(2);
      c << rng.uniform(), rng.uniform();
      centers.push_back(c);
    }
    Eigen::VectorXd x(2);
    x << rng.uniform(), rng.uniform();
    int best = 0;
    for (int k = 1; k < n; ++k)
      if ((x - centers[k]).norm() < (x - centers[best]).norm()) best = k;
    REQUIRE(voronoi_label(centers, x) == best);
  }
}

TEST_CASE("voronoi label basics") {
  std::vector<Eigen::VectorXd> centers = {vec2(-1.0, 0.0), vec2(1.0, 0.0)};
  REQUIRE(voronoi_label(centers, vec2(0.2, 5.0)) == 1);
  REQUIRE(voronoi_label({vec2(3.0, 3.0)}, vec2(-10.0, 4.0)) == 0);
  REQUIRE_THROWS_AS(voronoi_label({}, vec2(0.0, 0.0)), std::invalid_argument);
}
