#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "modal/io.hpp"
#include "modal/partition.hpp"
#include "test_util.hpp"

using Catch::Approx;
using namespace modal;

#ifndef MODAL_FIXTURE_DIR
#define MODAL_FIXTURE_DIR "fixtures"
#endif

namespace {

MixtureModel fixture(const std::string& name) {
  return load_model(std::string(MODAL_FIXTURE_DIR) + "/" + name);
}

MixtureModel symmetric_bimodal_1d() {
  GaussianComponent a, b;
  a.mean = Eigen::VectorXd::Constant(1, -1.5);
  a.covariance = Eigen::MatrixXd::Identity(1, 1);
  a.weight = 0.5;
  b = a;
  b.mean = Eigen::VectorXd::Constant(1, 1.5);
  return MixtureModel({a, b});
}

}  // namespace

TEST_CASE("single Gaussian has a single cluster") {
  GaussianComponent c;
  c.mean = Eigen::VectorXd::Zero(1);
  c.covariance = Eigen::MatrixXd::Identity(1, 1);
  c.weight = 1.0;
  MixtureModel m({c});
  Clustering1D part = modal_partition_1d(m);
  REQUIRE(part.cluster_count() == 1);
  REQUIRE(part.breakpoints.empty());
}

TEST_CASE("symmetric bimodal splits at zero") {
  auto m = symmetric_bimodal_1d();
  Clustering1D part = modal_partition_1d(m);
  REQUIRE(part.cluster_count() == 2);
  REQUIRE(part.breakpoints[0] == Approx(0.0).margin(1e-10));
}

TEST_CASE("trimodal benchmark yields three clusters") {
  auto m = fixture("trimodal1d.json");
  Clustering1D part = modal_partition_1d(m);
  REQUIRE(part.cluster_count() == 3);
  // oracle values from dense scan + bisection on f'
  REQUIRE(part.breakpoints[0] == Approx(-1.0004839032851947).margin(1e-8));
  REQUIRE(part.breakpoints[1] == Approx(1.7975203199536534).margin(1e-8));
}

TEST_CASE("breakpoints are stationary points with positive curvature") {
  auto m = fixture("trimodal1d.json");
  Clustering1D part = modal_partition_1d(m);
  for (double b : part.breakpoints) {
    Eigen::VectorXd p(1);
    p << b;
    REQUIRE(m.gradient(p).norm() <= 1e-8);
    REQUIRE(m.hessian(p)(0, 0) > 0.0);
  }
}

TEST_CASE("1D labels partition the line at the breakpoints") {
  Clustering1D c;
  c.breakpoints = {-1.0, 2.0};
  REQUIRE(c.label(-5.0) == 0);
  REQUIRE(c.label(0.0) == 1);
  REQUIRE(c.label(3.0) == 2);
  REQUIRE(c.cluster_count() == 3);
}

TEST_CASE("grid partition of a single Gaussian is all one label") {
  GaussianComponent c;
  c.mean = Eigen::VectorXd::Zero(2);
  c.covariance = Eigen::MatrixXd::Identity(2, 2);
  c.weight = 1.0;
  MixtureModel m({c});
  CriticalSet set = find_critical_points(m);
  GridClustering grid = modal_partition_grid(m, set, bounding_box(m), {16, 16}, {}, 2);
  for (int label : grid.labels) REQUIRE(label == 0);
}

TEST_CASE("figure-3 grid labels split at the vertical axis") {
  auto m = fixture("figure3.json");
  CriticalSet set = find_critical_points(m);
  Eigen::VectorXd lo(2), hi(2);
  lo << -4.0, -4.0;
  hi << 4.0, 4.0;
  GridClustering grid =
      modal_partition_grid(m, set, {lo, hi}, {64, 64}, {}, 2);
  int left_label = grid.mode_locations[0](0) < 0.0 ? 0 : 1;
  long boundary_cells = 0;
  for (long cell = 0; cell < grid.cell_count(); ++cell) {
    Eigen::VectorXd x = grid.cell_center(cell);
    int label = grid.labels[cell];
    if (label == kBoundaryLabel) {
      ++boundary_cells;
      continue;
    }
    if (std::abs(x(0)) < 4.0 / 64.0) continue;  // skip the separatrix column
    REQUIRE(label == (x(0) < 0.0 ? left_label : 1 - left_label));
  }
  REQUIRE(boundary_cells <= grid.cell_count() / 50);  // separatrix is null
}

TEST_CASE("fountain grid shows all five mode labels") {
  auto m = fixture("fountain.json");
  CriticalSet set = find_critical_points(m);
  Eigen::VectorXd lo(2), hi(2);
  lo << -3.0, -3.0;
  hi << 3.0, 3.0;
  GridClustering grid = modal_partition_grid(m, set, {lo, hi}, {32, 32}, {}, 2);
  std::set<int> seen;
  for (int label : grid.labels)
    if (label != kBoundaryLabel) seen.insert(label);
  REQUIRE(seen.size() == 5);
}

TEST_CASE("exact 1D cluster masses sum to one") {
  auto m = symmetric_bimodal_1d();
  Clustering1D part = modal_partition_1d(m);
  ClusterMasses masses = cluster_masses(part, m);
  REQUIRE(masses.masses.size() == 2);
  REQUIRE(masses.masses[0] == Approx(0.5).margin(1e-10));
  REQUIRE(masses.masses[1] == Approx(0.5).margin(1e-10));
  REQUIRE(masses.total() == Approx(1.0).margin(1e-9));

  SECTION("any breakpoint vector gives unit total") {
    Rng rng(41);
    for (int i = 0; i < 20; ++i) {
      Clustering1D random_part = testutil::random_clustering_1d(rng, 2 + i % 4);
      REQUIRE(cluster_masses(random_part, m).total() == Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("single cluster carries all the mass") {
  auto m = symmetric_bimodal_1d();
  Clustering1D whole;
  ClusterMasses masses = cluster_masses(whole, m);
  REQUIRE(masses.masses == std::vector<double>{1.0});
}

TEST_CASE("monte carlo masses of figure 3 are half and half") {
  auto m = fixture("figure3.json");
  CriticalSet set = find_critical_points(m);
  GridClustering grid =
      modal_partition_grid(m, set, bounding_box(m), {8, 8}, {}, 2);
  const long n = 100000;
  ClusterMasses masses = cluster_masses(grid, m, n, 1234, {}, 2);
  REQUIRE(masses.masses.size() == 2);
  double bound = 4.0 * std::sqrt(0.25 / n);
  REQUIRE(std::abs(masses.masses[0] - 0.5) <= bound);
  REQUIRE(std::abs(masses.masses[1] - 0.5) <= bound);
  REQUIRE(masses.boundary_mass <= 1e-3);
  REQUIRE(validate_clustering(masses).pass);
  REQUIRE_THROWS_AS(cluster_masses(grid, m, 0, 1), std::invalid_argument);
}

TEST_CASE("validate_clustering flags degenerate masses") {
  ClusterMasses ok;
  ok.masses = {0.5, 0.5};
  REQUIRE(validate_clustering(ok).pass);

  ClusterMasses zero;
  zero.masses = {1.0, 0.0};
  auto r1 = validate_clustering(zero);
  REQUIRE(!r1.pass);
  REQUIRE(r1.violations.size() == 1);

  ClusterMasses overfull;
  overfull.masses = {0.6, 0.6};
  auto r2 = validate_clustering(overfull);
  REQUIRE(!r2.pass);
}
