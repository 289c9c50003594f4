#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modal/flow.hpp"
#include "modal/mixture.hpp"
#include "modal/morse.hpp"
#include "modal/parallel.hpp"

namespace modal {

//! Whole-line clustering: clusters are the open intervals between
//! consecutive breakpoints (the local minima of the density), with
//! m_0 = -inf and m_r = +inf.
struct Clustering1D {
  std::vector<double> breakpoints;  // strictly increasing

  int cluster_count() const { return static_cast<int>(breakpoints.size()) + 1; }

  //! Interval index of x; a point exactly at a breakpoint goes right
  //! (breakpoints are a null set, the choice is arbitrary).
  int label(double x) const {
    return static_cast<int>(
        std::upper_bound(breakpoints.begin(), breakpoints.end(), x) -
        breakpoints.begin());
  }
};

//! Discretized whole-space clustering: cell-center labels over a box.
//! Labels are mode indices (0-based) or kBoundaryLabel. Axis 0 varies
//! fastest in the flattened label array.
struct GridClustering {
  Eigen::VectorXd lo, hi;
  std::vector<int> resolution;
  std::vector<int> labels;
  std::vector<Eigen::VectorXd> mode_locations;

  int dimension() const { return static_cast<int>(resolution.size()); }
  int cluster_count() const { return static_cast<int>(mode_locations.size()); }

  long cell_count() const {
    long n = 1;
    for (int r : resolution) n *= r;
    return n;
  }

  Eigen::VectorXd cell_center(long flat) const {
    const int d = dimension();
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) {
      long idx = flat % resolution[i];
      flat /= resolution[i];
      x(i) = lo(i) + (idx + 0.5) * (hi(i) - lo(i)) / resolution[i];
    }
    return x;
  }

  //! Label of the cell containing x; throws for points outside the box.
  int label(const Eigen::VectorXd& x) const {
    const int d = dimension();
    if (x.size() != d) throw std::invalid_argument("GridClustering: dimension mismatch");
    long flat = 0, stride = 1;
    for (int i = 0; i < d; ++i) {
      if (x(i) < lo(i) || x(i) > hi(i)) {
        std::ostringstream msg;
        msg << "GridClustering: point outside grid box: (";
        for (int j = 0; j < d; ++j) msg << (j ? "," : "") << x(j);
        msg << ")";
        throw std::invalid_argument(msg.str());
      }
      long idx = static_cast<long>((x(i) - lo(i)) / (hi(i) - lo(i)) * resolution[i]);
      idx = std::min<long>(idx, resolution[i] - 1);
      flat += stride * idx;
      stride *= resolution[i];
    }
    return labels[flat];
  }
};

enum class MassMethod { ExactCdf, MonteCarlo };

struct ClusterMasses {
  std::vector<double> masses;
  MassMethod method = MassMethod::ExactCdf;
  long mc_n = 0;
  std::uint64_t mc_seed = 0;
  std::optional<std::vector<double>> standard_errors;
  double boundary_mass = 0.0;  // Monte Carlo fraction with Boundary label

  double total() const {
    double t = 0.0;
    for (double m : masses) t += m;
    return t;
  }
};

//! 1D ideal modal partition: breakpoints at the local minima of f in the
//! search box, found by bracketing sign changes of f' on a dense grid and
//! refining by bisection.
inline Clustering1D modal_partition_1d(const MixtureModel& model, double box_lo,
                                       double box_hi, int grid_points = 2048) {
  if (model.dimension() != 1)
    throw std::invalid_argument("modal_partition_1d: 1-dimensional models only");
  if (!(box_lo < box_hi))
    throw std::invalid_argument("modal_partition_1d: empty search box");

  auto deriv = [&](double x) {
    Eigen::VectorXd p(1);
    p(0) = x;
    return model.gradient(p)(0);
  };

  Clustering1D out;
  double prev_x = box_lo;
  double prev_d = deriv(prev_x);
  for (int i = 1; i < grid_points; ++i) {
    double x = box_lo + (box_hi - box_lo) * i / (grid_points - 1);
    double d = deriv(x);
    if (prev_d < 0.0 && d >= 0.0) {
      double a = prev_x, b = x;
      while (b - a > 1e-12) {
        double m = 0.5 * (a + b);
        if (deriv(m) < 0.0)
          a = m;
        else
          b = m;
      }
      double root = 0.5 * (a + b);
      Eigen::VectorXd p(1);
      p(0) = root;
      if (model.hessian(p)(0, 0) > 0.0) out.breakpoints.push_back(root);
    }
    prev_x = x;
    prev_d = d;
  }
  return out;
}

inline Clustering1D modal_partition_1d(const MixtureModel& model, int grid_points = 2048) {
  auto [lo, hi] = bounding_box(model);
  return modal_partition_1d(model, lo(0), hi(0), grid_points);
}

//! Label every cell center of a grid over `box` by its domain of attraction.
inline GridClustering modal_partition_grid(const MixtureModel& model,
                                           const CriticalSet& critical_set,
                                           const std::pair<Eigen::VectorXd, Eigen::VectorXd>& box,
                                           const std::vector<int>& resolution,
                                           const FlowConfig& flow_config = {},
                                           int threads = 1) {
  GridClustering grid;
  grid.lo = box.first;
  grid.hi = box.second;
  grid.resolution = resolution;
  for (const auto& m : critical_set.modes()) grid.mode_locations.push_back(m.location);
  if (grid.mode_locations.empty())
    throw std::invalid_argument("modal_partition_grid: critical set has no local maximum");
  if (static_cast<int>(resolution.size()) != model.dimension())
    throw std::invalid_argument("modal_partition_grid: resolution/dimension mismatch");

  grid.labels.assign(grid.cell_count(), kBoundaryLabel);
  parallel_for(0, grid.cell_count(), threads, [&](std::int64_t cell) {
    grid.labels[cell] = assign_mode(model, grid.mode_locations,
                                    grid.cell_center(cell), flow_config);
  });
  return grid;
}

//! Exact cluster masses of a 1D clustering via the mixture CDF.
inline ClusterMasses cluster_masses(const Clustering1D& clustering,
                                    const MixtureModel& model) {
  ClusterMasses out;
  out.method = MassMethod::ExactCdf;
  double prev = 0.0;
  for (double m : clustering.breakpoints) {
    double f = model.cdf1d(m);
    out.masses.push_back(f - prev);
    prev = f;
  }
  out.masses.push_back(1.0 - prev);
  return out;
}

//! Monte Carlo cluster masses of a modal clustering: sample the model,
//! ascend each point, report capture frequencies with binomial standard
//! errors. Boundary-labelled samples carry no cluster mass.
inline ClusterMasses cluster_masses(const MixtureModel& model,
                                    const std::vector<Eigen::VectorXd>& mode_locations,
                                    long n, std::uint64_t seed,
                                    const FlowConfig& flow_config = {}, int threads = 1) {
  if (n <= 0) throw std::invalid_argument("cluster_masses: n must be >= 1");
  SampleSet samples = model.sample(n, seed);
  std::vector<int> labels(n);
  parallel_for(0, n, threads, [&](std::int64_t i) {
    labels[i] = assign_mode(model, mode_locations,
                            samples.points.row(i).transpose(), flow_config);
  });
  ClusterMasses out;
  out.method = MassMethod::MonteCarlo;
  out.mc_n = n;
  out.mc_seed = seed;
  std::vector<long> counts(mode_locations.size(), 0);
  long boundary = 0;
  for (int l : labels) {
    if (l == kBoundaryLabel)
      ++boundary;
    else
      ++counts[l];
  }
  out.standard_errors.emplace();
  for (long c : counts) {
    double p = static_cast<double>(c) / n;
    out.masses.push_back(p);
    out.standard_errors->push_back(std::sqrt(p * (1.0 - p) / n));
  }
  out.boundary_mass = static_cast<double>(boundary) / n;
  return out;
}

inline ClusterMasses cluster_masses(const GridClustering& grid, const MixtureModel& model,
                                    long n, std::uint64_t seed,
                                    const FlowConfig& flow_config = {}, int threads = 1) {
  return cluster_masses(model, grid.mode_locations, n, seed, flow_config, threads);
}

struct ClusteringValidation {
  bool pass = true;
  std::vector<std::string> violations;
  std::string note;
};

//! Checks the whole-space clustering conditions on computed masses:
//! positivity of every cluster mass and unit total within the method
//! tolerance. Disjointness is structural for interval and grid
//! representations and is recorded as such.
inline ClusteringValidation validate_clustering(const ClusterMasses& masses) {
  ClusteringValidation report;
  report.note = "pairwise disjointness is structural for partition representations";
  for (std::size_t i = 0; i < masses.masses.size(); ++i) {
    if (!(masses.masses[i] > 0.0)) {
      report.pass = false;
      report.violations.push_back("cluster " + std::to_string(i + 1) +
                                  " has zero probability mass");
    }
  }
  double total = masses.total() + masses.boundary_mass;
  double tol = 1e-6;
  if (masses.method == MassMethod::MonteCarlo && masses.standard_errors) {
    double var = 0.0;
    for (double se : *masses.standard_errors) var += se * se;
    tol = std::max(4.0 * std::sqrt(var), 1e-12);
  }
  if (std::abs(total - 1.0) > tol) {
    report.pass = false;
    report.violations.push_back("total mass " + std::to_string(total) +
                                " deviates from 1 beyond tolerance");
  }
  return report;
}

}  // namespace modal
