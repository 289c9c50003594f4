#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "modal/assignment.hpp"
#include "modal/mixture.hpp"
#include "modal/partition.hpp"

namespace modal {

//! Clustering given directly by masses of shared atoms: each cluster is a
//! union of atoms of a fixed finite essential partition. Two atomic
//! clusterings over the same atom list can be compared exactly without a
//! model (used for worked-example fixtures).
struct AtomicClustering {
  std::vector<double> atom_masses;
  std::vector<std::vector<int>> clusters;  // atom indices, a partition of them

  int cluster_count() const { return static_cast<int>(clusters.size()); }

  double cluster_mass(int i) const {
    double m = 0.0;
    for (int a : clusters[i]) m += atom_masses[a];
    return m;
  }
};

//! Pairwise symmetric-difference masses P(C_i triangle D_j) between the
//! clusters of two clusterings, with the marginal cluster masses.
struct MassMatrix {
  Eigen::MatrixXd sym_diff;  // r x s
  std::vector<double> row_masses, col_masses;
  MassMethod method = MassMethod::ExactCdf;
  long mc_n = 0;
  std::uint64_t mc_seed = 0;

  int rows() const { return static_cast<int>(sym_diff.rows()); }
  int cols() const { return static_cast<int>(sym_diff.cols()); }

  MassMatrix transposed() const {
    MassMatrix t;
    t.sym_diff = sym_diff.transpose();
    t.row_masses = col_masses;
    t.col_masses = row_masses;
    t.method = method;
    t.mc_n = mc_n;
    t.mc_seed = mc_seed;
    return t;
  }
};

namespace detail {

//! Common tabulation: P(C_i ^ D_j) = P(C_i) + P(D_j) - 2 P(C_i n D_j).
inline MassMatrix mass_matrix_from_joint(const std::vector<double>& row_masses,
                                         const std::vector<double>& col_masses,
                                         const Eigen::MatrixXd& joint) {
  MassMatrix m;
  m.row_masses = row_masses;
  m.col_masses = col_masses;
  m.sym_diff.resize(joint.rows(), joint.cols());
  for (int i = 0; i < joint.rows(); ++i)
    for (int j = 0; j < joint.cols(); ++j)
      m.sym_diff(i, j) = row_masses[i] + col_masses[j] - 2.0 * joint(i, j);
  return m;
}

}  // namespace detail

//! Exact 1D mass matrix: intersection masses accumulate CDF increments over
//! the elementary intervals of the merged breakpoint set.
inline MassMatrix mass_matrix(const Clustering1D& c, const Clustering1D& d,
                              const MixtureModel& model) {
  const int r = c.cluster_count(), s = d.cluster_count();
  std::vector<double> cuts;
  cuts.reserve(c.breakpoints.size() + d.breakpoints.size());
  cuts.insert(cuts.end(), c.breakpoints.begin(), c.breakpoints.end());
  cuts.insert(cuts.end(), d.breakpoints.begin(), d.breakpoints.end());
  std::sort(cuts.begin(), cuts.end());

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(r, s);
  std::vector<double> rowm(r, 0.0), colm(s, 0.0);
  double prev_cdf = 0.0;
  for (std::size_t e = 0; e <= cuts.size(); ++e) {
    double hi_cdf = e < cuts.size() ? model.cdf1d(cuts[e]) : 1.0;
    double mass = hi_cdf - prev_cdf;
    prev_cdf = hi_cdf;
    double lo_edge = e == 0 ? -std::numeric_limits<double>::infinity() : cuts[e - 1];
    double hi_edge = e < cuts.size() ? cuts[e] : std::numeric_limits<double>::infinity();
    double mid = std::isinf(lo_edge)
                     ? (std::isinf(hi_edge) ? 0.0 : hi_edge - 1.0)
                     : (std::isinf(hi_edge) ? lo_edge + 1.0 : 0.5 * (lo_edge + hi_edge));
    int i = c.label(mid), j = d.label(mid);
    joint(i, j) += mass;
    rowm[i] += mass;
    colm[j] += mass;
  }
  MassMatrix m = detail::mass_matrix_from_joint(rowm, colm, joint);
  m.method = MassMethod::ExactCdf;
  return m;
}

//! Exact mass matrix for two clusterings of a common atomic partition.
inline MassMatrix mass_matrix(const AtomicClustering& c, const AtomicClustering& d) {
  if (c.atom_masses.size() != d.atom_masses.size())
    throw std::invalid_argument("mass_matrix: atomic clusterings share no atom space");
  for (std::size_t a = 0; a < c.atom_masses.size(); ++a)
    if (c.atom_masses[a] != d.atom_masses[a])
      throw std::invalid_argument("mass_matrix: atom masses differ between files");

  const int r = c.cluster_count(), s = d.cluster_count();
  std::vector<int> atom_to_d(c.atom_masses.size(), -1);
  for (int j = 0; j < s; ++j)
    for (int a : d.clusters[j]) atom_to_d[a] = j;

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(r, s);
  std::vector<double> rowm(r, 0.0), colm(s, 0.0);
  for (int i = 0; i < r; ++i)
    for (int a : c.clusters[i]) {
      if (atom_to_d[a] < 0)
        throw std::invalid_argument("mass_matrix: atom missing from second clustering");
      joint(i, atom_to_d[a]) += c.atom_masses[a];
    }
  for (int i = 0; i < r; ++i) rowm[i] = c.cluster_mass(i);
  for (int j = 0; j < s; ++j) colm[j] = d.cluster_mass(j);
  MassMatrix m = detail::mass_matrix_from_joint(rowm, colm, joint);
  m.method = MassMethod::ExactCdf;
  return m;
}

using LabelFn = std::function<int(const Eigen::VectorXd&)>;

inline LabelFn labeler(const Clustering1D& c) {
  return [&c](const Eigen::VectorXd& x) { return c.label(x(0)); };
}

inline LabelFn labeler(const GridClustering& g) {
  return [&g](const Eigen::VectorXd& x) { return g.label(x); };
}

//! Empirical mass matrix: relative label co-occurrence frequencies over the
//! given points. Labels may be kBoundaryLabel (membership in no cluster).
inline MassMatrix empirical_mass_matrix(const LabelFn& label_c, int r,
                                        const LabelFn& label_d, int s,
                                        const Eigen::MatrixXd& points) {
  const long n = points.rows();
  if (n < 1) throw std::invalid_argument("empirical_mass_matrix: no sample points");
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(r, s);
  std::vector<double> rowm(r, 0.0), colm(s, 0.0);
  const double w = 1.0 / static_cast<double>(n);
  for (long k = 0; k < n; ++k) {
    Eigen::VectorXd x = points.row(k).transpose();
    int i = label_c(x), j = label_d(x);
    if (i >= 0) rowm[i] += w;
    if (j >= 0) colm[j] += w;
    if (i >= 0 && j >= 0) joint(i, j) += w;
  }
  return detail::mass_matrix_from_joint(rowm, colm, joint);
}

//! Monte Carlo mass matrix from model samples.
inline MassMatrix mass_matrix_mc(const LabelFn& label_c, int r, const LabelFn& label_d,
                                 int s, const MixtureModel& model, long n,
                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("mass_matrix_mc: n must be >= 1");
  SampleSet samples = model.sample(n, seed);
  MassMatrix m = empirical_mass_matrix(label_c, r, label_d, s, samples.points);
  m.method = MassMethod::MonteCarlo;
  m.mc_n = n;
  m.mc_seed = seed;
  return m;
}

//! Result of one distance evaluation.
struct DistanceReport {
  double value = 0.0;
  std::vector<int> assignment;  // row -> column over the (padded) matrix; empty for d_H
  int padded = 0;               // empty-set components added to the smaller clustering
  double lambda = 1.0;          // penalty weight (distance in P-measure only)
  double p = 1.0;               // order (d_p family only)
  MassMethod method = MassMethod::ExactCdf;
  std::optional<double> standard_error;  // Monte Carlo methods only (delta method)

  //! Zero-distance identification: 1e-9 for exact paths, 4 standard errors
  //! for Monte Carlo paths.
  bool identifies_same_clustering() const {
    double threshold = standard_error ? 4.0 * *standard_error : 1e-9;
    return value <= threshold;
  }
};

namespace detail {

// Binomial variance of one estimated symmetric-difference mass.
inline double entry_variance(double entry, long n) {
  double e = std::clamp(entry, 0.0, 1.0);
  return e * (1.0 - e) / static_cast<double>(n);
}

}  // namespace detail

//! d_p (p >= 1) and d_inf between clusterings with equal cluster counts:
//! optimal relabeling via linear sum assignment on p-th powers, or the
//! bottleneck assignment for p = inf.
inline DistanceReport distance_dp(const MassMatrix& m, double p) {
  if (m.rows() != m.cols())
    throw std::invalid_argument(
        "distance_dp: cluster counts differ (d_P handles padding)");
  if (!(p >= 1.0)) throw std::invalid_argument("distance_dp: p must be >= 1");
  DistanceReport report;
  report.p = p;
  report.method = m.method;
  if (std::isinf(p)) {
    AssignmentResult a = bottleneck_assignment(m.sym_diff);
    report.value = a.cost;
    report.assignment = a.permutation;
    return report;
  }
  if (p == 1.0) {
    AssignmentResult a = linear_sum_assignment(m.sym_diff);
    report.value = a.cost;
    report.assignment = a.permutation;
    if (m.method == MassMethod::MonteCarlo && m.mc_n > 0) {
      double var = 0.0;
      for (int i = 0; i < m.rows(); ++i)
        var += detail::entry_variance(m.sym_diff(i, a.permutation[i]), m.mc_n);
      report.standard_error = std::sqrt(var);
    }
    return report;
  }
  Eigen::MatrixXd powered = m.sym_diff.array().pow(p);
  AssignmentResult a = linear_sum_assignment(powered);
  report.assignment = a.permutation;
  report.value = std::pow(a.cost, 1.0 / p);
  return report;
}

//! Distance in P-measure d_{P,lambda}; lambda = 1 gives d_P = d_1 / 2.
//! Unequal cluster counts are handled by padding the smaller clustering
//! with empty sets: following the paper's matrix construction, the cost
//! matrix gains |r - s| rows holding lambda times the unmatched cluster
//! masses (P(empty triangle D_j) = P(D_j)).
inline DistanceReport distance_dP(const MassMatrix& m, double lambda = 1.0) {
  if (lambda < 0.0) throw std::invalid_argument("distance_dP: lambda must be >= 0");
  if (m.rows() > m.cols()) {
    DistanceReport t = distance_dP(m.transposed(), lambda);
    return t;
  }
  const int r = m.rows(), s = m.cols();
  Eigen::MatrixXd cost(s, s);
  cost.topRows(r) = m.sym_diff;
  for (int i = r; i < s; ++i)
    for (int j = 0; j < s; ++j) cost(i, j) = lambda * m.col_masses[j];

  AssignmentResult a = linear_sum_assignment(cost);
  DistanceReport report;
  report.method = m.method;
  report.lambda = lambda;
  report.padded = s - r;
  report.assignment = a.permutation;
  report.value = 0.5 * a.cost;
  if (m.method == MassMethod::MonteCarlo && m.mc_n > 0) {
    double var = 0.0;
    for (int i = 0; i < s; ++i) {
      int j = a.permutation[i];
      var += i < r ? detail::entry_variance(m.sym_diff(i, j), m.mc_n)
                   : lambda * lambda * detail::entry_variance(m.col_masses[j], m.mc_n);
    }
    report.standard_error = 0.5 * std::sqrt(var);
  }
  return report;
}

//! Hausdorff distance between clusterings: the worst, over both directions,
//! nearest symmetric-difference mass. No matching problem is involved.
inline DistanceReport distance_dH(const MassMatrix& m) {
  DistanceReport report;
  report.method = m.method;
  double worst_row = 0.0;
  for (int i = 0; i < m.rows(); ++i) worst_row = std::max(worst_row, m.sym_diff.row(i).minCoeff());
  double worst_col = 0.0;
  for (int j = 0; j < m.cols(); ++j) worst_col = std::max(worst_col, m.sym_diff.col(j).minCoeff());
  report.value = std::max(worst_row, worst_col);
  if (m.method == MassMethod::MonteCarlo && m.mc_n > 0)
    report.standard_error = std::sqrt(detail::entry_variance(report.value, m.mc_n));
  return report;
}

// Convenience wrappers over the exact mass-matrix paths.

inline DistanceReport distance_dp(const Clustering1D& c, const Clustering1D& d,
                                  const MixtureModel& model, double p) {
  return distance_dp(mass_matrix(c, d, model), p);
}

inline DistanceReport distance_dP(const Clustering1D& c, const Clustering1D& d,
                                  const MixtureModel& model, double lambda = 1.0) {
  return distance_dP(mass_matrix(c, d, model), lambda);
}

inline DistanceReport distance_dH(const Clustering1D& c, const Clustering1D& d,
                                  const MixtureModel& model) {
  return distance_dH(mass_matrix(c, d, model));
}

inline DistanceReport distance_dP(const AtomicClustering& c, const AtomicClustering& d,
                                  double lambda = 1.0) {
  return distance_dP(mass_matrix(c, d), lambda);
}

inline DistanceReport distance_dH(const AtomicClustering& c, const AtomicClustering& d) {
  return distance_dH(mass_matrix(c, d));
}

//! Empirical distance in P-measure over a sample: the padded assignment
//! objective with the empirical measure in place of P. Coincides with the
//! classification distance for r = s and the transfer distance for r < s.
inline double empirical_dP(const LabelFn& label_c, int r, const LabelFn& label_d, int s,
                           const SampleSet& samples, double lambda = 1.0) {
  MassMatrix m = empirical_mass_matrix(label_c, r, label_d, s, samples.points);
  return distance_dP(m, lambda).value;
}

inline double empirical_dP(const Clustering1D& c, const Clustering1D& d,
                           const SampleSet& samples, double lambda = 1.0) {
  return empirical_dP(labeler(c), c.cluster_count(), labeler(d), d.cluster_count(),
                      samples, lambda);
}

//! Empirical Hausdorff distance over a sample (plug-in).
inline double empirical_dH(const LabelFn& label_c, int r, const LabelFn& label_d, int s,
                           const SampleSet& samples) {
  MassMatrix m = empirical_mass_matrix(label_c, r, label_d, s, samples.points);
  return distance_dH(m).value;
}

inline double empirical_dH(const Clustering1D& c, const Clustering1D& d,
                           const SampleSet& samples) {
  return empirical_dH(labeler(c), c.cluster_count(), labeler(d), d.cluster_count(),
                      samples);
}

}  // namespace modal
