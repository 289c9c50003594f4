#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "modal/distances.hpp"
#include "modal/kde.hpp"
#include "modal/mixture.hpp"
#include "modal/parallel.hpp"
#include "modal/partition.hpp"
#include "modal/rng.hpp"

namespace modal {

//! Bandwidth schedule for the harness. PowerLaw gives h = c n^exponent;
//! with the default exponent -1/7 the uniform-convergence rate condition
//! (h -> 0, n h^5 / log n -> infinity) holds for any c > 0. When c is not
//! given it is calibrated so that h equals 1.06 times the model standard
//! deviation at the n = 100 reference.
struct BandwidthRule {
  enum class Kind { PowerLaw, Fixed };
  Kind kind = Kind::PowerLaw;
  std::optional<double> c;
  double exponent = -1.0 / 7.0;
  double fixed_h = 0.0;

  double bandwidth(long n, double model_sd) const {
    if (kind == Kind::Fixed) return fixed_h;
    double cc = c ? *c : 1.06 * model_sd * std::pow(100.0, -exponent);
    return cc * std::pow(static_cast<double>(n), exponent);
  }
};

struct ApproxTerms {
  double exact = 0.0;       // |F(mhat_j) - F(m_j)|
  double linearized = 0.0;  // f(m_j) |mhat_j - m_j|
  double derivative = std::numeric_limits<double>::quiet_NaN();
  // f(m_j)/f''(m_j) |fhat'(m_j)|; NaN when no estimator is supplied
};

//! Outcome of a single (n, replicate) cell of the harness.
struct ConsistencyRecord {
  long n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<double> est_minima;
  int cluster_count = 0;
  bool count_match = false;
  double d_P = 0.0;
  double d_H = 0.0;
  std::vector<ApproxTerms> approx;  // only for count-matched, localized replicates
};

struct ExperimentSummaryRow {
  long n = 0;
  double frac_correct_count = 0.0;
  double mean_dP = 0.0, mean_dH = 0.0;
  double median_dP = 0.0, median_dH = 0.0;
};

struct ExperimentConfig {
  std::vector<long> sample_sizes;  // strictly increasing
  int replicates = 1;
  BandwidthRule bandwidth;
  std::uint64_t base_seed = 0;
  std::optional<std::pair<double, double>> search_box;  // default: morse bbox
};

struct ExperimentResult {
  Clustering1D truth;
  std::vector<ConsistencyRecord> records;  // ordered by (n, replicate)
  std::vector<ExperimentSummaryRow> summary;
};

namespace detail {

//! True when est and truth have the same count and each estimated minimum is
//! strictly nearer to its own (sorted-order) true minimum than to any other:
//! the localized regime of the closed-form losses.
inline bool localized_regime(const Clustering1D& est, const Clustering1D& truth) {
  if (est.breakpoints.size() != truth.breakpoints.size()) return false;
  for (std::size_t j = 0; j < est.breakpoints.size(); ++j) {
    double own = std::abs(est.breakpoints[j] - truth.breakpoints[j]);
    for (std::size_t k = 0; k < truth.breakpoints.size(); ++k) {
      if (k == j) continue;
      if (std::abs(est.breakpoints[j] - truth.breakpoints[k]) <= own) return false;
    }
  }
  return true;
}

}  // namespace detail

//! Losses of an estimated 1D modal clustering against the true one.
//! In the localized regime the closed forms apply, with
//! a_j = |F(mhat_j) - F(m_j)| and a_0 = a_r = 0:
//!   d_P = sum_j a_j,    d_H = max_i (a_{i-1} + a_i),
//! since cluster i is the interval (m_{i-1}, m_i) and its symmetric
//! difference against the estimate collects both endpoint increments.
//! Otherwise (count mismatch or scrambled minima) the general distances
//! with empty-set padding are used.
inline std::pair<double, double> losses_vs_truth(const Clustering1D& est,
                                                 const Clustering1D& truth,
                                                 const MixtureModel& model) {
  if (detail::localized_regime(est, truth)) {
    const std::size_t cuts = est.breakpoints.size();
    std::vector<double> a(cuts + 2, 0.0);
    for (std::size_t j = 0; j < cuts; ++j)
      a[j + 1] = std::abs(model.cdf1d(est.breakpoints[j]) -
                          model.cdf1d(truth.breakpoints[j]));
    double sum = 0.0, worst = 0.0;
    for (std::size_t j = 1; j <= cuts; ++j) sum += a[j];
    for (std::size_t i = 1; i <= cuts + 1; ++i)
      worst = std::max(worst, a[i - 1] + a[i]);
    return {sum, worst};
  }
  MassMatrix m = mass_matrix(est, truth, model);
  return {distance_dP(m).value, distance_dH(m).value};
}

//! The exact loss term and its two first-order approximations, per minimum.
//! The third term needs the density estimator; pass nullptr to skip it.
inline std::vector<ApproxTerms> asymptotic_terms(const MixtureModel& model,
                                                 const Clustering1D& truth,
                                                 const Clustering1D& est,
                                                 const KdeModel* kde = nullptr) {
  if (est.breakpoints.size() != truth.breakpoints.size())
    throw std::invalid_argument("asymptotic_terms: cluster counts must match");
  std::vector<ApproxTerms> out;
  out.reserve(truth.breakpoints.size());
  for (std::size_t j = 0; j < truth.breakpoints.size(); ++j) {
    double m_j = truth.breakpoints[j], mhat_j = est.breakpoints[j];
    Eigen::VectorXd p(1);
    p(0) = m_j;
    double f_mj = model.density(p);
    double fpp_mj = model.hessian(p)(0, 0);
    if (std::abs(fpp_mj) < 1e-12)
      throw std::runtime_error("asymptotic_terms: degenerate minimum (f'' ~ 0)");
    ApproxTerms t;
    t.exact = std::abs(model.cdf1d(mhat_j) - model.cdf1d(m_j));
    t.linearized = f_mj * std::abs(mhat_j - m_j);
    if (kde) t.derivative = f_mj / fpp_mj * std::abs(kde->eval(m_j, 1));
    out.push_back(t);
  }
  return out;
}

//! Monte Carlo consistency harness: for every (n, replicate), sample the
//! model, form the kernel estimate with the configured bandwidth, extract
//! its modal partition, and record cluster count and losses against the
//! ideal clustering. Fully reproducible from base_seed; replicates run in
//! parallel on derived seeds.
inline ExperimentResult run_consistency(const MixtureModel& model,
                                        const ExperimentConfig& config,
                                        int threads = 1) {
  if (model.dimension() != 1)
    throw std::invalid_argument("run_consistency: 1-dimensional models only");
  if (config.sample_sizes.empty())
    throw std::invalid_argument("run_consistency: no sample sizes");
  for (std::size_t i = 1; i < config.sample_sizes.size(); ++i)
    if (config.sample_sizes[i] <= config.sample_sizes[i - 1])
      throw std::invalid_argument("run_consistency: sample sizes must be increasing");
  if (config.replicates < 1)
    throw std::invalid_argument("run_consistency: replicates must be >= 1");

  ExperimentResult result;
  double lo, hi;
  if (config.search_box) {
    lo = config.search_box->first;
    hi = config.search_box->second;
  } else {
    auto box = bounding_box(model);
    lo = box.first(0);
    hi = box.second(0);
  }
  result.truth = modal_partition_1d(model, lo, hi);
  const double model_sd = model.moments1d().second;
  const int n_sizes = static_cast<int>(config.sample_sizes.size());
  const int reps = config.replicates;

  result.records.resize(static_cast<std::size_t>(n_sizes) * reps);
  parallel_for(0, static_cast<std::int64_t>(n_sizes) * reps, threads,
               [&](std::int64_t cell) {
                 const int size_idx = static_cast<int>(cell / reps);
                 const int rep = static_cast<int>(cell % reps);
                 const long n = config.sample_sizes[size_idx];

                 ConsistencyRecord rec;
                 rec.n = n;
                 rec.replicate = rep;
                 rec.seed = Rng::derive(config.base_seed, size_idx, rep);
                 SampleSet sample = model.sample(n, rec.seed);
                 std::vector<double> data(sample.points.data(),
                                          sample.points.data() + n);
                 double h = config.bandwidth.bandwidth(n, model_sd);
                 KdeModel kde(std::move(data), h);
                 Clustering1D est = kde_modal_partition(kde);
                 rec.est_minima = est.breakpoints;
                 rec.cluster_count = est.cluster_count();
                 rec.count_match = est.cluster_count() == result.truth.cluster_count();
                 auto [dp, dh] = losses_vs_truth(est, result.truth, model);
                 rec.d_P = dp;
                 rec.d_H = dh;
                 if (rec.count_match && detail::localized_regime(est, result.truth))
                   rec.approx = asymptotic_terms(model, result.truth, est, &kde);
                 result.records[cell] = std::move(rec);
               });

  for (int s = 0; s < n_sizes; ++s) {
    ExperimentSummaryRow row;
    row.n = config.sample_sizes[s];
    std::vector<double> dps, dhs;
    int correct = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& rec = result.records[static_cast<std::size_t>(s) * reps + rep];
      if (rec.count_match) ++correct;
      dps.push_back(rec.d_P);
      dhs.push_back(rec.d_H);
    }
    auto mean = [](std::vector<double>& v) {
      double t = 0.0;
      for (double x : v) t += x;
      return t / v.size();
    };
    auto median = [](std::vector<double>& v) {
      std::sort(v.begin(), v.end());
      std::size_t m = v.size() / 2;
      return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    row.frac_correct_count = static_cast<double>(correct) / reps;
    row.mean_dP = mean(dps);
    row.mean_dH = mean(dhs);
    row.median_dP = median(dps);
    row.median_dH = median(dhs);
    result.summary.push_back(row);
  }
  return result;
}

}  // namespace modal
