#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "modal/rng.hpp"

namespace modal {

//! One weighted Gaussian component of a mixture.
struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric positive definite
  double weight = 0.0;
};

//! A sample drawn from a mixture, with seed provenance. One point per row.
struct SampleSet {
  Eigen::MatrixXd points;
  std::uint64_t seed = 0;

  long size() const { return points.rows(); }
  int dimension() const { return static_cast<int>(points.cols()); }
};

//! Gaussian mixture density with exact gradient, Hessian and (univariate)
//! distribution function.
//!
//! Construction validates the component list (SPD covariances via Cholesky,
//! positive weights, weights summing to one) and caches per-component
//! Cholesky factors; all evaluation is done in log space per component with
//! a max shift so that points far in the tails neither overflow nor produce
//! NaN. A model is immutable after construction and safe to share across
//! threads.
class MixtureModel {
public:
  //! @param normalize_weights divide weights by their sum instead of
  //!        requiring them to sum to 1 within 1e-12.
  explicit MixtureModel(std::vector<GaussianComponent> components,
                        bool normalize_weights = false)
      : components_(std::move(components)) {
    if (components_.empty())
      throw std::invalid_argument("MixtureModel: no components");
    dim_ = static_cast<int>(components_[0].mean.size());
    if (dim_ < 1) throw std::invalid_argument("MixtureModel: dimension must be >= 1");

    double wsum = 0.0;
    for (const auto& c : components_) wsum += c.weight;
    for (auto& c : components_) {
      if (!(c.weight > 0.0))
        throw std::invalid_argument("MixtureModel: component weight must be > 0");
      if (normalize_weights) c.weight /= wsum;
    }
    if (!normalize_weights && std::abs(wsum - 1.0) > 1e-12)
      throw std::invalid_argument("MixtureModel: weights must sum to 1 within 1e-12");

    caches_.reserve(components_.size());
    for (const auto& c : components_) {
      if (c.mean.size() != dim_)
        throw std::invalid_argument("MixtureModel: components must share one dimension");
      if (c.covariance.rows() != dim_ || c.covariance.cols() != dim_)
        throw std::invalid_argument("MixtureModel: covariance shape mismatch");
      if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("MixtureModel: covariance not symmetric");
      Cache cache;
      cache.llt.compute(Eigen::MatrixXd(0.5 * (c.covariance + c.covariance.transpose())));
      if (cache.llt.info() != Eigen::Success)
        throw std::invalid_argument("MixtureModel: covariance not positive definite");
      double log_det = 0.0;
      for (int i = 0; i < dim_; ++i) log_det += 2.0 * std::log(cache.llt.matrixL()(i, i));
      cache.log_norm = -0.5 * dim_ * std::log(2.0 * M_PI) - 0.5 * log_det;
      cache.precision = cache.llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
      caches_.push_back(std::move(cache));
    }
  }

  int dimension() const { return dim_; }
  int component_count() const { return static_cast<int>(components_.size()); }
  const GaussianComponent& component(int k) const { return components_.at(k); }

  std::vector<Eigen::VectorXd> means() const {
    std::vector<Eigen::VectorXd> m;
    m.reserve(components_.size());
    for (const auto& c : components_) m.push_back(c.mean);
    return m;
  }

  //! log(weight_k * phi_k(x)).
  double log_weighted_component(int k, const Eigen::VectorXd& x) const {
    const auto& c = components_[k];
    const auto& cache = caches_[k];
    Eigen::VectorXd d = x - c.mean;
    double quad = d.dot(cache.precision * d);
    return std::log(c.weight) + cache.log_norm - 0.5 * quad;
  }

  //! f(x) = sum_k w_k phi(x; mu_k, Sigma_k).
  double density(const Eigen::VectorXd& x) const {
    check_dim(x);
    const int K = component_count();
    double logs[kMaxStackComponents];
    std::vector<double> heap_logs;
    double* l = logs;
    if (K > kMaxStackComponents) {
      heap_logs.resize(K);
      l = heap_logs.data();
    }
    double max_log = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      l[k] = log_weighted_component(k, x);
      max_log = std::max(max_log, l[k]);
    }
    if (!std::isfinite(max_log)) return 0.0;
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += std::exp(l[k] - max_log);
    return std::exp(max_log) * acc;
  }

  //! grad f(x) = -sum_k w_k phi_k(x) Sigma_k^{-1} (x - mu_k).
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
    for (int k = 0; k < component_count(); ++k) {
      double wphi = std::exp(log_weighted_component(k, x));
      if (wphi == 0.0) continue;
      g.noalias() -= wphi * (caches_[k].precision * (x - components_[k].mean));
    }
    return g;
  }

  //! Hf(x) = sum_k w_k phi_k(x) [S^{-1} d d^T S^{-1} - S^{-1}], d = x - mu_k.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (int k = 0; k < component_count(); ++k) {
      double wphi = std::exp(log_weighted_component(k, x));
      if (wphi == 0.0) continue;
      Eigen::VectorXd sd = caches_[k].precision * (x - components_[k].mean);
      h.noalias() += wphi * (sd * sd.transpose() - caches_[k].precision);
    }
    return 0.5 * (h + h.transpose());
  }

  //! Univariate distribution function F(x) = sum_k w_k Phi((x - mu_k)/sigma_k).
  double cdf1d(double x) const {
    if (dim_ != 1)
      throw std::invalid_argument("cdf1d: only defined for 1-dimensional models");
    double acc = 0.0;
    for (int k = 0; k < component_count(); ++k) {
      double mu = components_[k].mean(0);
      double sigma = std::sqrt(components_[k].covariance(0, 0));
      acc += components_[k].weight * 0.5 * std::erfc(-(x - mu) / (sigma * M_SQRT2));
    }
    return acc;
  }

  //! i.i.d. draws: component by weight, then mu_k + L_k z with z standard
  //! normal. A given seed reproduces the sample bit-for-bit.
  SampleSet sample(long n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    Rng rng(seed);
    std::vector<double> weights;
    weights.reserve(components_.size());
    for (const auto& c : components_) weights.push_back(c.weight);
    SampleSet out;
    out.seed = seed;
    out.points.resize(n, dim_);
    Eigen::VectorXd z(dim_);
    for (long i = 0; i < n; ++i) {
      std::size_t k = rng.categorical(weights);
      for (int j = 0; j < dim_; ++j) z(j) = rng.normal();
      out.points.row(i) =
          (components_[k].mean + caches_[k].llt.matrixL() * z).transpose();
    }
    return out;
  }

  //! argmax_k w_k phi_k(x); ties broken by lowest index.
  int posterior_label(const Eigen::VectorXd& x) const {
    check_dim(x);
    int best = 0;
    double best_log = log_weighted_component(0, x);
    for (int k = 1; k < component_count(); ++k) {
      double l = log_weighted_component(k, x);
      if (l > best_log) {
        best_log = l;
        best = k;
      }
    }
    return best;
  }

  //! Mean and standard deviation of the mixture (1D convenience).
  std::pair<double, double> moments1d() const {
    if (dim_ != 1) throw std::invalid_argument("moments1d: 1-dimensional models only");
    double m = 0.0, m2 = 0.0;
    for (const auto& c : components_) {
      m += c.weight * c.mean(0);
      m2 += c.weight * (c.covariance(0, 0) + c.mean(0) * c.mean(0));
    }
    return {m, std::sqrt(m2 - m * m)};
  }

private:
  struct Cache {
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd precision;
    double log_norm = 0.0;
  };

  static constexpr int kMaxStackComponents = 32;

  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != dim_)
      throw std::invalid_argument("MixtureModel: point dimension mismatch");
  }

  std::vector<GaussianComponent> components_;
  std::vector<Cache> caches_;
  int dim_ = 0;
};

//! argmin_k ||x - centers[k]||; ties broken by lowest index.
inline int voronoi_label(const std::vector<Eigen::VectorXd>& centers,
                         const Eigen::VectorXd& x) {
  if (centers.empty()) throw std::invalid_argument("voronoi_label: no centers");
  if (centers[0].size() != x.size())
    throw std::invalid_argument("voronoi_label: center dimension mismatch");
  int best = 0;
  double best_d = (x - centers[0]).squaredNorm();
  for (std::size_t k = 1; k < centers.size(); ++k) {
    if (centers[k].size() != x.size())
      throw std::invalid_argument("voronoi_label: center dimension mismatch");
    double d = (x - centers[k]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace modal
