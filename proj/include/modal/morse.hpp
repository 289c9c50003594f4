#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "modal/mixture.hpp"
#include "modal/parallel.hpp"

namespace modal {

enum class CriticalKind { LocalMin, Saddle, LocalMax };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::LocalMin: return "min";
    case CriticalKind::Saddle: return "saddle";
    case CriticalKind::LocalMax: return "max";
  }
  return "?";
}

//! A classified nondegenerate critical point of the density.
struct CriticalPoint {
  Eigen::VectorXd location;
  double value = 0.0;
  double gradient_norm = 0.0;
  Eigen::VectorXd eigenvalues;  // Hessian spectrum, ascending
  int morse_index = 0;          // number of strictly negative eigenvalues
  CriticalKind kind = CriticalKind::LocalMax;

  double min_abs_eigenvalue() const { return eigenvalues.cwiseAbs().minCoeff(); }
};

struct CriticalSet {
  std::vector<CriticalPoint> points;

  int count(CriticalKind k) const {
    int n = 0;
    for (const auto& p : points)
      if (p.kind == k) ++n;
    return n;
  }
  int n_max() const { return count(CriticalKind::LocalMax); }
  int n_saddle() const { return count(CriticalKind::Saddle); }
  int n_min() const { return count(CriticalKind::LocalMin); }

  std::vector<CriticalPoint> modes() const {
    std::vector<CriticalPoint> m;
    for (const auto& p : points)
      if (p.kind == CriticalKind::LocalMax) m.push_back(p);
    return m;
  }
};

struct SearchConfig {
  double tol = 1e-10;             // gradient-norm convergence threshold
  int max_iter = 200;
  double merge_radius_scale = 1e-6;  // times bounding-box diagonal
  double degeneracy_tol = 1e-8;
  int ridge_seeds = 50;           // interior seeds per component pair
  int grid_seeds_per_axis = 8;    // 0 disables the grid fallback
  double bbox_sd = 4.0;           // bounding box: means +- bbox_sd std devs
  int threads = 1;
};

//! Componentwise min/max of the means padded by `sd` standard deviations
//! per coordinate (covers the principal-axes ellipsoids' projections).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box(
    const MixtureModel& model, double sd = 4.0) {
  const int d = model.dimension();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (int k = 0; k < model.component_count(); ++k) {
    const auto& c = model.component(k);
    for (int i = 0; i < d; ++i) {
      double pad = sd * std::sqrt(c.covariance(i, i));
      lo(i) = std::min(lo(i), c.mean(i) - pad);
      hi(i) = std::max(hi(i), c.mean(i) + pad);
    }
  }
  return {lo, hi};
}

enum class NewtonStatus { Converged, SingularHessian, MaxIterations };

struct NewtonResult {
  NewtonStatus status = NewtonStatus::MaxIterations;
  std::optional<CriticalPoint> point;
};

inline CriticalPoint classify_critical_point(const MixtureModel& model,
                                             const Eigen::VectorXd& x) {
  CriticalPoint cp;
  cp.location = x;
  cp.value = model.density(x);
  cp.gradient_norm = model.gradient(x).norm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.hessian(x));
  cp.eigenvalues = es.eigenvalues();
  cp.morse_index = 0;
  for (int i = 0; i < cp.eigenvalues.size(); ++i)
    if (cp.eigenvalues(i) < 0.0) ++cp.morse_index;
  const int d = model.dimension();
  cp.kind = cp.morse_index == d   ? CriticalKind::LocalMax
            : cp.morse_index == 0 ? CriticalKind::LocalMin
                                  : CriticalKind::Saddle;
  return cp;
}

//! Damped Newton iteration x <- x - Hf(x)^{-1} grad f(x) for a zero of the
//! gradient; the step is halved (up to 30 times) whenever it increases the
//! gradient norm.
inline NewtonResult newton_refine(const MixtureModel& model,
                                  const Eigen::VectorXd& seed_point, double tol = 1e-10,
                                  int max_iter = 200) {
  if (!(tol > 0.0)) throw std::invalid_argument("newton_refine: tol must be > 0");
  NewtonResult result;
  Eigen::VectorXd x = seed_point;
  Eigen::VectorXd g = model.gradient(x);
  for (int iter = 0; iter < max_iter; ++iter) {
    double gn = g.norm();
    if (gn <= tol) {
      result.status = NewtonStatus::Converged;
      result.point = classify_critical_point(model, x);
      return result;
    }
    Eigen::MatrixXd h = model.hessian(x);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (!lu.isInvertible()) {
      result.status = NewtonStatus::SingularHessian;
      return result;
    }
    Eigen::VectorXd step = lu.solve(-g);
    Eigen::VectorXd x_new = x + step;
    Eigen::VectorXd g_new = model.gradient(x_new);
    for (int halving = 0; halving < 30 && g_new.norm() > gn; ++halving) {
      step *= 0.5;
      x_new = x + step;
      g_new = model.gradient(x_new);
    }
    x = x_new;
    g = g_new;
  }
  if (g.norm() <= tol) {
    result.status = NewtonStatus::Converged;
    result.point = classify_critical_point(model, x);
  }
  return result;
}

//! Ray-Lindsay ridgeline between component means i and j:
//!   x(a) = [(1-a) S_i^{-1} + a S_j^{-1}]^{-1} [(1-a) S_i^{-1} mu_i + a S_j^{-1} mu_j]
//! For a two-component mixture every critical point lies on this curve.
inline Eigen::VectorXd ridgeline(const MixtureModel& model, int i, int j, double alpha) {
  if (i == j) throw std::invalid_argument("ridgeline: indices must differ");
  const auto& ci = model.component(i);
  const auto& cj = model.component(j);
  Eigen::MatrixXd pi = ci.covariance.llt().solve(
      Eigen::MatrixXd::Identity(model.dimension(), model.dimension()));
  Eigen::MatrixXd pj = cj.covariance.llt().solve(
      Eigen::MatrixXd::Identity(model.dimension(), model.dimension()));
  Eigen::MatrixXd m = (1.0 - alpha) * pi + alpha * pj;
  Eigen::VectorXd rhs = (1.0 - alpha) * (pi * ci.mean) + alpha * (pj * cj.mean);
  return m.ldlt().solve(rhs);
}

//! Multi-seed critical point search: Newton refinement from every component
//! mean, from `ridge_seeds` interior points of each pairwise ridgeline, and
//! from a uniform grid over the bounding box; converged points are merged
//! within the merge radius and classified by Hessian spectrum.
//!
//! Converged points outside the box or with a near-singular Hessian are
//! discarded: the gradient norm is vacuously small deep in the tails, and
//! critical points must be nondegenerate (Morse condition).
inline CriticalSet find_critical_points(const MixtureModel& model,
                                        const SearchConfig& config = {}) {
  const int d = model.dimension();
  auto [lo, hi] = bounding_box(model, config.bbox_sd);
  const double diagonal = (hi - lo).norm();
  const double merge_radius = config.merge_radius_scale * diagonal;

  std::vector<Eigen::VectorXd> seeds = model.means();
  const int K = model.component_count();
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      for (int t = 1; t <= config.ridge_seeds; ++t)
        seeds.push_back(ridgeline(model, i, j,
                                  static_cast<double>(t) / (config.ridge_seeds + 1)));
  if (config.grid_seeds_per_axis > 0) {
    const int g = config.grid_seeds_per_axis;
    long total = 1;
    for (int i = 0; i < d; ++i) total *= g;
    for (long cell = 0; cell < total; ++cell) {
      Eigen::VectorXd p(d);
      long rest = cell;
      for (int i = 0; i < d; ++i) {
        long idx = rest % g;
        rest /= g;
        p(i) = lo(i) + (idx + 0.5) * (hi(i) - lo(i)) / g;
      }
      seeds.push_back(p);
    }
  }

  Eigen::VectorXd span = hi - lo;
  Eigen::VectorXd wide_lo = lo - 0.5 * span, wide_hi = hi + 0.5 * span;
  auto inside = [](const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
    return (x.array() >= a.array()).all() && (x.array() <= b.array()).all();
  };

  std::vector<std::optional<CriticalPoint>> found(seeds.size());
  parallel_for(0, static_cast<std::int64_t>(seeds.size()), config.threads,
               [&](std::int64_t s) {
                 if (!inside(seeds[s], wide_lo, wide_hi)) return;
                 NewtonResult r =
                     newton_refine(model, seeds[s], config.tol, config.max_iter);
                 if (r.status == NewtonStatus::Converged &&
                     inside(r.point->location, lo, hi) &&
                     r.point->min_abs_eigenvalue() > config.degeneracy_tol)
                   found[s] = std::move(r.point);
               });

  CriticalSet set;
  for (auto& cand : found) {
    if (!cand) continue;
    bool duplicate = false;
    for (auto& kept : set.points) {
      if ((kept.location - cand->location).norm() <= merge_radius) {
        duplicate = true;
        if (cand->gradient_norm < kept.gradient_norm) kept = *cand;
        break;
      }
    }
    if (!duplicate) set.points.push_back(std::move(*cand));
  }
  if (set.points.empty())
    throw std::runtime_error("find_critical_points: no critical point found");

  std::sort(set.points.begin(), set.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              for (int i = 0; i < a.location.size(); ++i)
                if (a.location(i) != b.location(i)) return a.location(i) < b.location(i);
              return false;
            });
  return set;
}

struct MorseReport {
  bool pass = true;
  std::vector<int> degenerate_indices;  // into CriticalSet::points
};

//! Nondegeneracy check: every point must have min |eigenvalue| above the
//! degeneracy tolerance.
inline MorseReport assert_morse(const CriticalSet& set, double degeneracy_tol = 1e-8) {
  MorseReport report;
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    if (set.points[i].min_abs_eigenvalue() <= degeneracy_tol) {
      report.pass = false;
      report.degenerate_indices.push_back(static_cast<int>(i));
    }
  }
  return report;
}

}  // namespace modal
