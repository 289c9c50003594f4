#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "modal/mixture.hpp"
#include "modal/morse.hpp"

namespace modal {

//! Boundary label for points whose ascent does not reach a mode (null set).
inline constexpr int kBoundaryLabel = -1;

struct FlowConfig {
  double step_size = 1e-2;            // initial integrator step
  double grad_stop = 1e-9;            // stagnation threshold on ||grad f||
  double mode_capture_radius = 1e-4;
  long max_steps = 100000;
  double saddle_perturbation = 1e-4;  // times bounding-box diagonal
  double error_tol = 1e-9;            // per-step embedded error bound
  double monotonicity_tol = 1e-9;     // allowed density decrease per accepted step
  double min_step = 1e-13;
  double max_step = 0.25;
};

enum class FlowTerminal { CapturedByMode, StagnatedAtCritical, StepLimit, LeftDomain };

inline const char* to_string(FlowTerminal t) {
  switch (t) {
    case FlowTerminal::CapturedByMode: return "captured";
    case FlowTerminal::StagnatedAtCritical: return "stagnated";
    case FlowTerminal::StepLimit: return "step-limit";
    case FlowTerminal::LeftDomain: return "left-domain";
  }
  return "?";
}

struct Trajectory {
  std::vector<Eigen::VectorXd> points;
  FlowTerminal terminal = FlowTerminal::StepLimit;
  int mode_index = kBoundaryLabel;  // set when terminal == CapturedByMode
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

inline double point_segment_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b) {
  Eigen::VectorXd ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

//! Integrate the unit-speed field sign * grad f / max(||grad f||, 1e-12).
//! The raw gradient is vanishingly small in the tails; the normalized field
//! follows the same integral curves' images at unit speed.
template <typename StopFn>
Trajectory integrate_flow(const MixtureModel& model, const Eigen::VectorXd& start,
                          double sign, const FlowConfig& config, bool record_points,
                          StopFn&& stop) {
  constexpr double kGradFloor = 1e-12;
  using RK = Dopri5;

  auto field = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = model.gradient(x);
    return (sign / std::max(g.norm(), kGradFloor)) * g;
  };

  Trajectory traj;
  Eigen::VectorXd x = start;
  if (record_points) traj.points.push_back(x);

  double h = config.step_size;
  double f_cur = model.density(x);
  for (long step = 0; step < config.max_steps; ++step) {
    if (stop(traj, x, x)) return traj;
    double gn = model.gradient(x).norm();
    if (gn < config.grad_stop) {
      traj.terminal = FlowTerminal::StagnatedAtCritical;
      return traj;
    }

    Eigen::VectorXd k1 = field(x);
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    while (!accepted) {
      Eigen::VectorXd k2 = field(x + h * (RK::a21 * k1));
      Eigen::VectorXd k3 = field(x + h * (RK::a31 * k1 + RK::a32 * k2));
      Eigen::VectorXd k4 = field(x + h * (RK::a41 * k1 + RK::a42 * k2 + RK::a43 * k3));
      Eigen::VectorXd k5 =
          field(x + h * (RK::a51 * k1 + RK::a52 * k2 + RK::a53 * k3 + RK::a54 * k4));
      Eigen::VectorXd k6 = field(x + h * (RK::a61 * k1 + RK::a62 * k2 + RK::a63 * k3 +
                                          RK::a64 * k4 + RK::a65 * k5));
      x_new = x + h * (RK::b1 * k1 + RK::b3 * k3 + RK::b4 * k4 + RK::b5 * k5 +
                       RK::b6 * k6);
      Eigen::VectorXd k7 = field(x_new);
      double err = (h * (RK::e1 * k1 + RK::e3 * k3 + RK::e4 * k4 + RK::e5 * k5 +
                         RK::e6 * k6 + RK::e7 * k7))
                       .norm();
      f_new = model.density(x_new);
      bool monotone = sign > 0 ? f_new >= f_cur - config.monotonicity_tol
                               : f_new <= f_cur + config.monotonicity_tol;
      if (err <= config.error_tol && monotone) {
        accepted = true;
        double grow = err > 0.0 ? 0.9 * std::pow(config.error_tol / err, 0.2) : 5.0;
        h = std::min(h * std::clamp(grow, 0.1, 5.0), config.max_step);
      } else {
        double shrink = monotone && err > 0.0
                            ? std::clamp(0.9 * std::pow(config.error_tol / err, 0.2),
                                         0.1, 0.5)
                            : 0.5;
        double h_next = h * shrink;
        if (h_next < config.min_step) {
          // Step size exhausted: either we are pinned at a critical point
          // or progress is impossible at this precision.
          traj.terminal = gn < std::sqrt(config.grad_stop)
                              ? FlowTerminal::StagnatedAtCritical
                              : FlowTerminal::StepLimit;
          return traj;
        }
        h = h_next;
      }
    }

    if (record_points) traj.points.push_back(x_new);
    if (stop(traj, x, x_new)) return traj;
    x = x_new;
    f_cur = f_new;
  }
  traj.terminal = FlowTerminal::StepLimit;
  if (record_points && (traj.points.empty() || traj.points.back() != x))
    traj.points.push_back(x);
  return traj;
}

}  // namespace detail

//! Ascending-flow trajectory of a point: follows grad f until captured by a
//! mode, stagnant at a non-max critical point, or out of steps.
inline Trajectory ascend(const MixtureModel& model,
                         const std::vector<Eigen::VectorXd>& mode_locations,
                         const Eigen::VectorXd& x, const FlowConfig& config = {},
                         bool record_points = true) {
  auto stop = [&](Trajectory& traj, const Eigen::VectorXd& from,
                  const Eigen::VectorXd& to) {
    for (std::size_t k = 0; k < mode_locations.size(); ++k) {
      double dist = (&from == &to)
                        ? (to - mode_locations[k]).norm()
                        : detail::point_segment_distance(mode_locations[k], from, to);
      if (dist <= config.mode_capture_radius) {
        traj.terminal = FlowTerminal::CapturedByMode;
        traj.mode_index = static_cast<int>(k);
        return true;
      }
    }
    return false;
  };
  return detail::integrate_flow(model, x, +1.0, config, record_points, stop);
}

inline Trajectory ascend(const MixtureModel& model,
                         const std::vector<CriticalPoint>& modes,
                         const Eigen::VectorXd& x, const FlowConfig& config = {},
                         bool record_points = true) {
  std::vector<Eigen::VectorXd> locations;
  locations.reserve(modes.size());
  for (const auto& m : modes) {
    if (m.kind != CriticalKind::LocalMax)
      throw std::invalid_argument("ascend: modes must all be local maxima");
    locations.push_back(m.location);
  }
  return ascend(model, locations, x, config, record_points);
}

//! Modal-cluster label of x: the index of the capturing mode, or
//! kBoundaryLabel when the trajectory stagnates or runs out of steps
//! (a null-probability set).
inline int assign_mode(const MixtureModel& model,
                       const std::vector<Eigen::VectorXd>& mode_locations,
                       const Eigen::VectorXd& x, const FlowConfig& config = {}) {
  Trajectory t = ascend(model, mode_locations, x, config, /*record_points=*/false);
  return t.terminal == FlowTerminal::CapturedByMode ? t.mode_index : kBoundaryLabel;
}

inline int assign_mode(const MixtureModel& model, const std::vector<CriticalPoint>& modes,
                       const Eigen::VectorXd& x, const FlowConfig& config = {}) {
  Trajectory t = ascend(model, modes, x, config, /*record_points=*/false);
  return t.terminal == FlowTerminal::CapturedByMode ? t.mode_index : kBoundaryLabel;
}

//! Trace the separatrix through a saddle (d = 2): the two descending-flow
//! branches started at saddle +- eps * v, with v the unit eigenvector of the
//! negative Hessian eigenvalue. Branches stop at stagnation (near a local
//! minimum), when leaving `box`, or at the step limit.
inline std::pair<Trajectory, Trajectory> trace_boundary(
    const MixtureModel& model, const CriticalPoint& saddle,
    const std::pair<Eigen::VectorXd, Eigen::VectorXd>& box,
    const FlowConfig& config = {}) {
  if (saddle.kind != CriticalKind::Saddle)
    throw std::invalid_argument("trace_boundary: point is not a saddle");
  if (model.dimension() != 2)
    throw std::invalid_argument("trace_boundary: only implemented for d = 2");
  if (saddle.morse_index != 1)
    throw std::invalid_argument(
        "trace_boundary: saddle must have exactly one negative eigenvalue");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.hessian(saddle.location));
  int neg = 0;
  for (int i = 1; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < es.eigenvalues()(neg)) neg = i;
  if (es.eigenvalues()(neg) >= 0.0)
    throw std::invalid_argument("trace_boundary: no negative eigenvalue at saddle");
  Eigen::VectorXd v = es.eigenvectors().col(neg).normalized();

  const double eps = config.saddle_perturbation * (box.second - box.first).norm();
  auto outside = [&](const Eigen::VectorXd& p) {
    return (p.array() < box.first.array()).any() ||
           (p.array() > box.second.array()).any();
  };
  auto stop = [&](Trajectory& traj, const Eigen::VectorXd&, const Eigen::VectorXd& to) {
    if (outside(to)) {
      traj.terminal = FlowTerminal::LeftDomain;
      return true;
    }
    return false;
  };

  auto trace = [&](double side) {
    Eigen::VectorXd start = saddle.location + side * eps * v;
    Trajectory t = detail::integrate_flow(model, start, -1.0, config,
                                          /*record_points=*/true, stop);
    t.points.insert(t.points.begin(), saddle.location);
    return t;
  };
  return {trace(+1.0), trace(-1.0)};
}

}  // namespace modal
