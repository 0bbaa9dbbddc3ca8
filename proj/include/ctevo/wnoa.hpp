#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <vector>

#include "ctevo/se3.hpp"
#include "ctevo/stereo_camera.hpp"
#include "ctevo/tracklets.hpp"

namespace ctevo {

using Vector12 = Eigen::Matrix<double, 12, 1>;
using Matrix12 = Eigen::Matrix<double, 12, 12>;
using Matrix12x24 = Eigen::Matrix<double, 12, 24>;
using Matrix36 = Eigen::Matrix<double, 3, 6>;

/// Knot: pose relative to the window origin, body-centric velocity, time.
struct TrajectoryState {
  Pose T_k1;
  Twist varpi = Twist::Zero();
  double t = 0.0;
};

/// White-noise-on-acceleration prior with diagonal power spectral density Qc.
struct WnoaPrior {
  Vector6 qc_diag = Vector6::Ones();

  static WnoaPrior from_inverse(const Vector6& qc_inv_diag);
  Vector6 qc_inv_diag() const { return qc_diag.cwiseInverse(); }
};

/// Default prior: Qc^{-1} = 50 diag(1, 1, 1, 10, 10, 10).
WnoaPrior default_prior();
/// Default measurement information: R^{-1} = 0.1 diag(5, 5, 1).
Matrix3 default_measurement_information();

struct WindowObservation {
  std::size_t landmark = 0;
  std::size_t knot = 0;
  Vector3 y = Vector3::Zero();
};

struct EstimationWindow {
  std::vector<TrajectoryState> states;
  /// Landmarks in the window-origin frame.
  std::vector<HomogeneousPoint> landmarks;
  std::vector<std::int64_t> landmark_ids;
  std::vector<WindowObservation> observations;
  Matrix3 r_inv = Matrix3::Identity();
  /// Observations discarded at initialization (landmark behind the camera).
  std::size_t dropped_observations = 0;

  std::size_t knot_count() const { return states.size(); }
  /// Dimension of the gauge-fixed perturbation vector.
  std::size_t dimension() const { return 12 * states.size() - 6 + 3 * landmarks.size(); }
};

Vector12 prior_error(const TrajectoryState& k, const TrajectoryState& k1);

/// [[dt^3/3 Qc, dt^2/2 Qc], [dt^2/2 Qc, dt Qc]]. Throws NonPositiveDt.
Matrix12 prior_covariance(const WnoaPrior& prior, double dt);
/// Closed-form inverse of prior_covariance.
Matrix12 prior_information(const WnoaPrior& prior, double dt);

/**
 * Jacobian E with prior_error(x + d) ~ prior_error(x) - E d, columns ordered
 * [d xi_k, d varpi_k, d xi_k1, d varpi_k1] for left pose perturbations.
 */
Matrix12x24 prior_jacobian(const TrajectoryState& k, const TrajectoryState& k1);

/// y - s(T_k1 * p). Throws NonPositiveDepth.
Vector3 measurement_error(const TrajectoryState& state, const HomogeneousPoint& landmark, const Vector3& y,
                          const StereoCameraModel& camera);

struct MeasurementJacobian {
  Matrix36 pose;
  Matrix3 landmark;
};

/// G with measurement_error(x + d) ~ measurement_error(x) - G d.
MeasurementJacobian measurement_jacobian(const TrajectoryState& state, const HomogeneousPoint& landmark,
                                         const StereoCameraModel& camera);

/// Index layout of the gauge-fixed perturbation vector.
struct StateLayout {
  std::size_t knots = 0;
  std::size_t landmarks = 0;

  /// Offset of knot k's pose block, or -1 for the fixed first knot.
  std::ptrdiff_t pose(std::size_t k) const { return k == 0 ? -1 : static_cast<std::ptrdiff_t>(12 * k - 6); }
  std::ptrdiff_t velocity(std::size_t k) const { return static_cast<std::ptrdiff_t>(12 * k); }
  std::ptrdiff_t landmark(std::size_t j) const { return static_cast<std::ptrdiff_t>(12 * knots - 6 + 3 * j); }
  std::size_t size() const { return 12 * knots - 6 + 3 * landmarks; }
};

/// Joint cost 0.5 sum e^T R^-1 e + 0.5 sum e^T Q_k^-1 e.
double window_cost(const EstimationWindow& window, const WnoaPrior& prior, const StereoCameraModel& camera);

struct NormalEquations {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  double cost = 0.0;
};

NormalEquations build_normal_equations(const EstimationWindow& window, const WnoaPrior& prior,
                                       const StereoCameraModel& camera);

/// x <- x (+) delta: poses multiply by exp(d xi) on the left, the rest add.
EstimationWindow apply_update(const EstimationWindow& window, const Eigen::VectorXd& delta);

struct SolverOptions {
  double convergence_tol = 0.01;
  int max_iters = 50;
  /// Costs below this are treated as converged.
  double cost_floor = 1e-20;
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> costs;
};

/// Gauss-Newton with step halving. Throws SingularSystem.
SolveReport gauss_newton_solve(EstimationWindow& window, const WnoaPrior& prior, const StereoCameraModel& camera,
                               const SolverOptions& options = {});

/**
 * One knot per unique observation time (within 1e-9 s), poses integrated
 * from the constant velocity, landmarks triangulated from each tracklet's
 * earliest observation. Throws EmptyTrackletSet.
 */
EstimationWindow initialize_window(std::span<const FeatureTracklet> tracklets, const Twist& velocity,
                                   const StereoCameraModel& camera, const Matrix3& r_inv);

}  // namespace ctevo
