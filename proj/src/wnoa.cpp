#include "ctevo/wnoa.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

constexpr double kKnotMergeTol = 1e-9;
constexpr int kMaxHalvings = 8;

using Triplets = std::vector<Eigen::Triplet<double>>;

// Scatters a dense block into A for the given state offsets (-1 = fixed).
void scatter(Triplets& out, const std::vector<std::ptrdiff_t>& index, const Eigen::MatrixXd& M) {
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0) continue;
    for (std::size_t c = 0; c < index.size(); ++c) {
      if (index[c] < 0) continue;
      const double v = M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (v != 0.0) out.emplace_back(index[r], index[c], v);
    }
  }
}

void gather(Eigen::VectorXd& b, const std::vector<std::ptrdiff_t>& index, const Eigen::VectorXd& v) {
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= 0) b(index[r]) += v(static_cast<Eigen::Index>(r));
  }
}

void append_block(std::vector<std::ptrdiff_t>& index, std::ptrdiff_t offset, int size) {
  for (int i = 0; i < size; ++i) index.push_back(offset < 0 ? -1 : offset + i);
}

}  // namespace

WnoaPrior WnoaPrior::from_inverse(const Vector6& qc_inv_diag) {
  if ((qc_inv_diag.array() <= 0.0).any()) throw Error(ErrorCode::InvalidArgument, "Qc^-1 entries must be positive");
  WnoaPrior p;
  p.qc_diag = qc_inv_diag.cwiseInverse();
  return p;
}

WnoaPrior default_prior() {
  Vector6 d;
  d << 1.0, 1.0, 1.0, 10.0, 10.0, 10.0;
  return WnoaPrior::from_inverse(50.0 * d);
}

Matrix3 default_measurement_information() { return 0.1 * Vector3(5.0, 5.0, 1.0).asDiagonal(); }

Vector12 prior_error(const TrajectoryState& k, const TrajectoryState& k1) {
  const double dt = k1.t - k.t;
  const Twist xi = log_map(k1.T_k1 * k.T_k1.inverse());
  Vector12 e;
  e.head<6>() = xi - dt * k.varpi;
  e.tail<6>() = left_jacobian_inv(xi) * k1.varpi - k.varpi;
  return e;
}

Matrix12 prior_covariance(const WnoaPrior& prior, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "prior interval must be positive");
  const Matrix6 Qc = prior.qc_diag.asDiagonal();
  Matrix12 Q;
  Q << dt * dt * dt / 3.0 * Qc, dt * dt / 2.0 * Qc, dt * dt / 2.0 * Qc, dt * Qc;
  return Q;
}

Matrix12 prior_information(const WnoaPrior& prior, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "prior interval must be positive");
  const Matrix6 Qi = prior.qc_inv_diag().asDiagonal();
  Matrix12 I;
  I << 12.0 / (dt * dt * dt) * Qi, -6.0 / (dt * dt) * Qi, -6.0 / (dt * dt) * Qi, 4.0 / dt * Qi;
  return I;
}

Matrix12x24 prior_jacobian(const TrajectoryState& k, const TrajectoryState& k1) {
  const double dt = k1.t - k.t;
  const Pose rel = k1.T_k1 * k.T_k1.inverse();
  const Twist xi = log_map(rel);
  const Matrix6 Ji = left_jacobian_inv(xi);
  const Matrix6 Ad = adjoint(rel);
  const Matrix6 Df = left_jacobian_inv_product_derivative(xi, k1.varpi);

  Matrix12x24 E = Matrix12x24::Zero();
  E.block<6, 6>(0, 0) = Ji * Ad;
  E.block<6, 6>(0, 6) = dt * Matrix6::Identity();
  E.block<6, 6>(0, 12) = -Ji;
  E.block<6, 6>(6, 0) = Df * Ji * Ad;
  E.block<6, 6>(6, 6) = Matrix6::Identity();
  E.block<6, 6>(6, 12) = -Df * Ji;
  E.block<6, 6>(6, 18) = -Ji;
  return E;
}

Vector3 measurement_error(const TrajectoryState& state, const HomogeneousPoint& landmark, const Vector3& y,
                          const StereoCameraModel& camera) {
  return y - camera.project(state.T_k1 * landmark);
}

MeasurementJacobian measurement_jacobian(const TrajectoryState& state, const HomogeneousPoint& landmark,
                                         const StereoCameraModel& camera) {
  const HomogeneousPoint z = state.T_k1 * landmark;
  const Matrix34 S = camera.projection_jacobian(z);
  MeasurementJacobian G;
  G.pose = S * odot(z);
  G.landmark = S.leftCols<3>() * state.T_k1.rotation();
  return G;
}

double window_cost(const EstimationWindow& w, const WnoaPrior& prior, const StereoCameraModel& camera) {
  double cost = 0.0;
  for (const auto& o : w.observations) {
    const Vector3 e = measurement_error(w.states[o.knot], w.landmarks[o.landmark], o.y, camera);
    cost += 0.5 * e.dot(w.r_inv * e);
  }
  for (std::size_t k = 0; k + 1 < w.states.size(); ++k) {
    const Vector12 e = prior_error(w.states[k], w.states[k + 1]);
    cost += 0.5 * e.dot(prior_information(prior, w.states[k + 1].t - w.states[k].t) * e);
  }
  return cost;
}

NormalEquations build_normal_equations(const EstimationWindow& w, const WnoaPrior& prior,
                                       const StereoCameraModel& camera) {
  const StateLayout layout{w.states.size(), w.landmarks.size()};
  const auto n = static_cast<Eigen::Index>(layout.size());
  NormalEquations ne;
  ne.b = Eigen::VectorXd::Zero(n);
  Triplets triplets;
  triplets.reserve(w.observations.size() * 81 + w.states.size() * 576);

  std::vector<std::ptrdiff_t> index;
  for (const auto& o : w.observations) {
    const TrajectoryState& s = w.states[o.knot];
    const HomogeneousPoint& p = w.landmarks[o.landmark];
    const Vector3 e = measurement_error(s, p, o.y, camera);
    const MeasurementJacobian G = measurement_jacobian(s, p, camera);
    Eigen::Matrix<double, 3, 9> Gf;
    Gf << G.pose, G.landmark;
    index.clear();
    append_block(index, layout.pose(o.knot), 6);
    append_block(index, layout.landmark(o.landmark), 3);
    const Eigen::Matrix<double, 9, 3> GtR = Gf.transpose() * w.r_inv;
    scatter(triplets, index, GtR * Gf);
    gather(ne.b, index, GtR * e);
    ne.cost += 0.5 * e.dot(w.r_inv * e);
  }

  for (std::size_t k = 0; k + 1 < w.states.size(); ++k) {
    const TrajectoryState& a = w.states[k];
    const TrajectoryState& c = w.states[k + 1];
    const Vector12 e = prior_error(a, c);
    const Matrix12x24 E = prior_jacobian(a, c);
    const Matrix12 Qi = prior_information(prior, c.t - a.t);
    index.clear();
    append_block(index, layout.pose(k), 6);
    append_block(index, layout.velocity(k), 6);
    append_block(index, layout.pose(k + 1), 6);
    append_block(index, layout.velocity(k + 1), 6);
    const Eigen::Matrix<double, 24, 12> EtQ = E.transpose() * Qi;
    scatter(triplets, index, EtQ * E);
    gather(ne.b, index, EtQ * e);
    ne.cost += 0.5 * e.dot(Qi * e);
  }

  ne.A.resize(n, n);
  ne.A.setFromTriplets(triplets.begin(), triplets.end());
  return ne;
}

EstimationWindow apply_update(const EstimationWindow& w, const Eigen::VectorXd& delta) {
  const StateLayout layout{w.states.size(), w.landmarks.size()};
  EstimationWindow out = w;
  for (std::size_t k = 0; k < w.states.size(); ++k) {
    if (k > 0) {
      const Twist dxi = delta.segment<6>(layout.pose(k));
      out.states[k].T_k1 = exp_map(dxi) * w.states[k].T_k1;
    }
    out.states[k].varpi += delta.segment<6>(layout.velocity(k));
  }
  for (std::size_t j = 0; j < w.landmarks.size(); ++j) {
    out.landmarks[j].head<3>() += delta.segment<3>(layout.landmark(j));
  }
  return out;
}

SolveReport gauss_newton_solve(EstimationWindow& window, const WnoaPrior& prior, const StereoCameraModel& camera,
                               const SolverOptions& options) {
  SolveReport report;
  double cost = window_cost(window, prior, camera);
  report.initial_cost = cost;
  report.costs.push_back(cost);

  for (int it = 0; it < options.max_iters; ++it) {
    if (cost < options.cost_floor) {
      report.converged = true;
      break;
    }
    const NormalEquations ne = build_normal_equations(window, prior, camera);

    // Jacobi scaling.
    Eigen::VectorXd scale = ne.A.diagonal();
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
      if (!(scale(i) > 0.0)) throw Error(ErrorCode::SingularSystem, "state component with no information");
      scale(i) = 1.0 / std::sqrt(scale(i));
    }
    const Eigen::SparseMatrix<double> As = scale.asDiagonal() * ne.A * scale.asDiagonal();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(As);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
      throw Error(ErrorCode::SingularSystem, "normal matrix is not positive definite");
    }
    const Eigen::VectorXd delta = scale.asDiagonal() * ldlt.solve(scale.asDiagonal() * ne.b);
    if (!delta.allFinite()) throw Error(ErrorCode::SingularSystem, "update is not finite");

    double step = 1.0;
    bool accepted = false;
    EstimationWindow trial;
    double trial_cost = cost;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      trial = apply_update(window, step * delta);
      try {
        trial_cost = window_cost(trial, prior, camera);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonPositiveDepth && e.code() != ErrorCode::AmbiguousBranch) throw;
        continue;
      }
      if (trial_cost <= cost) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      report.converged = true;
      break;
    }

    const double change = (cost - trial_cost) / cost;
    window = std::move(trial);
    cost = trial_cost;
    report.costs.push_back(cost);
    ++report.iterations;
    if (change < options.convergence_tol) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged && cost < options.cost_floor) report.converged = true;
  report.final_cost = cost;
  return report;
}

EstimationWindow initialize_window(std::span<const FeatureTracklet> tracklets, const Twist& velocity,
                                   const StereoCameraModel& camera, const Matrix3& r_inv) {
  struct Candidate {
    std::int64_t id;
    HomogeneousPoint p_early;
    double t_early;
    std::vector<const FeatureObservation*> obs;
  };

  double t_ref = std::numeric_limits<double>::infinity();
  for (const auto& tr : tracklets)
    for (const auto& o : tr.observations) t_ref = std::min(t_ref, o.t);

  std::size_t dropped = 0;
  std::vector<Candidate> kept;
  for (const auto& tr : tracklets) {
    if (tr.observations.size() < 2) continue;
    const auto earliest = std::min_element(tr.observations.begin(), tr.observations.end(),
                                           [](const auto& a, const auto& b) { return a.t < b.t; });
    Candidate c{tr.id, HomogeneousPoint::Zero(), earliest->t, {}};
    try {
      c.p_early = camera.triangulate(earliest->y.coords());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDisparity) throw;
      continue;
    }
    const HomogeneousPoint p_ref = exp_map((earliest->t - t_ref) * velocity).inverse() * c.p_early;
    for (const auto& o : tr.observations) {
      const HomogeneousPoint z = exp_map((o.t - t_ref) * velocity) * p_ref;
      if (z.z() > StereoCameraModel::kMinDepth) {
        c.obs.push_back(&o);
      } else {
        ++dropped;
      }
    }
    if (c.obs.size() >= 2) {
      kept.push_back(std::move(c));
    } else {
      dropped += c.obs.size();
    }
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyTrackletSet, "no tracklet with two usable observations");

  std::vector<double> times;
  for (const auto& c : kept)
    for (const auto* o : c.obs) times.push_back(o->t);
  std::sort(times.begin(), times.end());
  std::vector<double> knots;
  for (double t : times) {
    if (knots.empty() || t - knots.back() > kKnotMergeTol) knots.push_back(t);
  }
  const auto knot_of = [&](double t) {
    auto it = std::lower_bound(knots.begin(), knots.end(), t - kKnotMergeTol);
    return static_cast<std::size_t>(it - knots.begin());
  };

  EstimationWindow w;
  w.r_inv = r_inv;
  w.dropped_observations = dropped;
  const double t1 = knots.front();
  for (double t : knots) w.states.push_back(TrajectoryState{exp_map((t - t1) * velocity), velocity, t});
  for (const auto& c : kept) {
    const std::size_t j = w.landmarks.size();
    w.landmarks.push_back(exp_map((c.t_early - t1) * velocity).inverse() * c.p_early);
    w.landmark_ids.push_back(c.id);
    for (const auto* o : c.obs) w.observations.push_back(WindowObservation{j, knot_of(o->t), o->y.coords()});
  }
  return w;
}

}  // namespace ctevo
