#include "rodspec/gvs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

void check_grid(std::span<const double> s_grid, double length, const char* who) {
  if (s_grid.empty()) throw ValidationError(std::string(who) + ": empty grid");
  if (s_grid.front() != 0.0) throw OutOfDomain(std::string(who) + ": grid must start at s = 0");
  for (std::size_t k = 1; k < s_grid.size(); ++k) {
    if (!(s_grid[k] > s_grid[k - 1])) {
      throw ValidationError(std::string(who) + ": grid must be strictly ascending");
    }
  }
  if (s_grid.back() > length * (1.0 + 1e-12)) {
    throw OutOfDomain(std::string(who) + ": grid exceeds the rod length");
  }
}

double clamp_to_rod(double s, double length) { return std::min(s, length); }

// Ad_g^{-1} v without forming the 6x6 matrix.
Screw apply_ad_inv(const Pose& g, const Screw& v) {
  const Matrix3& r = g.rotation();
  const Vector3 w = angular(v);
  return make_screw(r.transpose() * w,
                    r.transpose() * (Vector3(linear(v)) - g.position().cross(w)));
}

// dexp(x) v, by series for the short segments used along the rod.
Screw apply_dexp(const Screw& x, const Screw& v) {
  if (angular(x).norm() >= 0.2) return dexp(x) * v;
  const Matrix6 adx = ad(x);
  Screw sum = v;
  Screw term = v;
  for (int k = 1; k <= 20; ++k) {
    term = adx * term / static_cast<double>(k + 1);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * (1.0 + v.cwiseAbs().maxCoeff())) break;
  }
  return sum;
}

void check_dofs(const BasisDictionary& dict, const VectorXd& q) {
  if (q.size() != dict.size()) {
    throw LengthMismatch("gvs: q has " + std::to_string(q.size()) + " entries, basis has " +
                         std::to_string(dict.size()));
  }
}

}  // namespace

std::vector<double> uniform_grid(double a, double b, int segments) {
  if (segments < 1) throw ValidationError("uniform_grid: need at least one segment");
  std::vector<double> g(static_cast<std::size_t>(segments) + 1);
  for (int k = 0; k <= segments; ++k) g[static_cast<std::size_t>(k)] = a + (b - a) * k / segments;
  g.back() = b;
  return g;
}

Screw strain_at(const BasisDictionary& dict, const VectorXd& q, const RodProperties& rod,
                double s) {
  check_dofs(dict, q);
  return dict.basis_matrix(s) * q + rod.stress_free(s);
}

std::vector<Pose> integrate_strain(const StrainField& strain, std::span<const double> s_grid,
                                   const Pose& base) {
  std::vector<Pose> poses;
  poses.reserve(s_grid.size());
  poses.push_back(base);
  for (std::size_t k = 0; k + 1 < s_grid.size(); ++k) {
    const double h = s_grid[k + 1] - s_grid[k];
    const double mid = 0.5 * (s_grid[k] + s_grid[k + 1]);
    poses.push_back(poses.back() * exp_se3(strain(mid), h));
  }
  return poses;
}

std::vector<Pose> forward_kinematics(const BasisDictionary& dict, const VectorXd& q,
                                     const RodProperties& rod, std::span<const double> s_grid) {
  check_dofs(dict, q);
  check_grid(s_grid, rod.length, "forward_kinematics");
  const StrainField field = [&](double s) {
    const double sc = clamp_to_rod(s, rod.length);
    return Screw(dict.basis_matrix(sc) * q + rod.stress_free(sc));
  };
  return integrate_strain(field, s_grid);
}

KinematicsWithJacobian kinematics_with_jacobian(const BasisDictionary& dict, const VectorXd& q,
                                                const RodProperties& rod,
                                                std::span<const double> s_grid) {
  check_dofs(dict, q);
  check_grid(s_grid, rod.length, "kinematics_with_jacobian");
  KinematicsWithJacobian out;
  out.poses.reserve(s_grid.size());
  out.jacobians.reserve(s_grid.size());
  out.poses.push_back(Pose::identity());
  out.jacobians.push_back(Matrix6X::Zero(6, dict.size()));
  for (std::size_t k = 0; k + 1 < s_grid.size(); ++k) {
    const double h = s_grid[k + 1] - s_grid[k];
    const double mid = clamp_to_rod(0.5 * (s_grid[k] + s_grid[k + 1]), rod.length);
    const Matrix6X b = dict.basis_matrix(mid);
    const Screw omega = h * (b * q + rod.stress_free(mid));
    const Pose step = exp_se3(omega);
    out.jacobians.push_back(Ad_inv(step) * (out.jacobians.back() + dexp(omega) * (h * b)));
    out.poses.push_back(out.poses.back() * step);
  }
  return out;
}

Matrix6X jacobian(const BasisDictionary& dict, const VectorXd& q, const RodProperties& rod,
                  double s, int segments) {
  check_dofs(dict, q);
  if (!(s >= 0.0 && s <= rod.length)) {
    throw OutOfDomain("jacobian: s = " + std::to_string(s) + " outside [0, L]");
  }
  if (segments < 1) throw ValidationError("jacobian: segments must be >= 1");
  if (s == 0.0) return Matrix6X::Zero(6, dict.size());
  const int n = std::max(1, static_cast<int>(std::ceil(segments * s / rod.length - 1e-9)));
  const auto grid = uniform_grid(0.0, s, n);
  return kinematics_with_jacobian(dict, q, rod, grid).jacobians.back();
}

// ---------------------------------------------------------------------------

StaticPoint solve_static_point(const RodProperties& rod, std::span<const ActuatorRouting> routing,
                               const VectorXd& tau, double s, const StaticSettings& settings) {
  if (tau.size() != static_cast<Eigen::Index>(routing.size())) {
    throw LengthMismatch("static_strain_solve: tau size does not match the actuator count");
  }
  if (!(settings.relaxation > 0.0 && settings.relaxation <= 1.0)) {
    throw ValidationError("static_strain_solve: relaxation must lie in (0, 1]");
  }
  const Screw rest = rod.stress_free(s);
  const Screw compliance = stiffness_matrix(rod, s).diagonal().cwiseInverse();
  StaticPoint p;
  p.strain = rest;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    const Screw image =
        compliance.cwiseProduct(actuation_matrix(rod, routing, p.strain, s) * tau) + rest;
    p.residual = (p.strain - image).cwiseAbs().maxCoeff();
    p.residual_history.push_back(p.residual);
    p.iterations = it;
    if (!std::isfinite(p.residual)) break;
    if (p.residual < settings.tolerance) {
      p.converged = true;
      return p;
    }
    p.strain += settings.relaxation * (image - p.strain);
  }
  return p;
}

StaticStrainField::StaticStrainField(RodProperties rod, std::vector<ActuatorRouting> routing,
                                     VectorXd tau, StaticSettings settings)
    : rod_(std::move(rod)), routing_(std::move(routing)), tau_(std::move(tau)),
      settings_(settings) {
  rod_.validate();
  for (const auto& r : routing_) r.validate(rod_);
  if (tau_.size() != static_cast<Eigen::Index>(routing_.size())) {
    throw LengthMismatch("static_strain_solve: tau size does not match the actuator count");
  }
}

StaticPoint StaticStrainField::solve(double s) const {
  return solve_static_point(rod_, routing_, tau_, s, settings_);
}

Screw StaticStrainField::operator()(double s) const {
  StaticPoint p = solve(s);
  if (!p.converged) {
    throw NoConvergence("static_strain_solve: no convergence at s = " + std::to_string(s) +
                            " after " + std::to_string(p.iterations) + " iterations",
                        p.residual);
  }
  return p.strain;
}

std::vector<Screw> StaticStrainField::sample(std::span<const double> s_grid) const {
  std::vector<Screw> out;
  out.reserve(s_grid.size());
  for (double s : s_grid) out.push_back((*this)(s));
  return out;
}

StaticStrainField static_strain_solve(const RodProperties& rod,
                                      std::span<const ActuatorRouting> routing,
                                      const VectorXd& tau, const StaticSettings& settings) {
  return StaticStrainField(rod, {routing.begin(), routing.end()}, tau, settings);
}

int add_static_atoms(BasisDictionary& dict, const RodProperties& rod,
                     std::span<const ActuatorRouting> routing, int samples) {
  if (samples < 2) throw ValidationError("add_static_atoms: need at least two samples");
  const auto grid = uniform_grid(0.0, rod.length, samples - 1);
  int added = 0;
  for (std::size_t a = 0; a < routing.size(); ++a) {
    VectorXd tau = VectorXd::Zero(static_cast<Eigen::Index>(routing.size()));
    tau(static_cast<Eigen::Index>(a)) = 1.0;
    const auto field = static_strain_solve(rod, routing, tau);
    std::array<std::vector<double>, kStrainModes> values;
    for (double s : grid) {
      const Screw d = field(s) - rod.stress_free(s);
      for (int m = 0; m < kStrainModes; ++m) values[static_cast<std::size_t>(m)].push_back(d(m));
    }
    for (int m = 0; m < kStrainModes; ++m) {
      auto& v = values[static_cast<std::size_t>(m)];
      const double peak = std::transform_reduce(v.begin(), v.end(), 0.0,
                                                [](double x, double y) { return std::max(x, y); },
                                                [](double x) { return std::abs(x); });
      if (peak < 1e-14) continue;
      Atom atom = Atom::sampled(std::move(v));
      const auto existing = dict.atoms(m);
      if (std::find(existing.begin(), existing.end(), atom) != existing.end()) continue;
      dict.add(m, std::move(atom));
      ++added;
    }
  }
  return added;
}

// ---------------------------------------------------------------------------

GvsDynamics::GvsDynamics(GvsModel model) : model_(std::move(model)) {
  model_.rod.validate();
  for (const auto& r : model_.actuators) r.validate(model_.rod);
  if (model_.basis.empty()) throw EmptyDictionary("dynamics: basis dictionary is empty");
  if (model_.quadrature_points < 1) throw ValidationError("dynamics: need >= 1 quadrature point");
  if (std::abs(model_.basis.length() - model_.rod.length) > 1e-12 * model_.rod.length) {
    throw ValidationError("dynamics: basis length differs from the rod length");
  }
  const int n = model_.quadrature_points;
  const double length = model_.rod.length;
  cell_ = length / n;
  grid_.push_back(0.0);
  for (int i = 0; i < n; ++i) {
    nodes_.push_back((i + 0.5) * cell_);
    grid_.push_back(nodes_.back());
  }
  const int nq = model_.basis.size();
  for (int c = 0; c < nq; ++c) column_mode_.push_back(model_.basis.mode_of(c));
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    const double mid = 0.5 * (grid_[k] + grid_[k + 1]);
    basis_at_mid_.push_back(model_.basis.basis_matrix(mid));
    rest_at_mid_.push_back(model_.rod.stress_free(mid));
  }
  stiffness_ = MatrixXd::Zero(nq, nq);
  damping_ = MatrixXd::Zero(nq, nq);
  inertia_stacked_.resize(6 * n);
  for (int i = 0; i < n; ++i) {
    const double s = nodes_[static_cast<std::size_t>(i)];
    const Matrix6X b = model_.basis.basis_matrix(s);
    basis_at_node_.push_back(b);
    rest_at_node_.push_back(model_.rod.stress_free(s));
    inertia_stacked_.segment<6>(6 * i) = inertia_matrix(model_.rod, s).diagonal();
    stiffness_ += cell_ * b.transpose() * stiffness_matrix(model_.rod, s) * b;
    damping_ += cell_ * b.transpose() * damping_matrix(model_.rod, s) * b;
  }
}

void GvsDynamics::kinematics(const VectorXd& q, std::vector<Pose>& poses,
                             MatrixXd& stacked) const {
  check_dofs(model_.basis, q);
  const Eigen::Index nq = q.size();
  poses.clear();
  poses.reserve(nodes_.size());
  stacked.resize(6 * static_cast<Eigen::Index>(nodes_.size()), nq);
  Pose g;
  Matrix6X j = Matrix6X::Zero(6, nq);
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    const double h = grid_[k + 1] - grid_[k];
    const Matrix6X& b = basis_at_mid_[k];
    const Screw omega = h * (b * q + rest_at_mid_[k]);
    const Pose step = exp_se3(omega);
    const Matrix6 t = dexp(omega);
    // B_q has one nonzero per column, so dexp * B_q reduces to scaled columns.
    for (Eigen::Index c = 0; c < nq; ++c) {
      const int mode = column_mode_[static_cast<std::size_t>(c)];
      j.col(c) += (h * b(mode, c)) * t.col(mode);
    }
    j = Ad_inv(step) * j;
    g = g * step;
    poses.push_back(g);
    stacked.middleRows<6>(6 * static_cast<Eigen::Index>(k)) = j;
  }
}

std::vector<Screw> GvsDynamics::velocities(const std::vector<Screw>& strain,
                                           const std::vector<Screw>& rate) const {
  std::vector<Screw> out;
  out.reserve(nodes_.size());
  Screw eta = Screw::Zero();
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    const double h = grid_[k + 1] - grid_[k];
    const Screw omega = h * strain[k];
    eta = apply_ad_inv(exp_se3(omega), eta + apply_dexp(omega, h * rate[k]));
    out.push_back(eta);
  }
  return out;
}

MatrixXd GvsDynamics::mass(const VectorXd& q) const {
  std::vector<Pose> poses;
  MatrixXd jac;
  kinematics(q, poses, jac);
  const MatrixXd w = (cell_ * inertia_stacked_).cwiseSqrt().asDiagonal() * jac;
  MatrixXd m = MatrixXd::Zero(q.size(), q.size());
  m.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  return m.selfadjointView<Eigen::Lower>();
}

GeneralizedForces GvsDynamics::forces(const VectorXd& q, const VectorXd& qdot,
                                      const VectorXd& tau) const {
  check_dofs(model_.basis, q);
  check_dofs(model_.basis, qdot);
  if (tau.size() != static_cast<Eigen::Index>(model_.actuators.size())) {
    throw LengthMismatch("dynamics: tau size does not match the actuator count");
  }
  const auto& rod = model_.rod;
  const Eigen::Index nq = q.size();
  const auto count = static_cast<Eigen::Index>(nodes_.size());
  std::vector<Pose> poses;
  MatrixXd jac;
  kinematics(q, poses, jac);

  GeneralizedForces f;
  const MatrixXd w = (cell_ * inertia_stacked_).cwiseSqrt().asDiagonal() * jac;
  f.mass = MatrixXd::Zero(nq, nq);
  f.mass.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  f.mass = f.mass.selfadjointView<Eigen::Lower>();

  // Distributed inertial and gravity wrenches, integrated through J^T at the end.
  VectorXd wrench = VectorXd::Zero(6 * count);
  const double speed = qdot.cwiseAbs().maxCoeff();
  if (speed > 0.0) {
    // Jdot qdot = d/de [J(q + e qdot) qdot] at e = 0, by a central difference.
    const double e = 1e-6 / speed;
    std::vector<Screw> ahead(nodes_.size()), behind(nodes_.size()), rate(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const Screw bq = basis_at_mid_[k] * q + rest_at_mid_[k];
      rate[k] = basis_at_mid_[k] * qdot;
      ahead[k] = bq + e * rate[k];
      behind[k] = bq - e * rate[k];
    }
    ahead = velocities(ahead, rate);
    behind = velocities(behind, rate);
    const VectorXd eta_all = jac * qdot;
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const Screw md = inertia_stacked_.segment<6>(6 * i);
      const Screw eta = eta_all.segment<6>(6 * i);
      const Screw jdot_qdot = (ahead[k] - behind[k]) / (2.0 * e);
      wrench.segment<6>(6 * i) = md.cwiseProduct(jdot_qdot) + coad(eta) * md.cwiseProduct(eta);
    }
  }
  f.coriolis = cell_ * (jac.transpose() * wrench);

  f.gravity = VectorXd::Zero(nq);
  if (!model_.gravity.isZero(0.0)) {
    for (Eigen::Index i = 0; i < count; ++i) {
      const Screw md = inertia_stacked_.segment<6>(6 * i);
      wrench.segment<6>(6 * i) =
          md.cwiseProduct(apply_ad_inv(poses[static_cast<std::size_t>(i)], model_.gravity));
    }
    f.gravity = cell_ * (jac.transpose() * wrench);
  }

  f.actuation = VectorXd::Zero(nq);
  if (tau.size() > 0) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Screw xi = basis_at_node_[i] * q + rest_at_node_[i];
      f.actuation.noalias() += cell_ * basis_at_node_[i].transpose() *
                               (actuation_matrix(rod, model_.actuators, xi, nodes_[i]) * tau);
    }
  }
  f.elastic = stiffness_ * q;
  f.damping = damping_ * qdot;
  return f;
}

VectorXd GvsDynamics::acceleration(const VectorXd& q, const VectorXd& qdot,
                                   const VectorXd& tau) const {
  const GeneralizedForces f = forces(q, qdot, tau);
  const Eigen::LDLT<MatrixXd> ldlt(f.mass);
  // rcond() alone misses exact singularity: zero pivots are pseudo-inverted.
  const VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const double rcond = std::min(ldlt.rcond(), pivots.minCoeff() / pivots.maxCoeff());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(rcond > 1e-12)) {
    throw SingularMass("dynamics: mass matrix is singular or ill-conditioned (rcond = " +
                       std::to_string(rcond) + ")");
  }
  const VectorXd rhs = f.actuation + f.gravity - f.coriolis - f.elastic - f.damping;
  return ldlt.solve(rhs);
}

double GvsDynamics::energy(const VectorXd& q, const VectorXd& qdot) const {
  check_dofs(model_.basis, qdot);
  return 0.5 * qdot.dot(mass(q) * qdot) + 0.5 * q.dot(stiffness_ * q);
}

VectorXd generalized_dynamics(const GvsModel& model, const VectorXd& q, const VectorXd& qdot,
                              const VectorXd& tau) {
  return GvsDynamics(model).acceleration(q, qdot, tau);
}

std::vector<TrajectorySample> simulate(const GvsDynamics& dynamics, const VectorXd& q0,
                                       const VectorXd& qdot0, const InputSignal& input,
                                       double t_final, double dt, int substeps) {
  if (!(dt > 0.0) || !(t_final >= 0.0)) throw ValidationError("simulate: need dt > 0, t_final >= 0");
  if (substeps < 1) throw ValidationError("simulate: substeps must be >= 1");
  check_dofs(dynamics.model().basis, q0);
  check_dofs(dynamics.model().basis, qdot0);
  const auto steps = static_cast<long>(std::llround(t_final / dt));
  const double h = dt / substeps;
  std::vector<TrajectorySample> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  VectorXd q = q0;
  VectorXd v = qdot0;
  out.push_back({0.0, q, v});
  for (long n = 0; n < steps; ++n) {
    const double t = n * dt;
    // Zero-order hold over the sample interval.
    const VectorXd tau = input ? input(t) : VectorXd::Zero(static_cast<Eigen::Index>(
                                                 dynamics.model().actuators.size()));
    for (int sub = 0; sub < substeps; ++sub) {
      const VectorXd a1 = dynamics.acceleration(q, v, tau);
      const VectorXd v1 = v;
      const VectorXd a2 = dynamics.acceleration(q + 0.5 * h * v1, v + 0.5 * h * a1, tau);
      const VectorXd v2 = v + 0.5 * h * a1;
      const VectorXd a3 = dynamics.acceleration(q + 0.5 * h * v2, v + 0.5 * h * a2, tau);
      const VectorXd v3 = v + 0.5 * h * a2;
      const VectorXd a4 = dynamics.acceleration(q + h * v3, v + h * a3, tau);
      const VectorXd v4 = v + h * a3;
      q += h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
      v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    }
    if (!q.allFinite() || !v.allFinite()) {
      throw NumericalError("simulate: state diverged at t = " + std::to_string((n + 1) * dt));
    }
    out.push_back({(n + 1) * dt, q, v});
  }
  return out;
}

}  // namespace rodspec
