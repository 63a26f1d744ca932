#pragma once

// Geometric variable strain model: xi(s, t) = B_q(s) q(t) + xi*(s).

#include <functional>
#include <span>
#include <vector>

#include "rodspec/basis.hpp"
#include "rodspec/liealg.hpp"
#include "rodspec/rodmodel.hpp"

namespace rodspec {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using StrainField = std::function<Screw(double)>;

struct Configuration {
  VectorXd q;
  VectorXd qdot;
};

/// `segments` equal steps from a to b (segments + 1 points).
std::vector<double> uniform_grid(double a, double b, int segments);

Screw strain_at(const BasisDictionary& dict, const VectorXd& q, const RodProperties& rod, double s);

/// Second-order (midpoint) Magnus integration of g' = g hat(xi):
/// g_{k+1} = g_k exp(xi((s_k + s_{k+1}) / 2) (s_{k+1} - s_k)), g_0 = base.
std::vector<Pose> integrate_strain(const StrainField& strain, std::span<const double> s_grid,
                                   const Pose& base = Pose::identity());

/// FK of a GVS configuration; s_grid must start at 0 and ascend within [0, L].
std::vector<Pose> forward_kinematics(const BasisDictionary& dict, const VectorXd& q,
                                     const RodProperties& rod, std::span<const double> s_grid);

struct KinematicsWithJacobian {
  std::vector<Pose> poses;
  std::vector<Matrix6X> jacobians;  // body-frame, eta(s_k) = J_k qdot
};

/// Poses and the exact derivative of the discrete midpoint FK map:
/// J_{k+1} = Ad^{-1}_{exp(Omega_k)} (J_k + dexp(Omega_k) h_k B_q(mid_k)), J_0 = 0.
KinematicsWithJacobian kinematics_with_jacobian(const BasisDictionary& dict, const VectorXd& q,
                                                const RodProperties& rod,
                                                std::span<const double> s_grid);

/// Geometric Jacobian at s on a uniform grid of about `segments` steps per rod length.
Matrix6X jacobian(const BasisDictionary& dict, const VectorXd& q, const RodProperties& rod,
                  double s, int segments = 200);

// ---------------------------------------------------------------------------
// Statics: xi = Sigma^{-1}(s) B_tau(xi, s) tau + xi*(s), pointwise in s.

struct StaticSettings {
  double relaxation = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct StaticPoint {
  Screw strain;
  double residual = 0.0;  // |xi - F(xi)|_inf at the returned iterate
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

StaticPoint solve_static_point(const RodProperties& rod, std::span<const ActuatorRouting> routing,
                               const VectorXd& tau, double s, const StaticSettings& settings = {});

/// Strain field sampler for a constant input. operator() throws NoConvergence
/// (carrying the last residual); solve() returns the flagged iterate instead.
class StaticStrainField {
 public:
  StaticStrainField(RodProperties rod, std::vector<ActuatorRouting> routing, VectorXd tau,
                    StaticSettings settings = {});

  StaticPoint solve(double s) const;
  Screw operator()(double s) const;
  std::vector<Screw> sample(std::span<const double> s_grid) const;

 private:
  RodProperties rod_;
  std::vector<ActuatorRouting> routing_;
  VectorXd tau_;
  StaticSettings settings_;
};

StaticStrainField static_strain_solve(const RodProperties& rod,
                                      std::span<const ActuatorRouting> routing,
                                      const VectorXd& tau, const StaticSettings& settings = {});

/// Strain-dependent atoms: for each actuator, the static strain deviation under a
/// unit input, sampled at `samples` points, added to every mode where it is nonzero.
/// Returns the number of atoms added.
int add_static_atoms(BasisDictionary& dict, const RodProperties& rod,
                     std::span<const ActuatorRouting> routing, int samples = 101);

// ---------------------------------------------------------------------------
// Dynamics: M(q) qddot + C(q, qdot) qdot + K q + D qdot = B(q) tau + G(q).

struct GvsModel {
  BasisDictionary basis{1.0};
  RodProperties rod;
  std::vector<ActuatorRouting> actuators;
  Screw gravity = Screw::Zero();  // gravity acceleration twist in the base frame
  int quadrature_points = 200;    // composite midpoint rule on [0, L]
};

struct GeneralizedForces {
  MatrixXd mass;
  VectorXd coriolis;   // C qdot
  VectorXd elastic;    // K q
  VectorXd damping;    // D qdot
  VectorXd actuation;  // int B_q^T B_tau tau ds
  VectorXd gravity;    // int J^T F_g ds
};

class GvsDynamics {
 public:
  explicit GvsDynamics(GvsModel model);

  const GvsModel& model() const { return model_; }
  int dofs() const { return model_.basis.size(); }
  std::span<const double> quadrature_nodes() const { return nodes_; }

  /// K_q = int B_q^T Sigma B_q ds (configuration independent).
  const MatrixXd& stiffness() const { return stiffness_; }
  /// D_q = int B_q^T Psi B_q ds.
  const MatrixXd& damping() const { return damping_; }
  MatrixXd mass(const VectorXd& q) const;

  GeneralizedForces forces(const VectorXd& q, const VectorXd& qdot, const VectorXd& tau) const;
  /// Throws SingularMass when cond(M_q) exceeds 1e12.
  VectorXd acceleration(const VectorXd& q, const VectorXd& qdot, const VectorXd& tau) const;
  /// 1/2 qdot^T M qdot + 1/2 q^T K q.
  double energy(const VectorXd& q, const VectorXd& qdot) const;

 private:
  // Poses at the quadrature nodes and the Jacobians stacked into a 6N x n_q matrix.
  void kinematics(const VectorXd& q, std::vector<Pose>& poses, MatrixXd& stacked) const;
  // Body velocities along the grid for segment strains `strain` and strain rates `rate`.
  std::vector<Screw> velocities(const std::vector<Screw>& strain,
                                const std::vector<Screw>& rate) const;

  GvsModel model_;
  std::vector<double> grid_;   // 0, then the quadrature nodes
  std::vector<double> nodes_;  // midpoints of the quadrature cells
  double cell_ = 0.0;
  std::vector<int> column_mode_;
  std::vector<Matrix6X> basis_at_mid_;   // B_q at the midpoint of each kinematic segment
  std::vector<Matrix6X> basis_at_node_;  // B_q at each quadrature node
  std::vector<Screw> rest_at_mid_;
  std::vector<Screw> rest_at_node_;
  VectorXd inertia_stacked_;  // diagonal of M(s_i), node after node
  MatrixXd stiffness_;
  MatrixXd damping_;
};

VectorXd generalized_dynamics(const GvsModel& model, const VectorXd& q, const VectorXd& qdot,
                              const VectorXd& tau);

struct TrajectorySample {
  double t;
  VectorXd q;
  VectorXd qdot;
};

using InputSignal = std::function<VectorXd(double)>;

/// Classical RK4 on (q, qdot). Samples are recorded every `dt`; each sample
/// interval is split into `substeps` equal RK4 steps.
std::vector<TrajectorySample> simulate(const GvsDynamics& dynamics, const VectorXd& q0,
                                       const VectorXd& qdot0, const InputSignal& input,
                                       double t_final, double dt, int substeps = 1);

}  // namespace rodspec
