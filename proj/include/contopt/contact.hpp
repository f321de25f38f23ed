#pragma once

#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "contopt/fem.hpp"
#include "contopt/mesh.hpp"

namespace contopt {

class ContactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Obstacle occupying {(x - point).normal < 0}; normal points out of it.
struct HalfPlane {
  Vec2 point{};
  Vec2 normal{0.0, 1.0};
};

struct Disk {
  Vec2 center{};
  double radius = 1.0;
};

struct GapInfo {
  double g = 0.0;  // distance to the obstacle, negative inside it
  Vec2 normal;     // unit outward normal of the obstacle at the closest point
};

class RigidBody {
 public:
  RigidBody() = default;
  RigidBody(HalfPlane hp);
  RigidBody(Disk disk);

  GapInfo gap(const Vec2& x) const;
  const std::variant<HalfPlane, Disk>& shape() const { return shape_; }

 private:
  std::variant<HalfPlane, Disk> shape_{HalfPlane{}};
};

inline GapInfo gap(const RigidBody& body, const Vec2& x) { return body.gap(x); }

// Contact kinematics follow the obstacle: n_rig = -normal points into the
// obstacle, t_rig = perp(n_rig), and the constraint reads u.n_rig <= g.
struct ContactFrame {
  double g = 0.0;
  Vec2 n;
  Vec2 t;
};
ContactFrame contact_frame(const RigidBody& body, const Vec2& x);

double proj_max(double t);
// Projection onto the ball of radius alpha (scalar tangent in 2D).
double proj_q(double alpha, double z);
Vec2 proj_q(double alpha, const Vec2& z);
double gderiv_plus(double t);
double gderiv_s(double alpha, double z);
std::array<std::array<double, 2>, 2> gderiv_s(double alpha, const Vec2& z);

struct ContactParams {
  double rho = 1e8;       // penalty stiffness (1/epsilon)
  double gamma1 = 1000.0;
  double gamma2 = 1000.0;
  double s = 1e-2;        // Tresca threshold scale
  double friction = 0.2;  // friction coefficient
  bool frictionless = false;
  // Weak tangential spring on Gamma_C, removes the sliding rigid mode when
  // nothing else does. Zero unless a preset asks for it.
  double tangential_stabilization = 0.0;

  double threshold() const { return frictionless ? 0.0 : friction * s; }
  void validate() const;
};

enum class Formulation { Penalty, Alm };

// One quadrature node (Simpson rule) on a Contact facet of Omega_h.
struct ContactPoint {
  int facet = -1;
  std::array<int, 3> nodes{};  // P2 nodes (a, b, midpoint)
  std::array<double, 3> shape{};
  double weight = 0.0;  // includes the facet length
  Vec2 x;
  ContactFrame frame;
};

std::vector<ContactPoint> contact_points(const TriMesh& mesh, const RigidBody& body);

// Final generalized Jacobian (reduced to free dofs) and its factorization.
struct LinearizedSystem {
  DofMap dofs;
  SparseMatrix matrix;
  std::shared_ptr<const LinearSolver> solver;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int max_halvings = 10;
};

struct AlmOptions {
  double tol = 1e-8;
  int max_outer = 500;
};

struct ContactSolution {
  Formulation formulation = Formulation::Penalty;
  FeField u;
  std::vector<ContactPoint> points;
  // Contact traction components at the points: for ALM the updated
  // multipliers, for the penalty method rho*max(u_n - g) and q(Fs, rho u_t).
  std::vector<double> lambda, mu;
  // ALM multipliers the last displacement solve was run with.
  std::vector<double> lambda_prev, mu_prev;
  std::shared_ptr<const LinearizedSystem> system;
  Vector load;  // full load vector L
  int newton_iterations = 0;
  int outer_iterations = 0;
  std::vector<double> residual_history;  // relative Newton residuals
  double final_residual = 0.0;
};

// Problem on a fixed Omega_h.
struct ContactProblem {
  std::shared_ptr<const TriMesh> mesh;
  Material material;
  Loads loads;
  RigidBody body;
  ContactParams params;
  // Optional displacement on any mesh covering this one, interpolated as the
  // Newton starting point.
  FeField warm_start;
  // Per-triangle flags of unloaded parts held at rest: left out of the
  // stiffness, their own nodes fixed at 0. Empty means none.
  std::vector<char> resting;
};

ContactSolution solve_penalty(const ContactProblem& prob, const NewtonOptions& newton = {});

// Multipliers at the contact points may be given to start from (or to run a
// single frozen-multiplier solve with max_outer = 1).
ContactSolution solve_alm(const ContactProblem& prob, const AlmOptions& outer = {},
                          const NewtonOptions& newton = {}, const std::vector<double>* lambda0 = nullptr,
                          const std::vector<double>* mu0 = nullptr);

ContactSolution solve(const ContactProblem& prob, Formulation form, const NewtonOptions& newton = {},
                      const AlmOptions& outer = {});

// u.n_rig - g at a contact point (positive = penetration).
double normal_gap_residual(const ContactSolution& sol, const ContactPoint& cp);
double tangential_displacement(const ContactSolution& sol, const ContactPoint& cp);

struct WeakSetReport {
  int weak_contact_points = 0;
  int weak_sticking_points = 0;
  double weak_contact_measure = 0.0;  // summed quadrature weights
  double weak_sticking_measure = 0.0;
  double contact_length = 0.0;
  double weak_contact_share() const { return contact_length > 0 ? weak_contact_measure / contact_length : 0.0; }
  double weak_sticking_share() const { return contact_length > 0 ? weak_sticking_measure / contact_length : 0.0; }
};

// Kink arguments are measured in displacement units.
WeakSetReport detect_weak_sets(const ContactSolution& sol, const ContactParams& params, double kink_tol);

// Contact facets whose midpoint gap exceeds `band` are retagged Free (free
// contact mode: Gamma_C is the part of the boundary near the obstacle).
TriMesh limit_contact_zone(const TriMesh& mesh, const RigidBody& body, double band);

// P1 nodal view of point values on Gamma_C (length-weighted averages).
std::vector<double> nodal_average(const TriMesh& mesh, const std::vector<ContactPoint>& points,
                                  const std::vector<double>& values);

}  // namespace contopt
