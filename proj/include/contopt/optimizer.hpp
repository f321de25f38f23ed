#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "contopt/adjoint.hpp"
#include "contopt/contact.hpp"
#include "contopt/cutter.hpp"
#include "contopt/levelset.hpp"
#include "contopt/shapegrad.hpp"

namespace contopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Segment of the box boundary carrying a tag on D_h.
struct BoundaryRegion {
  Vec2 a, b;
  BoundaryTag tag = BoundaryTag::Free;
};

struct DomainSpec {
  Vec2 origin{};
  double width = 1.0, height = 1.0;
  int nx = 38, ny = 38;
  std::vector<BoundaryRegion> regions;
};

struct Hole {
  Vec2 center;
  double radius = 0.0;
};

// Omega^0: the box, a disk or a half-plane, minus holes; the hole grid adds rows x cols evenly
// spaced holes of radius hole_radius.
struct InitialShape {
  // Box: all of D; Disk: |x - center| <= radius; HalfPlane: (x - center).normal <= 0
  enum class Kind { Box, Disk, HalfPlane } kind = Kind::Box;
  Vec2 center{};
  double radius = 0.0;  // Disk only
  Vec2 normal{0.0, 1.0};  // HalfPlane only, outward
  std::vector<Hole> holes;
  int hole_cols = 0, hole_rows = 0;
  double hole_radius = 0.0;
  std::vector<Hole> all_holes(const DomainSpec& d) const;
};

struct LoopControls {
  int max_iter = 60;
  double beta = 1.05;
  int warmup = 20;
  double c_step = 0.5;     // boundary motion per step, in mesh sizes
  double c_growth = 1.5;   // after an accepted step, capped at c_step
  int max_halvings = 5;
  double tol_J = 1e-5;
  int tol_window = 5;
  double grid_refine = 2.0;  // dx = h / grid_refine
  int cut_degree = 2;
  double snap_tol = 0.05;
  double alpha_reg = 0.0;    // 0: use h
  double cfl = 0.5;
  int reinit_every = 5;
  int reinit_steps = 5;
  double kink_tol = 1e-9;
};

struct RunConfig {
  std::string name = "run";
  DomainSpec domain;
  InitialShape init;
  Material material;
  Loads loads;
  bool contact = true;  // false: contact regions become free boundary
  ContactMode contact_mode = ContactMode::Pinned;
  double contact_band = std::numeric_limits<double>::infinity();
  RigidBody body;
  ContactParams params;
  Formulation formulation = Formulation::Penalty;
  NewtonOptions newton;
  AlmOptions alm;
  CostSpec cost;
  LoopControls loop;

  void validate() const;
  double mesh_size() const { return domain.width / domain.nx; }
};

struct CostValue {
  double J = 0.0;
  double compliance = 0.0;
  double volume = 0.0;
};

CostValue evaluate_cost(const TriMesh& omega, const FeField& y, const CostSpec& cost, const Loads& loads);

struct ShapeState {
  LevelSet ls;
  FeField phi_h;  // L2 projection of the grid level set on D_h
  CutResult cut;
  std::shared_ptr<const TriMesh> omega;
  ContactProblem problem;
  ContactSolution solution;
  CostValue cost;
};

struct Direction {
  AdjointResult adjoint;
  BoundaryDensity density;
  DescentField descent;
  double dJ = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  int attempt = 0;
  double J = 0.0, compliance = 0.0, volume = 0.0;
  bool accepted = false;
  double step = 0.0;  // c: boundary motion in mesh sizes
  double theta_bound = 0.0;
  double dJ = 0.0;
  int newton_iterations = 0;
  int outer_iterations = 0;
  double weak_contact_share = 0.0;
  double weak_sticking_share = 0.0;
  std::string note;
};

struct OptTrace {
  std::vector<IterationRecord> records;
  bool converged = false;
  bool stopped = false;
  std::string stop_reason;
  std::vector<IterationRecord> accepted() const;
  double final_J() const;
};

class Optimizer {
 public:
  explicit Optimizer(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const ShapeState& state() const { return *state_; }
  std::shared_ptr<const TriMesh> background() const { return background_; }
  double h() const { return cfg_.mesh_size(); }
  const GridSpec& grid() const { return grid_; }

  // Level set -> phi_h -> cut -> tags -> contact solve -> cost.
  ShapeState evaluate(const LevelSet& ls) const;
  ShapeState evaluate_phi(LevelSet ls, FeField phi_h, double snap_tol) const;
  Direction direction(const ShapeState& s) const;

  // One iteration with step halving. Returns the records of all attempts.
  std::vector<IterationRecord> step(int iteration);
  bool stop_flag() const { return stop_; }
  double current_step() const { return c_; }

  using Observer = std::function<void(const IterationRecord&, const ShapeState&)>;
  OptTrace run(const Observer& observer = {});

 private:
  IterationRecord record_of(const ShapeState& s, int iteration) const;

  RunConfig cfg_;
  std::shared_ptr<const TriMesh> background_;
  GridSpec grid_;
  std::shared_ptr<GridProjector> projector_;
  std::shared_ptr<DescentSolver> descent_;
  std::shared_ptr<const ShapeState> state_;
  bool clamped_ = false;  // background has Dirichlet facets
  double load_length_ = 0.0;  // |Gamma_N| on the background
  double c_ = 0.5;
  bool stop_ = false;
  std::string stop_reason_;
};

// Central finite differences of J under transport of phi_h by t theta |grad phi_h|
// (theta the descent field) against dJ_of_theta; cut with a negligible snap.
struct GradientCheck {
  double analytic = 0.0;
  std::vector<double> steps;  // motion in mesh sizes
  std::vector<double> fd;
  std::vector<double> rel_error;
  double best_error = 0.0;
  bool breakdown = false;  // error ladder not monotone
};

GradientCheck check_gradient(const Optimizer& opt, const std::vector<double>& ladder = {1e-2, 5e-3, 2.5e-3});

// Preset builders for the bridge and cantilever benchmarks and the patch tests.
RunConfig bridge_config(Formulation form, bool friction);
RunConfig cantilever_config(Formulation form, bool friction, bool contact = true);
// Unit square on a half-plane under pressure 0.01 (rollers on the sides), or
// with `inactive` clamped and far from the obstacle. For single solves.
RunConfig patch_config(Formulation form, bool inactive = false);
// Volume-only cost on a half-plane shape cut by a straight line.
RunConfig flat_volume_config();

}  // namespace contopt
