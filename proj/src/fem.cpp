#include "contopt/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <unsupported/Eigen/SparseExtra>

#include "contopt/quadrature.hpp"

namespace contopt {

Lame lame_from(double E, double nu) {
  if (!(nu > -1.0) || !(nu < 0.5)) {
    throw FemError("Poisson ratio must lie in (-1, 0.5), got " + std::to_string(nu));
  }
  if (!(E > 0.0)) throw FemError("Young modulus must be positive");
  return {E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
}

double hooke_product(const Lame& lame, const Grad2& gu, const Grad2& gv) {
  const Grad2 eu = sym(gu), ev = sym(gv);
  const double ee = eu[0].x * ev[0].x + 2.0 * eu[0].y * ev[0].y + eu[1].y * ev[1].y;
  return 2.0 * lame.mu * ee + lame.lambda * (eu[0].x + eu[1].y) * (ev[0].x + ev[1].y);
}

Grad2 stress(const Lame& lame, const Grad2& gu) {
  const Grad2 e = sym(gu);
  const double tr = e[0].x + e[1].y;
  return {Vec2{2.0 * lame.mu * e[0].x + lame.lambda * tr, 2.0 * lame.mu * e[0].y},
          Vec2{2.0 * lame.mu * e[1].x, 2.0 * lame.mu * e[1].y + lame.lambda * tr}};
}

ElementGeometry ElementGeometry::of(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles()[t];
  const Vec2 p0 = mesh.vertices()[tri[0]], p1 = mesh.vertices()[tri[1]],
             p2 = mesh.vertices()[tri[2]];
  const double det = cross(p1 - p0, p2 - p0);
  ElementGeometry g;
  g.area = 0.5 * det;
  // grad L_i = perp(opposite edge) / det, pointing towards vertex i.
  g.grad_l[0] = (1.0 / det) * Vec2{p1.y - p2.y, p2.x - p1.x};
  g.grad_l[1] = (1.0 / det) * Vec2{p2.y - p0.y, p0.x - p2.x};
  g.grad_l[2] = (1.0 / det) * Vec2{p0.y - p1.y, p1.x - p0.x};
  return g;
}

std::array<double, 6> p2_shape(const std::array<double, 3>& l) {
  return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
          4.0 * l[0] * l[1],         4.0 * l[1] * l[2],         4.0 * l[2] * l[0]};
}

std::array<Vec2, 6> p2_shape_grad(const std::array<double, 3>& l, const ElementGeometry& g) {
  const auto& d = g.grad_l;
  return {(4.0 * l[0] - 1.0) * d[0],
          (4.0 * l[1] - 1.0) * d[1],
          (4.0 * l[2] - 1.0) * d[2],
          4.0 * (l[0] * d[1] + l[1] * d[0]),
          4.0 * (l[1] * d[2] + l[2] * d[1]),
          4.0 * (l[2] * d[0] + l[0] * d[2])};
}

std::array<double, 3> p2_edge_shape(double s) {
  return {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
}

std::array<int, 3> facet_p2_nodes(const TriMesh& mesh, const Facet& f) {
  const int e = mesh.find_edge(f.a, f.b);
  if (e < 0) throw FemError("facet is not a mesh edge");
  return {f.a, f.b, mesh.num_vertices() + e};
}

// ---------------------------------------------------------------- FeField

FeField::FeField(std::shared_ptr<const TriMesh> mesh, int degree, int components)
    : mesh_(std::move(mesh)), degree_(degree), components_(components) {
  if (!mesh_) throw FemError("FeField without mesh");
  if (degree_ != 1 && degree_ != 2) throw FemError("FeField degree must be 1 or 2");
  if (components_ != 1 && components_ != 2) throw FemError("FeField components must be 1 or 2");
  values_ = Vector::Zero(static_cast<Eigen::Index>(num_nodes()) * components_);
}

FeField::FeField(std::shared_ptr<const TriMesh> mesh, int degree, int components, Vector values)
    : FeField(std::move(mesh), degree, components) {
  if (values.size() != values_.size()) throw FemError("FeField value count mismatch");
  if (!values.allFinite()) throw FemError("FeField values not finite");
  values_ = std::move(values);
}

FeField FeField::interpolate(std::shared_ptr<const TriMesh> mesh, int degree,
                             const std::function<double(const Vec2&)>& fn) {
  FeField f(std::move(mesh), degree, 1);
  for (int n = 0; n < f.num_nodes(); ++n) f.values_[n] = fn(f.node_position(n));
  return f;
}

int FeField::num_nodes() const {
  return degree_ == 1 ? mesh_->num_vertices() : mesh_->num_p2_nodes();
}

Vec2 FeField::node_position(int node) const { return mesh_->p2_node_position(node); }

std::array<int, 6> FeField::element_nodes(int t) const {
  if (degree_ == 2) return mesh_->p2_nodes(t);
  const auto& tri = mesh_->triangles()[t];
  return {tri[0], tri[1], tri[2], -1, -1, -1};
}

double FeField::value(int t, const std::array<double, 3>& l, int c) const {
  const auto nodes = element_nodes(t);
  if (degree_ == 1) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += l[i] * at(nodes[i], c);
    return s;
  }
  const auto n = p2_shape(l);
  double s = 0.0;
  for (int i = 0; i < 6; ++i) s += n[i] * at(nodes[i], c);
  return s;
}

Vec2 FeField::vector_value(int t, const std::array<double, 3>& l) const {
  return {value(t, l, 0), value(t, l, 1)};
}

Vec2 FeField::gradient(int t, const std::array<double, 3>& l, int c) const {
  const auto nodes = element_nodes(t);
  const auto g = ElementGeometry::of(*mesh_, t);
  Vec2 s{};
  if (degree_ == 1) {
    for (int i = 0; i < 3; ++i) s += at(nodes[i], c) * g.grad_l[i];
    return s;
  }
  const auto dn = p2_shape_grad(l, g);
  for (int i = 0; i < 6; ++i) s += at(nodes[i], c) * dn[i];
  return s;
}

Grad2 FeField::vector_gradient(int t, const std::array<double, 3>& l) const {
  return {gradient(t, l, 0), gradient(t, l, 1)};
}

// ---------------------------------------------------------------- DofMap

DofMap::DofMap(const TriMesh& mesh, const std::vector<char>& resting) {
  const int n = 2 * mesh.num_p2_nodes();
  std::vector<char> fixed(n, 0);
  if (!resting.empty()) {
    if (static_cast<int>(resting.size()) != mesh.num_triangles()) throw FemError("resting flags size mismatch");
    std::vector<char> active(mesh.num_p2_nodes(), 0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      if (resting[t]) continue;
      for (int node : mesh.p2_nodes(t)) active[node] = 1;
    }
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      if (!resting[t]) continue;
      for (int node : mesh.p2_nodes(t)) {
        if (!active[node]) fixed[2 * node] = fixed[2 * node + 1] = 1;
      }
    }
  }
  for (const auto& f : mesh.facets()) {
    if (f.tag != BoundaryTag::Dirichlet && f.tag != BoundaryTag::Roller) continue;
    const auto nodes = facet_p2_nodes(mesh, f);
    if (f.tag == BoundaryTag::Dirichlet) {
      for (int node : nodes) fixed[2 * node] = fixed[2 * node + 1] = 1;
      continue;
    }
    const Vec2 nrm = mesh.facet_outward_normal(f);
    if (std::abs(nrm.x) > 1.0 - 1e-9) {
      for (int node : nodes) fixed[2 * node] = 1;
    } else if (std::abs(nrm.y) > 1.0 - 1e-9) {
      for (int node : nodes) fixed[2 * node + 1] = 1;
    } else {
      throw FemError("roller facets must be axis aligned");
    }
  }
  reduced_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) {
      reduced_[i] = static_cast<int>(free_.size());
      free_.push_back(i);
    }
  }
}

Vector DofMap::restrict(const Vector& full) const {
  Vector r(num_free());
  for (int i = 0; i < num_free(); ++i) r[i] = full[free_[i]];
  return r;
}

Vector DofMap::expand(const Vector& red) const {
  Vector f = Vector::Zero(num_full());
  for (int i = 0; i < num_free(); ++i) f[free_[i]] = red[i];
  return f;
}

SparseMatrix DofMap::restrict(const SparseMatrix& full) const {
  Triplets trip;
  trip.reserve(full.nonZeros());
  for (int k = 0; k < full.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(full, k); it; ++it) {
      const int r = reduced_[it.row()], c = reduced_[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  SparseMatrix out(num_free(), num_free());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Triplets DofMap::restrict(const Triplets& full) const {
  Triplets out;
  out.reserve(full.size());
  for (const auto& t : full) {
    const int r = reduced_[t.row()], c = reduced_[t.col()];
    if (r >= 0 && c >= 0) out.emplace_back(r, c, t.value());
  }
  return out;
}

// ---------------------------------------------------------------- assembly

SparseMatrix assemble_elasticity(const TriMesh& mesh, const Material& mat, const std::vector<char>& skip) {
  if (!skip.empty() && static_cast<int>(skip.size()) != mesh.num_triangles()) {
    throw FemError("skip flags size mismatch");
  }
  const Lame lame = mat.lame();
  const auto& rule = triangle_rule(4);
  const int n = 2 * mesh.num_p2_nodes();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 144);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!skip.empty() && skip[t]) continue;
    const auto geo = ElementGeometry::of(mesh, t);
    const auto nodes = mesh.p2_nodes(t);
    Eigen::Matrix<double, 12, 12> ke = Eigen::Matrix<double, 12, 12>::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto g = p2_shape_grad(rule.points[q], geo);
      const double w = rule.weights[q] * geo.area;
      for (int i = 0; i < 6; ++i) {
        const double gi[2] = {g[i].x, g[i].y};
        for (int j = 0; j < 6; ++j) {
          const double gj[2] = {g[j].x, g[j].y};
          const double gg = dot(g[i], g[j]);
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              double v = lame.mu * gi[b] * gj[a] + lame.lambda * gi[a] * gj[b];
              if (a == b) v += lame.mu * gg;
              ke(2 * i + a, 2 * j + b) += w * v;
            }
          }
        }
      }
    }
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        trip.emplace_back(2 * nodes[i / 2] + i % 2, 2 * nodes[j / 2] + j % 2, ke(i, j));
      }
    }
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

Vector assemble_load(const TriMesh& mesh, const Loads& loads) {
  const int n = 2 * mesh.num_p2_nodes();
  Vector F = Vector::Zero(n);
  if (loads.body.x != 0.0 || loads.body.y != 0.0) {
    const auto& rule = triangle_rule(2);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double area = mesh.area(t);
      const auto nodes = mesh.p2_nodes(t);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto N = p2_shape(rule.points[q]);
        const double w = rule.weights[q] * area;
        for (int i = 0; i < 6; ++i) {
          F[2 * nodes[i]] += w * N[i] * loads.body.x;
          F[2 * nodes[i] + 1] += w * N[i] * loads.body.y;
        }
      }
    }
  }
  const auto& line = gauss_rule(3);
  for (const auto& f : mesh.facets()) {
    if (f.tag != BoundaryTag::Neumann) continue;
    const double len = mesh.facet_length(f);
    const auto nodes = facet_p2_nodes(mesh, f);
    for (std::size_t q = 0; q < line.points.size(); ++q) {
      const auto N = p2_edge_shape(line.points[q]);
      const double w = line.weights[q] * len;
      for (int i = 0; i < 3; ++i) {
        F[2 * nodes[i]] += w * N[i] * loads.traction.x;
        F[2 * nodes[i] + 1] += w * N[i] * loads.traction.y;
      }
    }
  }
  return F;
}

SparseMatrix assemble_p1_helmholtz(const TriMesh& mesh, double alpha) {
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto geo = ElementGeometry::of(mesh, t);
    const auto& tri = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double m = geo.area / 12.0 * (i == j ? 2.0 : 1.0);
        trip.emplace_back(tri[i], tri[j], geo.area * dot(geo.grad_l[i], geo.grad_l[j]) + alpha * m);
      }
    }
  }
  SparseMatrix A(mesh.num_vertices(), mesh.num_vertices());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SparseMatrix assemble_mass(const TriMesh& mesh, int degree) {
  const int n = degree == 1 ? mesh.num_vertices() : mesh.num_p2_nodes();
  Triplets trip;
  const auto& rule = triangle_rule(5);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(t);
    if (degree == 1) {
      const auto& tri = mesh.triangles()[t];
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
      }
      continue;
    }
    const auto nodes = mesh.p2_nodes(t);
    Eigen::Matrix<double, 6, 6> me = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto N = p2_shape(rule.points[q]);
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) me(i, j) += rule.weights[q] * area * N[i] * N[j];
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) trip.emplace_back(nodes[i], nodes[j], me(i, j));
    }
  }
  SparseMatrix M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

// ---------------------------------------------------------------- solver

struct LinearSolver::Impl {
  // Symmetric matrices (everything assembled here) use LDL^T with AMD
  // ordering; anything else goes through LU.
  std::optional<Eigen::SimplicialLDLT<SparseMatrix>> ldlt;
  std::optional<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu;
  Vector solve(const Vector& b) const { return ldlt ? Vector(ldlt->solve(b)) : Vector(lu->solve(b)); }
};

LinearSolver::LinearSolver(const SparseMatrix& A) { factorize(A); }
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;
LinearSolver::~LinearSolver() = default;

void LinearSolver::factorize(const SparseMatrix& A) {
  if (A.rows() != A.cols()) throw FemError("solve_sparse: matrix is not square");
  A_ = A;
  A_.makeCompressed();
  auto impl = std::make_unique<Impl>();
  const SparseMatrix At = A_.transpose();
  const double asym = (A_ - At).norm();
  if (asym <= 1e-13 * A_.norm()) {
    impl->ldlt.emplace(A_);
    if (impl->ldlt->info() != Eigen::Success) throw FemError("sparse factorization failed: zero pivot");
  } else {
    impl->lu.emplace();
    impl->lu->analyzePattern(A_);
    impl->lu->factorize(A_);
    if (impl->lu->info() != Eigen::Success) {
      throw FemError("sparse factorization failed: " + impl->lu->lastErrorMessage());
    }
  }
  lu_ = std::move(impl);
}

Vector LinearSolver::solve(const Vector& b) const {
  if (!lu_) throw FemError("solve before factorize");
  if (b.size() != A_.rows()) throw FemError("solve_sparse: rhs size mismatch");
  Vector x = lu_->solve(b);
  if (!x.allFinite()) {
    throw FemError("sparse solve failed (singular pivot)");
  }
  const double bn = b.norm();
  if (bn == 0.0) {
    last_residual_ = 0.0;
    return x;
  }
  Vector r = b - A_ * x;
  last_residual_ = r.norm() / bn;
  for (int it = 0; it < 3 && last_residual_ > 1e-13; ++it) {
    x += lu_->solve(r);
    r = b - A_ * x;
    last_residual_ = r.norm() / bn;
  }
  // thin cut members make K ill-conditioned; Newton tolerates 1e-6
  if (!(last_residual_ <= 1e-6)) {
    std::ostringstream msg;
    msg << "sparse solve inaccurate: relative residual " << std::setprecision(3) << last_residual_;
    throw FemError(msg.str());
  }
  return x;
}

Vector solve_sparse(const SparseMatrix& A, const Vector& b) { return LinearSolver(A).solve(b); }

void export_matrix_market(const SparseMatrix& A, const std::string& path) {
  if (!Eigen::saveMarket(A, path)) throw FemError("cannot write " + path);
}

}  // namespace contopt
