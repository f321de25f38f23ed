#include "contopt/cutter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace contopt {

namespace {

// Roots this close to an endpoint are numerical noise of a zero endpoint.
constexpr double kEndpointEps = 1e-10;
// Smallest snapping tolerance used while cutting, so that no kept root can
// sit within kEndpointEps of a non-zero vertex.
constexpr double kMinSnap = 1e-9;

std::vector<double> raw_roots(std::span<const double> values, int degree);

int sign_of(double v) { return v < 0.0 ? -1 : (v > 0.0 ? 1 : 0); }

struct PolyPoint {
  int id;
  Vec2 pos;
  int sign;
};

double polygon_area(const std::vector<PolyPoint>& pts, const std::vector<int>& idx) {
  double a = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    a += cross(pts[idx[i]].pos, pts[idx[(i + 1) % idx.size()]].pos);
  }
  return 0.5 * a;
}

// Ear clipping of a convex polygon that may contain collinear points. Only
// ears of strictly positive area are cut, and never one that would leave a
// flat remainder. Among valid ears the best-shaped one is taken.
void triangulate(const std::vector<PolyPoint>& pts, std::vector<int> poly, double tol,
                 std::vector<std::array<int, 3>>& out) {
  while (poly.size() > 3) {
    const std::size_t n = poly.size();
    int best = -1;
    double best_q = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = pts[poly[(i + n - 1) % n]].pos, b = pts[poly[i]].pos,
                 c = pts[poly[(i + 1) % n]].pos;
      const double area = signed_area(a, b, c);
      if (area <= tol) continue;
      std::vector<int> rest = poly;
      rest.erase(rest.begin() + static_cast<long>(i));
      if (polygon_area(pts, rest) <= tol) continue;
      const double per2 = std::pow(norm(b - a) + norm(c - b) + norm(a - c), 2);
      const double q = area / per2;
      if (q > best_q + 1e-14) {
        best_q = q;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) throw CutError("cannot triangulate cut polygon");
    const std::size_t i = static_cast<std::size_t>(best);
    out.push_back({poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]});
    poly.erase(poly.begin() + best);
  }
  if (polygon_area(pts, poly) > tol) out.push_back({poly[0], poly[1], poly[2]});
}

struct CutAttempt {
  std::vector<Vec2> vertices;
  std::vector<Triangle> triangles;
  std::vector<int> parent;
  std::vector<int> sign;
  std::vector<VertexOrigin> provenance;
  std::vector<Facet> tagged;
  int added = 0;
};

// Edge values in canonical orientation (min -> max): a, m, b.
std::array<double, 3> edge_values(const TriMesh& mesh, const Vector& vals, int e) {
  const auto& ed = mesh.edges()[e];
  return {vals[ed[0]], vals[mesh.num_vertices() + e], vals[ed[1]]};
}

std::vector<double> roots_or_interface(const std::array<double, 3>& v, int degree) {
  if (v[0] == 0.0 && v[2] == 0.0 && (degree == 1 || v[1] == 0.0)) return {};
  return edge_roots(v, degree, 0.0);
}

void average_midpoints(const TriMesh& mesh, Vector& vals) {
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges()[e];
    vals[mesh.num_vertices() + e] = 0.5 * (vals[ed[0]] + vals[ed[1]]);
  }
}

Vector snap_values(const TriMesh& mesh, Vector vals, int degree, double tol) {
  bool changed = true;
  while (changed) {
    changed = false;
    if (degree == 1) average_midpoints(mesh, vals);
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const auto& ed = mesh.edges()[e];
      const auto v = edge_values(mesh, vals, e);
      if (v[0] == 0.0 && v[2] == 0.0 && (degree == 1 || v[1] == 0.0)) continue;
      for (double r : raw_roots(v, degree)) {
        if (r < -tol || r > 1.0 + tol) continue;
        if (r < tol && vals[ed[0]] != 0.0) {
          vals[ed[0]] = 0.0;
          changed = true;
        } else if (r > 1.0 - tol && vals[ed[1]] != 0.0) {
          vals[ed[1]] = 0.0;
          changed = true;
        }
      }
    }
  }
  if (degree == 1) average_midpoints(mesh, vals);
  return vals;
}

CutAttempt cut_once(const TriMesh& mesh, const Vector& vals, int degree) {
  CutAttempt out;
  const int nv = mesh.num_vertices();
  out.vertices = mesh.vertices();
  out.provenance.resize(nv);
  for (int v = 0; v < nv; ++v) out.provenance[v].parent_vertex = v;

  // Root vertices per edge, ascending in the canonical parameter.
  std::vector<std::vector<std::pair<double, int>>> edge_pts(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges()[e];
    for (double r : roots_or_interface(edge_values(mesh, vals, e), degree)) {
      const int id = static_cast<int>(out.vertices.size());
      out.vertices.push_back(lerp(mesh.vertices()[ed[0]], mesh.vertices()[ed[1]], r));
      out.provenance.push_back({-1, e, r});
      edge_pts[e].push_back({r, id});
    }
  }
  out.added = static_cast<int>(out.vertices.size()) - nv;

  auto along = [&](int a, int b) {
    const int e = mesh.find_edge(a, b);
    std::vector<int> ids;
    for (const auto& [r, id] : edge_pts[e]) ids.push_back(id);
    if (a > b) std::reverse(ids.begin(), ids.end());
    return ids;
  };

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    std::vector<PolyPoint> poly;
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      poly.push_back({a, mesh.vertices()[a], sign_of(vals[a])});
      for (int id : along(a, b)) poly.push_back({id, out.vertices[id], 0});
    }
    std::vector<int> zeros;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      if (poly[i].sign == 0) zeros.push_back(static_cast<int>(i));
    }
    auto emit = [&](const std::array<int, 3>& ids, int region_sign) {
      out.triangles.push_back({poly[ids[0]].id, poly[ids[1]].id, poly[ids[2]].id});
      out.parent.push_back(t);
      out.sign.push_back(region_sign);
    };
    const double tol = 1e-12 * mesh.area(t);
    if (poly.size() == 3 && zeros.empty()) {
      emit({0, 1, 2}, poly[0].sign);
      continue;
    }
    const int n = static_cast<int>(poly.size());
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    if (zeros.size() <= 1) {
      int s = 1;
      for (const auto& p : poly) {
        if (p.sign != 0) s = p.sign;
      }
      std::vector<std::array<int, 3>> tris;
      triangulate(poly, all, tol, tris);
      for (const auto& tr : tris) emit(tr, s);
      continue;
    }
    // Sign at the centre of the zero points decides which arcs are capped.
    Vec2 centre{};
    for (int z : zeros) centre += poly[z].pos;
    centre *= 1.0 / static_cast<double>(zeros.size());
    const auto l = barycentric(mesh, t, centre);
    const auto N = p2_shape(l);
    const auto nodes = mesh.p2_nodes(t);
    double vc = 0.0;
    for (int i = 0; i < 6; ++i) vc += N[i] * vals[nodes[i]];
    const int sc = vc > 0.0 ? 1 : -1;

    const int k = static_cast<int>(zeros.size());
    std::vector<int> central;
    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i < k; ++i) {
      const int z0 = zeros[i], z1 = zeros[(i + 1) % k];
      std::vector<int> inner;
      for (int j = (z0 + 1) % n; j != z1; j = (j + 1) % n) inner.push_back(j);
      central.push_back(z0);
      const int arc_sign = inner.empty() ? 0 : poly[inner.front()].sign;
      if (arc_sign != 0 && arc_sign != sc) {
        std::vector<int> cap{z0};
        cap.insert(cap.end(), inner.begin(), inner.end());
        cap.push_back(z1);
        std::vector<std::array<int, 3>> ct;
        triangulate(poly, cap, tol, ct);
        for (const auto& tr : ct) emit(tr, arc_sign);
      } else {
        central.insert(central.end(), inner.begin(), inner.end());
      }
    }
    if (central.size() >= 3 && polygon_area(poly, central) > tol) {
      triangulate(poly, central, tol, tris);
      for (const auto& tr : tris) emit(tr, sc);
    }
  }

  // Background boundary facets split at their roots keep their tags.
  for (const auto& f : mesh.facets()) {
    std::vector<int> chain{f.a};
    for (int id : along(f.a, f.b)) chain.push_back(id);
    chain.push_back(f.b);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      Facet piece = f;
      piece.a = chain[i];
      piece.b = chain[i + 1];
      out.tagged.push_back(piece);
    }
  }
  return out;
}

}  // namespace

namespace {

// All real sign-changing roots of the edge interpolant, unfiltered.
std::vector<double> raw_roots(std::span<const double> values, int degree) {
  if (degree != 1 && degree != 2) throw CutError("edge_roots: degree must be 1 or 2");
  if (values.size() != 2 && values.size() != 3) throw CutError("edge_roots: need 2 or 3 values");
  if (degree == 2 && values.size() != 3) throw CutError("edge_roots: degree 2 needs a midpoint");
  const double va = values.front(), vb = values.back();
  const double vm = degree == 2 ? values[1] : 0.5 * (va + vb);
  if (va == 0.0 && vb == 0.0 && vm == 0.0) throw CutError("degenerate edge on interface");
  // p(t) = c + b t + a t^2
  const double a = 2.0 * va + 2.0 * vb - 4.0 * vm;
  const double b = -3.0 * va - vb + 4.0 * vm;
  const double c = va;
  const double scale = std::max({std::abs(va), std::abs(vb), std::abs(vm)});
  std::vector<double> roots;
  if (std::abs(a) <= 1e-14 * scale) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc > 0.0) {
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      roots.push_back(q / a);
      if (q != 0.0) roots.push_back(c / q);
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

std::vector<double> edge_roots(std::span<const double> values, int degree, double snap_tol) {
  std::vector<double> kept;
  const double lo = std::max(snap_tol, kEndpointEps);
  for (double r : raw_roots(values, degree)) {
    if (r > lo && r < 1.0 - lo) kept.push_back(r);
  }
  if (kept.size() > 2) throw CutError("more than two roots on an edge");
  return kept;
}

CutResult cut_mesh(const FeField& phi_h, int degree, double snap_tol) {
  if (phi_h.degree() != 2 || phi_h.components() != 1) {
    throw CutError("cut_mesh expects a scalar P2 level set");
  }
  if (degree != 1 && degree != 2) throw CutError("cut degree must be 1 or 2");
  if (snap_tol < 0.0 || snap_tol > 0.2) throw CutError("snap_tol must lie in [0, 0.2]");
  const TriMesh& mesh = phi_h.mesh();

  double tol = snap_tol;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const Vector vals = snap_values(mesh, phi_h.values(), degree, std::max(tol, kMinSnap));
    try {
      CutAttempt cut = cut_once(mesh, vals, degree);
      CutResult res;
      auto full = std::make_shared<const TriMesh>(std::move(cut.vertices), std::move(cut.triangles),
                                                  cut.tagged);
      std::vector<int> omega_tris;
      for (int t = 0; t < full->num_triangles(); ++t) {
        if (cut.sign[t] < 0) omega_tris.push_back(t);
      }
      if (omega_tris.empty()) throw CutError("empty shape: phi_h > 0 everywhere");
      res.omega = std::make_shared<const TriMesh>(extract_submesh(*full, omega_tris, &res.omega_vertices));
      for (int t : omega_tris) res.omega_parent.push_back(cut.parent[t]);
      for (const auto& f : res.omega->facets()) {
        if (f.interface) res.interface_facets.push_back(f);
      }
      res.full_mesh = std::move(full);
      res.full_parent = std::move(cut.parent);
      res.provenance = std::move(cut.provenance);
      res.phi = FeField(phi_h.mesh_ptr(), 2, 1, vals);
      res.added_vertices = cut.added;
      res.snap_tol = tol;
      return res;
    } catch (const MeshError&) {
      tol = tol > 0.0 ? std::min(2.0 * tol, 0.2) : 1e-3;
    }
  }
  throw CutError("cut produced an invalid mesh after snap retries");
}

TriMesh inherit_tags(const CutResult& cut, ContactMode mode) {
  std::vector<Facet> facets = cut.omega->facets();
  bool dirichlet = false, contact = false;
  for (auto& f : facets) {
    if (f.interface) f.tag = mode == ContactMode::Free ? BoundaryTag::Contact : BoundaryTag::Free;
    dirichlet = dirichlet || f.tag == BoundaryTag::Dirichlet || f.tag == BoundaryTag::Roller;
    contact = contact || (f.tag == BoundaryTag::Contact && !f.interface);
  }
  if (!dirichlet && !(mode == ContactMode::Pinned && contact)) {
    throw CutError("inadmissible shape: no Dirichlet boundary left");
  }
  return cut.omega->with_facets(std::move(facets));
}

}  // namespace contopt
