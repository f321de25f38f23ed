#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "contopt/config.hpp"
#include "contopt/io.hpp"

namespace fs = std::filesystem;
using namespace contopt;
using nlohmann::json;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNotConverged = 2;
constexpr int kBreakdown = 3;

struct Common {
  std::string config;
  std::string out = "out";
  bool trace = false;
  int snapshot_every = 0;
  long seed = 0;  // reserved: the pipeline is deterministic
  double grid_refine = 0.0;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.grid_refine > 0.0) {
    cfg.loop.grid_refine = c.grid_refine;
    cfg.validate();
  }
  return cfg;
}

std::string numbered(const std::string& stem, int i, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04d", i);
  return stem + buf + ext;
}

void write_state(const fs::path& dir, const std::string& stem, const ShapeState& s) {
  std::vector<VtkData> pd{vertex_data("u", s.solution.u)};
  write_vtk_mesh(dir / (stem + "_omega.vtk"), *s.omega, pd);
  write_vtk_facets(dir / (stem + "_boundary.vtk"), *s.omega);
  write_vtk_grid(dir / (stem + "_phi.vtk"), s.ls.phi);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

int cmd_optimize(const Common& c) {
  const RunConfig cfg = load(c);
  fs::create_directories(c.out);
  const fs::path out = c.out;
  save_config(cfg, out / "config.json");
  if (c.trace) fs::create_directories(out / "residuals");
  const auto t0 = std::chrono::steady_clock::now();
  Optimizer opt(cfg);
  int accepted = 0;
  auto observer = [&](const IterationRecord& r, const ShapeState& s) {
    std::printf("iter %3d.%d  J=%.8g  C=%.6g  Vol=%.5f  %s  step=%.3g  newton=%d  outer=%d%s%s\n", r.iteration,
                r.attempt, r.J, r.compliance, r.volume, r.accepted ? "accepted" : "rejected", r.step,
                r.newton_iterations, r.outer_iterations, r.note.empty() ? "" : "  ", r.note.c_str());
    std::fflush(stdout);
    if (!r.accepted) return;
    if (c.trace) write_residuals_csv(out / "residuals" / numbered("iter", r.iteration, ".csv"), s.solution.residual_history);
    if (c.snapshot_every > 0 && accepted % c.snapshot_every == 0) write_state(out, numbered("snap", r.iteration, ""), s);
    ++accepted;
  };
  const OptTrace trace = opt.run(observer);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_trace_csv(out / "trace.csv", trace);
  const ShapeState& s = opt.state();
  write_state(out, "final", s);
  write_zero_set_csv(out / "final_zero_set.csv", *s.omega);
  // descent direction at the final shape, on D_h
  try {
    const Direction d = opt.direction(s);
    write_vtk_mesh(out / "final_theta.vtk", *opt.background(), {vertex_data("theta", d.descent.theta)});
  } catch (const std::exception& e) {
    std::fprintf(stderr, "warning: final direction not written: %s\n", e.what());
  }
  const auto acc = trace.accepted();
  const int code = trace.converged ? kOk : kNotConverged;
  json summary = {{"name", cfg.name},
                  {"formulation", std::string(to_string(cfg.formulation))},
                  {"converged", trace.converged},
                  {"stopped", trace.stopped},
                  {"stop_reason", trace.stop_reason},
                  {"iterations", acc.empty() ? 0 : acc.back().iteration},
                  {"accepted_steps", static_cast<int>(acc.size()) - 1},
                  {"records", trace.records.size()},
                  {"initial_J", acc.front().J},
                  {"final_J", s.cost.J},
                  {"final_compliance", s.cost.compliance},
                  {"final_volume", s.cost.volume},
                  {"omega_vertices", s.omega->num_vertices()},
                  {"seed", c.seed},
                  {"seconds", seconds},
                  {"exit_code", code}};
  write_json(out / "summary.json", summary);
  std::printf("%s: J %.8g -> %.8g (%s)\n", cfg.name.c_str(), acc.front().J, s.cost.J,
              trace.converged ? "converged" : (trace.stopped ? trace.stop_reason.c_str() : "max_iter reached"));
  return code;
}

int cmd_solve(const Common& c) {
  const RunConfig cfg = load(c);
  fs::create_directories(c.out);
  const fs::path out = c.out;
  Optimizer opt(cfg);
  const ShapeState& s = opt.state();
  const auto& sol = s.solution;
  double pen_max = 0.0, lmin = 0.0, lmax = 0.0, lsum = 0.0, mmax = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < sol.points.size(); ++i) {
    const auto& cp = sol.points[i];
    pen_max = std::max(pen_max, normal_gap_residual(sol, cp));
    lmin = i == 0 ? sol.lambda[i] : std::min(lmin, sol.lambda[i]);
    lmax = i == 0 ? sol.lambda[i] : std::max(lmax, sol.lambda[i]);
    lsum += cp.weight * sol.lambda[i];
    wsum += cp.weight;
    mmax = std::max(mmax, std::abs(sol.mu[i]));
  }
  const double lmean = wsum > 0.0 ? lsum / wsum : 0.0;
  std::printf("solve %s (%s): newton=%d outer=%d residual=%.3e\n", cfg.name.c_str(),
              std::string(to_string(cfg.formulation)).c_str(), sol.newton_iterations, sol.outer_iterations,
              sol.final_residual);
  std::printf("contact points=%zu  max penetration=%.6e  lambda min/mean/max=%.6e/%.6e/%.6e  max|mu|=%.6e\n",
              sol.points.size(), pen_max, lmin, lmean, lmax, mmax);
  std::printf("J=%.10g  C=%.10g  Vol=%.10g\n", s.cost.J, s.cost.compliance, s.cost.volume);
  write_state(out, "solve", s);
  if (c.trace) write_residuals_csv(out / "residuals.csv", sol.residual_history);
  json summary = {{"name", cfg.name},
                  {"newton_iterations", sol.newton_iterations},
                  {"outer_iterations", sol.outer_iterations},
                  {"final_residual", sol.final_residual},
                  {"contact_points", sol.points.size()},
                  {"max_penetration", pen_max},
                  {"lambda_min", lmin},
                  {"lambda_mean", lmean},
                  {"lambda_max", lmax},
                  {"mu_abs_max", mmax},
                  {"J", s.cost.J},
                  {"compliance", s.cost.compliance},
                  {"volume", s.cost.volume}};
  write_json(out / "summary.json", summary);
  return kOk;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

int cmd_check_gradient(const Common& c, const std::string& ladder_text, double tol) {
  const RunConfig cfg = load(c);
  const auto ladder = parse_list(ladder_text);
  if (ladder.empty()) throw ConfigError("empty step ladder");
  Optimizer opt(cfg);
  const GradientCheck gc = check_gradient(opt, ladder);
  std::printf("analytic dJ = %.10e\n", gc.analytic);
  for (std::size_t i = 0; i < gc.steps.size(); ++i) {
    std::printf("step %.4g h: fd dJ = %.10e  relative error = %.3e\n", gc.steps[i], gc.fd[i], gc.rel_error[i]);
  }
  std::printf("best relative error = %.3e (tolerance %.3g)%s\n", gc.best_error, tol,
              gc.breakdown ? "  FD breakdown: error ladder not monotone" : "");
  fs::create_directories(c.out);
  json j = {{"analytic", gc.analytic}, {"steps", gc.steps}, {"fd", gc.fd}, {"relative_error", gc.rel_error},
            {"best_error", gc.best_error}, {"breakdown", gc.breakdown}};
  write_json(fs::path(c.out) / "gradient_check.json", j);
  if (gc.breakdown) return kBreakdown;
  return gc.best_error <= tol ? kOk : kError;
}

// Analytic level sets for the cut command.
struct PhiSpec {
  std::function<double(const Vec2&)> f;
  std::function<Vec2(const Vec2&)> grad;
};

PhiSpec parse_phi(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<double>{} : parse_list(spec.substr(colon + 1));
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw ConfigError("phi '" + kind + "' takes " + std::to_string(n) + " numbers");
  };
  if (kind == "circle") {
    need(3);
    const Vec2 c{args[0], args[1]};
    const double r = args[2];
    return {[=](const Vec2& x) { return norm(x - c) - r; },
            [=](const Vec2& x) { return (1.0 / std::max(norm(x - c), 1e-300)) * (x - c); }};
  }
  if (kind == "quartic") {
    need(0);
    return {[](const Vec2& x) { return 16 * std::pow(x.x - 0.5, 4) + std::pow(x.y - 0.5, 2) - 0.25; },
            [](const Vec2& x) { return Vec2{64 * std::pow(x.x - 0.5, 3), 2 * (x.y - 0.5)}; }};
  }
  if (kind == "halfplane") {
    need(4);
    const Vec2 p{args[0], args[1]};
    const Vec2 n = (1.0 / norm({args[2], args[3]})) * Vec2{args[2], args[3]};
    return {[=](const Vec2& x) { return dot(x - p, n); }, [=](const Vec2&) { return n; }};
  }
  if (kind == "constant") {
    need(1);
    const double v = args[0];
    return {[=](const Vec2&) { return v; }, [](const Vec2&) { return Vec2{}; }};
  }
  throw ConfigError("unknown phi '" + kind + "' (circle:cx,cy,r | quartic | halfplane:px,py,nx,ny | constant:v)");
}

int cmd_cut(const std::string& box_text, int n, const std::string& phi_text, int degree, double snap,
            const std::string& out_dir) {
  const auto box = parse_list(box_text);
  if (box.size() != 4 || !(box[2] > box[0]) || !(box[3] > box[1])) throw ConfigError("--box expects x0,y0,x1,y1");
  if (n < 1) throw ConfigError("--n must be positive");
  const PhiSpec phi = parse_phi(phi_text);
  const int ny = std::max(1, static_cast<int>(std::lround(n * (box[3] - box[1]) / (box[2] - box[0]))));
  auto bg = std::make_shared<const TriMesh>(build_rect_mesh({box[0], box[1]}, box[2] - box[0], box[3] - box[1], n, ny));
  const FeField phi_h = FeField::interpolate(bg, 2, phi.f);
  const CutResult cut = cut_mesh(phi_h, degree, snap);
  const TriMesh& om = *cut.omega;
  double dist = 0.0, length = 0.0;
  int iv = 0;
  for (const auto& f : om.facets()) {
    if (!f.interface) continue;
    length += om.facet_length(f);
    for (int v : {f.a, f.b}) {
      const Vec2 x = om.vertices()[v];
      const double g = norm(phi.grad(x));
      dist = std::max(dist, g > 0.0 ? std::abs(phi.f(x)) / g : std::abs(phi.f(x)));
      ++iv;
    }
  }
  std::printf("background: %d vertices, %d triangles\n", bg->num_vertices(), bg->num_triangles());
  std::printf("cut (P%d, snap %.3g): %d vertices (+%d added), %d triangles\n", degree, cut.snap_tol,
              cut.full_mesh->num_vertices(), cut.added_vertices, cut.full_mesh->num_triangles());
  std::printf("omega: %d vertices, %d triangles, area %.10g, interface length %.10g\n", om.num_vertices(),
              om.num_triangles(), om.total_area(), length);
  std::printf("max distance of interface vertices to {phi = 0}: %.3e\n", dist);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path out = out_dir;
    write_vtk_mesh(out / "cut_full.vtk", *cut.full_mesh);
    write_vtk_mesh(out / "cut_omega.vtk", om);
    write_vtk_facets(out / "cut_boundary.vtk", om);
    write_zero_set_csv(out / "cut_zero_set.csv", om);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set topology optimization of 2D elastic bodies in contact"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool with_loop) {
    sub->add_option("config", common.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_flag("--trace", common.trace, "write solver residual histories as CSV");
    sub->add_option("--seed", common.seed, "reserved (the pipeline is deterministic)");
    sub->add_option("--grid-refine", common.grid_refine, "level-set grid refinement h/dx (default from config, 2)")
        ->check(CLI::PositiveNumber);
    if (with_loop) {
      sub->add_option("--snapshot-every", common.snapshot_every, "VTK snapshot every N accepted iterations")
          ->check(CLI::NonNegativeNumber);
    }
  };
  auto* optimize = app.add_subcommand("optimize", "run the shape optimization loop");
  add_common(optimize, true);
  auto* solve_cmd = app.add_subcommand("solve", "single contact solve on the initial shape");
  add_common(solve_cmd, false);
  auto* check = app.add_subcommand("check-gradient", "shape derivative against central finite differences");
  add_common(check, false);
  std::string ladder = "1e-2,5e-3,2.5e-3";
  double tol = 0.05;
  check->add_option("--steps", ladder, "boundary motion ladder in mesh sizes (comma separated)");
  check->add_option("--tol", tol, "relative error tolerance");
  auto* cut = app.add_subcommand("cut", "cut a structured mesh along an analytic level set");
  std::string box = "0,0,1,1", phi = "quartic", cut_out;
  int n = 20, degree = 2;
  double snap = 0.05;
  cut->add_option("--box", box, "x0,y0,x1,y1");
  cut->add_option("--n", n, "cells along x");
  cut->add_option("--phi", phi, "circle:cx,cy,r | quartic | halfplane:px,py,nx,ny | constant:v");
  cut->add_option("--degree", degree, "interpolation degree of phi for cutting")->check(CLI::IsMember({1, 2}));
  cut->add_option("--snap", snap, "snapping tolerance (fraction of the edge)");
  cut->add_option("--out", cut_out, "output directory for VTK/CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }
  try {
    if (*optimize) return cmd_optimize(common);
    if (*solve_cmd) return cmd_solve(common);
    if (*check) return cmd_check_gradient(common, ladder, tol);
    if (*cut) return cmd_cut(box, n, phi, degree, snap, cut_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
