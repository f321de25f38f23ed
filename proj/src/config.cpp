#include "contopt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace contopt {

using nlohmann::json;

std::string_view to_string(Formulation f) { return f == Formulation::Penalty ? "penalty" : "alm"; }
std::string_view to_string(ContactMode m) { return m == ContactMode::Pinned ? "pinned" : "free"; }

namespace {

// Object reader that tracks its JSON pointer and which keys were consumed.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }
  ~Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  [[noreturn]] void fail(const std::string& what) const { fail_at(path_, what); }
  [[noreturn]] static void fail_at(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  std::string at(const std::string& key) const { return path_ + "/" + key; }
  const json& raw(const std::string& key) const { return j_.at(key); }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) fail_at(at(key), "expected a number");
    out = v.get<double>();
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail_at(at(key), "expected an integer");
    out = v.get<int>();
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) fail_at(at(key), "expected true or false");
    out = v.get<bool>();
  }
  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) fail_at(at(key), "expected a string");
    out = v.get<std::string>();
  }
  void vec2(const std::string& key, Vec2& out) {
    if (!has(key)) return;
    out = read_vec2(raw(key), at(key));
  }
  static Vec2 read_vec2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail_at(path, "expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }
  template <class E, class F>
  void choice(const std::string& key, E& out, std::initializer_list<E> options, F name) {
    if (!has(key)) return;
    const json& v = raw(key);
    std::string all;
    for (E o : options) {
      if (v.is_string() && v.get<std::string>() == name(o)) {
        out = o;
        return;
      }
      all += (all.empty() ? "" : ", ") + std::string(name(o));
    }
    fail_at(at(key), "expected one of: " + all);
  }

  // Call after reading every known key.
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail_at(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec(const Vec2& v) { return json::array({v.x, v.y}); }

void read_domain(Node& n, DomainSpec& d) {
  n.vec2("origin", d.origin);
  n.number("width", d.width);
  n.number("height", d.height);
  n.integer("nx", d.nx);
  n.integer("ny", d.ny);
  if (n.has("regions")) {
    const json& arr = n.raw("regions");
    if (!arr.is_array()) Node::fail_at(n.at("regions"), "expected an array");
    d.regions.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Node r(arr[i], n.at("regions") + "/" + std::to_string(i));
      BoundaryRegion reg;
      if (!r.has("from") || !r.has("to") || !r.has("tag")) r.fail("region needs from, to and tag");
      r.vec2("from", reg.a);
      r.vec2("to", reg.b);
      r.choice("tag", reg.tag,
               {BoundaryTag::Free, BoundaryTag::Dirichlet, BoundaryTag::Neumann, BoundaryTag::Contact,
                BoundaryTag::Roller},
               [](BoundaryTag t) { return to_string(t); });
      r.done();
      d.regions.push_back(reg);
    }
  }
  n.done();
}

std::string_view kind_name(InitialShape::Kind k) {
  switch (k) {
    case InitialShape::Kind::Box: return "box";
    case InitialShape::Kind::Disk: return "disk";
    case InitialShape::Kind::HalfPlane: return "half_plane";
  }
  return "box";
}

Hole read_hole(const json& j, const std::string& path) {
  Node h(j, path);
  Hole out;
  if (!h.has("center") || !h.has("radius")) h.fail("hole needs center and radius");
  h.vec2("center", out.center);
  h.number("radius", out.radius);
  h.done();
  return out;
}

void read_initial(Node& n, InitialShape& s) {
  n.choice("kind", s.kind, {InitialShape::Kind::Box, InitialShape::Kind::Disk, InitialShape::Kind::HalfPlane},
           kind_name);
  n.vec2("center", s.center);
  n.number("radius", s.radius);
  n.vec2("normal", s.normal);
  if (n.has("holes")) {
    const json& arr = n.raw("holes");
    if (!arr.is_array()) Node::fail_at(n.at("holes"), "expected an array");
    s.holes.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) s.holes.push_back(read_hole(arr[i], n.at("holes") + "/" + std::to_string(i)));
  }
  if (n.has("hole_grid")) {
    Node g(n.raw("hole_grid"), n.at("hole_grid"));
    g.integer("cols", s.hole_cols);
    g.integer("rows", s.hole_rows);
    g.number("radius", s.hole_radius);
    g.done();
  }
  n.done();
}

void read_obstacle(Node& n, RigidBody& body) {
  std::string kind = "half_plane";
  n.string("kind", kind);
  try {
    if (kind == "half_plane") {
      HalfPlane hp;
      n.vec2("point", hp.point);
      n.vec2("normal", hp.normal);
      n.done();
      body = RigidBody(hp);
    } else if (kind == "disk") {
      Disk d;
      n.vec2("center", d.center);
      n.number("radius", d.radius);
      n.done();
      body = RigidBody(d);
    } else {
      Node::fail_at(n.at("kind"), "expected one of: half_plane, disk");
    }
  } catch (const ContactError& e) {
    n.fail(e.what());
  }
}

void read_contact(Node& n, RunConfig& c) {
  n.boolean("enabled", c.contact);
  n.choice("mode", c.contact_mode, {ContactMode::Pinned, ContactMode::Free},
           [](ContactMode m) { return to_string(m); });
  if (n.has("band")) {
    const json& v = n.raw("band");
    if (v.is_null()) {
      c.contact_band = std::numeric_limits<double>::infinity();
    } else {
      n.number("band", c.contact_band);
    }
  }
  n.choice("formulation", c.formulation, {Formulation::Penalty, Formulation::Alm},
           [](Formulation f) { return to_string(f); });
  if (n.has("obstacle")) {
    Node o(n.raw("obstacle"), n.at("obstacle"));
    read_obstacle(o, c.body);
  }
  auto& p = c.params;
  n.number("rho", p.rho);
  n.number("gamma1", p.gamma1);
  n.number("gamma2", p.gamma2);
  n.number("s", p.s);
  n.number("friction", p.friction);
  n.boolean("frictionless", p.frictionless);
  n.number("tangential_stabilization", p.tangential_stabilization);
  n.done();
}

void read_loop(Node& n, LoopControls& l) {
  n.integer("max_iter", l.max_iter);
  n.number("beta", l.beta);
  n.integer("warmup", l.warmup);
  n.number("c_step", l.c_step);
  n.number("c_growth", l.c_growth);
  n.integer("max_halvings", l.max_halvings);
  n.number("tol_J", l.tol_J);
  n.integer("tol_window", l.tol_window);
  n.number("grid_refine", l.grid_refine);
  n.integer("cut_degree", l.cut_degree);
  n.number("snap_tol", l.snap_tol);
  n.number("alpha_reg", l.alpha_reg);
  n.number("cfl", l.cfl);
  n.integer("reinit_every", l.reinit_every);
  n.integer("reinit_steps", l.reinit_steps);
  n.number("kink_tol", l.kink_tol);
  n.done();
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  Node root(doc, "");
  if (!root.has("spec_version")) root.fail("missing spec_version");
  const json& ver = root.raw("spec_version");
  if (!ver.is_number_integer() || ver.get<int>() != kConfigVersion) {
    Node::fail_at("/spec_version", "unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }
  RunConfig c;
  root.string("name", c.name);
  auto section = [&](const char* key, auto&& reader) {
    if (root.has(key)) {
      Node n(root.raw(key), root.at(key));
      reader(n);
    }
  };
  section("domain", [&](Node& n) { read_domain(n, c.domain); });
  section("initial_shape", [&](Node& n) { read_initial(n, c.init); });
  section("material", [&](Node& n) {
    n.number("E", c.material.E);
    n.number("nu", c.material.nu);
    n.done();
  });
  section("loads", [&](Node& n) {
    n.vec2("body_force", c.loads.body);
    n.vec2("traction", c.loads.traction);
    n.done();
  });
  section("contact", [&](Node& n) { read_contact(n, c); });
  section("solver", [&](Node& n) {
    if (n.has("newton")) {
      Node s(n.raw("newton"), n.at("newton"));
      s.number("tol", c.newton.tol);
      s.integer("max_iter", c.newton.max_iter);
      s.integer("max_halvings", c.newton.max_halvings);
      s.done();
    }
    if (n.has("alm")) {
      Node s(n.raw("alm"), n.at("alm"));
      s.number("tol", c.alm.tol);
      s.integer("max_outer", c.alm.max_outer);
      s.done();
    }
    n.done();
  });
  section("cost", [&](Node& n) {
    n.number("alpha1", c.cost.alpha1);
    n.number("alpha2", c.cost.alpha2);
    n.done();
  });
  section("loop", [&](Node& n) { read_loop(n, c.loop); });
  root.done();
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json doc;
  doc["spec_version"] = kConfigVersion;
  doc["name"] = c.name;
  json regions = json::array();
  for (const auto& r : c.domain.regions) {
    regions.push_back({{"from", vec(r.a)}, {"to", vec(r.b)}, {"tag", std::string(to_string(r.tag))}});
  }
  doc["domain"] = {{"origin", vec(c.domain.origin)}, {"width", c.domain.width}, {"height", c.domain.height},
                   {"nx", c.domain.nx}, {"ny", c.domain.ny}, {"regions", regions}};
  json holes = json::array();
  for (const auto& h : c.init.holes) holes.push_back({{"center", vec(h.center)}, {"radius", h.radius}});
  doc["initial_shape"] = {{"kind", std::string(kind_name(c.init.kind))},
                          {"center", vec(c.init.center)},
                          {"radius", c.init.radius},
                          {"normal", vec(c.init.normal)},
                          {"holes", holes},
                          {"hole_grid", {{"cols", c.init.hole_cols}, {"rows", c.init.hole_rows}, {"radius", c.init.hole_radius}}}};
  doc["material"] = {{"E", c.material.E}, {"nu", c.material.nu}};
  doc["loads"] = {{"body_force", vec(c.loads.body)}, {"traction", vec(c.loads.traction)}};
  json obstacle = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HalfPlane>) {
          return {{"kind", "half_plane"}, {"point", vec(s.point)}, {"normal", vec(s.normal)}};
        } else {
          return {{"kind", "disk"}, {"center", vec(s.center)}, {"radius", s.radius}};
        }
      },
      c.body.shape());
  const auto& p = c.params;
  doc["contact"] = {{"enabled", c.contact},
                    {"mode", std::string(to_string(c.contact_mode))},
                    {"band", std::isfinite(c.contact_band) ? json(c.contact_band) : json(nullptr)},
                    {"formulation", std::string(to_string(c.formulation))},
                    {"obstacle", obstacle},
                    {"rho", p.rho},
                    {"gamma1", p.gamma1},
                    {"gamma2", p.gamma2},
                    {"s", p.s},
                    {"friction", p.friction},
                    {"frictionless", p.frictionless},
                    {"tangential_stabilization", p.tangential_stabilization}};
  doc["solver"] = {
      {"newton", {{"tol", c.newton.tol}, {"max_iter", c.newton.max_iter}, {"max_halvings", c.newton.max_halvings}}},
      {"alm", {{"tol", c.alm.tol}, {"max_outer", c.alm.max_outer}}}};
  doc["cost"] = {{"alpha1", c.cost.alpha1}, {"alpha2", c.cost.alpha2}};
  const auto& l = c.loop;
  doc["loop"] = {{"max_iter", l.max_iter},         {"beta", l.beta},
                 {"warmup", l.warmup},             {"c_step", l.c_step},
                 {"c_growth", l.c_growth},         {"max_halvings", l.max_halvings},
                 {"tol_J", l.tol_J},               {"tol_window", l.tol_window},
                 {"grid_refine", l.grid_refine},   {"cut_degree", l.cut_degree},
                 {"snap_tol", l.snap_tol},         {"alpha_reg", l.alpha_reg},
                 {"cfl", l.cfl},                   {"reinit_every", l.reinit_every},
                 {"reinit_steps", l.reinit_steps}, {"kink_tol", l.kink_tol}};
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace contopt
