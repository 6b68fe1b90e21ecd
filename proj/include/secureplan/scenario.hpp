#pragma once

// Scenario files: TOML with a workspace, a partition (explicit regions or
// axis cuts), agents, the task formula, the security mode and parameters.

#include <secureplan/abstraction.hpp>
#include <secureplan/feasibility.hpp>
#include <secureplan/geometry.hpp>

#include <toml.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace secureplan {

enum class SecurityMode { None, A, B, AB };

inline const char* to_string(SecurityMode m) {
  switch (m) {
    case SecurityMode::None: return "none";
    case SecurityMode::A: return "A";
    case SecurityMode::B: return "B";
    case SecurityMode::AB: return "AB";
  }
  return "?";
}

inline SecurityMode parse_security_mode(const std::string& s) {
  if (s == "none") return SecurityMode::None;
  if (s == "A") return SecurityMode::A;
  if (s == "B") return SecurityMode::B;
  if (s == "AB") return SecurityMode::AB;
  throw ConfigError("unknown security mode '" + s + "' (expected none, A, B or AB)");
}

struct Scenario {
  std::string name;
  Team team;
  std::string formula;
  SecurityMode mode = SecurityMode::AB;
  double beta = 0.5;
  FeasibilityParams feasibility;
  WtsOptions wts;
  int suffix_repeats = 2;
  double projection_tolerance = 1e-6;

  void validate() const {
    if (formula.empty()) throw ConfigError("task.formula is empty");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("params.beta must lie in [0, 1]");
    if (suffix_repeats < 1) throw ConfigError("params.suffix_repeats must be at least 1");
    if (!(wts.self_loop_weight > 0.0)) throw ConfigError("params.self_loop_weight must be positive");
    if (!(projection_tolerance >= 0.0)) throw ConfigError("params.projection_tolerance must be non-negative");
    feasibility.validate();
    if (mode == SecurityMode::A || mode == SecurityMode::AB) team.require_type_a_preconditions();
  }
};

namespace detail {

inline std::string where(const toml::node& n) {
  const auto& src = n.source();
  return src.begin ? " (line " + std::to_string(src.begin.line) + ")" : "";
}

inline double number(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(what + " must be a number" + where(n));
}

inline const toml::array& array(const toml::node& n, const std::string& what) {
  if (auto a = n.as_array()) return *a;
  throw ConfigError(what + " must be an array" + where(n));
}

inline const toml::table& table(const toml::node& n, const std::string& what) {
  if (auto t = n.as_table()) return *t;
  throw ConfigError(what + " must be a table" + where(n));
}

inline std::string string(const toml::node& n, const std::string& what) {
  if (auto v = n.value<std::string>()) return *v;
  throw ConfigError(what + " must be a string" + where(n));
}

inline const toml::node& required(const toml::table& t, const std::string& key, const std::string& ctx) {
  if (auto n = t.get(key)) return *n;
  throw ConfigError(ctx + ": missing key '" + key + "'");
}

inline Vector vector(const toml::node& n, const std::string& what) {
  const auto& a = array(n, what);
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(a[i], what);
  return v;
}

inline Matrix matrix(const toml::node& n, const std::string& what) {
  const auto& rows = array(n, what);
  if (rows.empty()) throw ConfigError(what + " has no rows" + where(n));
  Matrix m;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vector r = vector(rows[i], what);
    if (i == 0) m.resize(static_cast<Eigen::Index>(rows.size()), r.size());
    if (r.size() != m.cols()) throw StructuralError(what + ": ragged rows" + where(rows[i]));
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

inline std::vector<std::string> strings(const toml::node& n, const std::string& what) {
  std::vector<std::string> out;
  for (const auto& e : array(n, what)) out.push_back(string(e, what));
  return out;
}

// `box = [[lo, hi], ...]` or `H = [[...]]` with `g = [...]` (H x + g >= 0).
inline HPolytope polytope(const toml::table& t, const std::string& ctx) {
  if (auto b = t.get("box")) {
    const Matrix m = matrix(*b, ctx + ".box");
    if (m.cols() != 2) throw StructuralError(ctx + ".box rows must be [lo, hi]");
    return HPolytope::box(m.col(0), m.col(1));
  }
  if (t.get("H") || t.get("g")) {
    const Matrix H = matrix(required(t, "H", ctx), ctx + ".H");
    const Vector g = vector(required(t, "g", ctx), ctx + ".g");
    if (g.size() != H.rows()) throw StructuralError(ctx + ": H and g have different row counts");
    return HPolytope(H, g);
  }
  throw ConfigError(ctx + ": expected 'box' or 'H'/'g'");
}

inline Partition partition(const toml::table& root) {
  const HPolytope workspace = polytope(table(required(root, "workspace", "scenario"), "workspace"), "workspace");
  const auto* regions = root.get("region");
  const auto* cuts = root.get("partition");
  if (regions && cuts) throw ConfigError("give either [[region]] entries or a [partition] table, not both");
  if (regions) {
    std::vector<HPolytope> polys;
    std::vector<std::string> names;
    for (const auto& r : array(*regions, "region")) {
      const auto& t = table(r, "region");
      names.push_back(string(required(t, "name", "region"), "region.name"));
      polys.push_back(polytope(t, "region " + names.back()));
    }
    return Partition::create(workspace, std::move(polys), std::move(names));
  }
  if (!cuts) throw ConfigError("scenario has no partition: add [[region]] entries or a [partition] table");
  const auto& t = table(*cuts, "partition");
  std::vector<AxisCut> cs;
  for (const auto& c : array(required(t, "cuts", "partition"), "partition.cuts")) {
    const auto& ct = table(c, "partition.cuts entry");
    const double axis = number(required(ct, "axis", "cut"), "cut.axis");
    if (axis != std::floor(axis)) throw ConfigError("cut.axis must be an integer" + where(c));
    cs.push_back({static_cast<int>(axis), number(required(ct, "value", "cut"), "cut.value")});
  }
  std::vector<std::vector<std::size_t>> merges;
  if (auto m = t.get("merge"))
    for (const auto& g : array(*m, "partition.merge")) {
      std::vector<std::size_t> cells;
      for (const auto& c : array(g, "partition.merge group")) {
        const double v = number(c, "partition.merge cell");
        if (v < 0 || v != std::floor(v)) throw ConfigError("merge cells are non-negative integers" + where(c));
        cells.push_back(static_cast<std::size_t>(v));
      }
      merges.push_back(std::move(cells));
    }
  return axis_split(workspace, cs, merges);
}

inline RegionId region_id(const Partition& part, const std::string& name, const std::string& ctx) {
  if (auto r = part.find(name)) return *r;
  throw StructuralError(ctx + ": unknown region '" + name + "'");
}

inline AgentModel agent(const toml::table& t, const Partition& part, std::size_t index) {
  AgentModel a;
  a.name = t.get("name") ? string(*t.get("name"), "agent.name") : "agent" + std::to_string(index + 1);
  const std::string ctx = "agent " + a.name;
  const Eigen::Index n = part.dimension();
  a.A = matrix(required(t, "A", ctx), ctx + ".A");
  a.B = matrix(required(t, "B", ctx), ctx + ".B");
  a.b = t.get("b") ? vector(*t.get("b"), ctx + ".b") : Vector::Zero(n);
  if (auto u = t.get("input")) {
    a.input_set = polytope(table(*u, ctx + ".input"), ctx + ".input");
  } else {
    const Matrix m = matrix(required(t, "input_box", ctx), ctx + ".input_box");
    if (m.cols() != 2) throw StructuralError(ctx + ".input_box rows must be [lo, hi]");
    a.input_set = HPolytope::box(m.col(0), m.col(1));
  }
  const std::size_t p = part.size();
  for (const auto& q : strings(required(t, "initial", ctx), ctx + ".initial"))
    a.initial.push_back(region_id(part, q, ctx + ".initial"));
  a.secret.assign(p, false);
  if (auto s = t.get("secret"))
    for (const auto& q : strings(*s, ctx + ".secret")) a.secret[region_id(part, q, ctx + ".secret")] = true;
  a.observation.assign(p, "");
  const auto& obs = table(required(t, "observation", ctx), ctx + ".observation");
  for (const auto& [k, v] : obs) a.observation[region_id(part, std::string(k.str()), ctx + ".observation")] =
      string(v, ctx + ".observation");
  for (RegionId q = 0; q < p; ++q)
    if (a.observation[q].empty()) throw StructuralError(ctx + ".observation: region " + part.name(q) + " unmapped");
  a.labels.assign(p, {});
  if (auto l = t.get("labels"))
    for (const auto& [k, v] : table(*l, ctx + ".labels"))
      a.labels[region_id(part, std::string(k.str()), ctx + ".labels")] = strings(v, ctx + ".labels");
  for (const auto& labels : a.labels)
    for (const auto& atom : labels)
      if (atom.empty() || atom.find_first_of(" \t()!&|") != std::string::npos)
        throw ConfigError(ctx + ": invalid atom name '" + atom + "'");
  return a;
}

template <class T>
T optional_number(const toml::table& t, const char* key, T fallback) {
  if (auto n = t.get(key)) {
    const double v = number(*n, std::string("params.") + key);
    if constexpr (std::is_integral_v<T>) {
      if (v != std::floor(v)) throw ConfigError(std::string("params.") + key + " must be an integer" + where(*n));
    }
    return static_cast<T>(v);
  }
  return fallback;
}

inline Scenario scenario(const toml::table& root, const std::string& fallback_name) {
  Partition part = partition(root);
  std::vector<AgentModel> agents;
  const auto& list = array(required(root, "agent", "scenario"), "agent");
  for (std::size_t i = 0; i < list.size(); ++i) agents.push_back(agent(table(list[i], "agent"), part, i));
  const auto& task = table(required(root, "task", "scenario"), "task");
  std::vector<std::string> extra;
  if (auto a = task.get("atoms")) extra = strings(*a, "task.atoms");

  Scenario s{root.get("name") ? string(*root.get("name"), "name") : fallback_name,
             Team(std::move(part), std::move(agents), extra)};
  s.formula = string(required(task, "formula", "task"), "task.formula");
  if (auto m = task.get("security")) s.mode = parse_security_mode(string(*m, "task.security"));
  if (auto p = root.get("params")) {
    const auto& t = table(*p, "params");
    static const std::set<std::string> known = {"beta",    "t_f",         "N",        "k_c",
                                                "gamma",   "epsilon",     "self_loop_weight",
                                                "weight_rule", "suffix_repeats", "projection_tolerance"};
    for (const auto& [k, v] : t)
      if (!known.count(std::string(k.str()))) throw ConfigError("params: unknown key '" + std::string(k.str()) + "'");
    s.beta = optional_number(t, "beta", s.beta);
    s.feasibility.t_f = optional_number(t, "t_f", s.feasibility.t_f);
    s.feasibility.N = optional_number(t, "N", s.feasibility.N);
    s.feasibility.k_c = optional_number(t, "k_c", s.feasibility.k_c);
    s.feasibility.gamma = optional_number(t, "gamma", s.feasibility.gamma);
    s.feasibility.epsilon = optional_number(t, "epsilon", s.feasibility.epsilon);
    s.wts.self_loop_weight = optional_number(t, "self_loop_weight", s.wts.self_loop_weight);
    s.suffix_repeats = optional_number(t, "suffix_repeats", s.suffix_repeats);
    s.projection_tolerance = optional_number(t, "projection_tolerance", s.projection_tolerance);
    if (auto r = t.get("weight_rule")) {
      const auto rule = string(*r, "params.weight_rule");
      if (rule == "centroid") s.wts.rule = WeightRule::CentroidDistance;
      else if (rule == "unit") s.wts.rule = WeightRule::Unit;
      else throw ConfigError("params.weight_rule must be 'centroid' or 'unit'");
    }
  }
  s.validate();
  return s;
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text, const std::string& name = "scenario") {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ", column " << e.source().begin.column << ")";
    throw ConfigError(os.str());
  }
  return detail::scenario(root, name);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.stem().string());
}

}  // namespace secureplan
