#pragma once

// End-to-end runs over a scenario: abstraction, security restriction,
// feasibility pruning, planning, verification and export.

#include <secureplan/buchi.hpp>
#include <secureplan/feasibility.hpp>
#include <secureplan/oracle.hpp>
#include <secureplan/planner.hpp>
#include <secureplan/scenario.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>

namespace secureplan {

enum class ExitCode : int { Ok = 0, ScenarioError = 2, TaskInfeasible = 3, SecurityInfeasible = 4, Internal = 5 };

struct Abstraction {
  TransitionSystem gwts;
  std::optional<TransitionSystem> type_b, twin;
  TransitionSystem secure;  // planning system before pruning
  bool twin_mode = false;
};

inline Abstraction abstract(const Scenario& scn) {
  const auto& sec = scn.team.security();
  Abstraction a{build_gwts(scn.team, scn.wts), {}, {}, {}, false};
  switch (scn.mode) {
    case SecurityMode::None:
      a.secure = a.gwts;
      break;
    case SecurityMode::B:
      a.type_b = restrict_type_b(a.gwts, sec);
      a.secure = *a.type_b;
      break;
    case SecurityMode::A:
      a.twin = build_twin(a.gwts, sec);
      a.secure = restrict_secure_twin(*a.twin, sec);
      a.twin_mode = true;
      break;
    case SecurityMode::AB:
      a.type_b = restrict_type_b(a.gwts, sec);
      a.twin = build_twin(*a.type_b, sec);
      a.secure = restrict_secure_twin(*a.twin, sec);
      a.twin_mode = true;
      break;
  }
  return a;
}

/// |Q_g| <= |Q|^M, |X_s| <= |Q|^(2M), |S_P| <= |X_s| |S|.
struct SizeBounds {
  bool gwts = true, secure = true, product = true;
  bool ok() const { return gwts && secure && product; }
};

inline double ipow(std::size_t base, std::size_t exp) { return std::pow(static_cast<double>(base), static_cast<double>(exp)); }

inline SizeBounds check_bounds(const Team& team, const Abstraction& a, std::size_t nba_states, std::size_t pba_states) {
  const std::size_t Q = team.partition().size(), M = team.num_agents();
  SizeBounds b;
  b.gwts = static_cast<double>(a.gwts.size()) <= ipow(Q, M);
  b.secure = static_cast<double>(a.secure.size()) <= ipow(Q, a.twin_mode ? 2 * M : M);
  b.product = pba_states <= a.secure.size() * nba_states;
  return b;
}

struct StageTimes {
  double abstract = 0, prune = 0, translate = 0, product = 0, search = 0, assemble = 0, verify = 0;
};

struct PlanVerification {
  bool nba_accepts = false;
  bool formula_holds = false;  // direct lasso evaluation of the formula
  oracle::LassoVerdict lasso;
  bool security_ok = false;
  bool replay_matches = false;
  oracle::GlobalPath replay;  // destuttered real path of the replayed trajectory
  std::string replay_error;
  bool ok() const { return nba_accepts && formula_holds && security_ok && replay_matches; }
};

struct PlanRun {
  Abstraction abs;
  TransitionSystem pruned;
  SegmentCache cache;
  BuchiAutomaton nba;
  ProductAutomaton pba;
  std::optional<PrefixSuffixPlan> plan;
  std::optional<TrajectoryBundle> bundle;
  std::optional<PlanVerification> verification;
  ExitCode status = ExitCode::Ok;
  std::string message;
  StageTimes times;
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline std::vector<Symbol> labels_of(const TransitionSystem& sys, const std::vector<std::size_t>& states) {
  std::vector<Symbol> out;
  for (auto x : states) out.push_back(sys.label(x));
  return out;
}

inline oracle::GlobalPath real_tuples(const TransitionSystem& sys, const std::vector<std::size_t>& states, bool twin) {
  oracle::GlobalPath out;
  for (auto x : states) out.push_back(twin ? real_part(sys.tuple(x)) : sys.tuple(x));
  return out;
}

}  // namespace detail

inline ltl::Formula task_formula(const Scenario& scn) { return ltl::parse(scn.formula, scn.team.alphabet()); }

/// Checks a finished plan through routes independent of the planner: the
/// automaton and the formula on the lasso trace, the security oracle on the
/// real lasso, and the region sequence of the replayed trajectory.
inline PlanVerification verify_plan(const Scenario& scn, const PlanRun& run) {
  PlanVerification v;
  const auto& plan = *run.plan;
  const auto& sys = run.pruned;
  const auto pre = system_states(run.pba, plan.prefix), cyc = system_states(run.pba, plan.suffix);
  const auto lp = detail::labels_of(sys, pre), lc = detail::labels_of(sys, cyc);
  v.nba_accepts = accepts_lasso(run.nba, lp, lc);
  v.formula_holds = ltl::eval_on_lasso(task_formula(scn), lp, lc);

  const auto& sec = scn.team.security();
  const bool twin = run.abs.twin_mode;
  v.lasso = oracle::check_lasso(detail::real_tuples(sys, pre, twin), detail::real_tuples(sys, cyc, twin),
                                run.abs.gwts, sec, true);
  switch (scn.mode) {
    case SecurityMode::None: v.security_ok = true; break;
    case SecurityMode::B: v.security_ok = v.lasso.type_b.secure; break;
    case SecurityMode::A: v.security_ok = v.lasso.type_a == oracle::LassoTypeA::Secure; break;
    case SecurityMode::AB: v.security_ok = v.lasso.secure(); break;
  }

  if (run.bundle) {
    const auto& b = *run.bundle;
    const std::size_t M = scn.team.num_agents();
    std::vector<std::vector<Vector>> samples(M);
    for (std::size_t i = 0; i < M; ++i)
      for (Eigen::Index k = 0; k < b.x[i].cols(); ++k) samples[i].push_back(b.x[i].col(k));
    try {
      v.replay = oracle::destutter(oracle::trajectory_to_path(samples, scn.team.partition(), scn.projection_tolerance).path);
      v.replay_matches = v.replay == oracle::destutter(detail::real_tuples(sys, b.states, twin));
    } catch (const GeometryError& e) {
      v.replay_error = e.what();
    }
  }
  return v;
}

/// Runs abstraction through verification; status reports why a run stopped.
inline PlanRun run_plan(const Scenario& scn, unsigned threads = 0) {
  PlanRun run;
  detail::Stopwatch clock;
  run.abs = abstract(scn);
  run.times.abstract = clock.lap();
  if (run.abs.secure.initial().empty()) {
    run.status = ExitCode::SecurityInfeasible;
    run.message = "secure system has no initial state";
    return run;
  }
  auto [pruned, cache] = prune_infeasible(run.abs.secure, scn.team, scn.feasibility, threads);
  run.pruned = std::move(pruned);
  run.cache = std::move(cache);
  run.times.prune = clock.lap();
  run.nba = ltl_to_nba(task_formula(scn), scn.team.alphabet());
  run.times.translate = clock.lap();
  run.pba = build_pba(run.pruned, run.nba);
  run.times.product = clock.lap();
  run.plan = search_prefix_suffix(run.pba, scn.beta);
  run.times.search = clock.lap();
  if (!run.plan) {
    run.status = ExitCode::TaskInfeasible;
    run.message = "no accepting prefix-suffix plan";
    return run;
  }
  run.bundle = assemble_trajectory(run.pba, run.pruned, *run.plan, run.cache, scn.team, scn.feasibility,
                                   scn.suffix_repeats);
  run.times.assemble = clock.lap();
  run.verification = verify_plan(scn, run);
  run.times.verify = clock.lap();
  if (!run.verification->ok()) {
    run.status = ExitCode::Internal;
    run.message = "plan failed its own verification";
  }
  return run;
}

// ---------------------------------------------------------------------------
// Paths given as text, e.g. "(D,E)->(E,B)"

inline oracle::GlobalPath parse_path(const std::string& spec, const Partition& part, std::size_t agents) {
  static const std::regex tuple_re(R"(\s*\(([^()]*)\)\s*)");
  oracle::GlobalPath path;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::smatch m;
    const std::string rest = spec.substr(pos);
    if (!std::regex_search(rest, m, tuple_re, std::regex_constants::match_continuous))
      throw ParseError("expected '(region, ...)'", pos);
    Tuple t;
    std::stringstream items(m[1].str());
    std::string item;
    while (std::getline(items, item, ',')) {
      const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
      const std::string name = b == std::string::npos ? "" : item.substr(b, e - b + 1);
      auto q = part.find(name);
      if (!q) throw ConfigError("unknown region '" + name + "' in path");
      t.push_back(*q);
    }
    if (t.size() != agents) throw ConfigError("path state has " + std::to_string(t.size()) + " regions, expected " +
                                              std::to_string(agents));
    path.push_back(std::move(t));
    pos += static_cast<std::size_t>(m.length(0));
    if (pos == spec.size()) break;
    if (spec.compare(pos, 2, "->") != 0) throw ParseError("expected '->'", pos);
    pos += 2;
  }
  if (path.empty()) throw ConfigError("empty path");
  return path;
}

inline std::string tuple_text(const Tuple& t, const Partition& part) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + part.name(t[i]);
  return s + ")";
}

inline std::string path_text(const oracle::GlobalPath& p, const Partition& part) {
  std::string s;
  for (std::size_t k = 0; k < p.size(); ++k) s += (k ? "->" : "") + tuple_text(p[k], part);
  return s;
}

// ---------------------------------------------------------------------------
// Verification of exported artifacts

namespace detail {

inline Tuple names_to_tuple(const nlohmann::json& names, const Partition& part) {
  Tuple t;
  for (const auto& n : names) {
    auto q = part.find(n.get<std::string>());
    if (!q) throw ConsistencyError("plan names unknown region " + n.get<std::string>());
    t.push_back(*q);
  }
  return t;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Re-derives the plan's verdicts from plan.json and trajectory.csv alone:
/// labels from the scenario, the automaton from the formula, security from
/// the oracle, and the region sequence from the sampled real trajectories.
inline PlanVerification verify_artifacts(const Scenario& scn, const nlohmann::json& plan, std::istream& csv) {
  const auto& part = scn.team.partition();
  const std::size_t M = scn.team.num_agents();
  if (!plan.contains("plan") || plan["plan"].is_null()) throw ConsistencyError("plan.json holds no plan");
  oracle::GlobalPath prefix, cycle, states;
  for (const auto& st : plan["plan"]["prefix"]) prefix.push_back(detail::names_to_tuple(st["real"], part));
  for (const auto& st : plan["plan"]["suffix"]) cycle.push_back(detail::names_to_tuple(st["real"], part));
  for (const auto& st : plan["trajectory"]["states"]) states.push_back(detail::names_to_tuple(st["real"], part));
  if (cycle.empty()) throw ConsistencyError("plan.json has an empty suffix");

  PlanVerification v;
  std::vector<Symbol> lp, lc;
  for (const auto& t : prefix) lp.push_back(scn.team.label(t));
  for (const auto& t : cycle) lc.push_back(scn.team.label(t));
  const auto f = task_formula(scn);
  v.nba_accepts = accepts_lasso(ltl_to_nba(f, scn.team.alphabet()), lp, lc);
  v.formula_holds = ltl::eval_on_lasso(f, lp, lc);
  const auto gwts = build_gwts(scn.team, scn.wts);
  const auto& sec = scn.team.security();
  v.lasso = oracle::check_lasso(prefix, cycle, gwts, sec, true);
  switch (scn.mode) {
    case SecurityMode::None: v.security_ok = true; break;
    case SecurityMode::B: v.security_ok = v.lasso.type_b.secure; break;
    case SecurityMode::A: v.security_ok = v.lasso.type_a == oracle::LassoTypeA::Secure; break;
    case SecurityMode::AB: v.security_ok = v.lasso.secure(); break;
  }

  std::string line;
  if (!std::getline(csv, line)) throw ConsistencyError("trajectory.csv is empty");
  const auto header = detail::split_csv(line);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConsistencyError("trajectory.csv lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_agent = column("agent_id"), c_role = column("role");
  std::vector<std::size_t> c_x;
  for (Eigen::Index i = 0; i < part.dimension(); ++i) c_x.push_back(column("x" + std::to_string(i + 1)));
  std::vector<std::vector<Vector>> samples(M);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) throw ConsistencyError("trajectory.csv row has the wrong width");
    if (cells[c_role] != "real") continue;
    const std::size_t agent = std::stoul(cells[c_agent]);
    if (agent < 1 || agent > M) throw ConsistencyError("trajectory.csv names an unknown agent");
    Vector x(part.dimension());
    for (std::size_t i = 0; i < c_x.size(); ++i) x(static_cast<Eigen::Index>(i)) = std::stod(cells[c_x[i]]);
    samples[agent - 1].push_back(std::move(x));
  }
  try {
    v.replay = oracle::destutter(oracle::trajectory_to_path(samples, part, scn.projection_tolerance).path);
    v.replay_matches = v.replay == oracle::destutter(states);
  } catch (const Error& e) {
    v.replay_error = e.what();
  }
  return v;
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

// Polygon vertices in counter-clockwise order in the plane; other
// dimensions keep the enumeration order.
inline std::vector<Vector> ordered_vertices(const HPolytope& poly) {
  auto v = enumerate_vertices(poly);
  if (poly.dimension() != 2 || v.empty()) return v;
  Vector c = Vector::Zero(2);
  for (const auto& p : v) c += p;
  c /= static_cast<double>(v.size());
  std::sort(v.begin(), v.end(), [&](const Vector& a, const Vector& b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  return v;
}

inline nlohmann::json vec_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline nlohmann::json state_json(const Scenario& scn, const TransitionSystem& sys, std::size_t x, bool twin) {
  const auto& part = scn.team.partition();
  const Tuple& t = sys.tuple(x);
  auto names = [&](const Tuple& tt) {
    nlohmann::json j = nlohmann::json::array();
    for (auto q : tt) j.push_back(part.name(q));
    return j;
  };
  nlohmann::json j;
  j["real"] = names(twin ? real_part(t) : t);
  j["copy"] = twin ? names(copy_part(t)) : nlohmann::json(nullptr);
  j["label"] = scn.team.alphabet().atoms_of(sys.label(x));
  return j;
}

}  // namespace detail

/// Workspace, regions and agent roles shared by every export.
inline nlohmann::json scenario_json(const Scenario& scn) {
  const auto& part = scn.team.partition();
  nlohmann::json j;
  j["name"] = scn.name;
  j["security"] = to_string(scn.mode);
  j["formula"] = scn.formula;
  j["workspace"] = nlohmann::json::array();
  for (const auto& v : detail::ordered_vertices(part.workspace())) j["workspace"].push_back(detail::vec_json(v));
  j["regions"] = nlohmann::json::array();
  for (RegionId q = 0; q < part.size(); ++q) {
    nlohmann::json r;
    r["id"] = q;
    r["name"] = part.name(q);
    r["vertices"] = nlohmann::json::array();
    for (const auto& v : detail::ordered_vertices(part.region(q))) r["vertices"].push_back(detail::vec_json(v));
    r["representative"] = detail::vec_json(part.representative(q));
    j["regions"].push_back(std::move(r));
  }
  j["agents"] = nlohmann::json::array();
  for (const auto& a : scn.team.agents()) {
    nlohmann::json aj;
    aj["name"] = a.name;
    aj["initial"] = nlohmann::json::array();
    for (auto q : a.initial) aj["initial"].push_back(part.name(q));
    aj["secret"] = nlohmann::json::array();
    aj["observation"] = nlohmann::json::object();
    aj["labels"] = nlohmann::json::object();
    for (RegionId q = 0; q < part.size(); ++q) {
      if (a.secret[q]) aj["secret"].push_back(part.name(q));
      aj["observation"][part.name(q)] = a.observation[q];
      if (!a.labels[q].empty()) aj["labels"][part.name(q)] = a.labels[q];
    }
    j["agents"].push_back(std::move(aj));
  }
  return j;
}

/// Deterministic plan description (no timings).
inline nlohmann::json plan_json(const Scenario& scn, const PlanRun& run) {
  nlohmann::json j;
  j["scenario"] = scenario_json(scn);
  if (!run.plan) {
    j["plan"] = nullptr;
    return j;
  }
  const auto& plan = *run.plan;
  const bool twin = run.abs.twin_mode;
  const auto pre = system_states(run.pba, plan.prefix), cyc = system_states(run.pba, plan.suffix);
  nlohmann::json p;
  p["prefix"] = nlohmann::json::array();
  p["suffix"] = nlohmann::json::array();
  for (auto x : pre) p["prefix"].push_back(detail::state_json(scn, run.pruned, x, twin));
  for (auto x : cyc) p["suffix"].push_back(detail::state_json(scn, run.pruned, x, twin));
  // weights of prefix edges, the edge into the cycle, and the cycle edges
  // including the closing one
  std::vector<std::size_t> lead = plan.prefix, loop = plan.suffix;
  lead.push_back(plan.suffix.front());
  loop.push_back(plan.suffix.front());
  p["prefix_weights"] = nlohmann::json::array();
  p["suffix_weights"] = nlohmann::json::array();
  for (std::size_t k = 0; k + 1 < lead.size(); ++k) p["prefix_weights"].push_back(*pba_weight(run.pba, lead[k], lead[k + 1]));
  for (std::size_t k = 0; k + 1 < loop.size(); ++k) p["suffix_weights"].push_back(*pba_weight(run.pba, loop[k], loop[k + 1]));
  p["J_prefix"] = plan.J_prefix;
  p["J_suffix"] = plan.J_suffix;
  p["J"] = plan.J;
  p["beta"] = plan.beta;
  j["plan"] = std::move(p);

  if (run.bundle) {
    const auto& b = *run.bundle;
    nlohmann::json t;
    t["dt"] = b.dt;
    t["steps_per_transition"] = b.steps;
    t["transitions"] = b.transitions();
    t["suffix_repeats"] = scn.suffix_repeats;
    t["cycle_start_transition"] = b.prefix_transitions;
    t["cycle_start_time"] = b.dt * b.steps * static_cast<double>(b.prefix_transitions);
    t["cycle_duration"] = b.dt * b.steps * static_cast<double>(plan.suffix.size());
    t["duration"] = b.duration();
    t["control_effort"] = b.objective;
    t["states"] = nlohmann::json::array();
    for (auto x : b.states) t["states"].push_back(detail::state_json(scn, run.pruned, x, twin));
    j["trajectory"] = std::move(t);
  }
  nlohmann::json sizes;
  sizes["system_states"] = run.pruned.size();
  sizes["system_transitions"] = run.pruned.num_transitions();
  sizes["nba_states"] = run.nba.size();
  sizes["pba_states"] = run.pba.size();
  sizes["pba_transitions"] = run.pba.num_transitions();
  j["sizes"] = std::move(sizes);
  return j;
}

/// One row per sample and role: time, agent_id, role, x..., u..., region_id,
/// observation, is_secret. The input of the final sample is left empty.
inline void write_trajectory_csv(std::ostream& os, const Scenario& scn, const PlanRun& run) {
  const auto& b = *run.bundle;
  const auto& part = scn.team.partition();
  const auto& sys = run.pruned;
  const std::size_t M = scn.team.num_agents();
  const Eigen::Index n = part.dimension();
  Eigen::Index m = 0;
  for (const auto& u : b.u) m = std::max(m, u.rows());
  os << "time,agent_id,role";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  os << ",region_id,observation,is_secret\n";
  os << std::setprecision(17);
  const int kc = scn.feasibility.crossing();
  for (std::size_t r = 0; r < b.x.size(); ++r) {
    const std::size_t agent = r % M;
    const auto& ag = scn.team.agent(agent);
    for (Eigen::Index k = 0; k < b.x[r].cols(); ++k) {
      // region from the plan: the source region until the crossing sample
      const auto seg = std::min<std::size_t>(static_cast<std::size_t>(k / b.steps), b.transitions() - 1);
      const auto local = k - static_cast<Eigen::Index>(seg) * b.steps;
      const std::size_t x = local < kc ? b.states[seg] : b.states[seg + 1];
      const RegionId q = sys.tuple(x)[r];
      os << static_cast<double>(k) * b.dt << ',' << agent + 1 << ',' << (r < M ? "real" : "copy");
      for (Eigen::Index i = 0; i < n; ++i) os << ',' << b.x[r](i, k);
      for (Eigen::Index i = 0; i < m; ++i) {
        os << ',';
        if (k < b.u[r].cols() && i < b.u[r].rows()) os << b.u[r](i, k);
      }
      os << ',' << part.name(q) << ',' << ag.observation[q] << ',' << (ag.secret[q] ? "true" : "false") << '\n';
    }
  }
}

inline nlohmann::json verification_json(const Scenario& scn, const PlanVerification& v) {
  const auto& part = scn.team.partition();
  nlohmann::json j;
  j["nba_accepts"] = v.nba_accepts;
  j["formula_holds"] = v.formula_holds;
  j["type_a"] = oracle::to_string(v.lasso.type_a);
  j["type_b"] = v.lasso.type_b.secure ? "secure" : "insecure";
  j["security_ok"] = v.security_ok;
  j["witness_prefix"] = path_text(v.lasso.witness_prefix, part);
  j["witness_cycle"] = path_text(v.lasso.witness_cycle, part);
  j["replay_matches"] = v.replay_matches;
  j["replay"] = path_text(v.replay, part);
  if (!v.replay_error.empty()) j["replay_error"] = v.replay_error;
  j["ok"] = v.ok();
  return j;
}

/// Sizes, solver statistics, bounds, verification and stage timings.
inline nlohmann::json report_json(const Scenario& scn, const PlanRun& run) {
  nlohmann::json j;
  j["scenario"] = scn.name;
  j["security"] = to_string(scn.mode);
  j["status"] = static_cast<int>(run.status);
  if (!run.message.empty()) j["message"] = run.message;
  nlohmann::json s;
  s["regions"] = scn.team.partition().size();
  s["agents"] = scn.team.num_agents();
  s["gwts_states"] = run.abs.gwts.size();
  s["gwts_transitions"] = run.abs.gwts.num_transitions();
  if (run.abs.type_b) s["type_b_states"] = run.abs.type_b->size();
  if (run.abs.twin) s["twin_states"] = run.abs.twin->size();
  s["secure_states"] = run.abs.secure.size();
  s["secure_transitions"] = run.abs.secure.num_transitions();
  s["pruned_transitions"] = run.pruned.num_transitions();
  s["pruned_edges_removed"] = run.abs.secure.num_transitions() - run.pruned.num_transitions();
  s["nba_states"] = run.nba.size();
  s["pba_states"] = run.pba.size();
  s["pba_transitions"] = run.pba.num_transitions();
  j["sizes"] = std::move(s);
  const auto bounds = check_bounds(scn.team, run.abs, run.nba.size(), run.pba.size());
  j["bounds"] = {{"gwts", bounds.gwts}, {"secure", bounds.secure}, {"product", bounds.product}};
  nlohmann::json q;
  std::map<std::string, int> status;
  int retried = 0;
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& [mv, e] : run.cache.entries()) {
    ++status[qp::to_string(e.record.status)];
    retried += e.record.retried;
    if (!e.record.warning.empty())
      warnings.push_back(scn.team.agent(mv.agent).name + " " + scn.team.partition().name(mv.from) + "->" +
                         scn.team.partition().name(mv.to) + ": " + e.record.warning);
  }
  q["moves"] = run.cache.size();
  q["status"] = status;
  q["retried"] = retried;
  q["warnings"] = std::move(warnings);
  j["feasibility"] = std::move(q);
  if (run.plan) j["J"] = run.plan->J;
  if (run.verification) j["verification"] = verification_json(scn, *run.verification);
  const auto& t = run.times;
  j["timings_s"] = {{"abstract", t.abstract}, {"prune", t.prune},   {"translate", t.translate},
                    {"product", t.product},   {"search", t.search}, {"assemble", t.assemble},
                    {"verify", t.verify}};
  return j;
}

}  // namespace secureplan
