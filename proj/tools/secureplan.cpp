// secureplan: security-aware multi-agent planning from a scenario file.

#include <secureplan/secureplan.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace secureplan;

namespace {

struct Options {
  fs::path scenario;
  fs::path out = ".";
  std::string security;
  std::optional<double> beta;
  std::string path;
  unsigned threads = 0;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("secureplan");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SECUREPLAN_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("SECUREPLAN_LOG: unknown level '{}', keeping 'warn'", env);
    else
      spdlog::set_level(level);
  }
}

Scenario load(const Options& opt) {
  Scenario scn = load_scenario(opt.scenario);
  if (!opt.security.empty()) scn.mode = parse_security_mode(opt.security);
  if (opt.beta) scn.beta = *opt.beta;
  scn.validate();
  spdlog::info("scenario {}: {} regions, {} agents, mode {}", scn.name, scn.team.partition().size(),
               scn.team.num_agents(), to_string(scn.mode));
  return scn;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  spdlog::info("wrote {}", path.string());
}

int cmd_validate(const Options& opt) {
  const Scenario scn = load(opt);
  const auto& part = scn.team.partition();
  std::cout << "scenario " << scn.name << ": ok\n";
  std::cout << "regions " << part.size() << ", dimension " << part.dimension() << "\n";
  for (RegionId q = 0; q < part.size(); ++q) {
    std::cout << "  " << part.name(q) << ": " << part.region(q).num_halfspaces() << " facets, representative ("
              << part.representative(q).transpose() << "), neighbours";
    for (RegionId r = 0; r < part.size(); ++r)
      if (part.adjacent(q, r)) std::cout << ' ' << part.name(r);
    std::cout << "\n";
  }
  for (const auto& a : scn.team.agents()) {
    std::cout << "agent " << a.name << ": state " << a.state_dim() << ", input " << a.input_dim() << ", initial";
    for (auto q : a.initial) std::cout << ' ' << part.name(q);
    std::cout << "\n";
  }
  std::cout << "atoms";
  for (const auto& n : scn.team.alphabet().names()) std::cout << ' ' << n;
  std::cout << "\nsecurity " << to_string(scn.mode) << "\n";
  task_formula(scn);
  return 0;
}

int cmd_abstract(const Options& opt) {
  const Scenario scn = load(opt);
  const auto a = abstract(scn);
  const auto [pruned, cache] = prune_infeasible(a.secure, scn.team, scn.feasibility, opt.threads);
  nlohmann::json j;
  j["gwts_states"] = a.gwts.size();
  j["gwts_transitions"] = a.gwts.num_transitions();
  if (a.type_b) j["type_b_states"] = a.type_b->size();
  if (a.twin) j["twin_states"] = a.twin->size();
  j["secure_states"] = a.secure.size();
  j["secure_transitions"] = a.secure.num_transitions();
  j["pruned_transitions"] = pruned.num_transitions();
  j["pruned_edges_removed"] = a.secure.num_transitions() - pruned.num_transitions();
  j["moves_solved"] = cache.size();
  std::cout << j.dump(2) << "\n";
  return a.secure.initial().empty() ? static_cast<int>(ExitCode::SecurityInfeasible) : 0;
}

int cmd_plan(const Options& opt, bool everything) {
  const Scenario scn = load(opt);
  fs::create_directories(opt.out);
  const PlanRun run = run_plan(scn, opt.threads);
  spdlog::info("secure system {} states, pruned {} transitions, PBA {} states", run.abs.secure.size(),
               run.pruned.num_transitions(), run.pba.size());
  for (const auto& [mv, e] : run.cache.entries())
    if (!e.record.warning.empty())
      spdlog::warn("{} {}->{}: {}", scn.team.agent(mv.agent).name, scn.team.partition().name(mv.from),
                   scn.team.partition().name(mv.to), e.record.warning);
  write_file(opt.out / "report.json", report_json(scn, run).dump(2) + "\n");
  if (everything && run.nba.size()) write_file(opt.out / "nba.hoa", to_hoa(run.nba, scn.formula));
  if (run.status == ExitCode::SecurityInfeasible || run.status == ExitCode::TaskInfeasible) {
    spdlog::error("{}", run.message);
    return static_cast<int>(run.status);
  }
  write_file(opt.out / "plan.json", plan_json(scn, run).dump(2) + "\n");
  {
    std::ostringstream csv;
    write_trajectory_csv(csv, scn, run);
    write_file(opt.out / "trajectory.csv", csv.str());
  }
  const auto& part = scn.team.partition();
  const auto& p = *run.plan;
  std::cout << "J = " << p.J << " (prefix " << p.J_prefix << ", suffix " << p.J_suffix << ")\n";
  auto real = [&](const std::vector<std::size_t>& run_states) {
    return path_text(detail::real_tuples(run.pruned, system_states(run.pba, run_states), run.abs.twin_mode), part);
  };
  std::cout << "prefix " << real(p.prefix) << "\n";
  std::cout << "suffix " << real(p.suffix) << "\n";
  if (run.status != ExitCode::Ok) {
    spdlog::error("{}", run.message);
    std::cerr << verification_json(scn, *run.verification).dump(2) << "\n";
  }
  return static_cast<int>(run.status);
}

void print_type_a(const oracle::TypeAVerdict& a, const Partition& part) {
  if (a.secure)
    std::cout << "Type-A: secure (copy " << path_text(a.witness, part) << ")\n";
  else
    std::cout << "Type-A: violated (no copy path past step " << a.exhausted_at.value_or(0) << ")\n";
}

void print_type_b(const oracle::TypeBVerdict& b, const Scenario& scn) {
  if (b.secure) {
    std::cout << "Type-B: secure\n";
    return;
  }
  std::cout << "Type-B: violated";
  for (const auto& v : b.violations) std::cout << " (" << scn.team.agent(v.agent).name << " at step " << v.step << ")";
  std::cout << "\n";
}

int cmd_verify(const Options& opt) {
  const Scenario scn = load(opt);
  const auto& part = scn.team.partition();
  if (!opt.path.empty()) {
    const auto path = parse_path(opt.path, part, scn.team.num_agents());
    const auto gwts = build_gwts(scn.team, scn.wts);
    std::cout << "path " << path_text(path, part) << "\n";
    print_type_a(oracle::check_type_a(path, gwts, scn.team.security()), part);
    print_type_b(oracle::check_type_b(path, gwts, scn.team.security()), scn);
    return 0;
  }
  std::ifstream pj(opt.out / "plan.json"), csv(opt.out / "trajectory.csv");
  if (!pj || !csv) throw ConfigError("verify needs --path or plan.json and trajectory.csv in " + opt.out.string());
  const auto plan = nlohmann::json::parse(pj);
  const auto v = verify_artifacts(scn, plan, csv);
  std::cout << verification_json(scn, v).dump(2) << "\n";
  return v.ok() ? 0 : static_cast<int>(ExitCode::Internal);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Security-aware multi-agent LTL planning"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--security", opt.security, "override the security mode")
        ->check(CLI::IsMember({"none", "A", "B", "AB"}));
    sub->add_option("--beta", opt.beta, "override the prefix weight")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--threads", opt.threads, "feasibility worker threads (0: all cores)");
  };
  auto* validate = app.add_subcommand("validate", "check the scenario and report its geometry");
  auto* abstr = app.add_subcommand("abstract", "report the sizes of the abstraction stages");
  auto* plan = app.add_subcommand("plan", "plan and write plan.json, trajectory.csv and report.json");
  auto* verify = app.add_subcommand("verify", "check a path, or the plan written to --out");
  auto* all = app.add_subcommand("export-all", "plan and also write nba.hoa");
  for (auto* sub : {validate, abstr, plan, verify, all}) common(sub);
  verify->add_option("--path", opt.path, "path such as \"(D,E)->(E,B)\"");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::ScenarioError);
  }
  try {
    if (*validate) return cmd_validate(opt);
    if (*abstr) return cmd_abstract(opt);
    if (*plan) return cmd_plan(opt, false);
    if (*all) return cmd_plan(opt, true);
    if (*verify) return cmd_verify(opt);
  } catch (const ConsistencyError& e) {
    spdlog::error("internal consistency failure: {}", e.what());
    return static_cast<int>(ExitCode::Internal);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::ScenarioError);
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed plan.json: {}", e.what());
    return static_cast<int>(ExitCode::ScenarioError);
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return static_cast<int>(ExitCode::Internal);
  }
  return 0;
}
