#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbm/bench.hpp"
#include "cbm/coalition.hpp"
#include "cbm/instance_io.hpp"
#include "cbm/manifest.hpp"
#include "cbm/milp.hpp"
#include "cbm/tcp_transport.hpp"

#ifndef CBM_BUILD_ID
#define CBM_BUILD_ID "unknown"
#endif

namespace cbm::cli {

namespace fs = std::filesystem;

// Stable process exit codes.
enum Exit : int {
  kOk = 0,
  kRuntimeError = 1,
  kUsageError = 2,  // bad flags, missing or unreadable input
  kInfeasible = 3,  // final best violates a constraint or leaves tasks unassigned
  kSizeCap = 4,     // LP export above the task cap
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedInstance {
  ProblemInstance inst;
  std::string path;
  std::string format;  // native | cordeau
  std::string name;    // file stem
  std::string hash;
};

// `.json` or a leading '{' means native; anything else is read as Cordeau.
inline std::string detect_format(const std::string& path, const std::string& text) {
  if (fs::path(path).extension() == ".json") return "native";
  const auto first = text.find_first_not_of(" \t\r\n");
  return first != std::string::npos && text[first] == '{' ? "native" : "cordeau";
}

inline LoadedInstance load_instance(const std::string& path, const std::string& format) {
  if (path.empty()) throw UsageError("--instance is required");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw UsageError("instance file not found: " + path);
  LoadedInstance li;
  li.path = path;
  li.name = fs::path(path).stem().string();
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  li.hash = hex64(fnv1a64(text));
  li.format = format == "auto" ? detect_format(path, text) : format;
  try {
    li.inst = li.format == "native" ? read_instance_string(text) : cordeau_to_instance(parse_cordeau(text));
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  const auto issues = validate_instance(li.inst);
  if (!issues.empty()) {
    std::string msg = path + ": invalid instance";
    for (const auto& v : issues) msg += "\n  " + v.field + ": " + v.rule;
    throw UsageError(msg);
  }
  return li;
}

// BKS for `name` from `table` (explicit) or a bks.csv beside the instance.
inline std::optional<double> lookup_bks(const std::string& table, const LoadedInstance& li) {
  std::string path = table;
  if (path.empty()) {
    const auto beside = fs::path(li.path).parent_path() / "bks.csv";
    if (!fs::is_regular_file(beside)) return std::nullopt;
    path = beside.string();
  }
  std::map<std::string, double> bks;
  try {
    bks = parse_bks_table(read_text_file(path));
  } catch (const ParseError& e) {
    throw UsageError(std::string("BKS table: ") + e.what());
  }
  const auto it = bks.find(li.name);
  if (it == bks.end()) return std::nullopt;
  return it->second;
}

// Solver flags shared by solve and bench.
struct SolverFlags {
  std::size_t agents = 1;
  std::size_t pop_size = AgentConfig{}.pop_size;
  std::uint64_t seed = 0;
  double time_limit = 0.0;
  std::size_t patience = AgentConfig{}.patience;
  double rho = AgentConfig{}.rho;
  std::vector<double> eta;
  std::string scheduler = "lockstep";
  std::uint64_t max_iterations = 0;

  void add_to(CLI::App& app) {
    app.add_option("--agents", agents, "coalition size")->check(CLI::PositiveNumber);
    app.add_option("--pop-size", pop_size, "population per agent")->check(CLI::Range(2, 1 << 20));
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--time-limit", time_limit, "wall-clock limit in seconds, 0 = none")->check(CLI::NonNegativeNumber);
    app.add_option("--patience", patience, "iterations without improvement before stopping")
        ->check(CLI::PositiveNumber);
    app.add_option("--rho", rho, "mimetism rate")->check(CLI::Range(0.0, 1.0));
    app.add_option("--eta", eta, "learning factors a,b,c")->delimiter(',')->expected(3);
    app.add_option("--scheduler", scheduler, "in-process scheduler")
        ->check(CLI::IsMember({"lockstep", "threaded"}));
    app.add_option("--max-iterations", max_iterations, "per-agent iteration cap, 0 = none");
  }

  CoalitionConfig config() const {
    CoalitionConfig c;
    c.n_agents = agents;
    c.agent.pop_size = pop_size;
    c.agent.seed = seed;
    c.agent.time_limit = time_limit;
    c.agent.patience = patience;
    c.agent.rho = rho;
    if (!eta.empty()) {
      if (eta.size() != 3) throw UsageError("--eta takes exactly three values a,b,c");
      c.agent.eta = {eta[0], eta[1], eta[2]};
    }
    c.scheduler = scheduler == "threaded" ? Scheduler::threaded : Scheduler::lockstep;
    c.max_iterations = max_iterations;
    try {
      c.validate();
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct Outcome {
  Genotype best;
  Objectives objectives;
  Schedule schedule;
  ProblemInstance solved;  // merged instance for TCP runs
  double runtime_s = 0.0;
  std::uint64_t iterations = 0;
  bool timed_out = false;
  bool agents_agree = true;
};

inline Outcome solve_inproc(const ProblemInstance& inst, const CoalitionConfig& cfg) {
  const auto r = run_coalition(Problem(inst), cfg);
  return {r.best, r.objectives, r.schedule, inst, r.runtime_s, r.iterations, r.timed_out, r.agents_agree()};
}

// Final-best problems: feasibility violations, deadlock or unassigned tasks.
inline std::vector<std::string> final_violations(const Outcome& o) {
  std::vector<std::string> out;
  const Problem p(o.solved);
  for (const auto& v : check_feasible(o.best, p)) {
    std::string s = to_string(v.kind);
    for (auto i : v.indices) s += " " + std::to_string(i);
    char buf[64];
    std::snprintf(buf, sizeof buf, " (magnitude %.6g)", v.magnitude);
    out.push_back(s + buf);
  }
  std::vector<char> seen(p.num_tasks(), 0);
  for (const auto& route : o.best.routes)
    for (Task t : route)
      if (t < seen.size()) seen[t] = 1;
  for (Task t = 0; t < seen.size(); ++t)
    if (!seen[t]) out.push_back("unassigned " + std::to_string(t));
  return out;
}

inline nlohmann::json objectives_json(const LoadedInstance& li, const Outcome& o) {
  const Problem p(o.solved);
  nlohmann::json j = {{"instance", li.name},
                      {"objective_mode", to_string(o.objectives.mode)},
                      {"makespan", o.objectives.makespan},
                      {"cost", o.objectives.cost},
                      {"tasks_assigned", o.best.assigned_count()},
                      {"tasks", p.num_tasks()},
                      {"routes", o.best.routes},
                      {"agents_agree", o.agents_agree}};
  if (li.format == "cordeau") j["route_distance"] = route_distance(o.best, p);
  return j;
}

// Value reported in the CSV `best` column: route distance for Cordeau
// instances (their BKS excludes service demand), γ otherwise.
inline double reported_best(const LoadedInstance& li, const Outcome& o) {
  return li.format == "cordeau" ? route_distance(o.best, Problem(o.solved)) : o.objectives.cost;
}

inline std::string now_utc() { return iso8601_utc(std::chrono::system_clock::now()); }

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
}

inline RunManifest base_manifest(const std::string& command, const LoadedInstance* li) {
  RunManifest m;
  m.command = command;
  if (li) {
    m.instance_path = fs::absolute(li->path).lexically_normal().string();
    m.instance_format = li->format;
    m.instance_hash = li->hash;
  }
  m.build_id = CBM_BUILD_ID;
  m.started_at = now_utc();
  return m;
}

inline void write_manifest(const std::string& dir, RunManifest& m) {
  m.finished_at = now_utc();
  write_text_file((fs::path(dir) / "manifest.json").string(), m.to_json().dump(2) + "\n");
}

struct SolveArgs {
  std::string instance, format = "auto", out_dir = ".", bks, from_manifest;
  std::string transport = "inproc", listen;
  std::vector<std::string> peers;
  int agent_id = -1;
  SolverFlags solver;
};

inline int cmd_solve(SolveArgs a, std::ostream& out, std::ostream& err) {
  CoalitionConfig cfg;
  std::string expected_hash;
  if (!a.from_manifest.empty()) {
    RunManifest src;
    try {
      src = RunManifest::from_json(nlohmann::json::parse(read_text_file(a.from_manifest)));
    } catch (const std::exception& e) {
      throw UsageError("manifest " + a.from_manifest + ": " + e.what());
    }
    if (src.command != "solve") throw UsageError("manifest was written by '" + src.command + "', not solve");
    if (src.transport != "inproc") throw UsageError("only in-process manifests can be re-run");
    a.instance = src.instance_path;
    a.format = src.instance_format;
    cfg = src.coalition;
    if (src.extra.contains("bks_table")) a.bks = src.extra["bks_table"].get<std::string>();
    expected_hash = src.instance_hash;
  } else {
    cfg = a.solver.config();
  }
  const auto li = load_instance(a.instance, a.format);
  if (!expected_hash.empty() && li.hash != expected_hash)
    err << "warning: " << a.instance << " changed since the manifest was written\n";
  const auto bks = lookup_bks(a.bks, li);
  auto manifest = base_manifest("solve", &li);
  manifest.transport = a.transport;

  Outcome o;
  if (a.transport == "inproc") {
    o = solve_inproc(li.inst, cfg);
  } else {
    if (a.listen.empty() || a.peers.empty()) throw UsageError("tcp transport needs --listen and --peers");
    if (a.agent_id < 0) throw UsageError("tcp transport needs --agent-id");
    std::vector<Endpoint> eps;
    try {
      for (const auto& s : a.peers) eps.push_back(parse_endpoint(s));
      (void)parse_endpoint(a.listen);
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    if (static_cast<std::size_t>(a.agent_id) >= eps.size())
      throw UsageError("--agent-id must index into --peers");
    cfg.n_agents = eps.size();
    manifest.listen = a.listen;
    manifest.peers = a.peers;
    const auto self = static_cast<AgentId>(a.agent_id);
    TcpTransport t(self, eps.size(), parse_endpoint(a.listen));
    t.connect_peers(eps);
    auto r = run_distributed_agent(li.inst, cfg, t, self);
    t.close();
    const Problem merged(r.merged);
    auto dec = decode_semi_active(r.best.genotype, merged);
    o.best = r.best.genotype;
    o.objectives = r.best.objectives;
    if (dec) o.schedule = dec.schedule();
    o.solved = r.merged;
    o.runtime_s = r.runtime_s;
    o.iterations = r.report.stats.iterations;
    o.timed_out = r.timed_out;
  }
  manifest.coalition = cfg;

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  write_text_file((dir / "schedule.txt").string(), gantt_text(o.schedule));
  const auto obj = objectives_json(li, o);
  write_text_file((dir / "objectives.json").string(), obj.dump(2) + "\n");
  BenchmarkResult row{li.name, cfg.agent.seed, reported_best(li, o), bks, o.runtime_s, o.iterations};
  write_text_file((dir / "result.csv").string(), std::string(kResultCsvHeader) + "\n" + csv_row(row) + "\n");

  const auto violations = final_violations(o);
  manifest.extra = {{"makespan", o.objectives.makespan},
                    {"cost", o.objectives.cost},
                    {"runtime_s", o.runtime_s},
                    {"iterations", o.iterations},
                    {"timed_out", o.timed_out},
                    {"feasible", violations.empty()}};
  if (!a.bks.empty()) manifest.extra["bks_table"] = fs::absolute(a.bks).lexically_normal().string();
  if (bks) manifest.extra["bks"] = *bks;
  write_manifest(a.out_dir, manifest);

  out << csv_row(row) << "\n";
  if (!violations.empty()) {
    std::string dump;
    for (const auto& v : violations) dump += v + "\n";
    write_text_file((dir / "violations.txt").string(), dump);
    err << "final best is infeasible:\n" << dump;
    return kInfeasible;
  }
  return kOk;
}

struct GenerateArgs {
  std::size_t tasks = 0, robots = 0, batch = 1;
  double prec = 0.2;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

inline std::string generated_name(const GenerateArgs& a, std::uint64_t seed) {
  return "xd_n" + std::to_string(a.tasks) + "_m" + std::to_string(a.robots) + "_s" + std::to_string(seed) + ".json";
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream&) {
  if (a.tasks == 0 || a.robots == 0) throw UsageError("--tasks and --robots must be positive");
  if (!(a.prec >= 0.0 && a.prec <= 1.0)) throw UsageError("--prec must lie in [0, 1]");
  ensure_dir(a.out_dir);
  auto manifest = base_manifest("generate", nullptr);
  manifest.coalition.agent.seed = a.seed;
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t k = 0; k < a.batch; ++k) {
    const std::uint64_t seed = a.seed + k;
    Rng rng(seed);
    ProblemInstance inst;
    try {
      inst = generate_xd_instance(a.tasks, a.robots, a.prec, rng);
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    const auto path = (fs::path(a.out_dir) / generated_name(a, seed)).string();
    const auto text = write_instance_string(inst);
    write_text_file(path, text);
    files.push_back({{"path", path}, {"seed", seed}, {"fnv1a64", hex64(fnv1a64(text))}});
    out << path << "\n";
  }
  manifest.extra = {{"tasks", a.tasks}, {"robots", a.robots}, {"prec", a.prec}, {"files", files}};
  write_manifest(a.out_dir, manifest);
  return kOk;
}

struct BenchArgs {
  std::vector<std::string> inputs;  // directories and/or instance files
  std::string format = "auto", out_dir = ".", bks;
  std::size_t seeds = 5;
  SolverFlags solver;
};

struct BenchSummary {
  std::string instance;
  std::size_t runs = 0;
  double best = 0.0, mean = 0.0;
  std::optional<double> bks, best_gap, mean_gap;
  double runtime_p50 = 0.0, runtime_p90 = 0.0;
};

// Linear interpolation between closest ranks.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw ParameterError("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline BenchSummary summarize(const std::vector<BenchmarkResult>& runs) {
  BenchSummary s;
  s.instance = runs.front().instance;
  s.runs = runs.size();
  std::vector<double> best, rt;
  for (const auto& r : runs) {
    best.push_back(r.best);
    rt.push_back(r.runtime_s);
  }
  s.best = *std::min_element(best.begin(), best.end());
  s.mean = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
  s.bks = runs.front().bks;
  if (s.bks) {
    s.best_gap = gap_percent(s.best, *s.bks);
    double g = 0.0;
    for (const auto& r : runs) g += *r.gap();
    s.mean_gap = g / static_cast<double>(runs.size());
  }
  s.runtime_p50 = percentile(rt, 0.5);
  s.runtime_p90 = percentile(rt, 0.9);
  return s;
}

inline constexpr const char* kSummaryCsvHeader =
    "instance,runs,best,mean,bks,best_gap_pct,mean_gap_pct,runtime_p50_s,runtime_p90_s";

inline std::string summary_row(const BenchSummary& s) {
  auto fmt = [](const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };
  auto opt = [&](const char* f, std::optional<double> v) { return v ? fmt(f, *v) : std::string(); };
  return s.instance + "," + std::to_string(s.runs) + "," + fmt("%.6f", s.best) + "," + fmt("%.6f", s.mean) + "," +
         opt("%.6f", s.bks) + "," + opt("%.4f", s.best_gap) + "," + opt("%.4f", s.mean_gap) + "," +
         fmt("%.3f", s.runtime_p50) + "," + fmt("%.3f", s.runtime_p90);
}

inline std::vector<std::string> bench_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (!fs::is_directory(in)) {
      files.push_back(in);
      continue;
    }
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(in)) {
      const auto name = e.path().filename().string();
      const auto ext = e.path().extension().string();
      if (!e.is_regular_file() || name.starts_with(".") || name == "manifest.json" || ext == ".csv" || ext == ".md")
        continue;
      found.push_back(e.path().string());
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  return files;
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.inputs.empty()) throw UsageError("bench needs at least one instance file or directory");
  if (a.seeds == 0) throw UsageError("--seeds must be positive");
  const auto base = a.solver.config();
  ensure_dir(a.out_dir);
  auto manifest = base_manifest("bench", nullptr);
  manifest.coalition = base;
  std::string runs_csv = std::string(kResultCsvHeader) + "\n";
  std::string summary_csv = std::string(kSummaryCsvHeader) + "\n";
  nlohmann::json solved = nlohmann::json::array();
  std::size_t failed = 0;
  out << kSummaryCsvHeader << "\n";
  for (const auto& path : bench_inputs(a.inputs)) {
    LoadedInstance li;
    std::optional<double> bks;
    try {
      li = load_instance(path, a.format);
      bks = lookup_bks(a.bks, li);
    } catch (const UsageError& e) {
      err << "skipping " << e.what() << "\n";
      ++failed;
      continue;
    }
    std::vector<BenchmarkResult> runs;
    for (std::size_t k = 0; k < a.seeds; ++k) {
      auto cfg = base;
      cfg.agent.seed = base.agent.seed + k;
      const auto o = solve_inproc(li.inst, cfg);
      if (!final_violations(o).empty()) err << li.name << " seed " << cfg.agent.seed << ": final best infeasible\n";
      runs.push_back({li.name, cfg.agent.seed, reported_best(li, o), bks, o.runtime_s, o.iterations});
      runs_csv += csv_row(runs.back()) + "\n";
    }
    const auto row = summary_row(summarize(runs));
    summary_csv += row + "\n";
    out << row << "\n";
    solved.push_back({{"path", fs::absolute(path).lexically_normal().string()}, {"fnv1a64", li.hash}});
  }
  write_text_file((fs::path(a.out_dir) / "bench_runs.csv").string(), runs_csv);
  write_text_file((fs::path(a.out_dir) / "bench_summary.csv").string(), summary_csv);
  manifest.extra = {{"seeds", a.seeds}, {"instances", solved}, {"skipped", failed}};
  if (!a.bks.empty()) manifest.extra["bks_table"] = a.bks;
  write_manifest(a.out_dir, manifest);
  if (solved.empty()) {
    err << "no instance could be benchmarked\n";
    return kRuntimeError;
  }
  return kOk;
}

struct ExportArgs {
  std::string instance, format = "auto", out_dir = ".", file = "model.lp";
  bool at_most_once = false;
  double delta_scale = 1.0, gamma_scale = 1.0;
};

inline int cmd_export_lp(const ExportArgs& a, std::ostream& out, std::ostream& err) {
  const auto li = load_instance(a.instance, a.format);
  LpOptions opt;
  opt.at_most_once = a.at_most_once;
  opt.delta_scale = a.delta_scale;
  opt.gamma_scale = a.gamma_scale;
  std::string lp;
  try {
    lp = export_lp(Problem(li.inst), opt);
  } catch (const SizeError& e) {
    err << e.what() << "\n";
    return kSizeCap;
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  ensure_dir(a.out_dir);
  const auto path = (fs::path(a.out_dir) / a.file).string();
  write_text_file(path, lp);
  auto manifest = base_manifest("export-lp", &li);
  manifest.extra = {{"lp", path},
                    {"at_most_once", a.at_most_once},
                    {"delta_scale", a.delta_scale},
                    {"gamma_scale", a.gamma_scale}};
  write_manifest(a.out_dir, manifest);
  out << path << "\n";
  return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Coalition-based task allocation and scheduling for heterogeneous robot fleets", "cbm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(CBM_BUILD_ID));

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve one instance with a coalition of agents");
  solve->add_option("--instance", sa.instance, "instance file");
  solve->add_option("--format", sa.format, "instance format (default: by extension)")
      ->check(CLI::IsMember({"auto", "native", "cordeau"}));
  sa.solver.add_to(*solve);
  solve->add_option("--transport", sa.transport)->check(CLI::IsMember({"inproc", "tcp"}));
  solve->add_option("--listen", sa.listen, "tcp: this agent's host:port");
  solve->add_option("--peers", sa.peers, "tcp: every agent's host:port in id order")->delimiter(',');
  solve->add_option("--agent-id", sa.agent_id, "tcp: this agent's index into --peers");
  solve->add_option("--out-dir", sa.out_dir, "artifact directory");
  solve->add_option("--bks", sa.bks, "instance,bks table (default: bks.csv beside the instance)");
  solve->add_option("--from-manifest", sa.from_manifest, "re-run the in-process solve a manifest records");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "write random instances");
  gen->add_option("--tasks", ga.tasks)->required();
  gen->add_option("--robots", ga.robots)->required();
  gen->add_option("--prec", ga.prec, "precedence edges as a fraction of tasks");
  gen->add_option("--seed", ga.seed, "first seed");
  gen->add_option("--batch", ga.batch, "number of instances (seeds seed..seed+batch-1)")->check(CLI::PositiveNumber);
  gen->add_option("--out-dir", ga.out_dir);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "run instances over several seeds and aggregate gaps");
  bench->add_option("inputs", ba.inputs, "instance files or directories");
  bench->add_option("--instance", ba.inputs, "instance file or directory");
  bench->add_option("--format", ba.format)->check(CLI::IsMember({"auto", "native", "cordeau"}));
  bench->add_option("--seeds", ba.seeds, "runs per instance");
  bench->add_option("--bks", ba.bks, "instance,bks table (default: bks.csv beside each instance)");
  bench->add_option("--out-dir", ba.out_dir);
  ba.solver.add_to(*bench);

  ExportArgs ea;
  auto* lp = app.add_subcommand("export-lp", "write the MILP model of an instance in LP format");
  lp->add_option("--instance", ea.instance, "instance file");
  lp->add_option("--format", ea.format)->check(CLI::IsMember({"auto", "native", "cordeau"}));
  lp->add_option("--out-dir", ea.out_dir);
  lp->add_option("--file", ea.file, "LP file name inside --out-dir");
  lp->add_flag("--at-most-once", ea.at_most_once, "relax task degree rows to <= 1");
  lp->add_option("--delta-scale", ea.delta_scale)->check(CLI::PositiveNumber);
  lp->add_option("--gamma-scale", ea.gamma_scale)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (*solve) return cmd_solve(sa, out, err);
    if (*gen) return cmd_generate(ga, out, err);
    if (*bench) return cmd_bench(ba, out, err);
    return cmd_export_lp(ea, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"cbm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cbm::cli
