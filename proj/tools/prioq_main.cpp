// prioq: analytic reports, simulation, and cross-validation for discrete-time
// priority queues with batch Markovian arrival streams.
//
// Exit codes: 0 success, 1 validation-suite failure, 2 input error,
// 3 instability.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prioq/checks.hpp"
#include "prioq/errors.hpp"
#include "prioq/model_io.hpp"
#include "prioq/priority.hpp"
#include "prioq/simulator.hpp"
#include "prioq/stream_model.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;
constexpr int kExitUnstable = 3;

struct CommonArgs {
  std::string model;
  std::string format = "table";
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--model", args->model, "model file (JSON)")->required();
  cmd->add_option("--format", args->format, "output format")
      ->check(CLI::IsMember({"table", "json"}));
  cmd->add_option("--out", args->out, "write output to this file instead of stdout");
}

int thread_cap_from_env() {
  const char* v = std::getenv("PRIOQ_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  const long n = std::strtol(v, nullptr, 10);
  if (n < 1) throw prioq::ModelError("PRIOQ_THREADS must be a positive integer");
  return static_cast<int>(n);
}

// Loads, validates, and gates a model file.  Structural problems become
// ModelError (exit 2); an otherwise valid but overloaded system becomes
// InstabilityError (exit 3).  Warnings go to stderr.
prioq::SystemSpec load_checked(const std::string& path) {
  prioq::SystemSpec sys = prioq::load_system(path);
  const prioq::ValidationReport rep = prioq::validate_system(sys);
  for (const std::string& w : rep.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  if (!rep.valid()) {
    if (rep.violations.size() == 1 &&
        rep.violations.front().find("stability boundary") != std::string::npos) {
      throw prioq::InstabilityError(rep.violations.front());
    }
    std::string msg = "model validation failed:";
    for (const std::string& v : rep.violations) msg += "\n  - " + v;
    throw prioq::ModelError(msg);
  }
  return sys;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string pad(const std::string& s, int width) {
  if (static_cast<int>(s.size()) >= width) return s;
  return std::string(width - s.size(), ' ') + s;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw prioq::ModelError("cannot open output file " + out_path);
  f << text;
}

json manifest(const std::string& model, const std::string& command, json config) {
  return json{{"model", model},
              {"command", command},
              {"version", prioq::kVersion},
              {"config", std::move(config)}};
}

json estimate_json(const prioq::SimEstimate& e) {
  json j;
  j["mean"] = e.mean;
  if (e.replications >= 2) {
    j["half_width_95"] = e.half_width_95;
  } else {
    j["half_width_95"] = nullptr;  // single replication: no interval
  }
  j["replications"] = e.replications;
  j["values"] = e.values;
  return j;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const CommonArgs& args) {
  const prioq::SystemSpec sys = load_checked(args.model);
  const prioq::SystemReport rep = prioq::build_report(sys);

  if (args.format == "json") {
    json classes = json::array();
    for (std::size_t k = 0; k < rep.per_class.size(); ++k) {
      const prioq::ClassReport& c = rep.per_class[k];
      classes.push_back({{"class", k + 1},
                         {"lambda", c.lambda},
                         {"rho", c.rho},
                         {"mean_service", c.mean_service},
                         {"eq_mean_service", c.eq_mean_service},
                         {"w_pr", c.w_pr},
                         {"w_np", c.w_np},
                         {"d_pr", c.d_pr},
                         {"u_pr", c.u_pr},
                         {"u_np", c.u_np},
                         {"completion_pr", c.completion_pr},
                         {"remaining_pr", c.remaining_pr}});
    }
    json doc{{"manifest", manifest(args.model, "analyze", {{"format", args.format}})},
             {"report",
              {{"rho_total", rep.rho_total},
               {"unfinished_mean", rep.unfinished_mean},
               {"conservation_rhs", rep.conservation_rhs},
               {"cycle_f1", rep.cycle_f1},
               {"cycle_f2", rep.cycle_f2},
               {"classes", std::move(classes)}}}};
    emit(doc.dump(2) + "\n", args.out);
    return kExitOk;
  }

  std::string text = "model: " + args.model + "\n";
  const std::vector<std::string> heads = {"class", "lambda", "rho",  "eq_service", "w_pr",
                                          "w_np",  "d_pr",   "u_pr", "u_np"};
  for (const std::string& h : heads) text += pad(h, 12);
  text += "\n";
  for (std::size_t k = 0; k < rep.per_class.size(); ++k) {
    const prioq::ClassReport& c = rep.per_class[k];
    text += pad(std::to_string(k + 1), 12);
    for (double v : {c.lambda, c.rho, c.eq_mean_service, c.w_pr, c.w_np, c.d_pr, c.u_pr, c.u_np}) {
      text += pad(fmt6(v), 12);
    }
    text += "\n";
  }
  text += "rho_total        " + fmt6(rep.rho_total) + "\n";
  text += "unfinished_mean  " + fmt6(rep.unfinished_mean) + "\n";
  text += "conservation_rhs " + fmt6(rep.conservation_rhs) + "\n";
  text += "cycle_f1         " + fmt6(rep.cycle_f1) + "\n";
  text += "cycle_f2         " + fmt6(rep.cycle_f2) + "\n";
  emit(text, args.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

prioq::Discipline parse_discipline(const std::string& name) {
  if (name == "fcfs") return prioq::Discipline::kFcfs;
  if (name == "pr") return prioq::Discipline::kPreemptiveResume;
  return prioq::Discipline::kNonpreemptive;
}

int cmd_simulate(const CommonArgs& args, const std::string& discipline, std::int64_t slots,
                 std::int64_t warmup, int reps, std::uint64_t seed) {
  const prioq::SystemSpec sys = load_checked(args.model);

  prioq::SimConfig cfg;
  cfg.slots = slots;
  cfg.warmup = warmup;
  cfg.replications = reps;
  cfg.seed = seed;
  cfg.discipline = parse_discipline(discipline);
  cfg.max_threads = thread_cap_from_env();

  // Timing goes to stderr only: result files must be byte-reproducible.
  const auto start = std::chrono::steady_clock::now();
  const std::vector<prioq::ReplicationStats> stats = prioq::run_simulation(sys, cfg);
  std::fprintf(stderr, "ran %d replications of %lld slots in %.2f s\n", cfg.replications,
               static_cast<long long>(cfg.slots),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  const std::size_t count = sys.num_classes();
  const bool pr = cfg.discipline == prioq::Discipline::kPreemptiveResume;

  std::vector<prioq::SimEstimate> wait(count), unfinished(count), completion(count);
  for (std::size_t k = 0; k < count; ++k) {
    wait[k] = prioq::estimate(stats, cfg, prioq::Metric::kWaitingTime, k);
    unfinished[k] = prioq::estimate(stats, cfg, prioq::Metric::kUnfinishedClass, k);
    if (pr) completion[k] = prioq::estimate(stats, cfg, prioq::Metric::kCompletionTime, k);
  }
  const prioq::SimEstimate total = prioq::estimate(stats, cfg, prioq::Metric::kUnfinishedTotal);
  const prioq::SimEstimate cyc1 = prioq::estimate(stats, cfg, prioq::Metric::kCycleMean);
  const prioq::SimEstimate cyc2 =
      prioq::estimate(stats, cfg, prioq::Metric::kCycleSecondFactorial);

  if (args.format == "json") {
    // The config echo omits the thread cap: parallelism never changes the
    // estimates, so the same run emits the same bytes at any thread count.
    json cfg_echo{{"discipline", discipline},
                  {"slots", cfg.slots},
                  {"warmup", cfg.warmup},
                  {"replications", cfg.replications},
                  {"seed", cfg.seed}};
    json doc{{"manifest", manifest(args.model, "simulate", std::move(cfg_echo))}};
    doc["manifest"]["seed"] = cfg.seed;
    json classes = json::array();
    for (std::size_t k = 0; k < count; ++k) {
      json c{{"class", k + 1},
             {"waiting_time", estimate_json(wait[k])},
             {"unfinished", estimate_json(unfinished[k])}};
      if (pr) c["completion_time"] = estimate_json(completion[k]);
      classes.push_back(std::move(c));
    }
    doc["estimates"] = {{"per_class", std::move(classes)},
                        {"unfinished_total", estimate_json(total)},
                        {"cycle_mean", estimate_json(cyc1)},
                        {"cycle_second_factorial", estimate_json(cyc2)}};
    emit(doc.dump(2) + "\n", args.out);
    return kExitOk;
  }

  std::string text = "model: " + args.model + "  discipline: " + discipline +
                     "  slots: " + std::to_string(cfg.slots) +
                     "  reps: " + std::to_string(cfg.replications) +
                     "  seed: " + std::to_string(cfg.seed) + "\n";
  text += pad("metric", 24) + pad("mean", 14) + pad("hw95", 14) + "\n";
  auto row = [&text](const std::string& name, const prioq::SimEstimate& e) {
    text += pad(name, 24) + pad(fmt6(e.mean), 14) +
            pad(e.replications >= 2 ? fmt6(e.half_width_95) : "n/a", 14) + "\n";
  };
  for (std::size_t k = 0; k < count; ++k) {
    const std::string tag = "[" + std::to_string(k + 1) + "]";
    row("wait" + tag, wait[k]);
    row("unfinished" + tag, unfinished[k]);
    if (pr) row("completion" + tag, completion[k]);
  }
  row("unfinished_total", total);
  row("cycle_mean", cyc1);
  row("cycle_f2", cyc2);
  emit(text, args.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const CommonArgs& args, bool quick, std::int64_t slots, int reps,
                 std::uint64_t seed) {
  const prioq::SystemSpec sys = load_checked(args.model);

  const auto start = std::chrono::steady_clock::now();
  std::vector<prioq::CheckResult> checks = prioq::identity_checks(sys);
  if (!quick) {
    prioq::SimConfig cfg;
    cfg.slots = slots;
    cfg.warmup = slots / 10;
    cfg.replications = reps;
    cfg.seed = seed;
    cfg.max_threads = thread_cap_from_env();
    const std::vector<prioq::CheckResult> sim = prioq::simulation_checks(sys, cfg);
    checks.insert(checks.end(), sim.begin(), sim.end());
  }
  std::fprintf(stderr, "ran %zu checks in %.2f s\n", checks.size(),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());

  std::size_t passed = 0;
  for (const prioq::CheckResult& c : checks) passed += c.passed ? 1 : 0;
  const bool all_passed = passed == checks.size();

  if (args.format == "json") {
    json arr = json::array();
    for (const prioq::CheckResult& c : checks) {
      arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    json doc{{"manifest", manifest(args.model, "validate",
                                   {{"quick", quick},
                                    {"slots", slots},
                                    {"replications", reps},
                                    {"seed", seed}})},
             {"checks", std::move(arr)},
             {"passed", all_passed}};
    doc["manifest"]["seed"] = seed;
    emit(doc.dump(2) + "\n", args.out);
  } else {
    std::string text = "model: " + args.model + (quick ? "  (identity checks only)\n" : "\n");
    for (const prioq::CheckResult& c : checks) {
      std::string line = c.name;
      if (line.size() < 40) line += std::string(40 - line.size(), ' ');
      line += c.passed ? "PASS  " : "FAIL  ";
      line += c.detail;
      text += line + "\n";
    }
    text += "summary: " + std::to_string(passed) + "/" + std::to_string(checks.size()) +
            " checks passed\n";
    emit(text, args.out);
  }
  return all_passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete-time priority queues with batch Markovian arrivals"};
  app.require_subcommand(1);

  CommonArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "exact mean-value report");
  add_common(analyze, &analyze_args);

  CommonArgs sim_args;
  std::string discipline = "pr";
  std::int64_t slots = 1'000'000;
  std::int64_t warmup = 100'000;
  int reps = 20;
  std::uint64_t seed = 1;
  CLI::App* simulate = app.add_subcommand("simulate", "slot-exact stochastic simulation");
  add_common(simulate, &sim_args);
  simulate->add_option("--discipline", discipline, "service discipline")
      ->check(CLI::IsMember({"fcfs", "pr", "np"}));
  simulate->add_option("--slots", slots, "slots per replication (warmup included)");
  simulate->add_option("--warmup", warmup, "slots discarded before measurement");
  simulate->add_option("--reps", reps, "independent replications");
  simulate->add_option("--seed", seed, "root seed");

  CommonArgs val_args;
  bool quick = false;
  std::int64_t val_slots = 200'000;
  int val_reps = 10;
  std::uint64_t val_seed = 1;
  CLI::App* validate = app.add_subcommand("validate", "analytic and simulation cross-checks");
  add_common(validate, &val_args);
  validate->add_flag("--quick", quick, "identity checks only, no simulation");
  validate->add_option("--slots", val_slots, "slots per replication");
  validate->add_option("--reps", val_reps, "independent replications");
  validate->add_option("--seed", val_seed, "root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(analyze_args);
    if (simulate->parsed()) {
      return cmd_simulate(sim_args, discipline, slots, warmup, reps, seed);
    }
    return cmd_validate(val_args, quick, val_slots, val_reps, val_seed);
  } catch (const prioq::InstabilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUnstable;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
}
