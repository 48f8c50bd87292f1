// Acceptance suite: eight go/no-go criteria covering the analytic identities,
// the reduced special-case formulas, the hand-verified fixture, and simulation
// coverage.  Prints one PASS/FAIL line per criterion; exits nonzero if any
// fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prioq/analytic.hpp"
#include "prioq/checks.hpp"
#include "prioq/model_io.hpp"
#include "prioq/priority.hpp"
#include "prioq/simulator.hpp"
#include "prioq/stream_model.hpp"
#include "support/random_system.hpp"

using namespace prioq;

namespace {

const std::string kCli = PRIOQ_CLI_PATH;
const std::string kFixture = std::string(PRIOQ_MODEL_DIR) + "/iid_two_class.json";

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void note_gap(std::string* note, const std::string& what, double a, double b) {
  if (!note->empty()) return;  // keep the first failure
  *note = what + ": " + fmt(a) + " vs " + fmt(b);
}

bool reports_match(const SystemReport& a, const SystemReport& b, double tol, std::string* note) {
  bool ok = true;
  auto cmp = [&](const std::string& what, double x, double y) {
    if (!close(x, y, tol)) {
      ok = false;
      note_gap(note, what, x, y);
    }
  };
  cmp("rho_total", a.rho_total, b.rho_total);
  cmp("unfinished_mean", a.unfinished_mean, b.unfinished_mean);
  cmp("conservation_rhs", a.conservation_rhs, b.conservation_rhs);
  cmp("cycle_f1", a.cycle_f1, b.cycle_f1);
  cmp("cycle_f2", a.cycle_f2, b.cycle_f2);
  for (std::size_t k = 0; k < a.per_class.size(); ++k) {
    const std::string tag = "[class " + std::to_string(k + 1) + "] ";
    cmp(tag + "lambda", a.per_class[k].lambda, b.per_class[k].lambda);
    cmp(tag + "w_pr", a.per_class[k].w_pr, b.per_class[k].w_pr);
    cmp(tag + "w_np", a.per_class[k].w_np, b.per_class[k].w_np);
    cmp(tag + "d_pr", a.per_class[k].d_pr, b.per_class[k].d_pr);
    cmp(tag + "u_pr", a.per_class[k].u_pr, b.per_class[k].u_pr);
    cmp(tag + "u_np", a.per_class[k].u_np, b.per_class[k].u_np);
    cmp(tag + "completion_pr", a.per_class[k].completion_pr, b.per_class[k].completion_pr);
    cmp(tag + "remaining_pr", a.per_class[k].remaining_pr, b.per_class[k].remaining_pr);
  }
  return ok;
}

// 1. Conservation law: the rho-weighted nonpreemptive waits reproduce the
//    discipline-independent right-hand side, which in turn ties to E[U].
bool criterion_conservation(std::string* note) {
  std::mt19937_64 g(101);
  std::uniform_real_distribution<double> load(0.3, 0.88);
  for (int trial = 0; trial < 50; ++trial) {
    const SystemSpec sys = testsupport::random_system(g, 1 + trial % 3, load(g));
    const SystemMoments sm = analyze_streams(sys);
    const SystemReport rep = build_report(sm);
    double weighted = 0.0, eq_load = 0.0;
    for (const ClassReport& c : rep.per_class) {
      weighted += c.rho * c.w_np;
      eq_load += c.rho * c.eq_mean_service;
    }
    if (!close(weighted, sm.conservation_rhs, 1e-10)) {
      note_gap(note, "trial " + std::to_string(trial) + " weighted waits", weighted,
               sm.conservation_rhs);
      return false;
    }
    const double via_unfinished = sm.unfinished_mean - sm.rho_total - eq_load;
    if (!close(sm.conservation_rhs, via_unfinished, 1e-12)) {
      note_gap(note, "trial " + std::to_string(trial) + " unfinished route",
               sm.conservation_rhs, via_unfinished);
      return false;
    }
  }
  return true;
}

// 2. The general per-class formulas collapse to the dedicated single-class
//    displays when only one stream is present.
bool criterion_single_class(std::string* note) {
  std::mt19937_64 g(102);
  std::uniform_real_distribution<double> load(0.3, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemSpec sys = testsupport::random_system(g, 1, load(g));
    const SystemMoments sm = analyze_streams(sys);
    const double w_direct = single_class_wait(sys.classes[0].arrivals, sys.classes[0].service);
    const double u_direct =
        single_class_unfinished_mean(sys.classes[0].arrivals, sys.classes[0].service);
    if (!close(w_pr_mean(sm, 0), w_direct, 1e-10)) {
      note_gap(note, "trial " + std::to_string(trial) + " wait", w_pr_mean(sm, 0), w_direct);
      return false;
    }
    if (!close(u_pr_mean(sm, 0), u_direct, 1e-10)) {
      note_gap(note, "trial " + std::to_string(trial) + " unfinished", u_pr_mean(sm, 0),
               u_direct);
      return false;
    }
  }
  return true;
}

// 3. The reduced unit-service / iid / iid-active formulas agree with the
//    general machinery field by field.
bool criterion_special_cases(std::string* note) {
  std::mt19937_64 g(103);

  for (int trial = 0; trial < 20; ++trial) {  // unit service
    const SystemSpec sys = testsupport::random_system(g, 1 + trial % 3, 0.82, true);
    const SystemReport direct = special_case_report(sys, SpecialCase::kUnitService);
    if (!reports_match(direct, build_report(sys), 1e-10, note)) {
      *note = "unit-service trial " + std::to_string(trial) + ": " + *note;
      return false;
    }
    for (const ClassReport& c : direct.per_class) {
      if (!close(c.w_pr, c.w_np, 1e-12)) {
        note_gap(note, "unit-service preemption gap", c.w_pr, c.w_np);
        return false;
      }
    }
  }

  for (int trial = 0; trial < 20; ++trial) {  // slot-wise iid batches
    SystemSpec sys;
    const int count = 1 + trial % 3;
    for (int k = 0; k < count; ++k) {
      const Pmf active = testsupport::random_batch(g);
      const double h = 1.0 + (trial + k) % 3;
      const double a0 = 1.0 - 0.8 / (count * h * active.mean());
      std::vector<std::int64_t> values{0};
      std::vector<double> probs{a0};
      for (std::size_t i = 0; i < active.support_size(); ++i) {
        values.push_back(active.values()[i]);
        probs.push_back(active.probs()[i] * (1.0 - a0));
      }
      sys.classes.push_back({build_iid_stream(Pmf(values, probs)),
                             {Pmf::point(static_cast<std::int64_t>(h))}});
    }
    if (!reports_match(special_case_report(sys, SpecialCase::kIidArrivals), build_report(sys),
                       1e-10, note)) {
      *note = "iid trial " + std::to_string(trial) + ": " + *note;
      return false;
    }
  }

  for (int trial = 0; trial < 20; ++trial) {  // shared active batch law
    SystemSpec sys;
    const int count = 1 + trial % 3;
    for (int k = 0; k < count; ++k) {
      ArrivalStreamSpec s = testsupport::random_stream(g, 1 + (trial + k) % 3);
      const Pmf shared = testsupport::random_batch(g);
      for (auto& e : s.alpha) e.batch = shared;
      for (auto& row : s.T) {
        for (auto& e : row) e.batch = shared;
      }
      const double h = 1.0 + (trial + k) % 2;
      testsupport::tune_rate(&s, 0.8 / (count * h));
      sys.classes.push_back({std::move(s), {Pmf::point(static_cast<std::int64_t>(h))}});
    }
    if (!reports_match(special_case_report(sys, SpecialCase::kIidActiveBatches),
                       build_report(sys), 1e-10, note)) {
      *note = "iid-active trial " + std::to_string(trial) + ": " + *note;
      return false;
    }
  }
  return true;
}

// 4. Hand-verified two-class fixture.
bool criterion_fixture(std::string* note) {
  const SystemSpec sys = load_system(kFixture);
  const SystemReport rep = build_report(sys);
  const SystemMoments sm = analyze_streams(sys);
  struct Expected {
    const char* what;
    double got;
    double want;
  };
  const double weighted =
      rep.per_class[0].rho * rep.per_class[0].w_np + rep.per_class[1].rho * rep.per_class[1].w_np;
  const Expected table[] = {
      {"w_pr class 1", rep.per_class[0].w_pr, 0.0},
      {"w_pr class 2", rep.per_class[1].w_pr, 41.0 / 24.0},
      {"w_np class 1", rep.per_class[0].w_np, 0.3125},
      {"w_np class 2", rep.per_class[1].w_np, 41.0 / 24.0},
      {"weighted np waits", weighted, 11.0 / 12.0},
      {"unfinished mean", sm.unfinished_mean, 28.0 / 15.0},
      {"cycle f1", sm.cycle_f1, 10.0 / 3.0},
  };
  for (const Expected& e : table) {
    if (std::abs(e.got - e.want) > 1e-9) {
      note_gap(note, e.what, e.got, e.want);
      return false;
    }
  }
  return true;
}

// 5. Simulated estimates cover their analytic values within three standard
//    errors on the fixture and on randomized bursty systems.
bool criterion_simulation(std::string* note) {
  std::mt19937_64 g(105);
  std::uniform_real_distribution<double> load(0.55, 0.8);
  std::vector<SystemSpec> systems{load_system(kFixture)};
  for (int i = 0; i < 5; ++i) {
    systems.push_back(testsupport::random_bursty_system(g, 2 + i % 2, load(g)));
  }

  std::size_t passed = 0, total = 0;
  std::string failures;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    SimConfig cfg;
    cfg.slots = 1'000'000;
    cfg.warmup = 100'000;
    cfg.replications = 20;
    cfg.seed = 9000 + 17 * i;
    for (const CheckResult& c : simulation_checks(systems[i], cfg)) {
      total += 1;
      if (c.passed) {
        passed += 1;
      } else if (failures.size() < 160) {
        failures += " [system " + std::to_string(i) + "] " + c.name + " " + c.detail;
      }
    }
  }
  const double rate = static_cast<double>(passed) / static_cast<double>(total);
  *note = std::to_string(passed) + "/" + std::to_string(total) + " covered";
  if (rate < 0.95) {
    *note += ";" + failures;
    return false;
  }
  return true;
}

// 6. With every service equal to one slot, preemption never happens, so PR
//    and NP runs with a shared seed emit identical waiting-time sequences.
bool criterion_unit_service_paths(std::string* note) {
  std::mt19937_64 g(106);
  for (int trial = 0; trial < 3; ++trial) {
    const SystemSpec sys = testsupport::random_system(g, 2 + trial % 2, 0.8, true);
    SimConfig cfg;
    cfg.slots = 200'000;
    cfg.warmup = 10'000;
    cfg.replications = 3;
    cfg.seed = 600 + trial;
    cfg.record_waits = true;
    cfg.discipline = Discipline::kPreemptiveResume;
    const auto pr = run_simulation(sys, cfg);
    cfg.discipline = Discipline::kNonpreemptive;
    const auto np = run_simulation(sys, cfg);
    for (std::size_t r = 0; r < pr.size(); ++r) {
      for (std::size_t k = 0; k < sys.num_classes(); ++k) {
        if (pr[r].per_class[k].waits != np[r].per_class[k].waits) {
          *note = "trial " + std::to_string(trial) + " class " + std::to_string(k + 1) +
                  " rep " + std::to_string(r) + ": wait sequences differ";
          return false;
        }
      }
    }
  }
  return true;
}

// 7. The preemption penalty w_np - w_pr reacts to a lower-priority stream
//    only through its rate and load, never through its structure.
bool criterion_structure_remark(std::string* note) {
  std::mt19937_64 g(107);
  for (int trial = 0; trial < 10; ++trial) {
    SystemSpec base = testsupport::random_system(g, 3, 0.82);
    const std::size_t swap = trial % 3;
    ArrivalStreamSpec fresh = testsupport::random_stream(g, 1 + (trial + 1) % 3);

    const double orig = analyze_streams(base).per_class[swap].lambda;
    const double common = testsupport::tune_rate(&fresh, orig);
    testsupport::tune_rate(&base.classes[swap].arrivals, common);
    testsupport::tune_rate(&fresh, common);

    const SystemReport before = build_report(base);
    SystemSpec other = base;
    other.classes[swap].arrivals = fresh;
    const SystemReport after = build_report(other);
    for (std::size_t k = 0; k < 3; ++k) {
      const double gap_before = before.per_class[k].w_np - before.per_class[k].w_pr;
      const double gap_after = after.per_class[k].w_np - after.per_class[k].w_pr;
      if (!close(gap_before, gap_after, 1e-10)) {
        note_gap(note,
                 "trial " + std::to_string(trial) + " class " + std::to_string(k + 1) + " gap",
                 gap_before, gap_after);
        return false;
      }
    }
  }
  return true;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// 8. Byte-identical simulation JSON for a fixed seed, at any parallelism.
bool criterion_determinism(std::string* note) {
  const std::string dir = std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp";
  const std::string flags = " simulate --model " + kFixture +
                            " --slots 200000 --warmup 20000 --reps 8 --seed 4242"
                            " --format json --out ";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"", dir + "/prioq_acc_a.json"},
      {"", dir + "/prioq_acc_b.json"},
      {"PRIOQ_THREADS=1 ", dir + "/prioq_acc_c.json"},
      {"PRIOQ_THREADS=8 ", dir + "/prioq_acc_d.json"},
  };
  for (const auto& [env, out] : runs) {
    const std::string cmd = env + kCli + flags + out + " >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      *note = "simulation command failed: " + cmd;
      return false;
    }
  }
  const std::string reference = slurp(runs[0].second);
  if (reference.empty()) {
    *note = "no output produced";
    return false;
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (slurp(runs[i].second) != reference) {
      *note = "run " + std::to_string(i + 1) + " differs from run 1";
      return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*fn)(std::string*);
    double budget_seconds;
  };
  const Criterion criteria[] = {
      {"conservation law on 50 random systems", criterion_conservation, 1.0},
      {"single-class reduction on 20 random streams", criterion_single_class, 1.0},
      {"special-case formulas on 20 systems per shape", criterion_special_cases, 1.0},
      {"hand-verified two-class fixture", criterion_fixture, 0.0},
      {"simulation coverage, fixture plus 5 bursty systems", criterion_simulation, 120.0},
      {"unit-service runs share waiting sequences across disciplines",
       criterion_unit_service_paths, 0.0},
      {"wait gap invariant under equal-rate stream swaps", criterion_structure_remark, 0.0},
      {"byte-identical simulation output across runs and thread counts",
       criterion_determinism, 0.0},
  };

  int failures = 0;
  int id = 0;
  for (const Criterion& c : criteria) {
    ++id;
    const auto start = std::chrono::steady_clock::now();
    std::string note;
    bool ok = false;
    try {
      ok = c.fn(&note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      ok = false;
      note = "over the " + fmt(c.budget_seconds) + " s budget";
    }
    std::printf("criterion %d: %s  %s (%.2f s)%s%s\n", id, ok ? "PASS" : "FAIL", c.name, seconds,
                note.empty() ? "" : " -- ", note.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("acceptance: %d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("acceptance: all 8 criteria passed\n");
  return 0;
}
