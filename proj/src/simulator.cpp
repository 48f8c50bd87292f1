#include "prioq/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "prioq/errors.hpp"

namespace prioq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent substream per (root seed, replication, class).
std::uint64_t substream_seed(std::uint64_t root, std::uint64_t rep, std::uint64_t cls) {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ (0x9E3779B97F4A7C15ULL * (rep + 1)));
  h = splitmix64(h ^ (0xD1B54A32D192ED03ULL * (cls + 1)));
  return h;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double u01() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
};

struct Sampler {
  std::vector<double> cum;
  std::vector<std::int64_t> vals;

  static Sampler from(const Pmf& pmf) {
    Sampler s;
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.support_size(); ++i) {
      acc += pmf.probs()[i];
      s.cum.push_back(acc);
      s.vals.push_back(pmf.values()[i]);
    }
    s.cum.back() = 1.0;
    return s;
  }

  std::int64_t draw(Rng& rng) const {
    if (vals.size() == 1) return vals[0];  // no randomness to consume
    const double u = rng.u01();
    std::size_t i = 0;
    while (i + 1 < cum.size() && u > cum[i]) ++i;
    return vals[i];
  }
};

struct Arc {
  double cum = 0.0;
  std::int32_t target = 0;  // 0 = idle
  std::int32_t batch = -1;  // index into batch samplers, -1 for idle targets
};

struct CompiledClass {
  std::vector<std::vector<Arc>> rows;  // per chain state
  std::vector<Sampler> batches;
  Sampler service;
};

CompiledClass compile_class(const ClassSpec& spec) {
  const ArrivalStreamSpec& s = spec.arrivals;
  const std::size_t m = s.order();
  CompiledClass cc;
  cc.service = Sampler::from(spec.service.pmf);
  cc.rows.resize(m + 1);

  auto add_batch = [&cc](const Pmf& pmf) {
    cc.batches.push_back(Sampler::from(pmf));
    return static_cast<std::int32_t>(cc.batches.size() - 1);
  };

  // Row 0: stay idle, or enter an active state with a batch.
  {
    std::vector<Arc>& row = cc.rows[0];
    double acc = s.idle_self_prob;
    if (acc > 0.0) row.push_back({acc, 0, -1});
    for (std::size_t j = 0; j < m; ++j) {
      const double pr = (1.0 - s.idle_self_prob) * s.alpha[j].prob;
      if (pr <= 0.0) continue;
      acc += pr;
      row.push_back({acc, static_cast<std::int32_t>(j + 1), add_batch(s.alpha[j].batch)});
    }
    row.back().cum = 1.0;
  }
  // Active rows: move within the active block or exit to idle.
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Arc>& row = cc.rows[i + 1];
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double pr = s.T[i][j].prob;
      if (pr <= 0.0) continue;
      acc += pr;
      row.push_back({acc, static_cast<std::int32_t>(j + 1), add_batch(s.T[i][j].batch)});
    }
    if (acc < 1.0) row.push_back({1.0, 0, -1});
    row.back().cum = 1.0;
  }
  return cc;
}

struct Pending {
  std::int64_t arrival = 0;
  std::int32_t service = 0;
};

struct ClassRuntime {
  std::deque<Pending> queue;
  bool busy = false;  // a customer has started and not finished
  std::int64_t cur_arrival = 0;
  std::int64_t cur_start = 0;
  std::int32_t cur_remaining = 0;
  std::int64_t work = 0;  // unfinished class work, kept incrementally
  std::int32_t chain = 0;
  Rng rng{0};
};

std::size_t pick_class(Discipline d, const std::vector<ClassRuntime>& cs) {
  switch (d) {
    case Discipline::kPreemptiveResume:
      for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs[k].busy || !cs[k].queue.empty()) return k;
      }
      break;
    case Discipline::kNonpreemptive:
      for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs[k].busy) return k;  // at most one started customer exists
      }
      for (std::size_t k = 0; k < cs.size(); ++k) {
        if (!cs[k].queue.empty()) return k;
      }
      break;
    case Discipline::kFcfs: {
      for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs[k].busy) return k;
      }
      std::size_t best = cs.size();
      std::int64_t best_arrival = 0;
      for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs[k].queue.empty()) continue;
        if (best == cs.size() || cs[k].queue.front().arrival < best_arrival) {
          best = k;
          best_arrival = cs[k].queue.front().arrival;
        }
      }
      return best;
    }
  }
  throw std::logic_error("pick_class: no work found although backlog is positive");
}

}  // namespace

double ReplicationStats::mean_wait(std::size_t k) const {
  const ClassCounters& c = per_class[k];
  return c.wait_count > 0 ? c.wait_sum / static_cast<double>(c.wait_count) : kNaN;
}

double ReplicationStats::mean_completion(std::size_t k) const {
  const ClassCounters& c = per_class[k];
  return c.completion_count > 0 ? c.completion_sum / static_cast<double>(c.completion_count)
                                : kNaN;
}

double ReplicationStats::avg_unfinished_total() const {
  return unfinished_time_sum / static_cast<double>(window);
}

double ReplicationStats::avg_unfinished(std::size_t k) const {
  return per_class[k].work_time_sum / static_cast<double>(window);
}

double ReplicationStats::avg_waiting_count(std::size_t k) const {
  return per_class[k].queue_time_sum / static_cast<double>(window);
}

double ReplicationStats::cycle_mean() const {
  return cycle_count > 0 ? cycle_sum / static_cast<double>(cycle_count) : kNaN;
}

double ReplicationStats::cycle_second_factorial() const {
  return cycle_count > 0 ? cycle_pair_sum / static_cast<double>(cycle_count) : kNaN;
}

ReplicationStats run_replication(const SystemSpec& system, const SimConfig& config,
                                 int rep_index) {
  if (config.slots <= 0 || config.warmup < 0 || config.warmup >= config.slots) {
    throw std::invalid_argument("run_replication: need 0 <= warmup < slots");
  }
  const std::size_t count = system.num_classes();
  std::vector<CompiledClass> compiled;
  compiled.reserve(count);
  for (const ClassSpec& c : system.classes) compiled.push_back(compile_class(c));

  std::vector<ClassRuntime> cs(count);
  for (std::size_t k = 0; k < count; ++k) {
    cs[k].rng = Rng(substream_seed(config.seed, static_cast<std::uint64_t>(rep_index), k));
  }

  ReplicationStats stats;
  stats.per_class.resize(count);
  stats.window = config.slots - config.warmup;

  std::int64_t backlog = 0;  // total unfinished work X
  std::int64_t last_empty = -1;

  for (std::int64_t n = 1; n <= config.slots; ++n) {
    const bool in_window = n > config.warmup;

    // Serve one unit of the discipline's pick.
    if (backlog > 0) {
      const std::size_t k = pick_class(config.discipline, cs);
      ClassRuntime& c = cs[k];
      if (!c.busy) {
        const Pending p = c.queue.front();
        c.queue.pop_front();
        c.busy = true;
        c.cur_arrival = p.arrival;
        c.cur_start = n;
        c.cur_remaining = p.service;
        if (in_window) {
          const std::int64_t w = n - p.arrival - 1;
          stats.per_class[k].wait_sum += static_cast<double>(w);
          stats.per_class[k].wait_count += 1;
          if (config.record_waits) stats.per_class[k].waits.push_back(w);
        }
      }
      c.cur_remaining -= 1;
      c.work -= 1;
      backlog -= 1;
      if (c.cur_remaining == 0) {
        c.busy = false;
        if (c.cur_start > config.warmup) {
          stats.per_class[k].completion_sum += static_cast<double>(n - c.cur_start + 1);
          stats.per_class[k].completion_count += 1;
        }
      }
    }

    // Waiting-line census at the post-service, pre-arrival point.
    if (in_window) {
      for (std::size_t k = 0; k < count; ++k) {
        stats.per_class[k].queue_time_sum += static_cast<double>(cs[k].queue.size());
      }
    }

    // One chain step per class; batches join the queues instantly.
    for (std::size_t k = 0; k < count; ++k) {
      ClassRuntime& c = cs[k];
      const std::vector<Arc>& row = compiled[k].rows[c.chain];
      std::size_t i = 0;
      if (row.size() > 1) {
        const double u = c.rng.u01();
        while (i + 1 < row.size() && u > row[i].cum) ++i;
      }
      const Arc& arc = row[i];
      c.chain = arc.target;
      if (arc.target != 0) {
        const std::int64_t batch = compiled[k].batches[arc.batch].draw(c.rng);
        for (std::int64_t b = 0; b < batch; ++b) {
          const auto h = static_cast<std::int32_t>(compiled[k].service.draw(c.rng));
          c.queue.push_back({n, h});
          c.work += h;
          backlog += h;
        }
        if (in_window) stats.per_class[k].arrivals += batch;
      }
    }

    if (in_window) {
      stats.unfinished_time_sum += static_cast<double>(backlog);
      for (std::size_t k = 0; k < count; ++k) {
        stats.per_class[k].work_time_sum += static_cast<double>(cs[k].work);
      }
      if (backlog == 0) {
        if (last_empty >= 0) {
          const auto f = static_cast<double>(n - last_empty);
          stats.cycle_count += 1;
          stats.cycle_sum += f;
          stats.cycle_pair_sum += f * (f - 1.0);
        }
        last_empty = n;
      }
    }

    if (config.paranoid && n % 10'000 == 0) {
      std::int64_t total = 0;
      for (const ClassRuntime& c : cs) {
        std::int64_t class_work = c.busy ? c.cur_remaining : 0;
        for (const Pending& p : c.queue) class_work += p.service;
        if (class_work != c.work) {
          throw std::logic_error("work bookkeeping diverged for a class at slot " +
                                 std::to_string(n));
        }
        total += class_work;
      }
      if (total != backlog) {
        throw std::logic_error("total backlog diverged at slot " + std::to_string(n));
      }
    }
  }
  return stats;
}

std::vector<ReplicationStats> run_simulation(const SystemSpec& system, const SimConfig& config) {
  if (config.replications <= 0) {
    throw std::invalid_argument("run_simulation: need at least one replication");
  }
  const int reps = config.replications;
  int threads = config.max_threads > 0
                    ? config.max_threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, reps);

  std::vector<ReplicationStats> out(static_cast<std::size_t>(reps));
  if (threads == 1) {
    for (int r = 0; r < reps; ++r) out[static_cast<std::size_t>(r)] = run_replication(system, config, r);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
          out[static_cast<std::size_t>(r)] = run_replication(system, config, r);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {

// Regularized incomplete beta by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
               b * std::log1p(-x));
  const bool swap = x > (a + 1.0) / (a + b + 2.0);
  if (swap) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  constexpr double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double result = d;
  for (int m = 1; m <= 300; ++m) {
    const double md = static_cast<double>(m);
    double num = md * (b - md) * x / ((a + 2.0 * md - 1.0) * (a + 2.0 * md));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    result *= d * c;
    num = -(a + md) * (a + b + md) * x / ((a + 2.0 * md) * (a + 2.0 * md + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    result *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return front * result / a;
}

double student_t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace

double student_t_975(int degrees_of_freedom) {
  if (degrees_of_freedom < 1) {
    throw std::invalid_argument("student_t_975: need at least one degree of freedom");
  }
  const double df = degrees_of_freedom;
  double lo = 0.0, hi = 1000.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < 0.975 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double SimEstimate::std_error() const {
  if (replications < 2) return kNaN;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  const double sd = std::sqrt(acc / static_cast<double>(replications - 1));
  return sd / std::sqrt(static_cast<double>(replications));
}

SimEstimate estimate(const std::vector<ReplicationStats>& reps, const SimConfig& config,
                     Metric metric, std::size_t class_index) {
  if (metric == Metric::kCompletionTime && config.discipline != Discipline::kPreemptiveResume) {
    throw UnsupportedMetricError(
        "completion times are tracked only under the preemptive-resume discipline");
  }
  SimEstimate est;
  est.replications = static_cast<int>(reps.size());
  for (const ReplicationStats& r : reps) {
    double v = kNaN;
    switch (metric) {
      case Metric::kWaitingTime: v = r.mean_wait(class_index); break;
      case Metric::kUnfinishedTotal: v = r.avg_unfinished_total(); break;
      case Metric::kUnfinishedClass: v = r.avg_unfinished(class_index); break;
      case Metric::kWaitingCount: v = r.avg_waiting_count(class_index); break;
      case Metric::kCycleMean: v = r.cycle_mean(); break;
      case Metric::kCycleSecondFactorial: v = r.cycle_second_factorial(); break;
      case Metric::kCompletionTime: v = r.mean_completion(class_index); break;
    }
    est.values.push_back(v);
  }
  double acc = 0.0;
  for (double v : est.values) acc += v;
  est.mean = acc / static_cast<double>(est.values.size());
  if (est.replications >= 2) {
    est.half_width_95 = student_t_975(est.replications - 1) * est.std_error();
  }
  return est;
}

SimEstimate estimate(const SystemSpec& system, const SimConfig& config, Metric metric,
                     std::size_t class_index) {
  return estimate(run_simulation(system, config), config, metric, class_index);
}

}  // namespace prioq
