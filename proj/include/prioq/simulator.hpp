#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "prioq/stream_model.hpp"

namespace prioq {

enum class Discipline { kFcfs, kPreemptiveResume, kNonpreemptive };

struct SimConfig {
  std::int64_t slots = 1'000'000;   // total slots per replication, warmup included
  std::int64_t warmup = 100'000;    // slots discarded before measurement
  int replications = 20;
  std::uint64_t seed = 1;
  Discipline discipline = Discipline::kPreemptiveResume;
  int max_threads = 0;              // 0: one per hardware thread
  bool record_waits = false;        // keep per-customer waiting sequences
  bool paranoid = false;            // recheck work bookkeeping every 10^4 slots
};

// Raw counters of one replication.  Per-customer statistics count customers
// whose service started inside the measurement window; time averages run over
// window slots; busy cycles start at the first post-warmup empty slot and an
// unfinished final cycle is discarded.
struct ClassCounters {
  double wait_sum = 0.0;
  std::int64_t wait_count = 0;
  double completion_sum = 0.0;      // preempted spans included (start..finish)
  std::int64_t completion_count = 0;
  double work_time_sum = 0.0;       // class-k unfinished work, summed per slot
  double queue_time_sum = 0.0;      // waiting customers, summed per slot
  std::int64_t arrivals = 0;
  std::vector<std::int64_t> waits;  // only when record_waits is set
};

struct ReplicationStats {
  std::int64_t window = 0;
  double unfinished_time_sum = 0.0;
  std::int64_t cycle_count = 0;
  double cycle_sum = 0.0;
  double cycle_pair_sum = 0.0;  // sum of F(F-1) over completed cycles
  std::vector<ClassCounters> per_class;

  double mean_wait(std::size_t k) const;
  double mean_completion(std::size_t k) const;
  double avg_unfinished_total() const;
  double avg_unfinished(std::size_t k) const;
  double avg_waiting_count(std::size_t k) const;
  double cycle_mean() const;
  double cycle_second_factorial() const;
};

enum class Metric {
  kWaitingTime,            // per class
  kUnfinishedTotal,
  kUnfinishedClass,        // per class
  kWaitingCount,           // per class
  kCycleMean,
  kCycleSecondFactorial,
  kCompletionTime          // per class, preemptive resume only
};

struct SimEstimate {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double half_width_95 = std::numeric_limits<double>::quiet_NaN();
  int replications = 0;
  std::vector<double> values;  // one per replication

  double std_error() const;
};

// One replication, deterministic in (seed, rep_index, class set): each class
// draws from its own substream, so removing lower classes leaves the sample
// paths of the remaining classes untouched.
ReplicationStats run_replication(const SystemSpec& system, const SimConfig& config,
                                 int rep_index);

// All replications, distributed over threads; the result is identical for
// every thread count.
std::vector<ReplicationStats> run_simulation(const SystemSpec& system, const SimConfig& config);

SimEstimate estimate(const std::vector<ReplicationStats>& reps, const SimConfig& config,
                     Metric metric, std::size_t class_index = 0);
SimEstimate estimate(const SystemSpec& system, const SimConfig& config, Metric metric,
                     std::size_t class_index = 0);

// Two-sided 97.5% quantile of the Student t distribution.
double student_t_975(int degrees_of_freedom);

}  // namespace prioq
