#include <doctest.h>

#include <random>
#include <string>

#include "prioq/errors.hpp"
#include "prioq/stream_model.hpp"
#include "support/random_system.hpp"

using namespace prioq;

namespace {

bool mentions(const ValidationReport& rep, const std::string& needle) {
  for (const std::string& v : rep.violations) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

SystemSpec wrap(ArrivalStreamSpec s, Pmf service = Pmf::point(1)) {
  SystemSpec sys;
  sys.classes.push_back({std::move(s), {std::move(service)}});
  return sys;
}

}  // namespace

TEST_CASE("iid stream builder produces the canonical two-state shape") {
  // Bernoulli(0.2) batches: idle self-loop 0.8, active self-loop 0.2.
  ArrivalStreamSpec s = build_iid_stream(Pmf({0, 1}, {0.8, 0.2}));
  CHECK(s.order() == 1);
  CHECK(s.idle_self_prob == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(s.alpha[0].prob == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.T[0][0].prob == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(s.alpha[0].batch == Pmf::point(1));
  CHECK(s.T[0][0].batch == Pmf::point(1));
  CHECK(validate_system(wrap(s)).valid());
}

TEST_CASE("iid builder conditions the batch on being positive") {
  // Mass 0.5 at 0, 0.3 at 1, 0.2 at 3 -> active batches {1: 0.6, 3: 0.4}.
  ArrivalStreamSpec s = build_iid_stream(Pmf({0, 1, 3}, {0.5, 0.3, 0.2}));
  CHECK(s.idle_self_prob == doctest::Approx(0.5).epsilon(1e-14));
  REQUIRE(s.alpha[0].batch.support_size() == 2);
  CHECK(s.alpha[0].batch.probs()[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(s.alpha[0].batch.probs()[1] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("iid builder rejects degenerate zero mass") {
  CHECK_THROWS_AS(build_iid_stream(Pmf::point(1)), ModelError);  // no idle slots
  CHECK_THROWS_AS(build_iid_stream(Pmf::point(0)), ModelError);  // no arrivals
}

TEST_CASE("iid-active builder shares one batch law across transitions") {
  ArrivalStreamSpec s = build_iid_active_stream(
      0.6, {0.7, 0.3}, {{0.2, 0.3}, {0.1, 0.4}}, Pmf({1, 2}, {0.5, 0.5}));
  CHECK(s.order() == 2);
  CHECK(s.alpha[1].prob == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(s.T[1][0].prob == doctest::Approx(0.1).epsilon(1e-14));
  for (const TransitionEntry& e : s.alpha) CHECK(e.batch == s.alpha[0].batch);
  for (const auto& row : s.T) {
    for (const TransitionEntry& e : row) CHECK(e.batch == s.alpha[0].batch);
  }
  CHECK(validate_system(wrap(s)).valid());
  CHECK_THROWS_AS(
      build_iid_active_stream(0.6, {1.0}, {{0.5}}, Pmf({0, 1}, {0.5, 0.5})), ModelError);
}

TEST_CASE("validation flags structural defects") {
  ArrivalStreamSpec good = build_iid_stream(Pmf({0, 1}, {0.8, 0.2}));

  SUBCASE("empty system") {
    SystemSpec sys;
    CHECK(!validate_system(sys).valid());
  }
  SUBCASE("idle self-probability out of range") {
    ArrivalStreamSpec s = good;
    s.idle_self_prob = 1.0;
    CHECK(!validate_system(wrap(s)).valid());
  }
  SUBCASE("alpha probabilities must sum to one") {
    ArrivalStreamSpec s = good;
    s.alpha[0].prob = 0.9;
    CHECK(!validate_system(wrap(s)).valid());
  }
  SUBCASE("batches into active states must be at least one") {
    ArrivalStreamSpec s = good;
    s.T[0][0].batch = Pmf({0, 1}, {0.5, 0.5});
    const ValidationReport rep = validate_system(wrap(s));
    CHECK(!rep.valid());
    CHECK(mentions(rep, "batch"));
  }
  SUBCASE("T rows must be substochastic") {
    ArrivalStreamSpec s = good;
    s.T[0][0].prob = 1.2;
    CHECK(!validate_system(wrap(s)).valid());
  }
  SUBCASE("some exit to idle must exist") {
    ArrivalStreamSpec s = good;
    s.T[0][0].prob = 1.0;
    const ValidationReport rep = validate_system(wrap(s));
    CHECK(!rep.valid());
    CHECK(mentions(rep, "exit"));
  }
  SUBCASE("all active states must be reachable") {
    ArrivalStreamSpec s;
    s.idle_self_prob = 0.5;
    s.alpha = {{1.0, Pmf::point(1)}, {0.0, Pmf::point(1)}};
    s.T = {{{0.5, Pmf::point(1)}, {0.0, Pmf::point(1)}},
           {{0.0, Pmf::point(1)}, {0.5, Pmf::point(1)}}};
    const ValidationReport rep = validate_system(wrap(s));
    CHECK(!rep.valid());
  }
  SUBCASE("service must take at least one slot") {
    const ValidationReport rep = validate_system(wrap(good, Pmf({0, 1}, {0.5, 0.5})));
    CHECK(!rep.valid());
    CHECK(mentions(rep, "service"));
  }
  SUBCASE("dimension mismatch in T") {
    ArrivalStreamSpec s = good;
    s.T[0].push_back({0.1, Pmf::point(1)});
    CHECK(!validate_system(wrap(s)).valid());
  }
}

TEST_CASE("validation computes the load and flags saturation") {
  // Bernoulli(0.2) batches with service 9: rho = 1.8.
  ArrivalStreamSpec s = build_iid_stream(Pmf({0, 1}, {0.8, 0.2}));
  const ValidationReport rep = validate_system(wrap(s, Pmf::point(9)));
  CHECK(rep.rho == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(!rep.valid());
  CHECK(mentions(rep, "stability"));
}

TEST_CASE("random systems from the test generator validate cleanly") {
  std::mt19937_64 g(20260814);
  for (int trial = 0; trial < 25; ++trial) {
    const SystemSpec sys = testsupport::random_system(g, 1 + trial % 3, 0.75);
    const ValidationReport rep = validate_system(sys);
    for (const std::string& v : rep.violations) INFO(v);
    CHECK(rep.valid());
    CHECK(rep.rho < 0.76);
  }
}

TEST_CASE("matrix views agree with the entry lists") {
  std::mt19937_64 g(7);
  const ArrivalStreamSpec s = testsupport::random_stream(g, 3);
  const Eigen::MatrixXd full = s.full_matrix();
  REQUIRE(full.rows() == 4);
  // Rows of the full chain are stochastic.
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    CHECK(full.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(full(0, 0) == doctest::Approx(s.idle_self_prob).epsilon(1e-14));
  // Exit probabilities are the row deficits of T.
  const Eigen::VectorXd exits = s.exit_probs();
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(full(i + 1, 0) == doctest::Approx(exits(i)).epsilon(1e-12));
  }
  // Idle-targeting transitions carry no arrivals in the moment matrices.
  const Eigen::MatrixXd m1 = s.full_batch_moment(1);
  for (Eigen::Index i = 0; i < full.rows(); ++i) CHECK(m1(i, 0) == 0.0);
}
