#include <doctest.h>

#include <string>

#include <json.hpp>

#include "prioq/errors.hpp"
#include "prioq/model_io.hpp"
#include "prioq/stream_model.hpp"
#include "support/random_system.hpp"

using namespace prioq;
using nlohmann::json;

namespace {

json minimal_model() {
  return json::parse(R"({
    "classes": [{
      "p": 0.8,
      "alpha": [{"prob": 1.0, "batch": {"values": [1], "probs": [1.0]}}],
      "T": [[{"prob": 0.2, "batch": {"values": [1, 2], "probs": [0.5, 0.5]}}]],
      "service": {"values": [2], "probs": [1.0]}
    }]
  })");
}

void expect_error(const json& j, const std::string& needle) {
  try {
    parse_system(j);
    FAIL("expected a ModelError mentioning " << needle);
  } catch (const ModelError& e) {
    INFO(e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

bool streams_equal(const ArrivalStreamSpec& a, const ArrivalStreamSpec& b) {
  if (a.idle_self_prob != b.idle_self_prob || a.order() != b.order()) return false;
  for (std::size_t j = 0; j < a.order(); ++j) {
    if (a.alpha[j].prob != b.alpha[j].prob) return false;
    if (a.alpha[j].prob > 0.0 && !(a.alpha[j].batch == b.alpha[j].batch)) return false;
    for (std::size_t i = 0; i < a.order(); ++i) {
      if (a.T[i][j].prob != b.T[i][j].prob) return false;
      if (a.T[i][j].prob > 0.0 && !(a.T[i][j].batch == b.T[i][j].batch)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("parse accepts the documented schema") {
  const SystemSpec sys = parse_system(minimal_model());
  REQUIRE(sys.num_classes() == 1);
  CHECK(sys.classes[0].arrivals.idle_self_prob == 0.8);
  CHECK(sys.classes[0].arrivals.T[0][0].batch == Pmf({1, 2}, {0.5, 0.5}));
  CHECK(sys.classes[0].service.pmf == Pmf::point(2));
  CHECK(validate_system(sys).valid());
}

TEST_CASE("json round trip preserves the system") {
  std::mt19937_64 g(41);
  for (int trial = 0; trial < 6; ++trial) {
    const SystemSpec sys = testsupport::random_system(g, 1 + trial % 3, 0.8);
    const SystemSpec back = parse_system(system_to_json(sys));
    REQUIRE(back.num_classes() == sys.num_classes());
    for (std::size_t k = 0; k < sys.num_classes(); ++k) {
      CHECK(streams_equal(sys.classes[k].arrivals, back.classes[k].arrivals));
      CHECK(sys.classes[k].service.pmf == back.classes[k].service.pmf);
    }
  }
}

TEST_CASE("parse errors carry the offending path") {
  json j = minimal_model();
  j["classes"][0].erase("service");
  expect_error(j, "classes[0]");

  j = minimal_model();
  j["classes"][0]["T"][0][0].erase("batch");
  expect_error(j, "classes[0].T[0][0]");

  j = minimal_model();
  j["classes"][0]["alpha"][0]["batch"]["values"] = {1.5};
  expect_error(j, "integers");

  j = minimal_model();
  j["classes"][0]["p"] = "0.8";
  expect_error(j, "number");

  expect_error(json::parse("{}"), "classes");
  expect_error(json::parse(R"({"classes": []})"), "classes");
}

TEST_CASE("zero-probability entries may omit the batch") {
  json j = minimal_model();
  j["classes"][0]["alpha"] = {json{{"prob", 1.0}, {"batch", {{"values", {1}}, {"probs", {1.0}}}}},
                              json{{"prob", 0.0}}};
  j["classes"][0]["T"] = {
      {json{{"prob", 0.2}, {"batch", {{"values", {1}}, {"probs", {1.0}}}}}, json{{"prob", 0.0}}},
      {json{{"prob", 0.0}}, json{{"prob", 0.0}}}};
  const SystemSpec sys = parse_system(j);
  CHECK(sys.classes[0].arrivals.order() == 2);
  // A serialization round trip keeps omitting them.
  const json out = system_to_json(sys);
  CHECK(!out["classes"][0]["alpha"][1].contains("batch"));
}

TEST_CASE("load reports missing files") {
  try {
    load_system("/nonexistent/model.json");
    FAIL("expected a ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
  }
}
