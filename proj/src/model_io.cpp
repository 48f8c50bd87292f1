#include "prioq/model_io.hpp"

#include <fstream>

#include "prioq/errors.hpp"

namespace prioq {

namespace {

using nlohmann::json;

std::string at(const std::string& where) { return where.empty() ? "" : where + ": "; }

double read_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ModelError(at(where) + "expected a number");
  return j.get<double>();
}

Pmf read_pmf(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("values") || !j.contains("probs")) {
    throw ModelError(at(where) + "expected an object with \"values\" and \"probs\"");
  }
  const json& values = j["values"];
  const json& probs = j["probs"];
  if (!values.is_array() || !probs.is_array() || values.size() != probs.size()) {
    throw ModelError(at(where) + "\"values\" and \"probs\" must be equal-length arrays");
  }
  std::vector<std::int64_t> v;
  std::vector<double> p;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number_integer()) {
      throw ModelError(at(where) + "support values must be integers");
    }
    v.push_back(values[i].get<std::int64_t>());
    p.push_back(read_number(probs[i], where + ".probs[" + std::to_string(i) + "]"));
  }
  try {
    return Pmf(std::move(v), std::move(p));
  } catch (const ModelError& e) {
    throw ModelError(at(where) + e.what());
  }
}

TransitionEntry read_entry(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("prob")) {
    throw ModelError(at(where) + "expected an object with \"prob\"");
  }
  TransitionEntry e;
  e.prob = read_number(j["prob"], where + ".prob");
  if (j.contains("batch")) {
    e.batch = read_pmf(j["batch"], where + ".batch");
  } else if (e.prob > 0.0) {
    throw ModelError(at(where) + "entry with positive prob needs a \"batch\"");
  }
  return e;
}

json pmf_to_json(const Pmf& pmf) {
  return json{{"values", pmf.values()}, {"probs", pmf.probs()}};
}

json entry_to_json(const TransitionEntry& e) {
  json j{{"prob", e.prob}};
  if (e.prob > 0.0) j["batch"] = pmf_to_json(e.batch);
  return j;
}

}  // namespace

SystemSpec parse_system(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("classes") || !j["classes"].is_array() ||
      j["classes"].empty()) {
    throw ModelError("model: expected an object with a non-empty \"classes\" array");
  }
  SystemSpec system;
  for (std::size_t k = 0; k < j["classes"].size(); ++k) {
    const std::string where = "classes[" + std::to_string(k) + "]";
    const json& jc = j["classes"][k];
    if (!jc.is_object()) throw ModelError(where + ": expected an object");
    for (const char* key : {"p", "alpha", "T", "service"}) {
      if (!jc.contains(key)) throw ModelError(where + ": missing \"" + key + "\"");
    }
    ClassSpec c;
    c.arrivals.idle_self_prob = read_number(jc["p"], where + ".p");
    const json& alpha = jc["alpha"];
    const json& t = jc["T"];
    if (!alpha.is_array() || alpha.empty()) {
      throw ModelError(where + ".alpha: expected a non-empty array");
    }
    const std::size_t m = alpha.size();
    for (std::size_t i = 0; i < m; ++i) {
      c.arrivals.alpha.push_back(read_entry(alpha[i], where + ".alpha[" + std::to_string(i) + "]"));
    }
    if (!t.is_array() || t.size() != m) {
      throw ModelError(where + ".T: expected " + std::to_string(m) + " rows");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const json& row = t[i];
      const std::string rw = where + ".T[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != m) {
        throw ModelError(rw + ": expected " + std::to_string(m) + " entries");
      }
      std::vector<TransitionEntry> out;
      for (std::size_t col = 0; col < m; ++col) {
        out.push_back(read_entry(row[col], rw + "[" + std::to_string(col) + "]"));
      }
      c.arrivals.T.push_back(std::move(out));
    }
    c.service.pmf = read_pmf(jc["service"], where + ".service");
    system.classes.push_back(std::move(c));
  }
  return system;
}

SystemSpec load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ModelError("cannot open model file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
  return parse_system(j);
}

nlohmann::json system_to_json(const SystemSpec& system) {
  json classes = json::array();
  for (const ClassSpec& c : system.classes) {
    json alpha = json::array();
    for (const TransitionEntry& e : c.arrivals.alpha) alpha.push_back(entry_to_json(e));
    json t = json::array();
    for (const auto& row : c.arrivals.T) {
      json jrow = json::array();
      for (const TransitionEntry& e : row) jrow.push_back(entry_to_json(e));
      t.push_back(jrow);
    }
    classes.push_back(json{{"p", c.arrivals.idle_self_prob},
                           {"alpha", alpha},
                           {"T", t},
                           {"service", pmf_to_json(c.service.pmf)}});
  }
  return json{{"classes", classes}};
}

}  // namespace prioq
