// Copyright 2026 The kpi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kpi/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace kpi {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

// Reads keys from one JSON object and rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(path_, "expected an object");
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string PathOf(const std::string& key) const {
    return path_ + "." + key;
  }

  const json& At(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    if (!Has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) Fail(PathOf(key), "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) Fail(PathOf(key), "expected an integer");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      Fail(PathOf(key), e.what());
    }
  }

  void Finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) Fail(PathOf(item.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Matrix ReadMatrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) Fail(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array()) Fail(rp, "expected an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      out.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      Fail(rp, "ragged matrix row");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) Fail(rp + "[" + std::to_string(c) + "]", "expected a number");
      out(r, c) = v.get<double>();
    }
  }
  return out;
}

Vector ReadVector(const json& j, const std::string& path) {
  if (!j.is_array()) Fail(path, "expected an array");
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) Fail(path + "[" + std::to_string(k) + "]", "expected a number");
    out(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return out;
}

std::vector<int> ReadInts(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) Fail(path, "expected a non-empty array");
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number_integer()) {
      Fail(path + "[" + std::to_string(k) + "]", "expected an integer");
    }
    out.push_back(j[k].get<int>());
  }
  return out;
}

json MatrixJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json VectorJson(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

void ReadKernel(const json& j, const std::string& path, KernelSpec& k) {
  ObjectReader r(j, path);
  if (r.Has("family")) {
    const json& f = r.At("family");
    if (!f.is_string()) Fail(r.PathOf("family"), "expected a string");
    try {
      k.family = ParseKernelFamily(f.get<std::string>());
    } catch (const std::invalid_argument& e) {
      Fail(r.PathOf("family"), e.what());
    }
  }
  r.Get("length_scale", k.length_scale);
  r.Get("degree", k.degree);
  r.Get("offset", k.offset);
  r.Finish();
}

json KernelJson(const KernelSpec& k) {
  return json{{"family", std::string(KernelFamilyName(k.family))},
              {"length_scale", k.length_scale},
              {"degree", k.degree},
              {"offset", k.offset}};
}

void ReadSolver(const json& j, const std::string& path, SolverConfig& s) {
  ObjectReader r(j, path);
  r.Get("learning_rate", s.learning_rate);
  r.Get("max_outer_iters", s.max_outer_iters);
  r.Get("inner_tol", s.inner_tol);
  r.Get("inner_max_iters", s.inner_max_iters);
  r.Get("mc_samples", s.mc_samples);
  r.Get("dict_size", s.dict_size);
  r.Get("ridge", s.ridge);
  r.Get("convergence_tol", s.convergence_tol);
  r.Finish();
}

json SolverJson(const SolverConfig& s) {
  return json{{"learning_rate", s.learning_rate},
              {"max_outer_iters", s.max_outer_iters},
              {"inner_tol", s.inner_tol},
              {"inner_max_iters", s.inner_max_iters},
              {"mc_samples", s.mc_samples},
              {"dict_size", s.dict_size},
              {"ridge", s.ridge},
              {"convergence_tol", s.convergence_tol}};
}

void ReadScenario(const json& j, const std::string& path, ScenarioParams& p) {
  ObjectReader r(j, path);
  r.Get("dt", p.dt);
  r.Get("intersection_length", p.intersection_length);
  r.Get("safety_distance", p.safety_distance);
  r.Get("softening", p.softening);
  r.Get("reference_speed", p.reference_speed);
  r.Get("lane_offset", p.lane_offset);
  r.Get("q_position", p.q_position);
  r.Get("q_speed", p.q_speed);
  r.Get("r_accel", p.r_accel);
  r.Get("terminal_scale", p.terminal_scale);
  const bool counts = r.Has("cavs") || r.Has("hdvs");
  if (r.Has("vehicles")) {
    if (counts) Fail(path, "give either vehicles or cavs/hdvs, not both");
    const json& list = r.At("vehicles");
    const std::string lp = r.PathOf("vehicles");
    if (!list.is_array()) Fail(lp, "expected an array");
    p.vehicles.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      ObjectReader v(list[i], lp + "[" + std::to_string(i) + "]");
      VehicleSpec spec;
      std::string role = "cav";
      std::string approach = "west";
      v.Get("role", role);
      v.Get("approach", approach);
      try {
        spec.role = ParseVehicleRole(role);
        spec.approach = ParseApproach(approach);
      } catch (const std::invalid_argument& e) {
        Fail(lp + "[" + std::to_string(i) + "]", e.what());
      }
      v.Get("entry_offset", spec.entry_offset);
      v.Get("offset_spread", spec.offset_spread);
      v.Get("speed_min", spec.speed_min);
      v.Get("speed_max", spec.speed_max);
      v.Get("hdv_gain", spec.hdv_gain);
      v.Finish();
      p.vehicles.push_back(spec);
    }
  } else {
    int cavs = 2;
    int hdvs = 0;
    r.Get("cavs", cavs);
    r.Get("hdvs", hdvs);
    if (cavs < 1 || hdvs < 0) Fail(path, "need cavs >= 1 and hdvs >= 0");
    p.vehicles = DefaultVehicles(cavs, hdvs);
  }
  r.Finish();
}

json ScenarioJson(const ScenarioParams& p) {
  json vehicles = json::array();
  for (const auto& v : p.vehicles) {
    vehicles.push_back(json{{"role", std::string(VehicleRoleName(v.role))},
                            {"approach", std::string(ApproachName(v.approach))},
                            {"entry_offset", v.entry_offset},
                            {"offset_spread", v.offset_spread},
                            {"speed_min", v.speed_min},
                            {"speed_max", v.speed_max},
                            {"hdv_gain", v.hdv_gain}});
  }
  return json{{"dt", p.dt},
              {"intersection_length", p.intersection_length},
              {"safety_distance", p.safety_distance},
              {"softening", p.softening},
              {"reference_speed", p.reference_speed},
              {"lane_offset", p.lane_offset},
              {"q_position", p.q_position},
              {"q_speed", p.q_speed},
              {"r_accel", p.r_accel},
              {"terminal_scale", p.terminal_scale},
              {"vehicles", vehicles}};
}

void ReadLinear(const json& j, const std::string& path, LinearProblem& lp) {
  ObjectReader r(j, path);
  for (const char* key : {"A", "B", "Q", "R", "QF"}) {
    if (!r.Has(key)) Fail(r.PathOf(key), "required");
  }
  lp.A = ReadMatrix(r.At("A"), r.PathOf("A"));
  lp.B = ReadMatrix(r.At("B"), r.PathOf("B"));
  lp.Q = ReadMatrix(r.At("Q"), r.PathOf("Q"));
  lp.R = ReadMatrix(r.At("R"), r.PathOf("R"));
  lp.QF = ReadMatrix(r.At("QF"), r.PathOf("QF"));
  if (!r.Has("x0_min") || !r.Has("x0_max")) Fail(path, "x0_min and x0_max are required");
  lp.x0_min = ReadVector(r.At("x0_min"), r.PathOf("x0_min"));
  lp.x0_max = ReadVector(r.At("x0_max"), r.PathOf("x0_max"));
  r.Finish();
}

json LinearJson(const LinearProblem& lp) {
  return json{{"A", MatrixJson(lp.A)},   {"B", MatrixJson(lp.B)},
              {"Q", MatrixJson(lp.Q)},   {"R", MatrixJson(lp.R)},
              {"QF", MatrixJson(lp.QF)}, {"x0_min", VectorJson(lp.x0_min)},
              {"x0_max", VectorJson(lp.x0_max)}};
}

void ReadOnline(const json& j, const std::string& path, OnlineConfig& o,
                bool& true_model) {
  ObjectReader r(j, path);
  r.Get("window", o.window);
  r.Get("id_steps", o.id_steps);
  r.Get("sigma_exc", o.sigma_exc);
  r.Get("gamma", o.gamma);
  r.Get("lambda", o.lambda);
  r.Get("m0_scale", o.m0_scale);
  r.Get("pe_alpha", o.pe_alpha);
  r.Get("pe_window", o.pe_window);
  if (r.Has("initial_model")) {
    std::string s;
    r.Get("initial_model", s);
    if (s != "zero" && s != "truth") {
      Fail(r.PathOf("initial_model"), "expected \"zero\" or \"truth\"");
    }
    true_model = s == "truth";
  }
  if (r.Has("kernel")) ReadKernel(r.At("kernel"), r.PathOf("kernel"), o.kernel);
  if (r.Has("solver")) ReadSolver(r.At("solver"), r.PathOf("solver"), o.solver);
  r.Finish();
}

json OnlineJson(const OnlineConfig& o, bool true_model) {
  return json{{"window", o.window},
              {"id_steps", o.id_steps},
              {"sigma_exc", o.sigma_exc},
              {"gamma", o.gamma},
              {"lambda", o.lambda},
              {"m0_scale", o.m0_scale},
              {"pe_alpha", o.pe_alpha},
              {"pe_window", o.pe_window},
              {"initial_model", true_model ? "truth" : "zero"},
              {"kernel", KernelJson(o.kernel)},
              {"solver", SolverJson(o.solver)}};
}

void ReadProbe(const json& j, const std::string& path, ProbeConfig& p) {
  ObjectReader r(j, path);
  if (r.Has("samples")) p.samples = ReadInts(r.At("samples"), r.PathOf("samples"));
  if (r.Has("dict_sizes")) {
    p.dict_sizes = ReadInts(r.At("dict_sizes"), r.PathOf("dict_sizes"));
  }
  if (r.Has("horizons")) p.horizons = ReadInts(r.At("horizons"), r.PathOf("horizons"));
  r.Get("iterations", p.iterations);
  r.Finish();
}

json ProbeJson(const ProbeConfig& p) {
  return json{{"samples", p.samples},
              {"dict_sizes", p.dict_sizes},
              {"horizons", p.horizons},
              {"iterations", p.iterations}};
}

// Runs `check` and prefixes any invalid_argument with `path`.
template <typename F>
void Within(const std::string& path, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    Fail(path, e.what());
  }
}

std::size_t LineOf(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte; ++i) line += text[i] == '\n' ? 1 : 0;
  return line;
}

}  // namespace

std::string_view RunModeName(RunMode mode) {
  switch (mode) {
    case RunMode::kOffline: return "offline";
    case RunMode::kOnline: return "online";
    case RunMode::kOracleCompare: return "oracle-compare";
    case RunMode::kComplexityProbe: return "complexity-probe";
  }
  return "offline";
}

RunMode ParseRunMode(std::string_view name) {
  if (name == "offline") return RunMode::kOffline;
  if (name == "online") return RunMode::kOnline;
  if (name == "oracle-compare") return RunMode::kOracleCompare;
  if (name == "complexity-probe") return RunMode::kComplexityProbe;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void RunConfig::PropagateSeed() {
  solver.seed = seed;
  online.solver.seed = seed;
  online.horizon = horizon;
}

void RunConfig::Validate() const {
  if (horizon < 1) Fail("config.horizon", "must be >= 1");
  if (output_dir.empty()) Fail("config.output_dir", "must not be empty");
  Within("config.solver", [&] { solver.Validate(); });
  const bool auto_scale = kernel.family == KernelFamily::kGaussianRbf &&
                          !(kernel.length_scale > 0.0);
  if (!auto_scale) Within("config.kernel", [&] { kernel.Validate(); });
  if (problem == ProblemKind::kLinear) {
    Within("config.linear", [&] {
      LinearSystem sys{linear.A, linear.B, {static_cast<int>(linear.B.cols())}};
      sys.Validate();
      CostSpec c{linear.Q, linear.R, linear.QF, {}, {}};
      c.Validate(true);
      if (c.Q.rows() != sys.state_dim() || c.R.rows() != sys.input_dim()) {
        throw std::invalid_argument("weight dimensions do not match A and B");
      }
      if (linear.x0_min.size() != sys.state_dim() ||
          linear.x0_max.size() != sys.state_dim()) {
        throw std::invalid_argument("x0 box must have n entries");
      }
      if (!(linear.x0_min.array() <= linear.x0_max.array()).all()) {
        throw std::invalid_argument("x0_min must not exceed x0_max");
      }
    });
  } else {
    Within("config.scenario", [&] { scenario.Validate(); });
  }
  if (mode == RunMode::kOnline) {
    Within("config.online", [&] {
      OnlineConfig o = online;
      if (online_true_model && !o.theta0) o.theta0 = Matrix();  // filled at run time
      o.Validate();
    });
  }
  if (mode == RunMode::kOracleCompare && kernel.family != KernelFamily::kLinear) {
    Fail("config.kernel.family", "oracle-compare needs the linear kernel");
  }
  if (mode == RunMode::kComplexityProbe) {
    Within("config.probe", [&] {
      if (probe.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
      for (const auto* list : {&probe.samples, &probe.dict_sizes, &probe.horizons}) {
        for (int v : *list) {
          if (v < 1) throw std::invalid_argument("grid values must be >= 1");
        }
      }
    });
  }
}

RunConfig ParseConfig(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(source + ":" +
                                std::to_string(LineOf(text, e.byte)) +
                                ": parse error: " + e.what());
  }
  RunConfig cfg;
  ObjectReader r(j, "config");
  if (!r.Has("mode")) Fail("config.mode", "required");
  std::string mode;
  r.Get("mode", mode);
  Within("config.mode", [&] { cfg.mode = ParseRunMode(mode); });
  r.Get("seed", cfg.seed);
  r.Get("output_dir", cfg.output_dir);
  r.Get("horizon", cfg.horizon);
  std::string problem = "intersection";
  r.Get("problem", problem);
  if (problem == "intersection") {
    cfg.problem = ProblemKind::kIntersection;
  } else if (problem == "linear") {
    cfg.problem = ProblemKind::kLinear;
  } else {
    Fail("config.problem", "expected \"intersection\" or \"linear\"");
  }
  cfg.scenario.vehicles = DefaultVehicles(2, 0);
  if (r.Has("scenario")) ReadScenario(r.At("scenario"), "config.scenario", cfg.scenario);
  if (r.Has("linear")) {
    ReadLinear(r.At("linear"), "config.linear", cfg.linear);
  } else if (cfg.problem == ProblemKind::kLinear) {
    Fail("config.linear", "required when problem is linear");
  }
  if (r.Has("kernel")) ReadKernel(r.At("kernel"), "config.kernel", cfg.kernel);
  if (r.Has("solver")) ReadSolver(r.At("solver"), "config.solver", cfg.solver);
  if (r.Has("online")) {
    ReadOnline(r.At("online"), "config.online", cfg.online, cfg.online_true_model);
  }
  if (r.Has("probe")) ReadProbe(r.At("probe"), "config.probe", cfg.probe);
  r.Finish();
  cfg.PropagateSeed();
  cfg.Validate();
  return cfg;
}

RunConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path);
}

std::string SerializeConfig(const RunConfig& cfg) {
  json j{{"mode", std::string(RunModeName(cfg.mode))},
         {"seed", cfg.seed},
         {"output_dir", cfg.output_dir},
         {"horizon", cfg.horizon},
         {"problem", cfg.problem == ProblemKind::kLinear ? "linear" : "intersection"},
         {"scenario", ScenarioJson(cfg.scenario)}};
  if (cfg.problem == ProblemKind::kLinear) j["linear"] = LinearJson(cfg.linear);
  j["kernel"] = KernelJson(cfg.kernel);
  j["solver"] = SolverJson(cfg.solver);
  j["online"] = OnlineJson(cfg.online, cfg.online_true_model);
  j["probe"] = ProbeJson(cfg.probe);
  return j.dump(2) + "\n";
}

}  // namespace kpi
