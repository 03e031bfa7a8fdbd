#include "mfpod/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mfpod {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Validation, where + ": " + what);
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) invalid(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) invalid(where, "unknown key '" + k + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) invalid(where + "." + key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) invalid(where + "." + key, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) invalid(where + "." + key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) invalid(where + "." + key, "expected a string");
    }
    out = it->get<T>();
  } catch (const json::exception& e) {
    invalid(where + "." + key, e.what());
  }
}

template <class T>
void read_list(const json& obj, const char* key, std::vector<T>& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) invalid(where + "." + key, "expected an array");
  out.clear();
  for (const auto& v : *it) {
    if (std::is_integral_v<T> ? !v.is_number_integer() : !v.is_number()) {
      invalid(where + "." + key, "expected numbers");
    }
    out.push_back(v.get<T>());
  }
}

void read_profile(const json& obj, FidelityProfile& p, const std::string& where) {
  allow_keys(obj, where, {"n", "dt", "d", "save_every"});
  read(obj, "n", p.n, where);
  read(obj, "dt", p.dt, where);
  read(obj, "d", p.d, where);
  read(obj, "save_every", p.save_every, where);
}

std::vector<double> read_params(const json& obj, const std::string& where) {
  if (obj.is_array()) {
    std::vector<double> v;
    for (const auto& x : obj) {
      if (!x.is_number()) invalid(where, "expected numbers");
      v.push_back(x.get<double>());
    }
    return v;
  }
  allow_keys(obj, where, {"lo", "hi", "count", "values"});
  if (obj.contains("values")) {
    if (obj.size() != 1) invalid(where, "'values' excludes lo/hi/count");
    return read_params(obj["values"], where + ".values");
  }
  ParameterGrid g;
  read(obj, "lo", g.lo, where);
  read(obj, "hi", g.hi, where);
  read(obj, "count", g.count, where);
  try {
    return g.values();
  } catch (const Error& e) {
    invalid(where, e.what());
  }
}

void read_train(const json& obj, TrainConfig& t, const std::string& where) {
  allow_keys(obj, where, {"n_batch", "K", "epochs", "learning_rate", "beta1", "beta2", "adam_eps",
                          "hidden", "layers", "window_stride", "validation_fraction", "lr_decay",
                          "grad_clip", "use_time"});
  read(obj, "n_batch", t.n_batch, where);
  read(obj, "K", t.K, where);
  read(obj, "epochs", t.epochs, where);
  read(obj, "learning_rate", t.learning_rate, where);
  read(obj, "beta1", t.beta1, where);
  read(obj, "beta2", t.beta2, where);
  read(obj, "adam_eps", t.adam_eps, where);
  read(obj, "hidden", t.hidden, where);
  read(obj, "layers", t.layers, where);
  read(obj, "window_stride", t.window_stride, where);
  read(obj, "validation_fraction", t.validation_fraction, where);
  read(obj, "lr_decay", t.lr_decay, where);
  read(obj, "grad_clip", t.grad_clip, where);
  read(obj, "use_time", t.use_time, where);
}

void check_profile(const FidelityProfile& p, const std::string& where) {
  if (p.n < 4 || p.n % 2 != 0) invalid(where, "n must be an even integer >= 4");
  if (!(p.dt > 0.0)) invalid(where, "dt must be positive");
  if (!(p.d > 0.0)) invalid(where, "d must be positive");
  if (p.save_every < 1) invalid(where, "save_every must be >= 1");
}

}  // namespace

Provenance RunConfig::provenance() const {
  Provenance p;
  p.problem = problem;
  p.hf = hf;
  p.lf = lf;
  p.T_train = T_train;
  if (!train_mus.empty()) {
    const auto [lo, hi] = std::minmax_element(train_mus.begin(), train_mus.end());
    p.param_lo = Vector::Constant(1, *lo);
    p.param_hi = Vector::Constant(1, *hi);
  }
  return p;
}

RunConfig default_run_config(Problem p) {
  RunConfig c;
  c.problem = default_problem_spec(p);
  if (p == Problem::ReactionDiffusion) {
    c.hf = {100, 0.05, 0.05, 1};
    c.lf = {32, 0.05, 0.1, 1};
    c.train_mus = ParameterGrid{0.5, 1.5, 10}.values();
    c.test_mus = ParameterGrid{0.5, 1.5, 25}.values();
    c.T_train = 40.0;
    c.T_test = 80.0;
    c.offline.pod_rule = TruncationRule::fixed(9);
    c.offline.lift_mode = InterpMode::Nearest;
  } else {
    c.hf = {200, 0.25, 0.001, 1};
    c.lf = {50, 1.0, 0.001, 1};
    c.train_mus = ParameterGrid{1.0, 5.0, 5}.values();
    c.test_mus = {1.5, 2.5, 3.5, 4.5};
    c.T_train = 12.0;
    c.T_test = 20.0;
    c.offline.pod_rule = TruncationRule::fixed(17);
    c.offline.lift_mode = InterpMode::Bilinear;
  }
  return c;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid(source, std::string("malformed JSON: ") + e.what());
  }
  allow_keys(doc, source, {"problem", "domain", "hf", "lf", "train_params", "test_params", "T_train",
                           "T_test", "pod", "lift", "model", "train", "search", "eval", "paths",
                           "seed", "threads"});

  std::string problem = "rd";
  read(doc, "problem", problem, source);
  RunConfig c;
  try {
    c = default_run_config(parse_problem(problem));
  } catch (const Error& e) {
    invalid(source + ".problem", e.what());
  }

  if (doc.contains("domain")) {
    const auto& d = doc["domain"];
    allow_keys(d, source + ".domain", {"half_length", "cfl", "dealias", "rd_initial"});
    read(d, "half_length", c.problem.half_length, source + ".domain");
    read(d, "cfl", c.problem.cfl, source + ".domain");
    read(d, "dealias", c.problem.dealias, source + ".domain");
    if (d.contains("rd_initial")) {
      std::string kind;
      read(d, "rd_initial", kind, source + ".domain");
      try {
        c.problem.rd_initial = parse_rd_initial(kind);
      } catch (const Error& e) {
        invalid(source + ".domain.rd_initial", e.what());
      }
    }
  }
  if (doc.contains("hf")) read_profile(doc["hf"], c.hf, source + ".hf");
  if (doc.contains("lf")) read_profile(doc["lf"], c.lf, source + ".lf");
  if (doc.contains("train_params")) c.train_mus = read_params(doc["train_params"], source + ".train_params");
  if (doc.contains("test_params")) c.test_mus = read_params(doc["test_params"], source + ".test_params");
  read(doc, "T_train", c.T_train, source);
  read(doc, "T_test", c.T_test, source);

  if (doc.contains("pod")) {
    const auto& p = doc["pod"];
    const std::string where = source + ".pod";
    allow_keys(p, where, {"eps", "modes", "center"});
    if (p.contains("eps") == p.contains("modes")) invalid(where, "give exactly one of 'eps' or 'modes'");
    if (p.contains("eps")) {
      double eps = 0.0;
      read(p, "eps", eps, where);
      c.offline.pod_rule = TruncationRule::tolerance(eps);
    } else {
      int modes = 0;
      read(p, "modes", modes, where);
      c.offline.pod_rule = TruncationRule::fixed(modes);
    }
    read(p, "center", c.offline.center, where);
  }
  if (doc.contains("lift")) {
    std::string mode;
    read(doc, "lift", mode, source);
    if (mode == "nearest") {
      c.offline.lift_mode = InterpMode::Nearest;
    } else if (mode == "bilinear") {
      c.offline.lift_mode = InterpMode::Bilinear;
    } else {
      invalid(source + ".lift", "expected 'nearest' or 'bilinear'");
    }
  }
  if (doc.contains("model")) {
    std::string kind;
    read(doc, "model", kind, source);
    if (kind == "lstm") {
      c.offline.kind = MapKind::Lstm;
    } else if (kind == "static") {
      c.offline.kind = MapKind::Static;
    } else {
      invalid(source + ".model", "expected 'lstm' or 'static'");
    }
  }
  if (doc.contains("train")) read_train(doc["train"], c.offline.train, source + ".train");
  if (doc.contains("search")) {
    const auto& s = doc["search"];
    const std::string where = source + ".search";
    allow_keys(s, where, {"budget", "hidden", "layers", "K", "n_batch", "epochs", "learning_rate"});
    read(s, "budget", c.search_budget, where);
    read_list(s, "hidden", c.search_space.hidden, where);
    read_list(s, "layers", c.search_space.layers, where);
    read_list(s, "K", c.search_space.K, where);
    read_list(s, "n_batch", c.search_space.n_batch, where);
    read_list(s, "epochs", c.search_space.epochs, where);
    read_list(s, "learning_rate", c.search_space.learning_rate, where);
  }
  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    allow_keys(e, source + ".eval", {"timing_runs", "hf_timing_count"});
    read(e, "timing_runs", c.eval.timing_runs, source + ".eval");
    read(e, "hf_timing_count", c.eval.hf_timing_count, source + ".eval");
  }
  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    const std::string where = source + ".paths";
    allow_keys(p, where, {"hf", "lf", "reference", "model", "out_dir"});
    std::string s;
    auto path = [&](const char* key, std::filesystem::path& out) {
      if (p.contains(key)) {
        read(p, key, s, where);
        out = s;
      }
    };
    path("hf", c.hf_path);
    path("lf", c.lf_path);
    path("reference", c.reference_path);
    path("model", c.model_path);
    path("out_dir", c.out_dir);
  }
  read(doc, "seed", c.seed, source);
  read(doc, "threads", c.threads, source);

  check_profile(c.hf, source + ".hf");
  check_profile(c.lf, source + ".lf");
  if (!(c.problem.half_length > 0.0)) invalid(source + ".domain", "half_length must be positive");
  if (!(c.problem.cfl > 0.0)) invalid(source + ".domain", "cfl must be positive");
  if (c.train_mus.empty()) invalid(source + ".train_params", "no training parameters");
  if (!(c.T_train > 0.0)) invalid(source, "T_train must be positive");
  if (!(c.T_test >= 0.0)) invalid(source, "T_test must be nonnegative");
  if (c.search_budget < 1) invalid(source + ".search", "budget must be >= 1");
  if (c.threads < 1) invalid(source, "threads must be >= 1");
  if (c.eval.timing_runs < 0) invalid(source + ".eval", "timing_runs must be >= 0");
  c.offline.train.seed = c.seed;
  try {
    c.offline.train.validate();
  } catch (const Error& e) {
    invalid(source + ".train", e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void apply_environment(RunConfig& cfg) {
  const char* env = std::getenv("MFPOD_SEED");
  if (!env || !*env) return;
  try {
    std::size_t used = 0;
    const unsigned long long seed = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    cfg.seed = seed;
    cfg.offline.train.seed = seed;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Validation, std::string("MFPOD_SEED is not an unsigned integer: ") + env);
  }
}

}  // namespace mfpod
