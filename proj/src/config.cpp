#include "momlab/config.hpp"

#include "momlab/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace momlab {

// ---------------------------------------------------------------------------
// TOML subset

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::vector<std::string> split_dotted(const std::string& name, std::size_t lineno) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : name) {
    if (c == '.') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  for (const auto& p : parts)
    if (p.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty name component");
  return parts;
}

nlohmann::json parse_scalar(const std::string& raw, std::size_t lineno) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError("config line " + std::to_string(lineno) + ": bad string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        ++i;
        out.push_back(v[i] == 'n' ? '\n' : v[i]);
      } else {
        out.push_back(v[i]);
      }
    }
    return out;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  std::string num;
  for (char c : v)
    if (c != '_') num.push_back(c);
  const bool is_int = num.find_first_of(".eEn") == std::string::npos;
  try {
    std::size_t pos = 0;
    if (is_int) {
      const long long i = std::stoll(num, &pos);
      if (pos == num.size()) return i;
    } else {
      const double d = std::stod(num, &pos);
      if (pos == num.size()) return d;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("config line " + std::to_string(lineno) + ": cannot parse value '" + v + "'");
}

nlohmann::json parse_value(const std::string& raw, std::size_t lineno) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    const std::string body = v.substr(1, v.size() - 2);
    std::string cur;
    bool in_str = false;
    for (char c : body) {
      if (c == '"') in_str = !in_str;
      if (c == ',' && !in_str) {
        if (!trim(cur).empty()) arr.push_back(parse_scalar(cur, lineno));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!trim(cur).empty()) arr.push_back(parse_scalar(cur, lineno));
    return arr;
  }
  return parse_scalar(v, lineno);
}

nlohmann::json* descend(nlohmann::json& root, const std::vector<std::string>& path, std::size_t lineno) {
  nlohmann::json* node = &root;
  for (const auto& key : path) {
    if (node->is_array()) {
      if (node->empty()) throw ConfigError("config line " + std::to_string(lineno) + ": bad table path");
      node = &node->back();
    }
    if (!node->is_object()) throw ConfigError("config line " + std::to_string(lineno) + ": '" + key + "' is not a table");
    if (!node->contains(key)) (*node)[key] = nlohmann::json::object();
    node = &(*node)[key];
  }
  return node;
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 4 || line.substr(line.size() - 2) != "]]")
        throw ConfigError("config line " + std::to_string(lineno) + ": bad array-of-tables header");
      auto path = split_dotted(line.substr(2, line.size() - 4), lineno);
      const std::string last = path.back();
      path.pop_back();
      nlohmann::json* parent = descend(root, path, lineno);
      if (parent->is_array()) parent = &parent->back();
      if (!parent->contains(last)) (*parent)[last] = nlohmann::json::array();
      auto& arr = (*parent)[last];
      if (!arr.is_array()) throw ConfigError("config line " + std::to_string(lineno) + ": '" + last + "' is not an array");
      arr.push_back(nlohmann::json::object());
      table = &arr.back();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad table header");
      table = descend(root, split_dotted(line.substr(1, line.size() - 2), lineno), lineno);
      if (table->is_array()) table = &table->back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    auto path = split_dotted(line.substr(0, eq), lineno);
    const std::string key = path.back();
    path.pop_back();
    nlohmann::json* target = path.empty() ? table : descend(*table, path, lineno);
    if (target->contains(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    (*target)[key] = parse_value(line.substr(eq + 1), lineno);
  }
  return root;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (is_json) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return parse_toml(text);
}

nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay) {
  if (!base.is_object() || !overlay.is_object()) return overlay;
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      base[it.key()] = merge_config(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
  return base;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

using nlohmann::json;

json toy_problem() {
  return {{"kind", "mlp"},          {"layers", {2, 32, 32, 2}}, {"activation", "tanh"}, {"dataset", "two_moons"},
          {"n_samples", 200},        {"noise", 0.25},            {"seed", 2}};
}

json phase(double eta, double mu, double wd, int batch) {
  return {{"learning_rate", eta}, {"momentum", mu}, {"weight_decay", wd}, {"batch_size", batch}};
}

const std::map<std::string, json>& presets() {
  static const std::map<std::string, json> p = [] {
    std::map<std::string, json> m;
    m["fig1-large"] = {{"command", "train"},
                       {"seed", 1},
                       {"problem", toy_problem()},
                       {"schedule", {{"phases", {phase(0.1, 0.9, 1e-4, 16)}}}},
                       {"training", {{"epochs", 100}, {"compare_momenta", {0.0, 0.5, 0.9}}}}};
    m["fig1-small"] = {{"command", "train"},
                       {"seed", 1},
                       {"problem", toy_problem()},
                       {"schedule", {{"phases", {phase(0.001, 0.9, 1e-4, 16)}}}},
                       {"training", {{"epochs", 100}, {"compare_momenta", {0.0, 0.5, 0.9}}}}};
    m["fig2"] = {{"command", "quadratic-demo"},
                 {"seed", 7},
                 {"problem", {{"kind", "quadratic"}, {"dim", 100}, {"condition_number", 1e5}, {"seed", 7}}},
                 {"demo",
                  {{"momenta", {0.0, 0.5, 0.9, 0.95}},
                   {"iterations", 10000},
                   {"eta_min", 1e-7},
                   {"eta_max", 5e5},
                   {"eta_count", 50}}}};
    m["fig4"] = {{"command", "sweep"},
                 {"seed", 1},
                 {"problem", toy_problem()},
                 {"schedule", {{"phases", {phase(0.1, 0.0, 1e-4, 16)}}}},
                 {"training", {{"epochs", 30}}},
                 {"sweep",
                  {{"mode", "random"},
                   {"samples", 20},
                   {"searches",
                    {{{"mu", 0.0}, {"eta_min", 1e-3}, {"eta_max", 10.0}},
                     {{"mu", 0.9}, {"eta_min", 1e-4}, {"eta_max", 1.0}},
                     {{"mu", 0.99}, {"eta_min", 1e-5}, {"eta_max", 1e-1}}}}}}};
    m["fig11-small"] = {{"command", "sweep"},
                        {"seed", 7},
                        {"problem", {{"kind", "quadratic"}, {"dim", 100}, {"condition_number", 1e5}, {"seed", 7}}},
                        {"schedule", {{"phases", {phase(1e-5, 0.0, 0.0, 0)}}}},
                        {"training", {{"epochs", 1}, {"iters_per_epoch", 1000}}},
                        {"sweep",
                         {{"mode", "grid"},
                          {"eta_min", 1e-7},
                          {"eta_max", 1e-4},
                          {"eta_count", 10},
                          {"one_minus_mu_min", 1e-3},
                          {"one_minus_mu_max", 1.0},
                          {"one_minus_mu_count", 10}}}};
    m["two-phase-toy"] = {{"command", "train"},
                          {"seed", 1},
                          {"problem", toy_problem()},
                          {"schedule",
                           {{"phases", {phase(0.9236708571873865, 0.0, 1e-4, 16), phase(0.005, 0.95, 1e-4, 0)}},
                            {"transition_epoch", {60}}}},
                          {"training", {{"epochs", 100}, {"iters_per_epoch", 20}}}};
    // Phase settings of the CIFAR-10 two-phase experiment, swept over the
    // transition epoch on the toy network.
    m["cifar-two-phase"] = {{"command", "sweep"},
                            {"seed", 1},
                            {"problem", toy_problem()},
                            {"schedule",
                             {{"phases", {phase(0.9236708571873865, 0.0, 1e-4, 16), phase(0.005, 0.95, 1e-4, 16)}},
                              {"transition_epoch", {50}}}},
                            {"training", {{"epochs", 100}}},
                            {"sweep",
                             {{"mode", "transition"},
                              {"transitions", {10, 20, 30, 40, 50, 60, 70, 80, 90}},
                              {"seeds", {1, 2, 3}},
                              {"bins", 10}}}};
    m["equivalence-quadratic"] = {
        {"command", "equivalence"},
        {"seed", 3},
        {"problem", {{"kind", "quadratic"}, {"dim", 20}, {"condition_number", 100.0}, {"seed", 3}}},
        {"schedule", {{"phases", {phase(1e-3, 0.0, 0.0, 0)}}}},
        {"training", {{"epochs", 1}, {"iters_per_epoch", 2000}}},
        {"equivalence",
         {{"baseline_eta", {0.005, 0.01, 0.02, 0.03, 0.05}},
          {"eta_units", "inverse_lambda_max"},
          {"mus", {0.9, 0.99}},
          {"candidate_min", 1e-6},
          {"candidate_max", 1.0},
          {"candidates_per_decade", 20},
          {"space", "log"}}}};
    for (auto& [name, cfg] : m) cfg["name"] = name;
    return m;
  }();
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : presets()) out.push_back(k);
  return out;
}

nlohmann::json preset(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& n : preset_names()) known += " " + n;
    throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a table");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())
      return static_cast<std::int64_t>(v.get<double>());
    throw ConfigError(where(key) + " must be an integer");
  }

  std::size_t count(const std::string& key, std::size_t def) {
    const auto v = integer(key, static_cast<std::int64_t>(def));
    if (v < 0) throw ConfigError(where(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> def) {
    const auto vals = numbers(key, {});
    if (!j_.contains(key)) return def;
    std::vector<std::int64_t> out;
    for (double d : vals) {
      if (std::floor(d) != d) throw ConfigError(where(key) + " must contain integers");
      out.push_back(static_cast<std::int64_t>(d));
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where());
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : "[" + path_ + "]";
    return path_.empty() ? "'" + key + "'" : "'" + path_ + "." + key + "'";
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

ProblemConfig parse_problem(const nlohmann::json& j) {
  Section s(j, "problem");
  ProblemConfig p;
  p.kind = s.text("kind", p.kind);
  require(p.kind == "quadratic" || p.kind == "mlp", "problem.kind must be 'quadratic' or 'mlp'");
  p.data_seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<std::int64_t>(p.data_seed)));
  if (p.kind == "quadratic") {
    p.dim = s.integer("dim", p.dim);
    p.condition_number = s.number("condition_number", p.condition_number);
    require(p.dim >= 2, "problem.dim must be >= 2");
    require(p.condition_number >= 1.0 && std::isfinite(p.condition_number), "problem.condition_number must be >= 1");
  } else {
    const auto layers = s.integers("layers", {2, 32, 32, 2});
    p.layers.assign(layers.begin(), layers.end());
    p.activation = s.text("activation", p.activation);
    p.dataset = s.text("dataset", p.dataset);
    p.n_samples = s.count("n_samples", p.n_samples);
    p.noise = s.number("noise", p.noise);
    p.heldout = s.count("heldout", p.heldout);
    require(p.layers.size() >= 2, "problem.layers needs at least two entries");
    for (int l : p.layers) require(l >= 1, "problem.layers entries must be positive");
    require(p.layers.front() == 2, "problem.layers must start with 2 (input width)");
    require(p.layers.back() >= 2, "problem.layers must end with at least 2 classes");
    require(p.activation == "tanh" || p.activation == "relu", "problem.activation must be tanh or relu");
    require(p.dataset == "two_gaussians" || p.dataset == "two_moons" || p.dataset == "random_labels",
            "problem.dataset must be two_gaussians, two_moons or random_labels");
    require(p.n_samples >= 2, "problem.n_samples must be >= 2");
    require(p.noise >= 0.0, "problem.noise must be >= 0");
    require(p.heldout < p.n_samples && p.n_samples - p.heldout >= 2,
            "problem.heldout must leave at least two training samples");
  }
  s.finish();
  return p;
}

PhaseSpec parse_phase(const nlohmann::json& j, std::size_t index) {
  Section s(j, "schedule.phases[" + std::to_string(index) + "]");
  PhaseSpec p;
  p.hyper.learning_rate = s.number("learning_rate", 0.1);
  p.hyper.momentum = s.number("momentum", 0.0);
  p.hyper.weight_decay = s.number("weight_decay", 0.0);
  const auto bs = s.integer("batch_size", 0);
  require(bs >= 0, s.where("batch_size") + " must be >= 0 (0 = full batch)");
  p.batch.batch_size = static_cast<std::size_t>(bs);
  const auto algo = s.text("algorithm", "sgd_momentum");
  require(algo == "sgd_momentum", s.where("algorithm") + " must be sgd_momentum");
  s.finish();
  try {
    p.hyper.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(s.where() + ": " + e.what());
  }
  return p;
}

}  // namespace

ExperimentConfig parse_experiment(const nlohmann::json& j) {
  Section top(j, "");
  ExperimentConfig c;
  c.name = top.text("name", "custom");
  c.command = top.text("command", "");
  require(c.command == "quadratic-demo" || c.command == "train" || c.command == "equivalence" ||
              c.command == "sweep",
          "command must be one of quadratic-demo, train, equivalence, sweep");
  const auto seed = top.integer("seed", 0);
  require(seed >= 0, "seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  if (top.has("problem")) c.problem = parse_problem(top.raw("problem"));
  const bool quadratic = c.problem.kind == "quadratic";

  bool have_schedule = false;
  if (top.has("schedule")) {
    have_schedule = true;
    Section s(top.raw("schedule"), "schedule");
    require(s.has("phases"), "schedule.phases is required");
    const auto& phases = s.raw("phases");
    require(phases.is_array() && !phases.empty(), "schedule.phases must be a non-empty array of tables");
    for (std::size_t i = 0; i < phases.size(); ++i) c.schedule.phases.push_back(parse_phase(phases[i], i));
    c.schedule.transition_epochs = s.integers("transition_epoch", {});
    c.training.reset_momentum = s.boolean("reset_momentum", true);
    s.finish();
    require(c.schedule.transition_epochs.size() + 1 == c.schedule.phases.size(),
            "schedule.transition_epoch needs exactly one entry per phase boundary");
    for (const auto& p : c.schedule.phases)
      require(p.batch.full_batch() || !quadratic, "quadratic problems only support full-batch phases (batch_size = 0)");
  }

  if (top.has("training")) {
    Section s(top.raw("training"), "training");
    c.training.epochs = s.integer("epochs", c.training.epochs);
    c.training.iters_per_epoch = s.integer("iters_per_epoch", c.training.iters_per_epoch);
    c.training.logging = s.text("logging", c.training.logging);
    c.training.compare_momenta = s.numbers("compare_momenta", {});
    s.finish();
  }
  require(c.training.epochs >= 1, "training.epochs must be >= 1");
  require(c.training.iters_per_epoch >= 1, "training.iters_per_epoch must be >= 1");
  require(c.training.logging == "auto" || c.training.logging == "iteration" || c.training.logging == "epoch",
          "training.logging must be auto, iteration or epoch");
  for (double m : c.training.compare_momenta) require(m >= 0.0 && m < 1.0, "training.compare_momenta must lie in [0, 1)");
  for (auto t : c.schedule.transition_epochs)
    require(t >= 0 && t < c.training.epochs,
            "schedule.transition_epoch " + std::to_string(t) + " must lie in [0, training.epochs)");
  for (std::size_t i = 1; i < c.schedule.transition_epochs.size(); ++i)
    require(c.schedule.transition_epochs[i] > c.schedule.transition_epochs[i - 1],
            "schedule.transition_epoch must be strictly increasing");

  if (top.has("demo")) {
    Section s(top.raw("demo"), "demo");
    c.demo.momenta = s.numbers("momenta", c.demo.momenta);
    c.demo.iterations = s.integer("iterations", c.demo.iterations);
    c.demo.eta_min = s.number("eta_min", c.demo.eta_min);
    c.demo.eta_max = s.number("eta_max", c.demo.eta_max);
    c.demo.eta_count = s.count("eta_count", c.demo.eta_count);
    s.finish();
  }
  if (top.has("sweep")) {
    Section s(top.raw("sweep"), "sweep");
    auto& w = c.sweep;
    w.mode = s.text("mode", w.mode);
    w.eta_min = s.number("eta_min", w.eta_min);
    w.eta_max = s.number("eta_max", w.eta_max);
    w.eta_count = s.count("eta_count", w.eta_count);
    w.one_minus_mu_min = s.number("one_minus_mu_min", w.one_minus_mu_min);
    w.one_minus_mu_max = s.number("one_minus_mu_max", w.one_minus_mu_max);
    w.one_minus_mu_count = s.count("one_minus_mu_count", w.one_minus_mu_count);
    w.repetitions = s.count("repetitions", w.repetitions);
    w.samples = s.count("samples", w.samples);
    w.transitions = s.integers("transitions", {});
    for (auto v : s.integers("seeds", {})) {
      require(v >= 0, "sweep.seeds must be non-negative");
      w.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    w.bins = s.count("bins", w.bins);
    w.max_runs = s.count("max_runs", w.max_runs);
    w.max_steps = s.number("max_steps", w.max_steps);
    w.allow_large = s.boolean("allow_large", w.allow_large);
    if (s.has("searches")) {
      const auto& arr = s.raw("searches");
      require(arr.is_array(), "sweep.searches must be an array of tables");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section r(arr[i], "sweep.searches[" + std::to_string(i) + "]");
        RandomSearchSpec rs;
        rs.mu = r.number("mu", 0.0);
        rs.eta_min = r.number("eta_min", 1e-3);
        rs.eta_max = r.number("eta_max", 10.0);
        r.finish();
        require(rs.mu >= 0.0 && rs.mu < 1.0, r.where("mu") + " must lie in [0, 1)");
        require(rs.eta_min > 0.0 && rs.eta_max >= rs.eta_min, r.where() + ": need 0 < eta_min <= eta_max");
        w.searches.push_back(rs);
      }
    }
    s.finish();
    require(w.mode == "grid" || w.mode == "random" || w.mode == "transition",
            "sweep.mode must be grid, random or transition");
    require(w.eta_min > 0.0 && w.eta_max >= w.eta_min && w.eta_count >= 1, "sweep eta range is invalid");
    require(w.one_minus_mu_min > 0.0 && w.one_minus_mu_max <= 1.0 && w.one_minus_mu_max >= w.one_minus_mu_min &&
                w.one_minus_mu_count >= 1,
            "sweep 1-mu range must lie in (0, 1]");
    require(w.repetitions >= 1, "sweep.repetitions must be >= 1");
    require(w.bins >= 1, "sweep.bins must be >= 1");
    if (w.mode == "random") require(!w.searches.empty() && w.samples >= 1, "random sweep needs searches and samples");
    if (w.mode == "transition") {
      require(!w.transitions.empty() && !w.seeds.empty(), "transition sweep needs transitions and seeds");
      require(c.schedule.phases.size() == 2, "transition sweep needs a two-phase schedule");
      for (auto t : w.transitions)
        require(t >= 0 && t < c.training.epochs,
                "sweep.transitions entry " + std::to_string(t) + " must lie in [0, training.epochs)");
    }
  }
  if (top.has("equivalence")) {
    Section s(top.raw("equivalence"), "equivalence");
    auto& e = c.equivalence;
    e.baseline_eta = s.numbers("baseline_eta", {});
    e.mus = s.numbers("mus", e.mus);
    e.candidate_min = s.number("candidate_min", e.candidate_min);
    e.candidate_max = s.number("candidate_max", e.candidate_max);
    e.candidates_per_decade = s.count("candidates_per_decade", e.candidates_per_decade);
    e.eta_units = s.text("eta_units", e.eta_units);
    e.space = s.text("space", e.space);
    s.finish();
    require(!e.baseline_eta.empty(), "equivalence.baseline_eta must not be empty");
    for (double v : e.baseline_eta) require(v > 0.0, "equivalence.baseline_eta values must be positive");
    for (double m : e.mus) require(m >= 0.0 && m < 1.0, "equivalence.mus must lie in [0, 1)");
    require(e.candidate_min > 0.0 && e.candidate_max >= e.candidate_min, "equivalence candidate range is invalid");
    require(e.candidates_per_decade >= 1, "equivalence.candidates_per_decade must be >= 1");
    require(e.eta_units == "absolute" || e.eta_units == "inverse_lambda_max",
            "equivalence.eta_units must be absolute or inverse_lambda_max");
    require(e.eta_units == "absolute" || quadratic, "eta_units = inverse_lambda_max needs a quadratic problem");
    require(e.space == "raw" || e.space == "log", "equivalence.space must be raw or log");
  }
  top.finish();

  if (c.command == "quadratic-demo") {
    require(quadratic, "quadratic-demo needs a quadratic problem");
    require(!c.demo.momenta.empty(), "demo.momenta must not be empty");
    for (double m : c.demo.momenta) require(m >= 0.0 && m < 1.0, "demo.momenta must lie in [0, 1)");
    require(c.demo.iterations >= 1, "demo.iterations must be >= 1");
    require(c.demo.eta_min > 0.0 && c.demo.eta_max >= c.demo.eta_min && c.demo.eta_count >= 1,
            "demo eta range is invalid");
  }
  if (c.command == "train" || c.command == "sweep" || c.command == "equivalence")
    require(have_schedule, c.command + " needs a [schedule] section");
  if (c.command == "sweep") require(top.has("sweep"), "sweep needs a [sweep] section");
  if (c.command == "equivalence") require(top.has("equivalence"), "equivalence needs an [equivalence] section");

  c.snapshot = j;
  return c;
}

std::unique_ptr<Problem> make_problem(const ProblemConfig& p, std::uint64_t seed) {
  (void)seed;
  if (p.kind == "quadratic")
    return std::make_unique<QuadraticProblem>(make_quadratic(p.dim, p.condition_number, p.data_seed));
  Dataset data = make_dataset(p.dataset, p.n_samples, p.noise, p.data_seed);
  MlpModel model(p.layers, parse_activation(p.activation));
  if (p.heldout > 0) {
    auto [train, held] = split_heldout(data, p.heldout, hash_seed(p.data_seed, {0x686f6c64ULL}));
    return std::make_unique<MlpProblem>(std::move(model), std::move(train), std::move(held));
  }
  return std::make_unique<MlpProblem>(std::move(model), std::move(data));
}

}  // namespace momlab
