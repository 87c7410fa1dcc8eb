#include "clreg/cli/config_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "clreg/error.hpp"

namespace clreg::cli {
namespace {

using nlohmann::json;

// Typed, path-aware access to one JSON object; finish() rejects leftovers.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number() || !std::isfinite(v->get<double>())) {
        throw ValidationError(at(key) + " must be a finite number");
      }
      dst = v->get<double>();
    }
  }

  void integer(const std::string& key, int& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ValidationError(at(key) + " must be an integer");
      const bool too_big = v->is_number_unsigned() &&
                           v->get<std::uint64_t>() > std::uint64_t(std::numeric_limits<int>::max());
      const auto x = v->get<std::int64_t>();
      if (too_big || x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ValidationError(at(key) + " is out of range");
      }
      dst = static_cast<int>(x);
    }
  }

  void unsigned64(const std::string& key, std::uint64_t& dst) {
    if (const json* v = find(key)) {
      // Values built in code arrive as signed integers even when non-negative.
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        throw ValidationError(at(key) + " must be a non-negative integer");
      }
      dst = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& dst) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(at(key) + " must be true or false");
      dst = v->get<bool>();
    }
  }

  template <typename Parse, typename T>
  void choice(const std::string& key, T& dst, Parse parse) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ValidationError(at(key) + " must be a string");
      try {
        dst = parse(v->get<std::string>());
      } catch (const ValidationError& e) {
        throw ValidationError(at(key) + ": " + e.what());
      }
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown key " + at(key));
    }
  }

  std::string at(const std::string& key) const { return where() + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ValidationError(path + " must be a non-empty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      throw ValidationError(path + " must contain finite numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<Cluster> clusters(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ValidationError(path + " must be a non-empty array");
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string here = path + "[" + std::to_string(i) + "]";
    Fields f(v[i], here);
    Cluster c;
    const json* mean = f.find("mean");
    if (!mean) throw ValidationError(here + ".mean is required");
    const auto m = number_list(*mean, here + ".mean");
    c.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    f.integer("label", c.label);
    f.finish();
    out.push_back(std::move(c));
  }
  return out;
}

void read_cl(const json& j, ClConfig& cl) {
  Fields f(j, "cl");
  f.number("tau", cl.tau);
  f.choice("variant", cl.variant, [](const std::string& s) { return parse_cl_variant(s); });
  f.boolean("symmetric", cl.symmetric);
  f.number("alpha", cl.alpha);
  f.number("gamma", cl.gamma);
  f.number("lambda", cl.lambda);
  f.integer("layer_from_end", cl.layer_from_end);
  f.finish();
}

void read_train(const json& j, TrainConfig& t) {
  Fields f(j, "train");
  f.number("eta", t.eta);
  f.integer("steps", t.steps);
  f.integer("finetune_steps", t.finetune_steps);
  f.choice("base_retain", t.base_retain,
           [](const std::string& s) { return parse_retain_objective(s); });
  f.choice("base_forget", t.base_forget,
           [](const std::string& s) { return parse_forget_objective(s); });
  f.choice("gradient_flow", t.flow, [](const std::string& s) { return parse_gradient_flow(s); });
  if (const json* dims = f.find("hidden_dims")) {
    if (!dims->is_array() || dims->empty()) {
      throw ValidationError("train.hidden_dims must be a non-empty array");
    }
    t.hidden_dims.clear();
    for (const auto& d : *dims) {
      if (!d.is_number_integer()) {
        throw ValidationError("train.hidden_dims must contain integers");
      }
      t.hidden_dims.push_back(d.get<int>());
    }
  }
  f.integer("record_every", t.record_every);
  f.integer("n_projections", t.n_projections);
  if (const json* d = f.find("dropout")) {
    Fields g(*d, "train.dropout");
    g.number("mu", t.dropout.mu);
    g.number("sigma", t.dropout.sigma);
    g.number("lo", t.dropout.lo);
    g.number("hi", t.dropout.hi);
    g.finish();
  }
  f.finish();
}

void read_task(const json& j, SyntheticTask& t) {
  Fields f(j, "task");
  f.integer("input_dim", t.input_dim);
  f.integer("n_retain", t.n_retain);
  f.integer("n_forget", t.n_forget);
  f.number("retain_stddev", t.retain_stddev);
  f.number("forget_stddev", t.forget_stddev);
  f.number("min_entanglement", t.min_entanglement);
  f.integer("max_redraws", t.max_redraws);
  if (const json* c = f.find("retain_clusters")) t.retain_clusters = clusters(*c, "task.retain_clusters");
  if (const json* c = f.find("forget_clusters")) t.forget_clusters = clusters(*c, "task.forget_clusters");
  f.finish();
}

json clusters_json(const std::vector<Cluster>& cs) {
  json out = json::array();
  for (const auto& c : cs) {
    out.push_back({{"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                   {"label", c.label}});
  }
  return out;
}

}  // namespace

void RunConfigFile::validate() const {
  train.validate();
  task.validate();
  if (train.seed != task.seed) throw ValidationError("task and training seeds must match");
}

RunConfigFile run_config_from_json(const json& j) {
  RunConfigFile cfg;
  Fields f(j, "");
  std::uint64_t seed = 0;
  f.unsigned64("seed", seed);
  if (const json* v = f.find("cl")) read_cl(*v, cfg.train.cl);
  if (const json* v = f.find("train")) read_train(*v, cfg.train);
  if (const json* v = f.find("task")) read_task(*v, cfg.task);
  f.finish();
  cfg.train.seed = seed;
  cfg.task.seed = seed;
  cfg.validate();
  return cfg;
}

json to_json(const RunConfigFile& cfg) {
  const TrainConfig& t = cfg.train;
  const SyntheticTask& k = cfg.task;
  return {
      {"seed", t.seed},
      {"cl",
       {{"tau", t.cl.tau},
        {"variant", std::string(to_string(t.cl.variant))},
        {"symmetric", t.cl.symmetric},
        {"alpha", t.cl.alpha},
        {"gamma", t.cl.gamma},
        {"lambda", t.cl.lambda},
        {"layer_from_end", t.cl.layer_from_end}}},
      {"train",
       {{"eta", t.eta},
        {"steps", t.steps},
        {"finetune_steps", t.finetune_steps},
        {"base_retain", std::string(to_string(t.base_retain))},
        {"base_forget", std::string(to_string(t.base_forget))},
        {"gradient_flow", std::string(to_string(t.flow))},
        {"hidden_dims", t.hidden_dims},
        {"record_every", t.record_every},
        {"n_projections", t.n_projections},
        {"dropout",
         {{"mu", t.dropout.mu}, {"sigma", t.dropout.sigma}, {"lo", t.dropout.lo},
          {"hi", t.dropout.hi}}}}},
      {"task",
       {{"input_dim", k.input_dim},
        {"n_retain", k.n_retain},
        {"n_forget", k.n_forget},
        {"retain_stddev", k.retain_stddev},
        {"forget_stddev", k.forget_stddev},
        {"min_entanglement", k.min_entanglement},
        {"max_redraws", k.max_redraws},
        {"retain_clusters", clusters_json(k.retain_clusters)},
        {"forget_clusters", clusters_json(k.forget_clusters)}}},
  };
}

ScoreInputs score_inputs_from_json(const json& j) {
  ScoreInputs in;
  Fields f(j, "");
  const json* metrics = f.find("metrics");
  if (!metrics || !metrics->is_array() || metrics->empty()) {
    throw ValidationError("metrics must be a non-empty array");
  }
  for (std::size_t i = 0; i < metrics->size(); ++i) {
    const std::string here = "metrics[" + std::to_string(i) + "]";
    Fields m((*metrics)[i], here);
    MetricTriple t;
    const json* name = m.find("name");
    if (!name || !name->is_string() || name->get<std::string>().empty()) {
      throw ValidationError(here + ".name must be a non-empty string");
    }
    t.name = name->get<std::string>();
    for (const char* key : {"m_ul", "m_ft", "m_rt"}) {
      if (!(*metrics)[i].contains(key)) throw ValidationError(m.at(key) + " is required");
    }
    m.number("m_ul", t.m_ul);
    m.number("m_ft", t.m_ft);
    m.number("m_rt", t.m_rt);
    m.boolean("log_scale", t.log_scale);
    m.finish();
    in.metrics.push_back(std::move(t));
  }
  if (const json* u = f.find("utility_values")) {
    in.utility_values = number_list(*u, "utility_values");
  }
  if (const json* a = f.find("auc")) {
    Fields g(*a, "auc");
    double ul = 0.0, rt = 0.0;
    for (const char* key : {"ul", "rt"}) {
      if (!a->contains(key)) throw ValidationError(g.at(key) + " is required");
    }
    g.number("ul", ul);
    g.number("rt", rt);
    g.finish();
    in.auc_ul = ul;
    in.auc_rt = rt;
  }
  f.finish();
  return in;
}

namespace {

template <typename T, typename Parse>
T load_json_file(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return parse(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

RunConfigFile load_run_config(const std::filesystem::path& path) {
  return load_json_file<RunConfigFile>(path, run_config_from_json);
}

ScoreInputs load_score_inputs(const std::filesystem::path& path) {
  return load_json_file<ScoreInputs>(path, score_inputs_from_json);
}

}  // namespace clreg::cli
