#include "tdl/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "tdl/errors.hpp"

namespace tdl {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const char* section,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError(std::string("unknown key '") + key + "' in config section '" + section +
                        "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* section, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + section + "." + key + "'");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(j, "<root>",
                      {"dataset", "features", "preprocess", "train", "protocol", "methods",
                       "synth", "output_dir"});
  ExperimentConfig cfg;

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown_keys(d, "dataset", {"root", "layout", "min_frames"});
    read_field(d, "dataset", "root", cfg.dataset_root);
    read_field(d, "dataset", "layout", cfg.dataset_layout);
    read_field(d, "dataset", "min_frames", cfg.min_frames);
  }
  if (j.contains("features")) {
    const json& f = j.at("features");
    reject_unknown_keys(f, "features", {"preset"});
    read_field(f, "features", "preset", cfg.feature_preset);
  }
  if (j.contains("preprocess")) {
    const json& p = j.at("preprocess");
    reject_unknown_keys(p, "preprocess", {"options"});
    read_field(p, "preprocess", "options", cfg.preprocess_options);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t, "train",
                        {"alpha", "rho", "lambda0", "lambda_up", "lambda_down", "max_iters",
                         "rel_tol", "lambda_floor", "rng_seed", "anchor_fraction"});
    read_field(t, "train", "alpha", cfg.train.alpha);
    read_field(t, "train", "rho", cfg.train.rho);
    read_field(t, "train", "lambda0", cfg.train.lambda0);
    read_field(t, "train", "lambda_up", cfg.train.lambda_up);
    read_field(t, "train", "lambda_down", cfg.train.lambda_down);
    read_field(t, "train", "max_iters", cfg.train.max_iters);
    read_field(t, "train", "rel_tol", cfg.train.rel_tol);
    read_field(t, "train", "lambda_floor", cfg.train.lambda_floor);
    read_field(t, "train", "rng_seed", cfg.train.rng_seed);
    read_field(t, "train", "anchor_fraction", cfg.train.anchor_fraction);
    cfg.train.validate();
  }
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    reject_unknown_keys(p, "protocol", {"num_trials", "seed", "direction"});
    read_field(p, "protocol", "num_trials", cfg.num_trials);
    read_field(p, "protocol", "seed", cfg.protocol_seed);
    read_field(p, "protocol", "direction", cfg.direction);
    if (cfg.num_trials < 1) throw ConfigError("protocol.num_trials must be >= 1");
    if (cfg.direction != "forward" && cfg.direction != "reverse") {
      throw ConfigError("protocol.direction must be 'forward' or 'reverse'");
    }
  }
  if (j.contains("methods")) {
    read_field(j, "<root>", "methods", cfg.methods);
    if (cfg.methods.empty()) throw ConfigError("methods list must not be empty");
    for (const std::string& m : cfg.methods) parse_method(m);  // validate names
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    reject_unknown_keys(s, "synth",
                        {"num_identities", "samples_per_identity", "dim", "informative_dim",
                         "intra_class_noise_scale", "inter_class_separation",
                         "distractor_noise_scale", "rng_seed"});
    SynthConfig sc;
    read_field(s, "synth", "num_identities", sc.num_identities);
    read_field(s, "synth", "samples_per_identity", sc.samples_per_identity);
    read_field(s, "synth", "dim", sc.dim);
    read_field(s, "synth", "informative_dim", sc.informative_dim);
    read_field(s, "synth", "intra_class_noise_scale", sc.intra_class_noise_scale);
    read_field(s, "synth", "inter_class_separation", sc.inter_class_separation);
    read_field(s, "synth", "distractor_noise_scale", sc.distractor_noise_scale);
    read_field(s, "synth", "rng_seed", sc.rng_seed);
    sc.validate();
    cfg.synth = sc;
  }
  read_field(j, "<root>", "output_dir", cfg.output_dir);

  for (const std::string& opt : cfg.preprocess_options) parse_preprocess_op(opt);
  parse_layout(cfg.dataset_layout);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON (" + std::string(e.what()) + "): " +
                      path.string());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["dataset"] = {{"root", dataset_root}, {"layout", dataset_layout}, {"min_frames", min_frames}};
  j["features"] = {{"preset", feature_preset}};
  j["preprocess"] = {{"options", preprocess_options}};
  j["train"] = {{"alpha", train.alpha},
                {"rho", train.rho},
                {"lambda0", train.lambda0},
                {"lambda_up", train.lambda_up},
                {"lambda_down", train.lambda_down},
                {"max_iters", train.max_iters},
                {"rel_tol", train.rel_tol},
                {"lambda_floor", train.lambda_floor},
                {"rng_seed", train.rng_seed},
                {"anchor_fraction", train.anchor_fraction}};
  j["protocol"] = {{"num_trials", num_trials}, {"seed", protocol_seed}, {"direction", direction}};
  j["methods"] = methods;
  if (synth) {
    j["synth"] = {{"num_identities", synth->num_identities},
                  {"samples_per_identity", synth->samples_per_identity},
                  {"dim", synth->dim},
                  {"informative_dim", synth->informative_dim},
                  {"intra_class_noise_scale", synth->intra_class_noise_scale},
                  {"inter_class_separation", synth->inter_class_separation},
                  {"distractor_noise_scale", synth->distractor_noise_scale},
                  {"rng_seed", synth->rng_seed}};
  }
  j["output_dir"] = output_dir;
  return j;
}

PreprocessOptions ExperimentConfig::preprocess() const {
  PreprocessOptions opts;
  for (const std::string& name : preprocess_options) {
    opts.ops.push_back(parse_preprocess_op(name));
  }
  return opts;
}

Direction ExperimentConfig::parsed_direction() const {
  return direction == "reverse" ? Direction::Reverse : Direction::Forward;
}

ProtocolConfig ExperimentConfig::protocol() const {
  ProtocolConfig p;
  p.num_trials = num_trials;
  p.seed = protocol_seed;
  p.direction = parsed_direction();
  p.preprocess = preprocess();
  return p;
}

DescriptorPreset descriptor_preset(const std::string& name) {
  if (name == "paper-2905") return DescriptorPreset{};
  throw ConfigError("unknown descriptor preset '" + name + "' (available: paper-2905)");
}

json train_report_to_json(const TrainReport& report) {
  return json{{"iters_run", report.iters_run},
              {"converged", report.converged},
              {"initial_loss", report.loss_trace.front()},
              {"final_loss", report.loss_trace.back()},
              {"accepted_steps", report.loss_trace.size() - 1},
              {"loss_trace", report.loss_trace},
              {"lambda_trace", report.lambda_trace},
              {"seconds", report.seconds}};
}

json benchmark_reports_to_json(const std::vector<BenchmarkReport>& reports,
                               const json& config_snapshot) {
  json out = json::array();
  for (const BenchmarkReport& r : reports) {
    out.push_back({{"method", r.method},
                   {"mean_auc", r.mean_auc},
                   {"rank1", r.rank_rates[0]},
                   {"rank5", r.rank_rates[1]},
                   {"rank10", r.rank_rates[2]},
                   {"rank20", r.rank_rates[3]},
                   {"num_identities_used", r.num_identities_used},
                   {"probe_camera", r.probe_camera},
                   {"gallery_camera", r.gallery_camera},
                   {"mean_curve", r.mean_curve.rates},
                   {"per_trial_auc", r.per_trial_auc},
                   {"trial_train_seconds", r.trial_train_seconds},
                   {"total_seconds", r.total_seconds}});
  }
  return json{{"config", config_snapshot}, {"methods", out}};
}

namespace {
std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

std::string benchmark_cmc_csv(const std::vector<BenchmarkReport>& reports) {
  std::string out = "method,rank,mean_rate";
  if (!reports.empty()) {
    for (std::size_t t = 0; t < reports.front().per_trial.size(); ++t) {
      out += ",trial_" + std::to_string(t + 1);
    }
  }
  out += '\n';
  for (const BenchmarkReport& r : reports) {
    for (std::size_t k = 0; k < r.mean_curve.rates.size(); ++k) {
      out += r.method + ',' + std::to_string(k + 1) + ',' + format_rate(r.mean_curve.rates[k]);
      for (const CmcCurve& c : r.per_trial) out += ',' + format_rate(c.rates[k]);
      out += '\n';
    }
  }
  return out;
}

std::string benchmark_table_csv(const std::vector<BenchmarkReport>& reports) {
  std::string out = "method,rank1,rank5,rank10,rank20,auc\n";
  for (const BenchmarkReport& r : reports) {
    out += r.method;
    for (double v : r.rank_rates) out += ',' + format_rate(v);
    out += ',' + format_rate(r.mean_auc) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out << content;
  if (!out) throw IoError("failed writing file: " + path.string());
}

}  // namespace tdl
