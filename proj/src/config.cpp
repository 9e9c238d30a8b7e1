#include "gridwm/config.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace gridwm {

using nlohmann::json;

Config::Config() {
  lf.name = "LF";
  lf.train_density = 5;
  ca.name = "CA";
  ca.weights.collision_weight = 4.0;
  ca.weights.target_speed = 1.0;
  ca.train_density = 20;
}

const TaskSpec& Config::task_spec() const {
  if (task == "LF") return lf;
  if (task == "CA") return ca;
  throw ConfigError("unknown task: " + task + " (expected LF or CA)");
}

IntrinsicConfig Config::intrinsic_config() const {
  IntrinsicConfig ic;
  ic.feature = wm.feature();
  ic.action_count = wm.action_count;
  ic.vars = wm.vars;
  ic.classes = wm.classes;
  ic.hidden = intrinsic_hidden;
  ic.ensemble_k = ensemble_k;
  ic.eta = icm_eta;
  ic.rnd_out = rnd_out;
  ic.rho = normalizer_rho;
  return ic;
}

void Config::validate() const {
  ac.validate();
  task_spec();
  if (intrinsic_kind != "disagreement" && intrinsic_kind != "icm" && intrinsic_kind != "rnd" &&
      intrinsic_kind != "none")
    throw ConfigError("unknown intrinsic kind: " + intrinsic_kind);
  if (protocol.train_ratio < 1) throw ConfigError("protocol.train_ratio must be >= 1");
  if (protocol.batch < 1 || protocol.seq_len < 2)
    throw ConfigError("protocol.batch must be >= 1 and protocol.seq_len >= 2");
  if (protocol.zeroshot_mode != "sample" && protocol.zeroshot_mode != "greedy")
    throw ConfigError("protocol.zeroshot_mode must be sample or greedy");
  if (eval.episodes_per_cell < 1) throw ConfigError("eval.episodes_per_cell must be >= 1");
  if (eval.tm_seeds.empty() || eval.spawn_seeds.empty())
    throw ConfigError("eval seed sets must be non-empty");
}

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown config key: " + scope + "." + it.key());
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).template get<T>();
}

json weights_to_json(const TaskSpec& t) {
  return json{{"progress_bonus", t.weights.progress_bonus},
              {"speed_scale", t.weights.speed_scale},
              {"lane_weight", t.weights.lane_weight},
              {"collision_weight", t.weights.collision_weight},
              {"destination_bonus", t.weights.destination_bonus},
              {"time_penalty", t.weights.time_penalty},
              {"target_speed", t.weights.target_speed},
              {"train_density", t.train_density}};
}

void weights_from_json(const json& j, TaskSpec& t, const std::string& scope) {
  check_keys(j,
             {"progress_bonus", "speed_scale", "lane_weight", "collision_weight",
              "destination_bonus", "time_penalty", "target_speed", "train_density"},
             scope);
  get_if(j, "progress_bonus", t.weights.progress_bonus);
  get_if(j, "speed_scale", t.weights.speed_scale);
  get_if(j, "lane_weight", t.weights.lane_weight);
  get_if(j, "collision_weight", t.weights.collision_weight);
  get_if(j, "destination_bonus", t.weights.destination_bonus);
  get_if(j, "time_penalty", t.weights.time_penalty);
  get_if(j, "target_speed", t.weights.target_speed);
  get_if(j, "train_density", t.train_density);
}

}  // namespace

std::string config_to_json_text(const Config& c) {
  json j;
  j["seed"] = c.seed;
  j["task"] = c.task;
  j["intrinsic"] = {{"kind", c.intrinsic_kind}, {"hidden", c.intrinsic_hidden},
                    {"ensemble_k", c.ensemble_k}, {"eta", c.icm_eta},
                    {"rnd_out", c.rnd_out},       {"rho", c.normalizer_rho}};
  j["wm"] = {{"embed", c.wm.embed},         {"d_h", c.wm.d_h},
             {"vars", c.wm.vars},           {"classes", c.wm.classes},
             {"hidden", c.wm.hidden},       {"dec_hidden", c.wm.dec_hidden},
             {"head_hidden", c.wm.head_hidden}, {"beta_kl", c.wm.beta_kl},
             {"lambda_c", c.wm.lambda_c},   {"lambda_r", c.wm.lambda_r},
             {"free_bits", c.wm.free_bits}};
  j["ac"] = {{"horizon", c.ac.horizon},         {"gamma", c.ac.gamma},
             {"entropy_coef", c.ac.entropy_coef}, {"actor_lr", c.ac.actor_lr},
             {"critic_lr", c.ac.critic_lr},     {"hidden", c.ac_hidden}};
  j["sim"] = {{"time_limit", c.sim.time_limit},
              {"stall_steps", c.sim.stall_steps},
              {"wrong_dir_steps", c.sim.wrong_dir_steps},
              {"traffic_speed", c.sim.traffic_speed}};
  j["protocol"] = {{"pretrain_steps", c.protocol.pretrain_steps},
                   {"finetune_steps", c.protocol.finetune_steps},
                   {"train_ratio", c.protocol.train_ratio},
                   {"prefill_steps", c.protocol.prefill_steps},
                   {"density_resample_period", c.protocol.density_resample_period},
                   {"checksum_interval", c.protocol.checksum_interval},
                   {"batch", c.protocol.batch},
                   {"seq_len", c.protocol.seq_len},
                   {"imag_starts", c.protocol.imag_starts},
                   {"wm_lr", c.protocol.wm_lr},
                   {"intrinsic_lr", c.protocol.intrinsic_lr},
                   {"zeroshot_mode", c.protocol.zeroshot_mode}};
  j["eval"] = {{"episodes_per_cell", c.eval.episodes_per_cell},
               {"densities", c.eval.densities},
               {"tm_seeds", c.eval.tm_seeds},
               {"spawn_seeds", c.eval.spawn_seeds}};
  j["rewards"] = {{"lf", weights_to_json(c.lf)}, {"ca", weights_to_json(c.ca)}};
  return j.dump(2);
}

Config config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Config c;
  check_keys(j, {"seed", "task", "intrinsic", "wm", "ac", "sim", "protocol", "eval", "rewards"},
             "(root)");
  get_if(j, "seed", c.seed);
  get_if(j, "task", c.task);
  if (j.contains("intrinsic")) {
    const json& i = j["intrinsic"];
    check_keys(i, {"kind", "hidden", "ensemble_k", "eta", "rnd_out", "rho"}, "intrinsic");
    get_if(i, "kind", c.intrinsic_kind);
    get_if(i, "hidden", c.intrinsic_hidden);
    get_if(i, "ensemble_k", c.ensemble_k);
    get_if(i, "eta", c.icm_eta);
    get_if(i, "rnd_out", c.rnd_out);
    get_if(i, "rho", c.normalizer_rho);
  }
  if (j.contains("wm")) {
    const json& w = j["wm"];
    check_keys(w,
               {"embed", "d_h", "vars", "classes", "hidden", "dec_hidden", "head_hidden",
                "beta_kl", "lambda_c", "lambda_r", "free_bits"},
               "wm");
    get_if(w, "embed", c.wm.embed);
    get_if(w, "d_h", c.wm.d_h);
    get_if(w, "vars", c.wm.vars);
    get_if(w, "classes", c.wm.classes);
    get_if(w, "hidden", c.wm.hidden);
    get_if(w, "dec_hidden", c.wm.dec_hidden);
    get_if(w, "head_hidden", c.wm.head_hidden);
    get_if(w, "beta_kl", c.wm.beta_kl);
    get_if(w, "lambda_c", c.wm.lambda_c);
    get_if(w, "lambda_r", c.wm.lambda_r);
    get_if(w, "free_bits", c.wm.free_bits);
  }
  if (j.contains("ac")) {
    const json& a = j["ac"];
    check_keys(a, {"horizon", "gamma", "entropy_coef", "actor_lr", "critic_lr", "hidden"}, "ac");
    get_if(a, "horizon", c.ac.horizon);
    get_if(a, "gamma", c.ac.gamma);
    get_if(a, "entropy_coef", c.ac.entropy_coef);
    get_if(a, "actor_lr", c.ac.actor_lr);
    get_if(a, "critic_lr", c.ac.critic_lr);
    get_if(a, "hidden", c.ac_hidden);
  }
  if (j.contains("sim")) {
    const json& s = j["sim"];
    check_keys(s, {"time_limit", "stall_steps", "wrong_dir_steps", "traffic_speed"}, "sim");
    get_if(s, "time_limit", c.sim.time_limit);
    get_if(s, "stall_steps", c.sim.stall_steps);
    get_if(s, "wrong_dir_steps", c.sim.wrong_dir_steps);
    get_if(s, "traffic_speed", c.sim.traffic_speed);
  }
  if (j.contains("protocol")) {
    const json& p = j["protocol"];
    check_keys(p,
               {"pretrain_steps", "finetune_steps", "train_ratio", "prefill_steps",
                "density_resample_period", "checksum_interval", "batch", "seq_len", "imag_starts",
                "wm_lr", "intrinsic_lr", "zeroshot_mode"},
               "protocol");
    get_if(p, "pretrain_steps", c.protocol.pretrain_steps);
    get_if(p, "finetune_steps", c.protocol.finetune_steps);
    get_if(p, "train_ratio", c.protocol.train_ratio);
    get_if(p, "prefill_steps", c.protocol.prefill_steps);
    get_if(p, "density_resample_period", c.protocol.density_resample_period);
    get_if(p, "checksum_interval", c.protocol.checksum_interval);
    get_if(p, "batch", c.protocol.batch);
    get_if(p, "seq_len", c.protocol.seq_len);
    get_if(p, "imag_starts", c.protocol.imag_starts);
    get_if(p, "wm_lr", c.protocol.wm_lr);
    get_if(p, "intrinsic_lr", c.protocol.intrinsic_lr);
    get_if(p, "zeroshot_mode", c.protocol.zeroshot_mode);
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, {"episodes_per_cell", "densities", "tm_seeds", "spawn_seeds"}, "eval");
    get_if(e, "episodes_per_cell", c.eval.episodes_per_cell);
    get_if(e, "densities", c.eval.densities);
    get_if(e, "tm_seeds", c.eval.tm_seeds);
    get_if(e, "spawn_seeds", c.eval.spawn_seeds);
  }
  if (j.contains("rewards")) {
    const json& r = j["rewards"];
    check_keys(r, {"lf", "ca"}, "rewards");
    if (r.contains("lf")) weights_from_json(r["lf"], c.lf, "rewards.lf");
    if (r.contains("ca")) weights_from_json(r["ca"], c.ca, "rewards.ca");
  }
  c.validate();
  return c;
}

Config load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void save_config_snapshot(const Config& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/config.resolved.json";
  std::ofstream os(path);
  if (!os) throw IoError("cannot write config snapshot: " + path);
  os << config_to_json_text(c) << "\n";
}

void apply_full_scale(Config& c) {
  c.protocol.pretrain_steps = 500000;
  c.protocol.finetune_steps = 10000;
  c.protocol.density_resample_period = 10000;
  c.eval.episodes_per_cell = 50;
}

std::string config_hash(const Config& c) { return hex64(fnv1a(config_to_json_text(c))); }

}  // namespace gridwm
