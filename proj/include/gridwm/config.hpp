#pragma once

#include <string>
#include <vector>

#include "gridwm/agent.hpp"
#include "gridwm/sim.hpp"

namespace gridwm {

// Fine-tuning task: shared reward components, task-specific weights and
// training traffic density (lane following vs collision avoidance).
struct TaskSpec {
  std::string name;  // "LF" or "CA"
  RewardWeights weights;
  int train_density = 5;
};

struct ProtocolConfig {
  int64_t pretrain_steps = 20000;
  int64_t finetune_steps = 2000;
  int train_ratio = 4;  // one gradient update per this many env steps
  int prefill_steps = 1000;
  int density_resample_period = 1000;
  int checksum_interval = 100;  // updates between frozen-set checksum audits
  int batch = 4;
  int seq_len = 8;
  int imag_starts = 16;  // imagined rollout start states per update
  double wm_lr = 3e-4;
  double intrinsic_lr = 3e-4;
  std::string zeroshot_mode = "sample";  // or "greedy"
};

struct EvalConfig {
  int episodes_per_cell = 10;
  std::vector<int> densities = {5, 10, 20};
  std::vector<uint64_t> tm_seeds = {101, 102, 103};
  std::vector<uint64_t> spawn_seeds = {201, 202, 203, 204, 205};
};

struct Config {
  uint64_t seed = 1;
  std::string intrinsic_kind = "disagreement";
  std::string task = "LF";
  WmConfig wm;
  ImaginationConfig ac;
  int ac_hidden = 64;
  int intrinsic_hidden = 64;
  int ensemble_k = 5;
  double icm_eta = 0.5;
  int rnd_out = 64;
  double normalizer_rho = 0.01;
  SimConfig sim;
  ProtocolConfig protocol;
  EvalConfig eval;
  TaskSpec lf, ca;

  Config();
  const TaskSpec& task_spec() const;
  IntrinsicConfig intrinsic_config() const;
  void validate() const;
};

// JSON round trip with unknown-key rejection. The document mirrors the
// structs: seed, intrinsic.kind, task, wm.*, ac.*, sim.*, protocol.*,
// eval.*, rewards.lf.* / rewards.ca.*.
Config config_from_json_text(const std::string& text);
std::string config_to_json_text(const Config& c);
Config load_config_file(const std::string& path);  // missing file -> defaults? no: IoError
void save_config_snapshot(const Config& c, const std::string& dir);

// Switch to the full published-run budgets: 500k pretrain, 10k finetune, N=50 episodes.
void apply_full_scale(Config& c);

// FNV-1a over the canonical serialized form; recorded into every artifact.
std::string config_hash(const Config& c);

}  // namespace gridwm
