#pragma once

#include "gridwm/eval.hpp"
#include "gridwm/replay.hpp"

namespace gridwm {

struct StageResult {
  std::string checkpoint_path;
  std::string metrics_path;
  int64_t env_steps = 0;  // budgeted steps (prefill excluded)
  int64_t updates = 0;
};

// Phase 1: reward-free pretraining in Town-A from random spawns. World model,
// intrinsic module, and exploration actor-critic train together; no extrinsic
// reward is computed, stored, or logged. Writes checkpoint.bin and
// metrics.jsonl into out_dir.
StageResult pretrain(const Config& cfg, const std::string& out_dir);

// Zero-shot transfer: every parameter frozen, zero gradient updates, zero
// buffer writes. Checksums of all checkpoint sets are audited before and
// after the grid. Writes records.jsonl and the report files into out_dir.
std::vector<EvalRecord> zeroshot_eval(const Config& cfg, const Checkpoint& ckpt,
                                      const std::string& out_dir, int workers);

// Phase 2: few-shot adaptation on the configured task. The world model,
// the intrinsic module, and the exploration actor-critic are frozen; the task
// actor-critic (initialized from the exploration one) and the reward head
// train on a small extrinsic budget.
StageResult finetune(const Config& cfg, const Checkpoint& pretrained, const std::string& out_dir);

// Extrinsic-only baseline trained from scratch on the task with a total
// env-step budget matched to pretrain + finetune.
StageResult run_baseline_extrinsic(const Config& cfg, const std::string& out_dir);

}  // namespace gridwm
