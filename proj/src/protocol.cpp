#include "gridwm/protocol.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace gridwm {

using nlohmann::json;

namespace {

constexpr size_t kReplayCapacity = 100000;  // steps; never evicts at desk scale

Adam make_adam(double lr) { return Adam(lr, 0.9, 0.999, 1e-8, 100.0); }

class MetricsLog {
 public:
  explicit MetricsLog(const std::string& path) : path_(path), os_(path) {
    if (!os_) throw IoError("cannot write metrics: " + path);
  }
  void write(json j) {
    j["v"] = 1;
    os_ << j.dump() << "\n";
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream os_;
};

// Deterministic per-stage seed chain; all randomness descends from cfg.seed.
struct SeedChain {
  uint64_t s;
  explicit SeedChain(uint64_t root) : s(root) {}
  uint64_t next() { return s = splitmix64(s + 0x9E3779B97F4A7C15ull); }
};

// Pick imag_starts random (t, b) posterior states as imagination starts.
LatentState gather_starts(const SeqFeatures& f, int n, const WmConfig& cfg, SeededRng& rng) {
  const size_t T = f.h.size();
  const int B = f.h.front().dim(0);
  std::vector<double> hd, sd;
  hd.reserve(static_cast<size_t>(n) * cfg.d_h);
  sd.reserve(static_cast<size_t>(n) * cfg.latent());
  for (int i = 0; i < n; ++i) {
    const size_t t = rng.next_index(T);
    const size_t b = rng.next_index(static_cast<size_t>(B));
    const auto& h = f.h[t].data();
    const auto& sdat = f.s[t].data();
    hd.insert(hd.end(), h.begin() + static_cast<long>(b * cfg.d_h),
              h.begin() + static_cast<long>((b + 1) * cfg.d_h));
    sd.insert(sd.end(), sdat.begin() + static_cast<long>(b * cfg.latent()),
              sdat.begin() + static_cast<long>((b + 1) * cfg.latent()));
  }
  LatentState st;
  st.h = Tensor::from({n, cfg.d_h}, std::move(hd));
  st.s = Tensor::from({n, cfg.latent()}, std::move(sd));
  st.u = concat_cols(st.h, st.s);
  return st;
}

// Consecutive (u_t, a_t, u_{t+1}) pairs from a posterior sequence pass.
IntrinsicBatch make_intrinsic_batch(const SeqFeatures& f) {
  const size_t T = f.u.size();
  const int B = f.u.front().dim(0);
  const int F = f.u.front().dim(1);
  const int C = f.post_probs.front().dim(1);
  IntrinsicBatch b;
  std::vector<double> ud, nd, pd;
  for (size_t t = 0; t + 1 < T; ++t) {
    const auto& u = f.u[t].data();
    const auto& nu = f.u[t + 1].data();
    const auto& pp = f.post_probs[t + 1].data();
    ud.insert(ud.end(), u.begin(), u.end());
    nd.insert(nd.end(), nu.begin(), nu.end());
    pd.insert(pd.end(), pp.begin(), pp.end());
    b.actions.insert(b.actions.end(), f.actions[t].begin(), f.actions[t].end());
  }
  const int rows = static_cast<int>(T - 1) * B;
  const int prob_rows = static_cast<int>(pd.size()) / C;
  b.u = Tensor::from({rows, F}, std::move(ud));
  b.next_u = Tensor::from({rows, F}, std::move(nd));
  b.next_post_probs = Tensor::from({prob_rows, C}, std::move(pd));
  return b;
}

double mean_reward(const ImaginedTrajectory& traj) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& s : traj.steps) {
    sum = std::accumulate(s.rewards.begin(), s.rewards.end(), sum);
    n += s.rewards.size();
  }
  return sum / static_cast<double>(n);
}

struct FrozenWitness {
  const ParameterSet* set;
  uint64_t expect;
};

void audit_frozen(const std::vector<FrozenWitness>& witnesses) {
  for (const FrozenWitness& w : witnesses)
    if (w.set->checksum() != w.expect)
      throw ContractError("frozen parameter set '" + w.set->name() + "' changed during training");
}

ParameterSet* rnd_frozen_target(IntrinsicModule* m) {
  auto* rnd = dynamic_cast<RndModule*>(m);
  return rnd ? rnd->frozen_target() : nullptr;
}

void check_stage(const Checkpoint& ckpt, const Config& cfg, const std::string& want) {
  if (ckpt.stage != want)
    throw ContractError("checkpoint stage is '" + ckpt.stage + "', expected '" + want + "'");
  if (ckpt.config_hash != config_hash(cfg))
    throw ContractError("checkpoint config hash " + ckpt.config_hash +
                        " does not match the active config " + config_hash(cfg));
}

uint64_t checkpoint_data_checksum(const Checkpoint& ckpt) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& [name, set] : ckpt.sets)
    for (const auto& [path, blob] : set.tensors)
      for (double v : blob.data) h = splitmix64(h ^ fnv1a(&v, sizeof v));
  return h;
}

}  // namespace

StageResult pretrain(const Config& cfg, const std::string& out_dir) {
  cfg.validate();
  if (cfg.intrinsic_kind == "none")
    throw ConfigError("reward-free pretraining requires an intrinsic signal");
  std::filesystem::create_directories(out_dir);
  save_config_snapshot(cfg, out_dir);
  MetricsLog log(out_dir + "/metrics.jsonl");

  SeedChain seeds(cfg.seed);
  WorldModel wm(cfg.wm, seeds.next());
  auto intrinsic = make_intrinsic(cfg.intrinsic_kind, cfg.intrinsic_config(), seeds.next());
  PolicyNet policy(AcRole::Explore, cfg.wm.feature(), cfg.ac_hidden, cfg.wm.action_count,
                   seeds.next());
  ValueNet value(AcRole::Explore, cfg.wm.feature(), cfg.ac_hidden, seeds.next());
  Adam wm_opt = make_adam(cfg.protocol.wm_lr);
  Adam intr_opt = make_adam(cfg.protocol.intrinsic_lr);
  Adam actor_opt = make_adam(cfg.ac.actor_lr);
  Adam critic_opt = make_adam(cfg.ac.critic_lr);

  // Reward-free by construction: the buffer rejects extrinsic rewards and the
  // simulator never computes them.
  ReplayBuffer replay(kReplayCapacity, /*allow_reward=*/false);
  const TownMap town = TownMap::town_a();
  Simulator sim(cfg.sim);
  LatentFilter filter(wm, seeds.next());
  SeededRng env_rng(seeds.next()), act_rng(seeds.next()), sample_rng(seeds.next()),
      imag_rng(seeds.next()), loss_rng(seeds.next()), start_rng(seeds.next());

  // The reward head exists but must stay untouched for the whole phase; the
  // RND target must stay frozen for the whole run.
  std::vector<FrozenWitness> witnesses{{&wm.reward_params(), wm.reward_params().checksum()}};
  if (ParameterSet* tgt = rnd_frozen_target(intrinsic.get()))
    witnesses.push_back({tgt, tgt->checksum()});

  int density = cfg.eval.densities[env_rng.next_index(cfg.eval.densities.size())];
  std::vector<uint8_t> obs = sim.reset(town, std::nullopt, density, env_rng.raw(), env_rng.raw());
  int prev_action = -1;

  const int64_t total = cfg.protocol.prefill_steps + cfg.protocol.pretrain_steps;
  int64_t env_steps = 0, updates = 0;
  while (env_steps < total) {
    const Tensor& u = filter.update(obs, prev_action);
    const int a = env_steps < cfg.protocol.prefill_steps
                      ? static_cast<int>(act_rng.next_index(Action::kCount))
                      : policy.act(u, act_rng);
    StepResult r = sim.step(Action{a});
    replay.append({obs, a, std::nullopt, r.terminal ? 0.0 : 1.0});
    obs = std::move(r.observation);
    prev_action = a;
    ++env_steps;

    if (env_steps % cfg.protocol.density_resample_period == 0)
      density = cfg.eval.densities[env_rng.next_index(cfg.eval.densities.size())];
    if (r.terminal) {
      obs = sim.reset(town, std::nullopt, density, env_rng.raw(), env_rng.raw());
      filter.reset();
      prev_action = -1;
    }

    const int64_t budget_step = env_steps - cfg.protocol.prefill_steps;
    if (budget_step <= 0 || budget_step % cfg.protocol.train_ratio != 0) continue;

    auto batch = replay.sample_sequences(cfg.protocol.batch, cfg.protocol.seq_len, sample_rng);
    WmDiagnostics diag;
    SeqFeatures feats;
    Tensor wm_loss = wm.pretrain_loss(batch, loss_rng, &diag, &feats);
    wm_loss.backward();
    wm_opt.step(wm.wm_params());

    const Tensor intr_loss = intrinsic->train_loss(make_intrinsic_batch(feats));
    const double intr_loss_v = intr_loss.item();
    intr_loss.backward();
    intr_opt.step(intrinsic->params());

    const LatentState starts = gather_starts(feats, cfg.protocol.imag_starts, cfg.wm, start_rng);
    const ImaginedTrajectory traj =
        imagine_rollout(wm, starts, policy, intrinsic.get(), cfg.ac.horizon, imag_rng);
    const AcLosses ac = actor_critic_update(traj, policy, value, cfg.ac, actor_opt, critic_opt);
    ++updates;

    log.write({{"stage", "pretrain"},
               {"step", budget_step},
               {"update", updates},
               {"wm_loss", diag.total},
               {"recon", diag.recon},
               {"kl", diag.kl},
               {"cont", diag.cont},
               {"intrinsic_loss", intr_loss_v},
               {"r_int_imag", mean_reward(traj)},
               {"actor_loss", ac.actor},
               {"critic_loss", ac.critic},
               {"entropy", ac.entropy},
               {"norm_mu", intrinsic->normalizer().mu()},
               {"norm_var", intrinsic->normalizer().var()},
               {"density", density}});
    if (updates % cfg.protocol.checksum_interval == 0) audit_frozen(witnesses);
  }
  audit_frozen(witnesses);

  Checkpoint ck;
  ck.step_count = static_cast<uint64_t>(cfg.protocol.pretrain_steps);
  ck.config_hash = config_hash(cfg);
  ck.stage = "pretrain";
  ck.store_set(wm.wm_params());
  ck.store_set(wm.reward_params());
  ck.store_set(policy.params());
  ck.store_set(value.params());
  ck.store_set(intrinsic->params());
  if (ParameterSet* tgt = rnd_frozen_target(intrinsic.get())) ck.store_set(*tgt);
  ck.store_adam("wm", wm_opt);
  ck.store_adam("intrinsic", intr_opt);
  ck.store_adam("actor_explore", actor_opt);
  ck.store_adam("critic_explore", critic_opt);
  ck.extras["normalizer/mu"] = intrinsic->normalizer().mu();
  ck.extras["normalizer/var"] = intrinsic->normalizer().var();
  ck.extras["env_steps"] = static_cast<double>(cfg.protocol.pretrain_steps);
  ck.extras["prefill_steps"] = static_cast<double>(cfg.protocol.prefill_steps);
  ck.extras["updates"] = static_cast<double>(updates);

  StageResult res;
  res.checkpoint_path = out_dir + "/checkpoint.bin";
  res.metrics_path = log.path();
  res.env_steps = cfg.protocol.pretrain_steps;
  res.updates = updates;
  ck.save(res.checkpoint_path);
  return res;
}

std::vector<EvalRecord> zeroshot_eval(const Config& cfg, const Checkpoint& ckpt,
                                      const std::string& out_dir, int workers) {
  check_stage(ckpt, cfg, "pretrain");
  std::filesystem::create_directories(out_dir);

  const uint64_t before = checkpoint_data_checksum(ckpt);
  const std::string method = cfg.intrinsic_kind + "-zeroshot";
  std::vector<EvalRecord> records = run_eval_grid(cfg, ckpt, AcRole::Explore, method, workers);
  if (checkpoint_data_checksum(ckpt) != before)
    throw ContractError("checkpoint parameters changed during zero-shot evaluation");

  save_records_jsonl(records, out_dir + "/records.jsonl");
  const auto rows = aggregate(records);
  write_report_csv(rows, out_dir + "/report.csv");
  write_report_markdown(rows, gap_table(rows), out_dir + "/report.md");
  write_report_svg(rows, out_dir + "/report.svg");
  return records;
}

StageResult finetune(const Config& cfg, const Checkpoint& pretrained, const std::string& out_dir) {
  cfg.validate();
  check_stage(pretrained, cfg, "pretrain");
  std::filesystem::create_directories(out_dir);
  save_config_snapshot(cfg, out_dir);
  MetricsLog log(out_dir + "/metrics.jsonl");

  SeedChain seeds(splitmix64(cfg.seed ^ 0xF17E7u));
  WorldModel wm(cfg.wm, seeds.next());
  auto intrinsic = make_intrinsic(cfg.intrinsic_kind, cfg.intrinsic_config(), seeds.next());
  PolicyNet explore_policy(AcRole::Explore, cfg.wm.feature(), cfg.ac_hidden, cfg.wm.action_count,
                           seeds.next());
  ValueNet explore_value(AcRole::Explore, cfg.wm.feature(), cfg.ac_hidden, seeds.next());
  pretrained.load_into(wm.wm_params());
  pretrained.load_into(wm.reward_params());
  pretrained.load_into(explore_policy.params());
  pretrained.load_into(explore_value.params());
  if (intrinsic) {
    pretrained.load_into(intrinsic->params());
    if (ParameterSet* tgt = rnd_frozen_target(intrinsic.get())) pretrained.load_into(*tgt);
    intrinsic->normalizer().set_state(pretrained.extras.at("normalizer/mu"),
                                      pretrained.extras.at("normalizer/var"));
  }

  // Frozen for the whole phase: representation, intrinsic signal, exploration
  // actor-critic. Only the task actor-critic and the reward head adapt.
  wm.wm_params().freeze();
  explore_policy.params().freeze();
  explore_value.params().freeze();
  std::vector<FrozenWitness> witnesses{{&wm.wm_params(), wm.wm_params().checksum()},
                                       {&explore_policy.params(), explore_policy.params().checksum()},
                                       {&explore_value.params(), explore_value.params().checksum()}};
  if (intrinsic) {
    intrinsic->params().freeze();
    witnesses.push_back({&intrinsic->params(), intrinsic->params().checksum()});
    if (ParameterSet* tgt = rnd_frozen_target(intrinsic.get()))
      witnesses.push_back({tgt, tgt->checksum()});
  }

  PolicyNet policy(AcRole::Task, cfg.wm.feature(), cfg.ac_hidden, cfg.wm.action_count,
                   seeds.next());
  ValueNet value(AcRole::Task, cfg.wm.feature(), cfg.ac_hidden, seeds.next());
  policy.copy_from(explore_policy);
  value.copy_from(explore_value);
  Adam rew_opt = make_adam(cfg.protocol.wm_lr);
  Adam actor_opt = make_adam(cfg.ac.actor_lr);
  Adam critic_opt = make_adam(cfg.ac.critic_lr);

  const TaskSpec& task = cfg.task_spec();
  ReplayBuffer replay(kReplayCapacity, /*allow_reward=*/true);
  const TownMap town = TownMap::town_a();
  Simulator sim(cfg.sim);
  sim.enable_rewards(task.weights);
  LatentFilter filter(wm, seeds.next());
  SeededRng env_rng(seeds.next()), act_rng(seeds.next()), sample_rng(seeds.next()),
      imag_rng(seeds.next()), loss_rng(seeds.next()), start_rng(seeds.next());

  std::vector<uint8_t> obs =
      sim.reset(town, RouteId::Straight, task.train_density, env_rng.raw(), env_rng.raw());
  int prev_action = -1;
  double ep_return = 0.0, last_ep_return = 0.0;
  int64_t env_steps = 0, updates = 0;
  while (env_steps < cfg.protocol.finetune_steps) {
    const Tensor& u = filter.update(obs, prev_action);
    const int a = policy.act(u, act_rng);
    StepResult r = sim.step(Action{a});
    replay.append({obs, a, r.total_reward, r.terminal ? 0.0 : 1.0});
    obs = std::move(r.observation);
    prev_action = a;
    ep_return += r.total_reward;
    ++env_steps;
    if (r.terminal) {
      last_ep_return = ep_return;
      ep_return = 0.0;
      obs = sim.reset(town, RouteId::Straight, task.train_density, env_rng.raw(), env_rng.raw());
      filter.reset();
      prev_action = -1;
    }
    if (env_steps % cfg.protocol.train_ratio != 0) continue;

    std::vector<std::vector<Transition>> batch;
    try {
      batch = replay.sample_sequences(cfg.protocol.batch, cfg.protocol.seq_len, sample_rng);
    } catch (const InsufficientDataError&) {
      continue;  // budget keeps running; updates start once an L-step window exists
    }
    SeqFeatures feats;
    Tensor rew_loss = wm.finetune_reward_loss(batch, loss_rng, &feats);
    const double rew_loss_v = rew_loss.item();
    rew_loss.backward();
    rew_opt.step(wm.reward_params());

    const LatentState starts = gather_starts(feats, cfg.protocol.imag_starts, cfg.wm, start_rng);
    const ImaginedTrajectory traj =
        imagine_rollout(wm, starts, policy, nullptr, cfg.ac.horizon, imag_rng);
    const AcLosses ac = actor_critic_update(traj, policy, value, cfg.ac, actor_opt, critic_opt);
    ++updates;

    log.write({{"stage", "finetune"},
               {"step", env_steps},
               {"update", updates},
               {"reward_loss", rew_loss_v},
               {"r_task_imag", mean_reward(traj)},
               {"actor_loss", ac.actor},
               {"critic_loss", ac.critic},
               {"entropy", ac.entropy},
               {"ep_return", last_ep_return}});
    if (updates % cfg.protocol.checksum_interval == 0) audit_frozen(witnesses);
  }
  audit_frozen(witnesses);

  Checkpoint ck;
  ck.step_count = static_cast<uint64_t>(cfg.protocol.finetune_steps);
  ck.config_hash = config_hash(cfg);
  ck.stage = "finetune";
  ck.store_set(wm.wm_params());
  ck.store_set(wm.reward_params());
  ck.store_set(explore_policy.params());
  ck.store_set(explore_value.params());
  ck.store_set(policy.params());
  ck.store_set(value.params());
  if (intrinsic) {
    ck.store_set(intrinsic->params());
    if (ParameterSet* tgt = rnd_frozen_target(intrinsic.get())) ck.store_set(*tgt);
    ck.extras["normalizer/mu"] = intrinsic->normalizer().mu();
    ck.extras["normalizer/var"] = intrinsic->normalizer().var();
  }
  ck.store_adam("reward", rew_opt);
  ck.store_adam("actor_task", actor_opt);
  ck.store_adam("critic_task", critic_opt);
  ck.extras["env_steps"] = static_cast<double>(env_steps);
  ck.extras["updates"] = static_cast<double>(updates);

  StageResult res;
  res.checkpoint_path = out_dir + "/checkpoint.bin";
  res.metrics_path = log.path();
  res.env_steps = env_steps;
  res.updates = updates;
  ck.save(res.checkpoint_path);
  return res;
}

StageResult run_baseline_extrinsic(const Config& cfg, const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  save_config_snapshot(cfg, out_dir);
  MetricsLog log(out_dir + "/metrics.jsonl");

  SeedChain seeds(splitmix64(cfg.seed ^ 0xBA5Eu));
  WorldModel wm(cfg.wm, seeds.next());
  PolicyNet policy(AcRole::Task, cfg.wm.feature(), cfg.ac_hidden, cfg.wm.action_count,
                   seeds.next());
  ValueNet value(AcRole::Task, cfg.wm.feature(), cfg.ac_hidden, seeds.next());
  Adam wm_opt = make_adam(cfg.protocol.wm_lr);
  Adam rew_opt = make_adam(cfg.protocol.wm_lr);
  Adam actor_opt = make_adam(cfg.ac.actor_lr);
  Adam critic_opt = make_adam(cfg.ac.critic_lr);

  const TaskSpec& task = cfg.task_spec();
  ReplayBuffer replay(kReplayCapacity, /*allow_reward=*/true);
  const TownMap town = TownMap::town_a();
  Simulator sim(cfg.sim);
  sim.enable_rewards(task.weights);
  LatentFilter filter(wm, seeds.next());
  SeededRng env_rng(seeds.next()), act_rng(seeds.next()), sample_rng(seeds.next()),
      imag_rng(seeds.next()), loss_rng(seeds.next()), start_rng(seeds.next());

  std::vector<uint8_t> obs =
      sim.reset(town, RouteId::Straight, task.train_density, env_rng.raw(), env_rng.raw());
  int prev_action = -1;
  double ep_return = 0.0, last_ep_return = 0.0;
  // Matched total interaction budget: pretrain + finetune, same prefill rule.
  const int64_t budget = cfg.protocol.pretrain_steps + cfg.protocol.finetune_steps;
  const int64_t total = cfg.protocol.prefill_steps + budget;
  int64_t env_steps = 0, updates = 0;
  while (env_steps < total) {
    const Tensor& u = filter.update(obs, prev_action);
    const int a = env_steps < cfg.protocol.prefill_steps
                      ? static_cast<int>(act_rng.next_index(Action::kCount))
                      : policy.act(u, act_rng);
    StepResult r = sim.step(Action{a});
    replay.append({obs, a, r.total_reward, r.terminal ? 0.0 : 1.0});
    obs = std::move(r.observation);
    prev_action = a;
    ep_return += r.total_reward;
    ++env_steps;
    if (r.terminal) {
      last_ep_return = ep_return;
      ep_return = 0.0;
      obs = sim.reset(town, RouteId::Straight, task.train_density, env_rng.raw(), env_rng.raw());
      filter.reset();
      prev_action = -1;
    }
    const int64_t budget_step = env_steps - cfg.protocol.prefill_steps;
    if (budget_step <= 0 || budget_step % cfg.protocol.train_ratio != 0) continue;

    auto batch = replay.sample_sequences(cfg.protocol.batch, cfg.protocol.seq_len, sample_rng);
    WmDiagnostics diag;
    SeqFeatures feats;
    Tensor wm_loss = wm.pretrain_loss(batch, loss_rng, &diag, &feats);
    wm_loss.backward();
    wm_opt.step(wm.wm_params());

    // Reward head regression on the same posterior features, detached.
    Tensor rew_loss = Tensor::scalar(0.0);
    {
      const int B = static_cast<int>(batch.size());
      const int L = static_cast<int>(batch.front().size());
      for (int t = 0; t < L; ++t) {
        std::vector<double> targets;
        for (const auto& seq : batch) targets.push_back(*seq[static_cast<size_t>(t)].r_ext);
        LatentState st;
        st.h = feats.h[static_cast<size_t>(t)];
        st.s = feats.s[static_cast<size_t>(t)];
        st.u = feats.u[static_cast<size_t>(t)];
        const Tensor err = sub(wm.predict_reward(st), Tensor::from({B, 1}, std::move(targets)));
        rew_loss = add(rew_loss, scale(sum_all(square_t(err)), 0.5 / (B * L)));
      }
    }
    const double rew_loss_v = rew_loss.item();
    rew_loss.backward();
    rew_opt.step(wm.reward_params());

    const LatentState starts = gather_starts(feats, cfg.protocol.imag_starts, cfg.wm, start_rng);
    const ImaginedTrajectory traj =
        imagine_rollout(wm, starts, policy, nullptr, cfg.ac.horizon, imag_rng);
    const AcLosses ac = actor_critic_update(traj, policy, value, cfg.ac, actor_opt, critic_opt);
    ++updates;

    log.write({{"stage", "baseline"},
               {"step", budget_step},
               {"update", updates},
               {"wm_loss", diag.total},
               {"recon", diag.recon},
               {"kl", diag.kl},
               {"cont", diag.cont},
               {"reward_loss", rew_loss_v},
               {"r_task_imag", mean_reward(traj)},
               {"actor_loss", ac.actor},
               {"critic_loss", ac.critic},
               {"entropy", ac.entropy},
               {"ep_return", last_ep_return}});
  }

  Checkpoint ck;
  ck.step_count = static_cast<uint64_t>(budget);
  ck.config_hash = config_hash(cfg);
  ck.stage = "baseline";
  ck.store_set(wm.wm_params());
  ck.store_set(wm.reward_params());
  ck.store_set(policy.params());
  ck.store_set(value.params());
  ck.store_adam("wm", wm_opt);
  ck.store_adam("reward", rew_opt);
  ck.store_adam("actor_task", actor_opt);
  ck.store_adam("critic_task", critic_opt);
  ck.extras["env_steps"] = static_cast<double>(budget);
  ck.extras["prefill_steps"] = static_cast<double>(cfg.protocol.prefill_steps);
  ck.extras["updates"] = static_cast<double>(updates);

  StageResult res;
  res.checkpoint_path = out_dir + "/checkpoint.bin";
  res.metrics_path = log.path();
  res.env_steps = budget;
  res.updates = updates;
  ck.save(res.checkpoint_path);
  return res;
}

}  // namespace gridwm
