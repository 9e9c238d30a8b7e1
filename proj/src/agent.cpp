#include "gridwm/agent.hpp"

#include <cmath>

namespace gridwm {

std::string to_string(AcRole r) { return r == AcRole::Explore ? "explore" : "task"; }

PolicyNet::PolicyNet(AcRole role, int feature, int hidden, int actions, uint64_t seed)
    : role_(role), actions_(actions), params_("policy_" + to_string(role)) {
  SeededRng rng(seed);
  fc1_ = Linear(params_, "fc1", feature, hidden, rng);
  fc2_ = Linear(params_, "fc2", hidden, actions, rng);
}

int PolicyNet::act(const Tensor& u, SeededRng& rng, bool greedy) const {
  const Tensor probs = softmax_rows(logits(u.detach()));
  if (greedy) return argmax_row(probs, 0);
  double r = rng.uniform();
  for (int a = 0; a < actions_; ++a) {
    r -= probs.at(0, a);
    if (r <= 0.0) return a;
  }
  return actions_ - 1;
}

void PolicyNet::copy_from(const PolicyNet& other) {
  for (auto& [k, t] : params_.all()) t.data() = other.params_.at(k).data();
}

ValueNet::ValueNet(AcRole role, int feature, int hidden, uint64_t seed)
    : role_(role), params_("value_" + to_string(role)) {
  SeededRng rng(seed);
  fc1_ = Linear(params_, "fc1", feature, hidden, rng);
  fc2_ = Linear(params_, "fc2", hidden, 1, rng);
}

void ValueNet::copy_from(const ValueNet& other) {
  for (auto& [k, t] : params_.all()) t.data() = other.params_.at(k).data();
}

const Tensor& LatentFilter::update(const std::vector<uint8_t>& obs, int prev_action) {
  const WmConfig& cfg = wm_->config();
  const Tensor e = wm_->encode(WorldModel::obs_to_tensor({&obs}, cfg));
  const Tensor act = prev_action < 0 ? Tensor::zeros({1, cfg.action_count})
                                     : onehot_rows({prev_action}, cfg.action_count);
  const RssmOut out = wm_->rssm_step(state_, act, &e, RssmMode::Representation, rng_);
  state_.h = out.state.h.detach();
  state_.s = out.state.s.detach();
  state_.u = concat_cols(state_.h, state_.s);
  return state_.u;
}

ImaginedTrajectory imagine_rollout(WorldModel& wm, const LatentState& starts,
                                   const PolicyNet& policy, const IntrinsicModule* intrinsic,
                                   int H, SeededRng& rng) {
  if (H < 1) throw ConfigError("imagination horizon must be >= 1");
  if (policy.role() == AcRole::Explore && intrinsic == nullptr)
    throw ContractError("exploration rollout requires an intrinsic module");
  const int B = starts.batch();

  ImaginedTrajectory traj;
  traj.role = policy.role();
  // detach the start: no gradient flows back into the posterior pass
  LatentState st;
  st.h = starts.h.detach();
  st.s = starts.s.detach();
  st.u = concat_cols(st.h, st.s);

  for (int t = 0; t < H; ++t) {
    ImaginedStep step;
    step.u = st.u;
    const Tensor probs = softmax_rows(policy.logits(st.u));
    for (int b = 0; b < B; ++b) {
      double r = rng.uniform();
      int a = policy.action_count() - 1;
      for (int c = 0; c < policy.action_count(); ++c) {
        r -= probs.at(b, c);
        if (r <= 0.0) {
          a = c;
          break;
        }
      }
      step.actions.push_back(a);
    }
    const Tensor act = onehot_rows(step.actions, policy.action_count());
    const RssmOut out = wm.rssm_step(st, act, nullptr, RssmMode::Imagination, rng);
    LatentState next;
    next.h = out.state.h.detach();
    next.s = out.state.s.detach();
    next.u = concat_cols(next.h, next.s);

    if (traj.role == AcRole::Explore) {
      step.rewards = intrinsic->reward(step.u, step.actions, next.u);
    } else {
      const Tensor r_hat = wm.predict_reward(next);
      step.rewards.assign(r_hat.data().begin(), r_hat.data().end());
    }
    const Tensor c_hat = wm.predict_continuation(next);
    step.cont.assign(c_hat.data().begin(), c_hat.data().end());

    traj.steps.push_back(std::move(step));
    st = next;
  }
  traj.bootstrap_u = st.u;
  return traj;
}

std::vector<std::vector<double>> compute_returns(const ImaginedTrajectory& traj,
                                                 const std::vector<double>& bootstrap_values,
                                                 double gamma) {
  const int H = static_cast<int>(traj.steps.size());
  const size_t B = traj.steps.front().actions.size();
  if (bootstrap_values.size() != B)
    throw DimensionError("bootstrap value count does not match the trajectory batch");
  std::vector<std::vector<double>> G(static_cast<size_t>(H), std::vector<double>(B, 0.0));
  std::vector<double> next = bootstrap_values;
  for (int t = H - 1; t >= 0; --t) {
    const ImaginedStep& s = traj.steps[static_cast<size_t>(t)];
    for (size_t b = 0; b < B; ++b)
      G[static_cast<size_t>(t)][b] = s.rewards[b] + gamma * s.cont[b] * next[b];
    next = G[static_cast<size_t>(t)];
  }
  return G;
}

AcLosses actor_critic_update(const ImaginedTrajectory& traj, PolicyNet& policy, ValueNet& value,
                             const ImaginationConfig& cfg, Adam& actor_opt, Adam& critic_opt) {
  cfg.validate();
  if (policy.role() != traj.role || value.role() != traj.role)
    throw ContractError("actor-critic role does not match the trajectory role");
  const int H = static_cast<int>(traj.steps.size());
  const int B = static_cast<int>(traj.steps.front().actions.size());

  // bootstrap with the critic's current estimate at the horizon state
  const std::vector<double> boot = value.value(traj.bootstrap_u).detach().data();
  const auto G = compute_returns(traj, boot, cfg.gamma);

  Tensor critic_loss = Tensor::scalar(0.0);
  Tensor actor_obj = Tensor::scalar(0.0);  // maximized
  Tensor entropy = Tensor::scalar(0.0);
  for (int t = 0; t < H; ++t) {
    const ImaginedStep& s = traj.steps[static_cast<size_t>(t)];
    const Tensor v = value.value(s.u);  // [B,1]
    const Tensor g = Tensor::from({B, 1}, std::vector<double>(G[static_cast<size_t>(t)]));
    critic_loss = add(critic_loss, scale(sum_all(square_t(sub(v, g))), 0.5 / (B * H)));

    std::vector<double> adv(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b)
      adv[static_cast<size_t>(b)] = G[static_cast<size_t>(t)][static_cast<size_t>(b)] -
                                    v.at(b, 0);  // stop-grad baseline

    const Tensor logits = policy.logits(s.u);
    const Tensor logp = log_softmax_rows(logits);
    const Tensor picked = row_sum(mul(onehot_rows(s.actions, policy.action_count()), logp));
    actor_obj = add(actor_obj, scale(sum_all(mul(Tensor::from({B}, std::move(adv)), picked)),
                                     1.0 / (B * H)));
    const Tensor p = softmax_rows(logits);
    entropy = add(entropy, scale(sum_all(mul(p, logp)), -1.0 / (B * H)));
  }
  const Tensor actor_loss = sub(Tensor::scalar(0.0),
                                add(actor_obj, scale(entropy, cfg.entropy_coef)));

  AcLosses losses;
  losses.actor = actor_loss.item();
  losses.critic = critic_loss.item();
  losses.entropy = entropy.item();
  if (!std::isfinite(losses.actor) || !std::isfinite(losses.critic))
    throw NumericError("non-finite actor-critic loss");

  critic_loss.backward();
  critic_opt.step(value.params());
  actor_loss.backward();
  actor_opt.step(policy.params());
  return losses;
}

}  // namespace gridwm
