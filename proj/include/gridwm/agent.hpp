#pragma once

#include "gridwm/intrinsic.hpp"
#include "gridwm/world_model.hpp"

namespace gridwm {

struct ImaginationConfig {
  int horizon = 15;
  double gamma = 0.99;
  double entropy_coef = 3e-3;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  void validate() const {
    if (horizon < 1) throw ConfigError("imagination horizon must be >= 1");
    if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("discount must lie in (0,1)");
  }
};

// Exploration maximizes intrinsic return; the task role maximizes extrinsic
// return through the reward head. The two never share reward paths.
enum class AcRole { Explore, Task };

std::string to_string(AcRole r);

class PolicyNet {
 public:
  PolicyNet(AcRole role, int feature, int hidden, int actions, uint64_t seed);
  AcRole role() const { return role_; }
  Tensor logits(const Tensor& u) const { return fc2_(tanh_t(fc1_(u))); }
  // Sample (or argmax) one action for a single-row feature.
  int act(const Tensor& u, SeededRng& rng, bool greedy = false) const;
  // Phase-2 initialization: copy all parameters from the exploration policy.
  void copy_from(const PolicyNet& other);
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int action_count() const { return actions_; }

 private:
  AcRole role_;
  int actions_;
  ParameterSet params_;
  Linear fc1_, fc2_;
};

class ValueNet {
 public:
  ValueNet(AcRole role, int feature, int hidden, uint64_t seed);
  AcRole role() const { return role_; }
  Tensor value(const Tensor& u) const { return fc2_(tanh_t(fc1_(u))); }  // [B,1]
  void copy_from(const ValueNet& other);
  ParameterSet& params() { return params_; }

 private:
  AcRole role_;
  ParameterSet params_;
  Linear fc1_, fc2_;
};

// Online posterior filtering for acting in the real environment. Holds a
// single-row latent state across one episode, detached after every step so
// acting never accumulates a gradient tape.
class LatentFilter {
 public:
  LatentFilter(WorldModel& wm, uint64_t seed) : wm_(&wm), rng_(seed) { reset(); }
  void reset() { state_ = wm_->initial_state(1); }
  // Fold in the latest observation; prev_action < 0 marks an episode start.
  const Tensor& update(const std::vector<uint8_t>& obs, int prev_action);
  const LatentState& state() const { return state_; }

 private:
  WorldModel* wm_;
  SeededRng rng_;
  LatentState state_;
};

// One imagined step: everything stored detached — policy losses must not
// reach the world model or the intrinsic module.
struct ImaginedStep {
  Tensor u;                     // [B, feature], detached
  std::vector<int> actions;     // a_t sampled from the policy
  std::vector<double> rewards;  // r_t for (u_t, a_t, u_{t+1})
  std::vector<double> cont;     // continuation prob of the reached state
};

struct ImaginedTrajectory {
  AcRole role = AcRole::Explore;
  std::vector<ImaginedStep> steps;  // length H
  Tensor bootstrap_u;               // [B, feature] at the horizon, detached
};

// Prior-only rollout of H steps from posterior start states. Explore role
// requires an intrinsic module; task role reads the extrinsic reward head.
ImaginedTrajectory imagine_rollout(WorldModel& wm, const LatentState& starts,
                                   const PolicyNet& policy, const IntrinsicModule* intrinsic,
                                   int H, SeededRng& rng);

// Discounted bootstrapped targets: G_t = r_t + gamma * c_t * G_{t+1}, with
// G_H given by bootstrap_values. Result is [H][B].
std::vector<std::vector<double>> compute_returns(const ImaginedTrajectory& traj,
                                                 const std::vector<double>& bootstrap_values,
                                                 double gamma);

struct AcLosses {
  double actor = 0.0, critic = 0.0, entropy = 0.0;
};

// REINFORCE-with-baseline update: critic regresses stop-grad(G); actor ascends
// stop-grad(G - V) * log pi + entropy bonus.
AcLosses actor_critic_update(const ImaginedTrajectory& traj, PolicyNet& policy, ValueNet& value,
                             const ImaginationConfig& cfg, Adam& actor_opt, Adam& critic_opt);

}  // namespace gridwm
