#pragma once

#include <memory>

#include "gridwm/nn.hpp"

namespace gridwm {

// EMA normalizer over a scalar signal stream: update mean, then variance
// using the just-updated mean, then normalize with the post-update statistics.
class RunningNormalizer {
 public:
  explicit RunningNormalizer(double rho, double eps = kEps) : rho_(rho), eps_(eps) {}

  double normalize(double g) {
    mu_ = (1.0 - rho_) * mu_ + rho_ * g;
    const double d = g - mu_;
    var_ = (1.0 - rho_) * var_ + rho_ * d * d;
    return d / (std::sqrt(var_) + eps_);
  }
  // Normalize against current statistics without updating them (used on
  // imagined rollouts so that only real data drives the statistics).
  double peek(double g) const { return (g - mu_) / (std::sqrt(var_) + eps_); }

  double mu() const { return mu_; }
  double var() const { return var_; }
  double rho() const { return rho_; }
  void set_state(double mu, double var) { mu_ = mu; var_ = var; }

 private:
  double rho_, eps_;
  double mu_ = 0.0;
  double var_ = 1.0;
};

struct IntrinsicConfig {
  int feature = 192;  // |u| = D_h + V*C
  int action_count = 9;
  int vars = 8, classes = 8;  // next-latent target layout, d = vars*classes
  int hidden = 64;
  int ensemble_k = 5;
  double eta = 0.5;     // ICM reward scale
  int rnd_out = 64;     // RND embedding width
  double rho = 0.01;    // normalizer EMA rate
  int latent() const { return vars * classes; }
};

// Real replayed transitions prepared for intrinsic training. All tensors are
// detached: no gradient may reach the world model from any intrinsic loss.
struct IntrinsicBatch {
  Tensor u;                // [B, feature]
  Tensor next_u;           // [B, feature]
  std::vector<int> actions;
  Tensor next_post_probs;  // [B*vars, classes], the ensemble's CE target
};

// Common interface for the three exploration signals. They consume the same
// feature u_t = [h_t; s_t], train on the same batches at the same frequency,
// and expose a batched reward path usable on imagined latents.
class IntrinsicModule {
 public:
  virtual ~IntrinsicModule() = default;
  virtual std::string kind() const = 0;

  // Training loss on one real batch; also feeds the normalizer with the
  // batch's pre-normalization signals and bumps the update counter.
  virtual Tensor train_loss(const IntrinsicBatch& b) = 0;

  // Per-sample intrinsic reward. next_u may be undefined for kinds that do
  // not need it; normalizer statistics are read, never written.
  virtual std::vector<double> reward(const Tensor& u, const std::vector<int>& actions,
                                     const Tensor& next_u) const = 0;

  ParameterSet& params() { return params_; }
  // Additional parameters that must stay byte-identical for the whole run.
  ParameterSet* frozen_params() { return nullptr; }
  RunningNormalizer& normalizer() { return norm_; }
  const RunningNormalizer& normalizer() const { return norm_; }
  uint64_t update_count() const { return updates_; }

 protected:
  IntrinsicModule(const IntrinsicConfig& cfg, std::string set_name)
      : cfg_(cfg), params_(std::move(set_name)), norm_(cfg.rho) {}

  IntrinsicConfig cfg_;
  ParameterSet params_;
  RunningNormalizer norm_;
  uint64_t updates_ = 0;
};

// K independent predictors (u_t, a_t) -> next-latent categorical probs;
// reward is the mean per-dimension population variance of member outputs,
// used raw (unnormalized).
class DisagreementEnsemble : public IntrinsicModule {
 public:
  DisagreementEnsemble(const IntrinsicConfig& cfg, uint64_t seed);
  std::string kind() const override { return "disagreement"; }
  Tensor train_loss(const IntrinsicBatch& b) override;
  std::vector<double> reward(const Tensor& u, const std::vector<int>& actions,
                             const Tensor& next_u) const override;

 private:
  Tensor member_probs(int k, const Tensor& x) const;  // [B*vars, classes]
  std::vector<Linear> fc1_, fc2_;
};

// Inverse net (u_t, u_{t+1}) -> action logits; forward net (u_t, a_t) -> u_hat;
// reward eta * Norm(forward error).
class IcmModule : public IntrinsicModule {
 public:
  IcmModule(const IntrinsicConfig& cfg, uint64_t seed);
  std::string kind() const override { return "icm"; }
  Tensor train_loss(const IntrinsicBatch& b) override;
  std::vector<double> reward(const Tensor& u, const std::vector<int>& actions,
                             const Tensor& next_u) const override;
  // (L_inv, L_fwd) diagnostics for the last train_loss call.
  double last_inverse_loss() const { return last_inv_; }
  double last_forward_loss() const { return last_fwd_; }

 private:
  std::vector<double> forward_errors(const Tensor& u, const std::vector<int>& actions,
                                     const Tensor& next_u) const;
  Linear inv_fc1_, inv_fc2_, fwd_fc1_, fwd_fc2_;
  double last_inv_ = 0.0, last_fwd_ = 0.0;
};

// Frozen random target f and trained predictor p, both u -> R^rnd_out;
// reward Norm(|p(u) - f(u)|^2).
class RndModule : public IntrinsicModule {
 public:
  RndModule(const IntrinsicConfig& cfg, uint64_t seed);
  std::string kind() const override { return "rnd"; }
  Tensor train_loss(const IntrinsicBatch& b) override;
  std::vector<double> reward(const Tensor& u, const std::vector<int>& actions,
                             const Tensor& next_u) const override;
  ParameterSet* frozen_target() { return &target_params_; }
  // test hook: distillation identity when predictor == target
  void copy_target_into_predictor();

 private:
  std::vector<double> errors(const Tensor& u) const;
  ParameterSet target_params_{"rnd_target"};
  Linear tgt_fc1_, tgt_fc2_;  // members of target_params_, frozen
  Linear prd_fc1_, prd_fc2_;
};

// kind in {disagreement, icm, rnd, none}; none returns nullptr (extrinsic-only
// baseline configuration).
std::unique_ptr<IntrinsicModule> make_intrinsic(const std::string& kind,
                                                const IntrinsicConfig& cfg, uint64_t seed);

}  // namespace gridwm
