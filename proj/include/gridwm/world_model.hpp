#pragma once

#include "gridwm/nn.hpp"
#include "gridwm/replay.hpp"

namespace gridwm {

// RSSM sizing and loss weights. Widths are desk-scale defaults chosen for
// single-core training; the latent is V one-hot variables of C classes.
struct WmConfig {
  int obs_c = 7, obs_h = 16, obs_w = 16;
  int embed = 256;
  int d_h = 128;
  int vars = 8, classes = 8;
  int hidden = 128;       // prior/posterior head hidden width
  int dec_hidden = 256;   // decoder hidden width
  int head_hidden = 64;   // continuation / reward head hidden width
  int action_count = 9;
  double beta_kl = 1.0;
  double lambda_c = 1.0;
  double lambda_r = 1.0;
  double free_bits = 1.0;  // nats per latent variable

  int latent() const { return vars * classes; }
  int feature() const { return d_h + latent(); }
  int pixels() const { return obs_h * obs_w; }
};

// (h, s) pair plus the concatenated feature u = [h; s] that every downstream
// module consumes. All tensors are batched: h [B,D_h], s [B,V*C], u [B,D_h+V*C].
struct LatentState {
  Tensor h, s, u;
  int batch() const { return h.dim(0); }
};

// Posterior sampling is for representation learning on real data; prior
// sampling is for imagination. The mode is explicit so call paths can be
// audited by counter.
enum class RssmMode { Representation, Imagination };

struct RssmOut {
  LatentState state;
  Tensor prior_probs;      // [B*V, C]
  Tensor posterior_probs;  // [B*V, C]; undefined in Imagination mode
};

struct WmDiagnostics {
  double total = 0.0, recon = 0.0, kl = 0.0, cont = 0.0;
};

// Detached per-step posterior byproducts of a sequence pass, reused by the
// intrinsic modules and as imagination start states.
struct SeqFeatures {
  std::vector<Tensor> h, s, u;       // each [B, ...] per time step
  std::vector<Tensor> post_probs;    // each [B*V, C]
  std::vector<std::vector<int>> actions;  // action taken at step t
};

class WorldModel {
 public:
  WorldModel(const WmConfig& cfg, uint64_t seed);

  LatentState initial_state(int B) const;

  // obs [B, C, H, W] one-hot semantic image -> embedding [B, embed]
  Tensor encode(const Tensor& obs) const;

  // h_t from GRU(h_{t-1}, [s_{t-1}; a_{t-1}]); s_t sampled straight-through
  // from the posterior (Representation, embedding required) or the prior
  // (Imagination, embedding must be null).
  RssmOut rssm_step(const LatentState& prev, const Tensor& action_onehot, const Tensor* embedding,
                    RssmMode mode, SeededRng& rng);

  // Sequence loss: reconstruction + beta_kl * max(free_bits, KL(post||prior))
  // + lambda_c * continuation BCE, summed over time, averaged over batch.
  Tensor pretrain_loss(const std::vector<std::vector<Transition>>& batch, SeededRng& rng,
                       WmDiagnostics* diag = nullptr, SeqFeatures* features = nullptr);

  // Unit-variance Gaussian NLL of the reward head on real transitions, with
  // gradients stopped into (h, s): only the reward head learns.
  Tensor finetune_reward_loss(const std::vector<std::vector<Transition>>& batch, SeededRng& rng,
                              SeqFeatures* features = nullptr);

  Tensor predict_continuation(const LatentState& s) const;  // [B,1] in (0,1)
  Tensor predict_reward(const LatentState& s) const;        // [B,1] mean

  // Decoded observation as (class logits [B*P, 5], extra-channel probs [B, 2P]).
  std::pair<Tensor, Tensor> decode(const LatentState& s) const;

  static Tensor obs_to_tensor(const std::vector<const std::vector<uint8_t>*>& obs,
                              const WmConfig& cfg);

  ParameterSet& wm_params() { return phi_wm_; }
  ParameterSet& reward_params() { return phi_r_; }
  const WmConfig& config() const { return cfg_; }
  uint64_t posterior_steps() const { return posterior_steps_; }
  uint64_t prior_steps() const { return prior_steps_; }

 private:
  WmConfig cfg_;
  ParameterSet phi_wm_{"wm"};
  ParameterSet phi_r_{"reward"};
  Conv2dLayer conv1_, conv2_;
  Linear enc_fc_;
  GruCell gru_;
  Linear prior_fc1_, prior_fc2_;
  Linear post_fc1_, post_fc2_;
  Linear dec_fc1_, dec_fc2_;
  Linear cont_fc1_, cont_fc2_;
  Linear rew_fc1_, rew_fc2_;
  uint64_t posterior_steps_ = 0;
  uint64_t prior_steps_ = 0;
};

}  // namespace gridwm
