#include "gridwm/world_model.hpp"

#include <cmath>

#include "gridwm/sim.hpp"  // observation channel layout (kClassChannels)

namespace gridwm {

WorldModel::WorldModel(const WmConfig& cfg, uint64_t seed) : cfg_(cfg) {
  SeededRng rng(seed);
  // encoder: two stride-2 convs then a projection to the embedding
  conv1_ = Conv2dLayer(phi_wm_, "enc/conv1", cfg.obs_c, 16, 3, 2, 1, rng);
  conv2_ = Conv2dLayer(phi_wm_, "enc/conv2", 16, 32, 3, 2, 1, rng);
  const int conv_out = 32 * (cfg.obs_h / 4) * (cfg.obs_w / 4);
  enc_fc_ = Linear(phi_wm_, "enc/fc", conv_out, cfg.embed, rng);

  gru_ = GruCell(phi_wm_, "gru", cfg.latent() + cfg.action_count, cfg.d_h, rng);

  prior_fc1_ = Linear(phi_wm_, "prior/fc1", cfg.d_h, cfg.hidden, rng);
  prior_fc2_ = Linear(phi_wm_, "prior/fc2", cfg.hidden, cfg.latent(), rng);
  post_fc1_ = Linear(phi_wm_, "post/fc1", cfg.d_h + cfg.embed, cfg.hidden, rng);
  post_fc2_ = Linear(phi_wm_, "post/fc2", cfg.hidden, cfg.latent(), rng);

  const int class_out = kClassChannels * cfg.pixels();
  const int extra_out = (cfg.obs_c - kClassChannels) * cfg.pixels();
  dec_fc1_ = Linear(phi_wm_, "dec/fc1", cfg.feature(), cfg.dec_hidden, rng);
  dec_fc2_ = Linear(phi_wm_, "dec/fc2", cfg.dec_hidden, class_out + extra_out, rng);

  cont_fc1_ = Linear(phi_wm_, "cont/fc1", cfg.feature(), cfg.head_hidden, rng);
  cont_fc2_ = Linear(phi_wm_, "cont/fc2", cfg.head_hidden, 1, rng);

  rew_fc1_ = Linear(phi_r_, "fc1", cfg.feature(), cfg.head_hidden, rng);
  rew_fc2_ = Linear(phi_r_, "fc2", cfg.head_hidden, 1, rng);
}

LatentState WorldModel::initial_state(int B) const {
  LatentState st;
  st.h = Tensor::zeros({B, cfg_.d_h});
  st.s = Tensor::zeros({B, cfg_.latent()});
  st.u = concat_cols(st.h, st.s);
  return st;
}

Tensor WorldModel::obs_to_tensor(const std::vector<const std::vector<uint8_t>*>& obs,
                                 const WmConfig& cfg) {
  const size_t per = static_cast<size_t>(cfg.obs_c * cfg.obs_h * cfg.obs_w);
  std::vector<double> data;
  data.reserve(obs.size() * per);
  for (const auto* o : obs) {
    if (o->size() != per) throw DimensionError("observation size does not match configured shape");
    for (uint8_t v : *o) data.push_back(static_cast<double>(v));
  }
  return Tensor::from({static_cast<int>(obs.size()), cfg.obs_c, cfg.obs_h, cfg.obs_w},
                      std::move(data));
}

Tensor WorldModel::encode(const Tensor& obs) const {
  if (obs.shape().size() != 4 || obs.dim(1) != cfg_.obs_c || obs.dim(2) != cfg_.obs_h ||
      obs.dim(3) != cfg_.obs_w)
    throw DimensionError("encode() expects [B, C, H, W] with the configured shape");
  const int B = obs.dim(0);
  Tensor x = tanh_t(conv1_(obs));
  x = tanh_t(conv2_(x));
  x = reshape(x, {B, static_cast<int>(x.size() / B)});
  return tanh_t(enc_fc_(x));
}

RssmOut WorldModel::rssm_step(const LatentState& prev, const Tensor& action_onehot,
                              const Tensor* embedding, RssmMode mode, SeededRng& rng) {
  if (mode == RssmMode::Representation && embedding == nullptr)
    throw ContractError("representation-mode rssm_step requires an observation embedding");
  if (mode == RssmMode::Imagination && embedding != nullptr)
    throw ContractError("imagination-mode rssm_step must not receive an embedding");

  const int B = prev.batch();
  const Tensor x = concat_cols(prev.s, action_onehot);
  const Tensor h = gru_.step(x, prev.h);

  RssmOut out;
  const Tensor prior_logits =
      reshape(prior_fc2_(tanh_t(prior_fc1_(h))), {B * cfg_.vars, cfg_.classes});
  out.prior_probs = softmax_rows(prior_logits);

  Tensor probs_for_sample = out.prior_probs;
  if (mode == RssmMode::Representation) {
    const Tensor post_logits = reshape(post_fc2_(tanh_t(post_fc1_(concat_cols(h, *embedding)))),
                                       {B * cfg_.vars, cfg_.classes});
    out.posterior_probs = softmax_rows(post_logits);
    probs_for_sample = out.posterior_probs;
    ++posterior_steps_;
  } else {
    ++prior_steps_;
  }
  const Tensor s = reshape(sample_straight_through(probs_for_sample, rng), {B, cfg_.latent()});
  out.state.h = h;
  out.state.s = s;
  out.state.u = concat_cols(h, s);
  return out;
}

std::pair<Tensor, Tensor> WorldModel::decode(const LatentState& st) const {
  const int B = st.batch();
  const int P = cfg_.pixels();
  const Tensor y = dec_fc2_(tanh_t(dec_fc1_(st.u)));
  const Tensor class_logits =
      reshape(slice_cols(y, 0, kClassChannels * P), {B * P, kClassChannels});
  const Tensor extra_probs = sigmoid_t(slice_cols(y, kClassChannels * P, cfg_.obs_c * P));
  return {class_logits, extra_probs};
}

Tensor WorldModel::predict_continuation(const LatentState& st) const {
  return sigmoid_t(cont_fc2_(tanh_t(cont_fc1_(st.u))));
}

Tensor WorldModel::predict_reward(const LatentState& st) const {
  return rew_fc2_(tanh_t(rew_fc1_(st.u)));
}

namespace {

// per-pixel targets for the class channels, [B*P, kClassChannels] one-hot
Tensor class_targets(const std::vector<const std::vector<uint8_t>*>& obs, const WmConfig& cfg) {
  const int P = cfg.pixels();
  std::vector<double> data;
  data.reserve(obs.size() * static_cast<size_t>(P * kClassChannels));
  for (const auto* o : obs)
    for (int p = 0; p < P; ++p)
      for (int ch = 0; ch < kClassChannels; ++ch)
        data.push_back(static_cast<double>((*o)[static_cast<size_t>(ch * P + p)]));
  return Tensor::from({static_cast<int>(obs.size()) * P, kClassChannels}, std::move(data));
}

// targets for the non-class channels, [B, (C-kClassChannels)*P]
Tensor extra_targets(const std::vector<const std::vector<uint8_t>*>& obs, const WmConfig& cfg) {
  const int P = cfg.pixels();
  const int n = (cfg.obs_c - kClassChannels) * P;
  std::vector<double> data;
  data.reserve(obs.size() * static_cast<size_t>(n));
  for (const auto* o : obs)
    for (int i = 0; i < n; ++i)
      data.push_back(static_cast<double>((*o)[static_cast<size_t>(kClassChannels * P + i)]));
  return Tensor::from({static_cast<int>(obs.size()), n}, std::move(data));
}

// detached posterior byproducts of one rssm step, for intrinsic training and
// imagination start states
void record_features(SeqFeatures* f, const RssmOut& out, const std::vector<int>& actions) {
  if (!f) return;
  f->h.push_back(out.state.h.detach());
  f->s.push_back(out.state.s.detach());
  f->u.push_back(out.state.u.detach());
  f->post_probs.push_back(out.posterior_probs.detach());
  f->actions.push_back(actions);
}

}  // namespace

Tensor WorldModel::pretrain_loss(const std::vector<std::vector<Transition>>& batch, SeededRng& rng,
                                 WmDiagnostics* diag, SeqFeatures* features) {
  const int B = static_cast<int>(batch.size());
  const int L = static_cast<int>(batch.front().size());
  const int P = cfg_.pixels();
  LatentState st = initial_state(B);

  Tensor recon = Tensor::scalar(0.0);
  Tensor kl = Tensor::scalar(0.0);
  Tensor cont = Tensor::scalar(0.0);

  Tensor prev_action = Tensor::zeros({B, cfg_.action_count});
  for (int t = 0; t < L; ++t) {
    std::vector<const std::vector<uint8_t>*> obs;
    std::vector<int> actions;
    std::vector<double> conts;
    obs.reserve(static_cast<size_t>(B));
    for (const auto& seq : batch) {
      obs.push_back(&seq[static_cast<size_t>(t)].obs);
      actions.push_back(seq[static_cast<size_t>(t)].action);
      conts.push_back(seq[static_cast<size_t>(t)].cont);
    }
    const Tensor e = encode(obs_to_tensor(obs, cfg_));
    RssmOut out = rssm_step(st, prev_action, &e, RssmMode::Representation, rng);

    // KL(posterior || prior) with a per-variable free-bits floor
    kl = add(kl, scale(sum_all(max_floor(kl_rows(out.posterior_probs, out.prior_probs),
                                         cfg_.free_bits)),
                       1.0 / B));

    // reconstruction: per-pixel categorical CE over class channels plus
    // Bernoulli CE over the ego/vehicle channels, summed per sample
    const auto [class_logits, extra_probs] = decode(out.state);
    const Tensor logp = log_softmax_rows(class_logits);
    recon = add(recon, scale(sum_all(mul(class_targets(obs, cfg_), logp)), -1.0 / B));
    // bce_mean averages over all B * n_extra elements; rescale to sum-per-sample
    const Tensor et = extra_targets(obs, cfg_);
    const double n_extra = static_cast<double>((cfg_.obs_c - kClassChannels) * P);
    recon = add(recon, scale(bce_mean(extra_probs, et), n_extra));

    // continuation BCE against the stored continue flag
    const Tensor c_hat = predict_continuation(out.state);
    cont = add(cont, bce_mean(c_hat, Tensor::from({B, 1}, std::move(conts))));

    record_features(features, out, actions);
    st = out.state;
    prev_action = onehot_rows(actions, cfg_.action_count);
  }

  const Tensor total =
      add(recon, add(scale(kl, cfg_.beta_kl), scale(cont, cfg_.lambda_c)));
  if (!std::isfinite(total.item()))
    throw NumericError("non-finite pretraining loss (B=" + std::to_string(B) +
                       ", L=" + std::to_string(L) + ")");
  if (diag) {
    diag->recon = recon.item();
    diag->kl = kl.item();
    diag->cont = cont.item();
    diag->total = total.item();
  }
  return total;
}

Tensor WorldModel::finetune_reward_loss(const std::vector<std::vector<Transition>>& batch,
                                        SeededRng& rng, SeqFeatures* features) {
  const int B = static_cast<int>(batch.size());
  const int L = static_cast<int>(batch.front().size());
  LatentState st = initial_state(B);
  Tensor loss = Tensor::scalar(0.0);
  Tensor prev_action = Tensor::zeros({B, cfg_.action_count});
  for (int t = 0; t < L; ++t) {
    std::vector<const std::vector<uint8_t>*> obs;
    std::vector<int> actions;
    std::vector<double> rewards;
    for (const auto& seq : batch) {
      const Transition& tr = seq[static_cast<size_t>(t)];
      if (!tr.r_ext.has_value())
        throw ContractError("reward-head training requires extrinsic rewards in the batch");
      obs.push_back(&tr.obs);
      actions.push_back(tr.action);
      rewards.push_back(*tr.r_ext);
    }
    const Tensor e = encode(obs_to_tensor(obs, cfg_));
    RssmOut out = rssm_step(st, prev_action, &e, RssmMode::Representation, rng);

    // gradients stopped into (h, s): detach the feature before the head
    LatentState stopped;
    stopped.h = out.state.h.detach();
    stopped.s = out.state.s.detach();
    stopped.u = concat_cols(stopped.h, stopped.s);
    const Tensor r_hat = predict_reward(stopped);
    const Tensor err = sub(r_hat, Tensor::from({B, 1}, std::move(rewards)));
    loss = add(loss, scale(sum_all(square_t(err)), 0.5 / (B * L)));

    record_features(features, out, actions);
    st = out.state;
    prev_action = onehot_rows(actions, cfg_.action_count);
  }
  if (!std::isfinite(loss.item())) throw NumericError("non-finite reward-head loss");
  return scale(loss, cfg_.lambda_r);
}

}  // namespace gridwm
