#include "gridwm/intrinsic.hpp"

#include <cmath>

namespace gridwm {

namespace {

Tensor with_action(const Tensor& u, const std::vector<int>& actions, int action_count) {
  return concat_cols(u, onehot_rows(actions, action_count));
}

}  // namespace

// ---------------------------------------------------------------------------
// DisagreementEnsemble
// ---------------------------------------------------------------------------

DisagreementEnsemble::DisagreementEnsemble(const IntrinsicConfig& cfg, uint64_t seed)
    : IntrinsicModule(cfg, "intrinsic") {
  if (cfg.ensemble_k < 2)
    throw ConfigError("disagreement ensemble requires K >= 2, got " +
                      std::to_string(cfg.ensemble_k));
  for (int k = 0; k < cfg.ensemble_k; ++k) {
    // members differ by initialization stream only
    SeededRng rng(splitmix64(seed + static_cast<uint64_t>(k)));
    const std::string p = "k" + std::to_string(k);
    fc1_.emplace_back(params_, p + "/fc1", cfg.feature + cfg.action_count, cfg.hidden, rng);
    fc2_.emplace_back(params_, p + "/fc2", cfg.hidden, cfg.latent(), rng);
  }
}

Tensor DisagreementEnsemble::member_probs(int k, const Tensor& x) const {
  const int B = x.dim(0);
  const auto ki = static_cast<size_t>(k);
  const Tensor logits = fc2_[ki](tanh_t(fc1_[ki](x)));
  return softmax_rows(reshape(logits, {B * cfg_.vars, cfg_.classes}));
}

Tensor DisagreementEnsemble::train_loss(const IntrinsicBatch& b) {
  const Tensor x = with_action(b.u, b.actions, cfg_.action_count);
  const int B = b.u.dim(0);
  Tensor loss = Tensor::scalar(0.0);
  for (int k = 0; k < cfg_.ensemble_k; ++k) {
    // CE against the detached next-step posterior, independently per member
    const auto ki = static_cast<size_t>(k);
    const Tensor logits = fc2_[ki](tanh_t(fc1_[ki](x)));
    const Tensor logp = log_softmax_rows(reshape(logits, {B * cfg_.vars, cfg_.classes}));
    loss = add(loss, scale(sum_all(mul(b.next_post_probs, logp)), -1.0 / B));
  }
  // keep normalizer statistics flowing for scale diagnostics even though the
  // disagreement reward itself is used raw
  for (double r : reward(b.u, b.actions, b.next_u)) norm_.normalize(r);
  ++updates_;
  return loss;
}

std::vector<double> DisagreementEnsemble::reward(const Tensor& u, const std::vector<int>& actions,
                                                 const Tensor&) const {
  const Tensor x = with_action(u, actions, cfg_.action_count);
  const int B = u.dim(0);
  const int d = cfg_.latent();
  // member outputs as flat [B, d] probability vectors
  std::vector<std::vector<double>> outs;
  outs.reserve(static_cast<size_t>(cfg_.ensemble_k));
  for (int k = 0; k < cfg_.ensemble_k; ++k)
    outs.push_back(member_probs(k, x).data());
  std::vector<double> r(static_cast<size_t>(B), 0.0);
  const double K = static_cast<double>(cfg_.ensemble_k);
  for (int b = 0; b < B; ++b) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const size_t idx = static_cast<size_t>(b * d + i);
      double mean = 0.0;
      for (const auto& o : outs) mean += o[idx];
      mean /= K;
      double var = 0.0;
      for (const auto& o : outs) var += (o[idx] - mean) * (o[idx] - mean);
      acc += var / K;  // population variance
    }
    r[static_cast<size_t>(b)] = acc / d;
  }
  return r;
}

// ---------------------------------------------------------------------------
// IcmModule
// ---------------------------------------------------------------------------

IcmModule::IcmModule(const IntrinsicConfig& cfg, uint64_t seed)
    : IntrinsicModule(cfg, "intrinsic") {
  SeededRng rng(seed);
  inv_fc1_ = Linear(params_, "inv/fc1", 2 * cfg.feature, cfg.hidden, rng);
  inv_fc2_ = Linear(params_, "inv/fc2", cfg.hidden, cfg.action_count, rng);
  fwd_fc1_ = Linear(params_, "fwd/fc1", cfg.feature + cfg.action_count, cfg.hidden, rng);
  fwd_fc2_ = Linear(params_, "fwd/fc2", cfg.hidden, cfg.feature, rng);
}

std::vector<double> IcmModule::forward_errors(const Tensor& u, const std::vector<int>& actions,
                                              const Tensor& next_u) const {
  const Tensor u_hat = fwd_fc2_(tanh_t(fwd_fc1_(with_action(u, actions, cfg_.action_count))));
  return row_sum(square_t(sub(u_hat, next_u))).data();
}

Tensor IcmModule::train_loss(const IntrinsicBatch& b) {
  const int B = b.u.dim(0);
  // inverse: classify the action from consecutive features
  const Tensor inv_logits = inv_fc2_(tanh_t(inv_fc1_(concat_cols(b.u, b.next_u))));
  const Tensor logp = log_softmax_rows(inv_logits);
  const Tensor l_inv =
      scale(sum_all(mul(onehot_rows(b.actions, cfg_.action_count), logp)), -1.0 / B);
  // forward: predict the next feature
  const Tensor u_hat = fwd_fc2_(tanh_t(fwd_fc1_(with_action(b.u, b.actions, cfg_.action_count))));
  const Tensor l_fwd = scale(sum_all(square_t(sub(u_hat, b.next_u))), 1.0 / B);
  last_inv_ = l_inv.item();
  last_fwd_ = l_fwd.item();
  for (double e : forward_errors(b.u, b.actions, b.next_u)) norm_.normalize(e);
  ++updates_;
  return add(l_inv, l_fwd);
}

std::vector<double> IcmModule::reward(const Tensor& u, const std::vector<int>& actions,
                                      const Tensor& next_u) const {
  std::vector<double> r = forward_errors(u, actions, next_u);
  for (double& v : r) v = cfg_.eta * norm_.peek(v);
  return r;
}

// ---------------------------------------------------------------------------
// RndModule
// ---------------------------------------------------------------------------

RndModule::RndModule(const IntrinsicConfig& cfg, uint64_t seed)
    : IntrinsicModule(cfg, "intrinsic") {
  SeededRng trng(splitmix64(seed));
  tgt_fc1_ = Linear(target_params_, "fc1", cfg.feature, cfg.hidden, trng);
  tgt_fc2_ = Linear(target_params_, "fc2", cfg.hidden, cfg.rnd_out, trng);
  target_params_.freeze();
  SeededRng prng(splitmix64(seed + 1));
  prd_fc1_ = Linear(params_, "fc1", cfg.feature, cfg.hidden, prng);
  prd_fc2_ = Linear(params_, "fc2", cfg.hidden, cfg.rnd_out, prng);
}

void RndModule::copy_target_into_predictor() {
  params_.at("fc1/w").data() = target_params_.at("fc1/w").data();
  params_.at("fc1/b").data() = target_params_.at("fc1/b").data();
  params_.at("fc2/w").data() = target_params_.at("fc2/w").data();
  params_.at("fc2/b").data() = target_params_.at("fc2/b").data();
}

std::vector<double> RndModule::errors(const Tensor& u) const {
  const Tensor t = tgt_fc2_(tanh_t(tgt_fc1_(u)));
  const Tensor p = prd_fc2_(tanh_t(prd_fc1_(u)));
  return row_sum(square_t(sub(p, t.detach()))).data();
}

Tensor RndModule::train_loss(const IntrinsicBatch& b) {
  const int B = b.u.dim(0);
  const Tensor t = tgt_fc2_(tanh_t(tgt_fc1_(b.u)));
  const Tensor p = prd_fc2_(tanh_t(prd_fc1_(b.u)));
  const Tensor loss = scale(sum_all(square_t(sub(p, t.detach()))), 1.0 / B);
  for (double e : errors(b.u)) norm_.normalize(e);
  ++updates_;
  return loss;
}

std::vector<double> RndModule::reward(const Tensor& u, const std::vector<int>&,
                                      const Tensor&) const {
  std::vector<double> r = errors(u);
  for (double& v : r) v = norm_.peek(v);
  return r;
}

// ---------------------------------------------------------------------------

std::unique_ptr<IntrinsicModule> make_intrinsic(const std::string& kind,
                                                const IntrinsicConfig& cfg, uint64_t seed) {
  if (kind == "disagreement") return std::make_unique<DisagreementEnsemble>(cfg, seed);
  if (kind == "icm") return std::make_unique<IcmModule>(cfg, seed);
  if (kind == "rnd") return std::make_unique<RndModule>(cfg, seed);
  if (kind == "none") return nullptr;
  throw ConfigError("unknown intrinsic kind: " + kind);
}

}  // namespace gridwm
