#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "gridwm/sim.hpp"
#include "gridwm/world_model.hpp"

using namespace gridwm;

namespace {

WmConfig tiny_config() {
  WmConfig c;
  c.embed = 32;
  c.d_h = 16;
  c.vars = 4;
  c.classes = 4;
  c.hidden = 32;
  c.dec_hidden = 64;
  c.head_hidden = 16;
  return c;
}

void zero_params(ParameterSet& ps, const std::string& prefix) {
  for (auto& [k, t] : ps.all())
    if (k.rfind(prefix, 0) == 0)
      for (double& v : t.data()) v = 0.0;
}

// one scripted lane-following episode from the simulator
std::vector<Transition> collect_episode(int max_steps, uint64_t seed) {
  const TownMap a = TownMap::town_a();
  Simulator sim{SimConfig{}};
  auto obs = sim.reset(a, RouteId::RightLoop, 5, seed, seed + 1);
  SeededRng rng(seed + 2);
  std::vector<Transition> ep;
  for (int i = 0; i < max_steps; ++i) {
    Transition tr;
    tr.obs = obs;
    tr.action = static_cast<int>(rng.next_index(Action::kCount));
    const StepResult r = sim.step(Action{tr.action});
    tr.cont = r.terminal ? 0.0 : 1.0;
    ep.push_back(std::move(tr));
    obs = r.observation;
    if (r.terminal) break;
  }
  return ep;
}

std::vector<std::vector<Transition>> slice_batch(const std::vector<Transition>& ep, int B, int L,
                                                 SeededRng& rng) {
  std::vector<std::vector<Transition>> out;
  for (int b = 0; b < B; ++b) {
    const size_t off = rng.next_index(ep.size() - static_cast<size_t>(L) + 1);
    out.emplace_back(ep.begin() + static_cast<long>(off),
                     ep.begin() + static_cast<long>(off + static_cast<size_t>(L)));
  }
  return out;
}

Tensor random_obs(int B, const WmConfig& cfg, SeededRng& rng) {
  std::vector<double> d(static_cast<size_t>(B * cfg.obs_c * cfg.obs_h * cfg.obs_w));
  for (double& v : d) v = rng.next_index(2) ? 1.0 : 0.0;
  return Tensor::from({B, cfg.obs_c, cfg.obs_h, cfg.obs_w}, std::move(d));
}

}  // namespace

TEST_CASE("encoder output is deterministic with the configured width") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 11), wm2(cfg, 11);
  SeededRng rng(3);
  const Tensor obs = random_obs(3, cfg, rng);
  const Tensor e1 = wm.encode(obs);
  const Tensor e2 = wm2.encode(obs);
  REQUIRE(e1.shape() == Shape{3, cfg.embed});
  for (int i = 0; i < e1.size(); ++i) CHECK(e1.at(i) == e2.at(i));
  CHECK_THROWS_AS(wm.encode(Tensor::zeros({1, 2, 4, 4})), DimensionError);
}

TEST_CASE("encoder gradients match finite differences") {
  WmConfig cfg = tiny_config();
  cfg.obs_h = cfg.obs_w = 8;  // keep the finite-difference sweep small
  cfg.embed = 8;
  WorldModel wm(cfg, 4);
  SeededRng rng(5);
  const Tensor obs = random_obs(2, cfg, rng);
  // sweep a subset of encoder parameters: conv1 kernel + fc bias
  std::vector<Tensor> inputs = {wm.wm_params().at("enc/conv1/w"), wm.wm_params().at("enc/fc/b")};
  const auto res = testing::gradcheck([&] { return sum_all(square_t(wm.encode(obs))); }, inputs);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("rssm_step mode contracts and latent one-hot structure") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 7);
  SeededRng rng(1);
  const LatentState st = wm.initial_state(2);
  const Tensor act = onehot_rows({1, 4}, cfg.action_count);
  const Tensor e = wm.encode(random_obs(2, cfg, rng));

  CHECK_THROWS_AS(wm.rssm_step(st, act, nullptr, RssmMode::Representation, rng), ContractError);
  CHECK_THROWS_AS(wm.rssm_step(st, act, &e, RssmMode::Imagination, rng), ContractError);

  const RssmOut prior_out = wm.rssm_step(st, act, nullptr, RssmMode::Imagination, rng);
  CHECK_FALSE(prior_out.posterior_probs.defined());
  CHECK(wm.prior_steps() == 1);
  const RssmOut post_out = wm.rssm_step(st, act, &e, RssmMode::Representation, rng);
  CHECK(post_out.posterior_probs.defined());
  CHECK(wm.posterior_steps() == 1);

  for (const RssmOut& out : {prior_out, post_out}) {
    REQUIRE(out.state.s.shape() == Shape{2, cfg.latent()});
    REQUIRE(out.state.u.shape() == Shape{2, cfg.feature()});
    // each latent variable is one-hot
    for (int b = 0; b < 2; ++b)
      for (int v = 0; v < cfg.vars; ++v) {
        double sum = 0.0;
        for (int c = 0; c < cfg.classes; ++c)
          sum += out.state.s.at(b, v * cfg.classes + c);
        CHECK(sum == 1.0);
      }
    // prior probability rows are distributions
    for (int r = 0; r < out.prior_probs.dim(0); ++r) {
      double sum = 0.0;
      for (int c = 0; c < cfg.classes; ++c) sum += out.prior_probs.at(r, c);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero weights and zero inputs leave the GRU state at zero") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 7);
  zero_params(wm.wm_params(), "gru/");
  SeededRng rng(1);
  const RssmOut out = wm.rssm_step(wm.initial_state(1), Tensor::zeros({1, cfg.action_count}),
                                   nullptr, RssmMode::Imagination, rng);
  for (int i = 0; i < out.state.h.size(); ++i) CHECK(out.state.h.at(i) == 0.0);
}

TEST_CASE("fixed seeds give identical latent trajectories") {
  const WmConfig cfg = tiny_config();
  WorldModel w1(cfg, 9), w2(cfg, 9);
  SeededRng r1(4), r2(4);
  LatentState s1 = w1.initial_state(2), s2 = w2.initial_state(2);
  const Tensor act = onehot_rows({0, 8}, cfg.action_count);
  for (int t = 0; t < 5; ++t) {
    s1 = w1.rssm_step(s1, act, nullptr, RssmMode::Imagination, r1).state;
    s2 = w2.rssm_step(s2, act, nullptr, RssmMode::Imagination, r2).state;
    for (int i = 0; i < s1.u.size(); ++i) REQUIRE(s1.u.at(i) == s2.u.at(i));
  }
}

TEST_CASE("posterior equal to prior floors the KL term at free-bits times V") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 13);
  // zeroed heads emit uniform prior and posterior: KL = 0, floor active
  zero_params(wm.wm_params(), "prior/");
  zero_params(wm.wm_params(), "post/");
  const auto ep = collect_episode(40, 21);
  SeededRng rng(2);
  const auto batch = slice_batch(ep, 3, 6, rng);
  WmDiagnostics diag;
  wm.pretrain_loss(batch, rng, &diag);
  CHECK(diag.kl == doctest::Approx(cfg.free_bits * cfg.vars * 6).epsilon(1e-12));
}

TEST_CASE("diagnostic terms sum exactly to the reported loss") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 17);
  const auto ep = collect_episode(40, 22);
  SeededRng rng(2);
  WmDiagnostics diag;
  const Tensor loss = wm.pretrain_loss(slice_batch(ep, 2, 5, rng), rng, &diag);
  CHECK(std::fabs(diag.total - (diag.recon + cfg.beta_kl * diag.kl + cfg.lambda_c * diag.cont)) <
        1e-12);
  CHECK(loss.item() == diag.total);
  CHECK(diag.kl >= 0.0);
}

TEST_CASE("non-finite loss raises a numeric error") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 19);
  for (double& v : wm.wm_params().at("dec/fc2/b").data())
    v = std::numeric_limits<double>::quiet_NaN();
  const auto ep = collect_episode(20, 23);
  SeededRng rng(2);
  CHECK_THROWS_AS(wm.pretrain_loss(slice_batch(ep, 2, 4, rng), rng, nullptr), NumericError);
}

TEST_CASE("short overfit run cuts the loss roughly in half") {
  // scaled-down rehearsal of the acceptance smoke (which requires >= 90%
  // over 2000 updates); here a few hundred updates must show clear learning
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 23);
  const auto ep = collect_episode(60, 31);
  REQUIRE(ep.size() >= 20);
  Adam opt(3e-4, 0.9, 0.999, 1e-8, 100.0);
  SeededRng rng(6);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 250; ++i) {
    WmDiagnostics diag;
    const Tensor loss = wm.pretrain_loss(slice_batch(ep, 2, 6, rng), rng, &diag);
    loss.backward();
    opt.step(wm.wm_params());
    if (i == 0) first = diag.total;
    last = diag.total;
  }
  CHECK(last < 0.55 * first);
}

TEST_CASE("reward-head training leaves the world model untouched") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 29);
  auto ep = collect_episode(40, 41);
  for (auto& t : ep) t.r_ext = 0.5;  // constant target
  SeededRng rng(3);

  const uint64_t wm_sum = wm.wm_params().checksum();
  Adam opt(1e-2, 0.9, 0.999, 1e-8, 100.0);
  for (int i = 0; i < 300; ++i) {
    const Tensor loss = wm.finetune_reward_loss(slice_batch(ep, 2, 5, rng), rng);
    loss.backward();
    CHECK(wm.wm_params().grads_all_zero());
    opt.step(wm.reward_params());
    wm.wm_params().zero_grad();
  }
  CHECK(wm.wm_params().checksum() == wm_sum);

  // the head now predicts the constant reward
  LatentState st = wm.initial_state(1);
  SeededRng r2(9);
  std::vector<const std::vector<uint8_t>*> obs = {&ep[5].obs};
  const Tensor e = wm.encode(WorldModel::obs_to_tensor(obs, cfg));
  st = wm.rssm_step(st, Tensor::zeros({1, cfg.action_count}), &e, RssmMode::Representation, r2)
           .state;
  CHECK(wm.predict_reward(st).item() == doctest::Approx(0.5).epsilon(0.02));

  // a batch without rewards is a phase violation
  auto bare = collect_episode(20, 42);
  CHECK_THROWS_AS(wm.finetune_reward_loss(slice_batch(bare, 1, 4, rng), rng), ContractError);
}

TEST_CASE("continuation head: zero logit gives 0.5; all-terminal data drives it low") {
  const WmConfig cfg = tiny_config();
  WorldModel wm(cfg, 31);
  zero_params(wm.wm_params(), "cont/");
  SeededRng rng(1);
  LatentState st = wm.rssm_step(wm.initial_state(2), onehot_rows({0, 1}, cfg.action_count),
                                nullptr, RssmMode::Imagination, rng)
                       .state;
  Tensor c = wm.predict_continuation(st);
  CHECK(c.at(0) == 0.5);
  CHECK(c.at(1) == 0.5);

  // train only the continuation head on c=0 labels
  WorldModel wm2(cfg, 37);
  Adam opt(1e-2, 0.9, 0.999, 1e-8, 100.0);
  SeededRng r2(2);
  for (int i = 0; i < 200; ++i) {
    LatentState s = wm2.rssm_step(wm2.initial_state(4), onehot_rows({0, 1, 2, 3}, cfg.action_count),
                                  nullptr, RssmMode::Imagination, r2)
                        .state;
    LatentState stopped{s.h.detach(), s.s.detach(), {}};
    stopped.u = concat_cols(stopped.h, stopped.s);
    const Tensor loss = bce_mean(wm2.predict_continuation(stopped), Tensor::zeros({4, 1}));
    loss.backward();
    opt.step(wm2.wm_params());
  }
  LatentState s = wm2.rssm_step(wm2.initial_state(1), onehot_rows({2}, cfg.action_count), nullptr,
                                RssmMode::Imagination, r2)
                      .state;
  CHECK(wm2.predict_continuation(s).item() < 0.1);
  // sigmoid output is always a valid probability
  CHECK(wm2.predict_continuation(s).item() > 0.0);
}
