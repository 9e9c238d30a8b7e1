// Acceptance gate: one pass/fail line per criterion. Subcommands:
//   properties — exact oracles and fast learning smoke (< ~10 min)
//   pipeline   — full desk-scale two-run determinism, freeze, purity (< 30 min)
//   transfer   — 3-seed directional transfer across the three intrinsic arms
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "gridwm/protocol.hpp"

using namespace gridwm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Suite {
  int passed = 0, failed = 0;
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : " — ",
                detail.c_str());
    std::fflush(stdout);
    (ok ? passed : failed)++;
  }
};

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// gradient correctness: central finite differences on randomized shapes
// ---------------------------------------------------------------------------

using ScalarFn = std::function<Tensor(std::vector<Tensor>&)>;

double gradcheck(const ScalarFn& f, std::vector<Tensor>& xs) {
  Tensor loss = f(xs);
  loss.backward();
  double worst = 0.0;
  const double eps = 1e-5;
  for (Tensor& x : xs) {
    for (size_t i = 0; i < x.data().size(); ++i) {
      const double analytic = x.has_grad() ? x.grad()[i] : 0.0;
      const double keep = x.data()[i];
      x.data()[i] = keep + eps;
      const double up = f(xs).item();
      x.data()[i] = keep - eps;
      const double dn = f(xs).item();
      x.data()[i] = keep;
      const double numeric = (up - dn) / (2.0 * eps);
      const double rel = std::fabs(analytic - numeric) /
                         std::max(1e-4, std::fabs(analytic) + std::fabs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

void criterion_gradients(Suite& s) {
  const auto t0 = Clock::now();
  SeededRng rng(101);
  double worst = 0.0;
  auto run = [&](const ScalarFn& f, std::vector<Tensor> xs) {
    worst = std::max(worst, gradcheck(f, xs));
  };
  for (int trial = 0; trial < 3; ++trial) {
    const int r = 2 + static_cast<int>(rng.next_index(3));
    const int c = 2 + static_cast<int>(rng.next_index(4));
    auto rnd = [&](Shape sh) { return Tensor::uniform(sh, -1.0, 1.0, rng, true); };

    run([](auto& x) { return sum_all(add(x[0], x[1])); }, {rnd({r, c}), rnd({r, c})});
    run([](auto& x) { return sum_all(mul(sub(x[0], x[1]), x[0])); }, {rnd({r, c}), rnd({r, c})});
    run([](auto& x) { return sum_all(add_rowvec(x[0], x[1])); }, {rnd({r, c}), rnd({c})});
    run([](auto& x) { return mean_all(tanh_t(scale(x[0], 1.7))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(sigmoid_t(add_const(x[0], 0.3))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(square_t(exp_t(scale(x[0], 0.5)))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(log_t(add_const(sigmoid_t(x[0]), 0.5))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(max_floor(x[0], 0.1)); },
        {Tensor::uniform({r, c}, 0.3, 2.0, rng, true)});  // away from the kink
    run([](auto& x) { return sum_all(row_sum(mul(x[0], x[0]))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(matmul(x[0], x[1])); }, {rnd({r, c}), rnd({c, r})});
    run([](auto& x) { return sum_all(matmul(transpose(x[0]), x[0])); }, {rnd({r, c})});
    run([&](auto& x) { return sum_all(square_t(reshape(x[0], {c, r}))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(square_t(concat_cols(x[0], x[1]))); },
        {rnd({r, c}), rnd({r, 2})});
    run([](auto& x) { return sum_all(square_t(concat_rows({x[0], x[1]}))); },
        {rnd({r, c}), rnd({2, c})});
    run([&](auto& x) { return sum_all(square_t(slice_rows(x[0], 0, r - 1))); }, {rnd({r, c})});
    run([&](auto& x) { return sum_all(square_t(slice_cols(x[0], 1, c))); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(mul(softmax_rows(x[0]), x[1])); },
        {rnd({r, c}), rnd({r, c})});
    run([](auto& x) { return sum_all(mul(log_softmax_rows(x[0]), x[1])); },
        {rnd({r, c}), rnd({r, c})});
    run([](auto& x) { return sum_all(kl_rows(softmax_rows(x[0]), softmax_rows(x[1]))); },
        {rnd({r, c}), rnd({r, c})});
    const Tensor bce_target = sigmoid_t(Tensor::uniform({r, c}, -1.0, 1.0, rng));
    run([bce_target](auto& x) { return bce_mean(sigmoid_t(x[0]), bce_target); }, {rnd({r, c})});
    run([](auto& x) { return sum_all(square_t(conv2d(x[0], x[1], x[2], 2, 1))); },
        {rnd({1, 2, 6, 6}), rnd({3, 2, 3, 3}), rnd({3})});
  }
  const double dt = elapsed_s(t0);
  char d[96];
  std::snprintf(d, sizeof d, "max rel err %.2e, %.1fs", worst, dt);
  s.check("gradient correctness (central differences, all ops)", worst < 1e-4 && dt < 60.0, d);
}

// ---------------------------------------------------------------------------
// ensemble-disagreement oracle, normalizer recurrence
// ---------------------------------------------------------------------------

std::vector<double> oracle_member_probs(const ParameterSet& ps, const std::string& prefix,
                                        const std::vector<double>& x, int vars, int classes) {
  const Tensor& w1 = ps.at(prefix + "/fc1/w");
  const Tensor& b1 = ps.at(prefix + "/fc1/b");
  const Tensor& w2 = ps.at(prefix + "/fc2/w");
  const Tensor& b2 = ps.at(prefix + "/fc2/b");
  const int in = w1.dim(0), hid = w1.dim(1), out = w2.dim(1);
  std::vector<double> h(static_cast<size_t>(hid));
  for (int j = 0; j < hid; ++j) {
    double acc = b1.at(j);
    for (int i = 0; i < in; ++i) acc += x[static_cast<size_t>(i)] * w1.at(i, j);
    h[static_cast<size_t>(j)] = std::tanh(acc);
  }
  std::vector<double> logits(static_cast<size_t>(out)), probs(static_cast<size_t>(out));
  for (int j = 0; j < out; ++j) {
    double acc = b2.at(j);
    for (int i = 0; i < hid; ++i) acc += h[static_cast<size_t>(i)] * w2.at(i, j);
    logits[static_cast<size_t>(j)] = acc;
  }
  for (int v = 0; v < vars; ++v) {
    double mx = -1e300, z = 0.0;
    for (int c = 0; c < classes; ++c)
      mx = std::max(mx, logits[static_cast<size_t>(v * classes + c)]);
    for (int c = 0; c < classes; ++c) {
      const size_t i = static_cast<size_t>(v * classes + c);
      probs[i] = std::exp(logits[i] - mx);
      z += probs[i];
    }
    for (int c = 0; c < classes; ++c) probs[static_cast<size_t>(v * classes + c)] /= z;
  }
  return probs;
}

void criterion_disagreement_oracle(Suite& s) {
  SeededRng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    IntrinsicConfig cfg;
    cfg.ensemble_k = 2 + static_cast<int>(rng.next_index(7));   // K in {2..8}
    cfg.vars = 1;
    cfg.classes = 2 + static_cast<int>(rng.next_index(63));     // d in {2..64}
    cfg.feature = 4 + static_cast<int>(rng.next_index(12));
    cfg.hidden = 8;
    DisagreementEnsemble ens(cfg, 5000 + static_cast<uint64_t>(trial));

    const Tensor u = Tensor::uniform({1, cfg.feature}, -1, 1, rng);
    const int a = static_cast<int>(rng.next_index(cfg.action_count));
    std::vector<double> x(static_cast<size_t>(cfg.feature + cfg.action_count), 0.0);
    for (int i = 0; i < cfg.feature; ++i) x[static_cast<size_t>(i)] = u.at(i);
    x[static_cast<size_t>(cfg.feature + a)] = 1.0;

    const int d = cfg.latent();
    std::vector<std::vector<double>> outs;
    for (int k = 0; k < cfg.ensemble_k; ++k)
      outs.push_back(
          oracle_member_probs(ens.params(), "k" + std::to_string(k), x, cfg.vars, cfg.classes));
    double want = 0.0;
    for (int i = 0; i < d; ++i) {
      double mean = 0.0;
      for (const auto& o : outs) mean += o[static_cast<size_t>(i)];
      mean /= cfg.ensemble_k;
      double var = 0.0;
      for (const auto& o : outs)
        var += (o[static_cast<size_t>(i)] - mean) * (o[static_cast<size_t>(i)] - mean);
      want += var / cfg.ensemble_k;
    }
    want /= d;

    const double got = ens.reward(u, {a}, Tensor())[0];
    worst = std::max(worst, std::fabs(got - want));
  }
  char d[64];
  std::snprintf(d, sizeof d, "1000 ensembles, max |err| %.2e", worst);
  s.check("disagreement reward equals brute-force population variance", worst < 1e-12, d);
}

void criterion_normalizer(Suite& s) {
  bool ok = true;
  for (double rho : {1e-3, 1e-2, 1e-1}) {
    RunningNormalizer n(rho);
    double mu = 0.0, var = 1.0;
    SeededRng rng(303);
    for (int i = 0; i < 10000; ++i) {
      const double g = rng.uniform(-5.0, 5.0);
      mu = (1.0 - rho) * mu + rho * g;
      var = (1.0 - rho) * var + rho * (g - mu) * (g - mu);
      const double want = (g - mu) / (std::sqrt(var) + kEps);
      ok = ok && n.normalize(g) == want && n.mu() == mu && n.var() == var;
    }
  }
  s.check("normalizer recurrence is exact over 10^4-element streams", ok,
          "rho in {1e-3, 1e-2, 1e-1}");
}

// ---------------------------------------------------------------------------
// simulator conformance
// ---------------------------------------------------------------------------

void criterion_simulator(Suite& s) {
  const TownMap a = TownMap::town_a();
  bool ok = true;
  std::string why;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  };

  {  // stall at exactly the configured streak of sub-threshold steps
    SimConfig cfg;
    Simulator sim(cfg);
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    StepResult r;
    for (int i = 0; i < cfg.stall_steps; ++i) r = sim.step(Action{3});
    expect(r.terminal && r.cause == TerminationCause::Stall && sim.step_count() == cfg.stall_steps,
           "stall timing");
  }
  {  // time limit at exactly the configured horizon
    SimConfig cfg;
    cfg.stall_steps = 5000;
    Simulator sim(cfg);
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    StepResult r;
    int n = 0;
    while (!sim.terminal()) {
      r = sim.step(Action{n % 50 == 0 ? 4 : 3});
      ++n;
    }
    expect(r.cause == TerminationCause::TimeLimit && n == cfg.time_limit, "time limit timing");
  }
  {  // destination on the straight route; collision inside a building
    Simulator sim((SimConfig()));
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    StepResult r;
    while (!sim.terminal()) r = sim.step(Action{4});
    expect(r.cause == TerminationCause::Destination, "destination");
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    sim.mutable_ego().pos = {30.5, 30.5};
    r = sim.step(Action{4});
    expect(r.cause == TerminationCause::Collision, "collision");
  }
  {  // off-road exit, lane violation, wrong-direction streak
    Simulator sim((SimConfig()));
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    sim.mutable_ego().heading = M_PI / 2;
    StepResult r;
    while (!sim.terminal()) r = sim.step(Action{5});
    expect(r.cause == TerminationCause::OffRoad, "off-road");

    sim.reset(a, RouteId::Straight, 0, 1, 1);
    sim.mutable_ego().pos = {12.5, 23.2};
    sim.mutable_ego().heading = -M_PI / 2;
    sim.mutable_ego().v = 1.5;
    int n = 0;
    while (!sim.terminal() && n++ < 20) r = sim.step(Action{5});
    expect(r.cause == TerminationCause::LaneViolation, "lane violation");

    SimConfig cfg;
    Simulator sim2(cfg);
    sim2.reset(a, RouteId::Straight, 0, 1, 1);
    sim2.mutable_ego().pos = {12.5, 20.5};
    sim2.mutable_ego().v = 1.0;
    n = 0;
    while (!sim2.terminal() && n++ < cfg.wrong_dir_steps + 5) r = sim2.step(Action{4});
    expect(r.cause == TerminationCause::WrongDirection && n == cfg.wrong_dir_steps,
           "wrong-direction streak");
  }
  {  // lane penalty: zero at d = 0.1 W, saturated at d = 0.5 W
    RewardWeights w;
    Simulator sim((SimConfig()));
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    sim.enable_rewards(w);
    sim.mutable_ego().pos = {12.5, 24.5 + 0.1 * 3.0};
    StepResult r = sim.step(Action{3});
    expect(std::fabs(r.reward_components.at("lane")) < 1e-12, "lane penalty inside tolerance");
    sim.reset(a, RouteId::Straight, 0, 1, 1);
    sim.enable_rewards(w);
    sim.mutable_ego().pos = {12.5, 24.5 - 0.5 * 3.0};
    r = sim.step(Action{3});
    expect(std::fabs(r.reward_components.at("lane") + w.lane_weight) < 1e-12,
           "lane penalty saturation");
    double sum = 0.0;
    for (const auto& [k, v] : r.reward_components) sum += v;
    expect(std::fabs(r.total_reward - sum) < 1e-12, "reward decomposition");
  }
  s.check("simulator conformance (terminations, timing, reward shaping)", ok, why);
}

// ---------------------------------------------------------------------------
// learning smoke
// ---------------------------------------------------------------------------

void criterion_smoke_overfit(Suite& s) {
  const auto t0 = Clock::now();
  WmConfig wc;  // full desk-scale model
  WorldModel wm(wc, 3);
  Simulator sim((SimConfig()));
  const TownMap town = TownMap::town_a();
  std::vector<uint8_t> obs = sim.reset(town, RouteId::Straight, 5, 1, 1);
  ReplayBuffer replay(10000, false);
  SeededRng arng(5);
  for (int t = 0; t < 100; ++t) {
    const int act = static_cast<int>(arng.next_index(Action::kCount));
    StepResult r = sim.step(Action{act});
    replay.append({obs, act, std::nullopt, r.terminal ? 0.0 : 1.0});
    obs = std::move(r.observation);
    if (r.terminal) break;
  }
  Adam opt(1e-3, 0.9, 0.999, 1e-8, 100.0);
  SeededRng srng(7), lrng(9);
  double first = -1.0, ratio = 1.0;
  int iters = 0;
  for (; iters < 2000 && ratio > 0.1; ++iters) {
    auto batch = replay.sample_sequences(4, 8, srng);
    WmDiagnostics diag;
    Tensor loss = wm.pretrain_loss(batch, lrng, &diag);
    if (first < 0.0) first = diag.recon;
    ratio = std::min(ratio, diag.recon / first);
    loss.backward();
    opt.step(wm.wm_params());
  }
  char d[96];
  std::snprintf(d, sizeof d, "recon drop %.1f%% after %d updates (%.0fs)", 100.0 * (1.0 - ratio),
                iters, elapsed_s(t0));
  s.check("learning smoke: world model overfits a fixed 100-step episode (>= 90%)", ratio <= 0.1,
          d);
}

void criterion_smoke_bandit(Suite& s) {
  SeededRng rng(7);
  ImaginationConfig cfg;
  const int feat = 8, acts = 4, winner = 2;
  PolicyNet pol(AcRole::Explore, feat, 16, acts, 31);
  ValueNet val(AcRole::Explore, feat, 16, 32);
  Adam a(3e-3, 0.9, 0.999, 1e-8, 100.0), c(3e-3, 0.9, 0.999, 1e-8, 100.0);
  const Tensor u0 = Tensor::uniform({1, feat}, -1, 1, rng);
  for (int i = 0; i < 2000; ++i) {
    ImaginedTrajectory traj;
    traj.role = AcRole::Explore;
    ImaginedStep st;
    st.u = u0;
    const int act = pol.act(u0, rng);
    st.actions.push_back(act);
    st.rewards.push_back(act == winner ? 1.0 : 0.0);
    st.cont.push_back(0.0);
    traj.steps.push_back(std::move(st));
    traj.bootstrap_u = u0;
    actor_critic_update(traj, pol, val, cfg, a, c);
  }
  const double p = softmax_rows(pol.logits(u0)).at(0, winner);
  char d[48];
  std::snprintf(d, sizeof d, "preference %.3f", p);
  s.check("learning smoke: actor-critic solves the latent bandit (>= 0.95)", p > 0.95, d);
}

void criterion_smoke_disagreement(Suite& s) {
  IntrinsicConfig cfg;
  cfg.feature = 12;
  cfg.vars = 2;
  cfg.classes = 4;
  cfg.hidden = 16;
  SeededRng rng(11);
  IntrinsicBatch det;
  det.u = Tensor::uniform({1, cfg.feature}, -1, 1, rng);
  det.next_u = Tensor::uniform({1, cfg.feature}, -1, 1, rng);
  det.actions = {static_cast<int>(rng.next_index(cfg.action_count))};
  det.next_post_probs = onehot_rows({1, 3}, cfg.classes);
  DisagreementEnsemble ens(cfg, 13);
  Adam opt(3e-3, 0.9, 0.999, 1e-8, 100.0);
  for (int i = 0; i < 1500; ++i) {
    const Tensor loss = ens.train_loss(det);
    loss.backward();
    opt.step(ens.params());
  }
  const double r = ens.reward(det.u, det.actions, det.next_u)[0];
  char d[48];
  std::snprintf(d, sizeof d, "residual disagreement %.2e", r);
  s.check("learning smoke: disagreement vanishes on a deterministic toy (< 1e-3)", r < 1e-3, d);
}

// ---------------------------------------------------------------------------
// parity: the three intrinsic arms get identical budgets and inputs
// ---------------------------------------------------------------------------

Config parity_cfg(const std::string& kind) {
  Config c;
  c.seed = 5;
  c.intrinsic_kind = kind;
  c.wm.embed = 32;
  c.wm.d_h = 16;
  c.wm.vars = 4;
  c.wm.classes = 4;
  c.wm.hidden = 32;
  c.wm.dec_hidden = 64;
  c.wm.head_hidden = 16;
  c.ac_hidden = 16;
  c.ac.horizon = 3;
  c.intrinsic_hidden = 16;
  c.ensemble_k = 2;
  c.protocol.pretrain_steps = 64;
  c.protocol.prefill_steps = 32;
  c.protocol.train_ratio = 8;
  c.protocol.batch = 2;
  c.protocol.seq_len = 4;
  c.protocol.imag_starts = 4;
  c.sim.time_limit = 60;
  return c;
}

void criterion_parity(Suite& s) {
  bool ok = true;
  std::string why;
  int64_t steps = -1, updates = -1;
  int feature = -1;
  for (const char* kind : {"disagreement", "icm", "rnd"}) {
    const Config cfg = parity_cfg(kind);
    if (feature < 0) feature = cfg.intrinsic_config().feature;
    if (cfg.intrinsic_config().feature != feature) {
      ok = false;
      why = "feature input mismatch";
    }
    const std::string dir =
        (fs::temp_directory_path() / (std::string("gridwm_parity_") + kind)).string();
    fs::remove_all(dir);
    const StageResult res = pretrain(cfg, dir);
    if (steps < 0) {
      steps = res.env_steps;
      updates = res.updates;
    }
    if (res.env_steps != steps || res.updates != updates) {
      ok = false;
      why = std::string("budget mismatch for ") + kind;
    }
  }
  char d[96];
  std::snprintf(d, sizeof d, "env steps %lld, updates %lld, feature dim %d across all arms",
                static_cast<long long>(steps), static_cast<long long>(updates), feature);
  s.check("parity: equal budgets, update counts, and feature inputs across arms", ok,
          ok ? d : why.c_str());
}

void run_properties(Suite& s) {
  criterion_gradients(s);
  criterion_disagreement_oracle(s);
  criterion_normalizer(s);
  criterion_simulator(s);
  criterion_parity(s);
  criterion_smoke_bandit(s);
  criterion_smoke_disagreement(s);
  criterion_smoke_overfit(s);
}

// ---------------------------------------------------------------------------
// pipeline: full desk-scale runs — determinism, freeze contracts, purity
// ---------------------------------------------------------------------------

struct PipelineArtifacts {
  std::string pre_metrics, ft_metrics, zs_csv;
  Checkpoint pre_ck, ft_ck;
  size_t zs_records = 0;
};

PipelineArtifacts run_pipeline_once(const std::string& dir) {
  Config cfg;  // desk-scale defaults: 20k pretrain, 2k finetune, N=10 grid
  cfg.seed = 1;
  fs::remove_all(dir);
  PipelineArtifacts art;
  const StageResult pre = pretrain(cfg, dir + "/pre");
  art.pre_ck = Checkpoint::load(pre.checkpoint_path);
  art.pre_metrics = pre.metrics_path;
  art.zs_records = zeroshot_eval(cfg, art.pre_ck, dir + "/zs", 1).size();
  art.zs_csv = dir + "/zs/report.csv";
  const StageResult ft = finetune(cfg, art.pre_ck, dir + "/ft");
  art.ft_ck = Checkpoint::load(ft.checkpoint_path);
  art.ft_metrics = ft.metrics_path;
  return art;
}

void run_pipeline(Suite& s) {
  const auto t0 = Clock::now();
  const std::string base = (fs::temp_directory_path() / "gridwm_accept_pipeline").string();
  const PipelineArtifacts a = run_pipeline_once(base + "/run1");
  const PipelineArtifacts b = run_pipeline_once(base + "/run2");
  const double dt = elapsed_s(t0);

  // determinism: byte-identical logs and eval CSVs, < 30 min for both runs
  const bool metrics_eq =
      slurp(a.pre_metrics) == slurp(b.pre_metrics) && slurp(a.ft_metrics) == slurp(b.ft_metrics);
  const bool csv_eq = slurp(a.zs_csv) == slurp(b.zs_csv);
  char d[96];
  std::snprintf(d, sizeof d, "two full pipelines in %.1f min", dt / 60.0);
  s.check("determinism: byte-identical metrics logs and eval CSVs across seeds-equal runs",
          metrics_eq && csv_eq && dt < 1800.0, d);

  // freeze contracts: frozen sets byte-identical across the finetune phase
  bool frozen_ok = true;
  for (const char* set : {"wm", "intrinsic", "policy_explore", "value_explore"})
    for (const auto& [path, blob] : a.pre_ck.sets.at(set).tensors)
      frozen_ok = frozen_ok && blob.data == a.ft_ck.sets.at(set).tensors.at(path).data;
  s.check("freeze contracts: phase-2 frozen parameter sets are bit-invariant", frozen_ok,
          "wm, intrinsic, exploration actor-critic");

  // phase purity: no extrinsic keys in phase-1 logs; grid has the full size
  std::istringstream pre_lines(slurp(a.pre_metrics));
  bool purity = true;
  std::string line;
  size_t n_lines = 0;
  while (std::getline(pre_lines, line)) {
    ++n_lines;
    purity = purity && line.find("reward") == std::string::npos &&
             line.find("r_ext") == std::string::npos &&
             line.find("ep_return") == std::string::npos;
  }
  purity = purity && n_lines == 5000;  // 20k steps at one update per 4 steps
  std::snprintf(d, sizeof d, "%zu pretrain updates, %zu eval records", n_lines, a.zs_records);
  s.check("phase purity: reward-free phase-1 logs; frozen zero-shot grid of 240 records",
          purity && a.zs_records == 240, d);
}

// ---------------------------------------------------------------------------
// transfer: 3-seed directional comparison across the three intrinsic arms
// ---------------------------------------------------------------------------

double town_sr(const std::vector<EvalRecord>& records, const std::string& town) {
  const auto rows = aggregate(records);
  double sum = 0.0;
  int n = 0;
  for (const AggregateRow& r : rows)
    if (r.town == town) {
      sum += r.density_avg_sr;
      ++n;
    }
  return n > 0 ? sum / n : 0.0;
}

void run_transfer(Suite& s) {
  const auto t0 = Clock::now();
  const std::string base = (fs::temp_directory_path() / "gridwm_accept_transfer").string();
  int votes_fewshot = 0, votes_gap = 0;
  bool parity_ok = true;
  const int n_seeds = 3;

  for (int seed = 1; seed <= n_seeds; ++seed) {
    std::map<std::string, double> gap_by_kind;
    double zs_sr_a = 0.0, fs_sr_a = 0.0;
    int64_t common_steps = -1, common_updates = -1;
    Checkpoint dis_ck;
    Config dis_cfg;

    for (const char* kind : {"disagreement", "icm", "rnd"}) {
      Config cfg;
      cfg.seed = static_cast<uint64_t>(seed);
      cfg.intrinsic_kind = kind;
      const std::string dir = base + "/s" + std::to_string(seed) + "_" + kind;
      fs::remove_all(dir);
      const StageResult pre = pretrain(cfg, dir + "/pre");
      if (common_steps < 0) {
        common_steps = pre.env_steps;
        common_updates = pre.updates;
      }
      parity_ok = parity_ok && pre.env_steps == common_steps && pre.updates == common_updates;
      const Checkpoint ck = Checkpoint::load(pre.checkpoint_path);
      const auto records = zeroshot_eval(cfg, ck, dir + "/zs", 1);
      const double sr_a = town_sr(records, "Town-A");
      const double sr_b = town_sr(records, "Town-B");
      gap_by_kind[kind] = sr_a - sr_b;
      if (std::strcmp(kind, "disagreement") == 0) {
        zs_sr_a = sr_a;
        dis_ck = ck;
        dis_cfg = cfg;
      }
      std::printf("  seed %d %-13s zero-shot SR A %.1f B %.1f gap %.1f (%.1f min)\n", seed, kind,
                  sr_a, sr_b, sr_a - sr_b, elapsed_s(t0) / 60.0);
      std::fflush(stdout);
    }

    const std::string ft_dir = base + "/s" + std::to_string(seed) + "_disagreement/ft";
    const StageResult ft = finetune(dis_cfg, dis_ck, ft_dir);
    const Checkpoint ft_ck = Checkpoint::load(ft.checkpoint_path);
    const auto fs_records =
        run_eval_grid(dis_cfg, ft_ck, AcRole::Task, "disagreement-fewshot", 1);
    fs_sr_a = town_sr(fs_records, "Town-A");
    save_records_jsonl(fs_records, ft_dir + "/records.jsonl");

    const double worse_baseline_gap = std::max(gap_by_kind["icm"], gap_by_kind["rnd"]);
    const bool v1 = fs_sr_a - zs_sr_a >= 10.0;
    const bool v2 = gap_by_kind["disagreement"] <= worse_baseline_gap;
    votes_fewshot += v1 ? 1 : 0;
    votes_gap += v2 ? 1 : 0;
    std::printf(
        "  seed %d few-shot LF SR A %.1f vs zero-shot %.1f (delta %+.1f, %s); "
        "gap %.1f vs worse baseline %.1f (%s)\n",
        seed, fs_sr_a, zs_sr_a, fs_sr_a - zs_sr_a, v1 ? "vote" : "no vote",
        gap_by_kind["disagreement"], worse_baseline_gap, v2 ? "vote" : "no vote");
    std::fflush(stdout);
  }

  char d[96];
  std::snprintf(d, sizeof d, "%d/%d seeds, %.1f min total", votes_fewshot, n_seeds,
                elapsed_s(t0) / 60.0);
  s.check("directional transfer: few-shot LF exceeds zero-shot by >= 10 points (majority)",
          2 * votes_fewshot > n_seeds, d);
  std::snprintf(d, sizeof d, "%d/%d seeds", votes_gap, n_seeds);
  s.check("directional transfer: disagreement town gap within the worse of ICM/RND (majority)",
          2 * votes_gap > n_seeds, d);
  s.check("parity: equal env-step budgets and update counts across arms at full scale",
          parity_ok);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "properties";
  Suite s;
  if (mode == "properties") {
    run_properties(s);
  } else if (mode == "pipeline") {
    run_pipeline(s);
  } else if (mode == "transfer") {
    run_transfer(s);
  } else {
    std::fprintf(stderr, "usage: acceptance [properties|pipeline|transfer]\n");
    return 2;
  }
  std::printf("%d passed, %d failed\n", s.passed, s.failed);
  return s.failed == 0 ? 0 : 1;
}
