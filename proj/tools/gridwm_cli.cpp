#include <cstdio>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "gridwm/protocol.hpp"
#include "json.hpp"

using namespace gridwm;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out = "runs/out";
  std::string ckpt_path;
  uint64_t seed = 0;
  bool seed_set = false;
  bool full_scale = false;
  int64_t budget_override = -1;
  int workers = 1;
};

void add_config_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (defaults when omitted)");
  cmd->add_option("--seed", o.seed, "override the config seed")->each([&](const std::string&) {
    o.seed_set = true;
  });
  cmd->add_flag("--full-scale", o.full_scale, "use the published budgets (500k/10k, N=50)");
  cmd->add_option("--budget-override", o.budget_override,
                  "override the stage env-step budget (applies to the invoked stage)");
}

Config resolve_config(const CommonOpts& o, const std::string& stage) {
  Config cfg = o.config_path.empty() ? Config{} : load_config_file(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.full_scale) apply_full_scale(cfg);
  if (o.budget_override >= 0) {
    if (stage == "pretrain") cfg.protocol.pretrain_steps = o.budget_override;
    if (stage == "finetune") cfg.protocol.finetune_steps = o.budget_override;
  }
  cfg.validate();
  return cfg;
}

// Every run directory records what produced it.
void write_run_manifest(const Config& cfg, const std::string& stage, const std::string& dir,
                        int64_t env_steps, int64_t updates) {
  std::filesystem::create_directories(dir);
  nlohmann::json j{{"config_hash", config_hash(cfg)},
                   {"seed", cfg.seed},
                   {"stage", stage},
                   {"env_steps", env_steps},
                   {"updates", updates}};
  std::ofstream os(dir + "/run.json");
  os << j.dump(2) << "\n";
}

void emit_eval_outputs(const std::vector<EvalRecord>& records, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_records_jsonl(records, dir + "/records.jsonl");
  const auto rows = aggregate(records);
  write_report_csv(rows, dir + "/report.csv");
  write_report_markdown(rows, gap_table(rows), dir + "/report.md");
  write_report_svg(rows, dir + "/report.svg");
}

int selftest() {
  // Cheap end-to-end sanity pass: assets, config round trip, a micro run.
  const TownMap a = TownMap::town_a();
  const TownMap b = TownMap::town_b();
  if (a.intersection_count() != 9 || b.intersection_count() != 6)
    throw ContractError("town intersection counts are wrong");
  const Config def;
  if (config_hash(config_from_json_text(config_to_json_text(def))) != config_hash(def))
    throw ContractError("config round trip is not stable");

  Config tiny;
  tiny.wm.embed = 32;
  tiny.wm.d_h = 16;
  tiny.wm.vars = 4;
  tiny.wm.classes = 4;
  tiny.wm.hidden = 32;
  tiny.wm.dec_hidden = 64;
  tiny.wm.head_hidden = 16;
  tiny.ac_hidden = 16;
  tiny.ac.horizon = 3;
  tiny.intrinsic_hidden = 16;
  tiny.ensemble_k = 2;
  tiny.protocol.pretrain_steps = 32;
  tiny.protocol.prefill_steps = 16;
  tiny.protocol.train_ratio = 8;
  tiny.protocol.batch = 2;
  tiny.protocol.seq_len = 4;
  tiny.protocol.imag_starts = 4;
  tiny.sim.time_limit = 50;
  const std::string dir =
      (std::filesystem::temp_directory_path() / "gridwm_selftest").string();
  std::filesystem::remove_all(dir);
  const StageResult res = pretrain(tiny, dir);
  if (res.updates != 4) throw ContractError("selftest pretraining update count is wrong");
  std::printf("selftest ok (config %s)\n", config_hash(def).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"world-model pretraining with intrinsic exploration on a grid driving simulator"};
  app.require_subcommand(1);
  CommonOpts o;

  auto* c_pre = app.add_subcommand("pretrain", "phase 1: reward-free pretraining in Town-A");
  add_config_flags(c_pre, o);
  c_pre->add_option("--out", o.out, "output directory");

  auto* c_zs = app.add_subcommand("zeroshot", "frozen zero-shot evaluation grid");
  add_config_flags(c_zs, o);
  c_zs->add_option("--ckpt", o.ckpt_path, "pretraining checkpoint")->required();
  c_zs->add_option("--out", o.out, "output directory");
  c_zs->add_option("--workers", o.workers, "parallel eval workers");

  auto* c_ft = app.add_subcommand("finetune", "phase 2: few-shot task adaptation");
  add_config_flags(c_ft, o);
  c_ft->add_option("--ckpt", o.ckpt_path, "pretraining checkpoint")->required();
  c_ft->add_option("--out", o.out, "output directory");

  auto* c_bl = app.add_subcommand("baseline", "budget-matched extrinsic-only baseline");
  add_config_flags(c_bl, o);
  c_bl->add_option("--out", o.out, "output directory");

  auto* c_ev = app.add_subcommand("eval", "evaluation grid for any checkpoint");
  add_config_flags(c_ev, o);
  c_ev->add_option("--ckpt", o.ckpt_path, "checkpoint to evaluate")->required();
  c_ev->add_option("--out", o.out, "output directory");
  c_ev->add_option("--workers", o.workers, "parallel eval workers");
  std::string method_override;
  c_ev->add_option("--method", method_override, "method label in the records");

  auto* c_rep = app.add_subcommand("report", "aggregate records into csv/markdown/svg");
  std::vector<std::string> record_paths;
  c_rep->add_option("--records", record_paths, "records.jsonl files")->required();
  c_rep->add_option("--out", o.out, "output directory");

  auto* c_st = app.add_subcommand("selftest", "quick internal consistency check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_st->parsed()) return selftest();

    if (c_rep->parsed()) {
      std::vector<EvalRecord> records;
      for (const std::string& p : record_paths) {
        auto part = load_records_jsonl(p);
        records.insert(records.end(), part.begin(), part.end());
      }
      std::filesystem::create_directories(o.out);
      const auto rows = aggregate(records);
      write_report_csv(rows, o.out + "/report.csv");
      write_report_markdown(rows, gap_table(rows), o.out + "/report.md");
      write_report_svg(rows, o.out + "/report.svg");
      std::printf("report: %zu records -> %zu rows in %s\n", records.size(), rows.size(),
                  o.out.c_str());
      return 0;
    }

    if (c_pre->parsed()) {
      const Config cfg = resolve_config(o, "pretrain");
      const StageResult res = pretrain(cfg, o.out);
      write_run_manifest(cfg, "pretrain", o.out, res.env_steps, res.updates);
      std::printf("pretrain done: %lld env steps, %lld updates, checkpoint %s (config %s)\n",
                  static_cast<long long>(res.env_steps), static_cast<long long>(res.updates),
                  res.checkpoint_path.c_str(), config_hash(cfg).c_str());
      return 0;
    }

    if (c_zs->parsed()) {
      const Config cfg = resolve_config(o, "zeroshot");
      const Checkpoint ck = Checkpoint::load(o.ckpt_path);
      const auto records = zeroshot_eval(cfg, ck, o.out, o.workers);
      write_run_manifest(cfg, "zeroshot", o.out, 0, 0);
      std::printf("zeroshot done: %zu records in %s (config %s)\n", records.size(), o.out.c_str(),
                  config_hash(cfg).c_str());
      return 0;
    }

    if (c_ft->parsed()) {
      const Config cfg = resolve_config(o, "finetune");
      const Checkpoint ck = Checkpoint::load(o.ckpt_path);
      const StageResult res = finetune(cfg, ck, o.out);
      write_run_manifest(cfg, "finetune", o.out, res.env_steps, res.updates);
      std::printf("finetune done: %lld env steps, %lld updates, checkpoint %s (config %s)\n",
                  static_cast<long long>(res.env_steps), static_cast<long long>(res.updates),
                  res.checkpoint_path.c_str(), config_hash(cfg).c_str());
      return 0;
    }

    if (c_bl->parsed()) {
      const Config cfg = resolve_config(o, "baseline");
      const StageResult res = run_baseline_extrinsic(cfg, o.out);
      write_run_manifest(cfg, "baseline", o.out, res.env_steps, res.updates);
      std::printf("baseline done: %lld env steps, %lld updates, checkpoint %s (config %s)\n",
                  static_cast<long long>(res.env_steps), static_cast<long long>(res.updates),
                  res.checkpoint_path.c_str(), config_hash(cfg).c_str());
      return 0;
    }

    if (c_ev->parsed()) {
      const Config cfg = resolve_config(o, "eval");
      const Checkpoint ck = Checkpoint::load(o.ckpt_path);
      AcRole role = AcRole::Task;
      std::string method = cfg.intrinsic_kind + "-fewshot";
      if (ck.stage == "pretrain") {
        role = AcRole::Explore;
        method = cfg.intrinsic_kind + "-zeroshot";
      } else if (ck.stage == "baseline") {
        method = "extrinsic";
      }
      if (!method_override.empty()) method = method_override;
      const auto records = run_eval_grid(cfg, ck, role, method, o.workers);
      emit_eval_outputs(records, o.out);
      write_run_manifest(cfg, "eval", o.out, 0, 0);
      std::printf("eval done: %zu records (%s) in %s\n", records.size(), method.c_str(),
                  o.out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
