#include "gridwm/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace gridwm {

using nlohmann::json;

namespace {

struct EvalCell {
  size_t index;  // position in the canonical enumeration; fixes the rng seed
  const TownMap* town;
  RouteId route;
  int density;
  uint64_t tm_seed, spawn_seed;
  int episode;
};

// Frozen evaluation agent: world model + one policy, rebuilt per worker.
struct EvalAgent {
  WorldModel wm;
  PolicyNet policy;

  EvalAgent(const Config& cfg, const Checkpoint& ckpt, AcRole role)
      : wm(cfg.wm, cfg.seed),
        policy(role, cfg.wm.feature(), cfg.ac_hidden, cfg.wm.action_count, cfg.seed) {
    ckpt.load_into(wm.wm_params());
    ckpt.load_into(policy.params());
    wm.wm_params().freeze();
    policy.params().freeze();
  }
};

EvalRecord run_episode(const Config& cfg, EvalAgent& agent, const EvalCell& cell,
                       const std::string& method, bool greedy) {
  const uint64_t ep_seed = splitmix64(cfg.seed + 0x9E3779B97F4A7C15ull * (cell.index + 1));
  SeededRng act_rng(ep_seed);
  LatentFilter filter(agent.wm, splitmix64(ep_seed));

  Simulator sim(cfg.sim);  // rewards stay disabled: the metric is success only
  std::vector<uint8_t> obs =
      sim.reset(*cell.town, cell.route, cell.density, cell.tm_seed, cell.spawn_seed);

  int prev_action = -1;
  TerminationCause cause = TerminationCause::None;
  while (!sim.terminal()) {
    const Tensor& u = filter.update(obs, prev_action);
    const int a = agent.policy.act(u, act_rng, greedy);
    StepResult r = sim.step(Action{a});
    obs = std::move(r.observation);
    prev_action = a;
    if (r.terminal) cause = r.cause;
  }

  EvalRecord rec;
  rec.town = cell.town->id();
  rec.route = to_string(cell.route);
  rec.method = method;
  rec.density = cell.density;
  rec.tm_seed = cell.tm_seed;
  rec.spawn_seed = cell.spawn_seed;
  rec.episode = cell.episode;
  rec.success = cause == TerminationCause::Destination;
  rec.cause = to_string(cause);
  rec.steps = sim.step_count();
  rec.progress = sim.route_progress_cells();
  return rec;
}

}  // namespace

std::vector<EvalRecord> run_eval_grid(const Config& cfg, const Checkpoint& ckpt, AcRole role,
                                      const std::string& method, int workers) {
  cfg.validate();
  if (workers < 1) throw ConfigError("eval worker count must be >= 1");
  const bool greedy = cfg.protocol.zeroshot_mode == "greedy";

  const TownMap town_a = TownMap::town_a();
  const TownMap town_b = TownMap::town_b();
  const RouteId routes[] = {RouteId::Straight, RouteId::LeftLoop, RouteId::RightLoop,
                            RouteId::TwoTurn};
  std::vector<EvalCell> cells;
  for (const TownMap* town : {&town_a, &town_b})
    for (RouteId route : routes)
      for (int density : cfg.eval.densities)
        for (int ep = 0; ep < cfg.eval.episodes_per_cell; ++ep) {
          EvalCell c;
          c.index = cells.size();
          c.town = town;
          c.route = route;
          c.density = density;
          c.tm_seed = cfg.eval.tm_seeds[static_cast<size_t>(ep) % cfg.eval.tm_seeds.size()];
          c.spawn_seed =
              cfg.eval.spawn_seeds[static_cast<size_t>(ep) % cfg.eval.spawn_seeds.size()];
          c.episode = ep;
          cells.push_back(c);
        }

  // Episodes are seeded by their canonical index, so the worker partition
  // cannot change any result — only the wall-clock time.
  std::vector<std::optional<EvalRecord>> results(cells.size());
  auto run_slice = [&](int w) {
    EvalAgent agent(cfg, ckpt, role);
    for (size_t i = static_cast<size_t>(w); i < cells.size(); i += static_cast<size_t>(workers)) {
      try {
        results[i] = run_episode(cfg, agent, cells[i], method, greedy);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "eval episode %zu failed and is excluded: %s\n", i, e.what());
      }
    }
  };
  if (workers == 1) {
    run_slice(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_slice, w);
    for (auto& t : pool) t.join();
  }

  std::vector<EvalRecord> records;
  records.reserve(cells.size());
  for (auto& r : results)
    if (r.has_value()) records.push_back(std::move(*r));
  return records;
}

void save_records_jsonl(const std::vector<EvalRecord>& records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write records: " + path);
  for (const EvalRecord& r : records) {
    json j{{"town", r.town},         {"route", r.route},
           {"method", r.method},     {"density", r.density},
           {"tm_seed", r.tm_seed},   {"spawn_seed", r.spawn_seed},
           {"episode", r.episode},   {"success", r.success},
           {"cause", r.cause},       {"steps", r.steps},
           {"progress", r.progress}};
    os << j.dump() << "\n";
  }
}

std::vector<EvalRecord> load_records_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read records: " + path);
  std::vector<EvalRecord> records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    EvalRecord r;
    r.town = j.at("town").get<std::string>();
    r.route = j.at("route").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.density = j.at("density").get<int>();
    r.tm_seed = j.at("tm_seed").get<uint64_t>();
    r.spawn_seed = j.at("spawn_seed").get<uint64_t>();
    r.episode = j.at("episode").get<int>();
    r.success = j.at("success").get<bool>();
    r.cause = j.at("cause").get<std::string>();
    r.steps = j.at("steps").get<int>();
    r.progress = j.at("progress").get<double>();
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records) {
  // (town, route, method) -> density -> (successes, total)
  std::map<std::tuple<std::string, std::string, std::string>, std::map<int, std::pair<int, int>>>
      groups;
  for (const EvalRecord& r : records) {
    auto& cell = groups[{r.town, r.route, r.method}][r.density];
    cell.first += r.success ? 1 : 0;
    cell.second += 1;
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, by_density] : groups) {
    AggregateRow row;
    std::tie(row.town, row.route, row.method) = key;
    double sum = 0.0;
    for (const auto& [density, counts] : by_density) {
      const double sr = 100.0 * counts.first / counts.second;
      row.sr_by_density[density] = sr;
      sum += sr;
      row.n += counts.second;
    }
    // densities first, then seeds: each density cell is an equal-weight vote
    row.density_avg_sr = sum / static_cast<double>(by_density.size());
    row.fr = 100.0 - row.density_avg_sr;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<GapRow> gap_table(const std::vector<AggregateRow>& rows) {
  struct Acc {
    double sum_a = 0.0, sum_b = 0.0;
    int n_a = 0, n_b = 0;
  };
  std::map<std::string, Acc> by_method;
  for (const AggregateRow& r : rows) {
    Acc& a = by_method[r.method];
    if (r.town == "Town-A") {
      a.sum_a += r.density_avg_sr;
      ++a.n_a;
    } else {
      a.sum_b += r.density_avg_sr;
      ++a.n_b;
    }
  }
  std::vector<GapRow> gaps;
  for (const auto& [method, acc] : by_method) {
    GapRow g;
    g.method = method;
    g.complete = acc.n_a > 0 && acc.n_b > 0;
    if (acc.n_a > 0) g.sr_a = acc.sum_a / acc.n_a;
    if (acc.n_b > 0) g.sr_b = acc.sum_b / acc.n_b;
    if (g.complete) g.gap = g.sr_a - g.sr_b;
    gaps.push_back(std::move(g));
  }
  return gaps;
}

void write_report_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  if (rows.empty()) throw ContractError("refusing to write an empty report: " + path);
  std::ostringstream os;
  os << "town,route,method,density_avg_sr,fr,n\n";
  char buf[64];
  for (const AggregateRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f", r.density_avg_sr, r.fr);
    os << r.town << "," << r.route << "," << r.method << "," << buf << "," << r.n << "\n";
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write report: " + path);
  f << os.str();
}

std::vector<AggregateRow> read_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read report: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "town,route,method,density_avg_sr,fr,n")
    throw IoError("unrecognized report header in " + path);
  std::vector<AggregateRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    AggregateRow r;
    std::string field;
    std::getline(ls, r.town, ',');
    std::getline(ls, r.route, ',');
    std::getline(ls, r.method, ',');
    std::getline(ls, field, ',');
    r.density_avg_sr = std::stod(field);
    std::getline(ls, field, ',');
    r.fr = std::stod(field);
    std::getline(ls, field, ',');
    r.n = std::stoi(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_report_markdown(const std::vector<AggregateRow>& rows, const std::vector<GapRow>& gaps,
                           const std::string& path) {
  if (rows.empty()) throw ContractError("refusing to write an empty report: " + path);
  std::ofstream os(path);
  if (!os) throw IoError("cannot write report: " + path);
  char buf[64];
  os << "# Evaluation report\n\n## Success rates (density-averaged %)\n\n";
  os << "| town | route | method | SR | FR | n |\n|---|---|---|---|---|---|\n";
  for (const AggregateRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.1f | %.1f", r.density_avg_sr, r.fr);
    os << "| " << r.town << " | " << r.route << " | " << r.method << " | " << buf << " | " << r.n
       << " |\n";
  }
  os << "\n## Seen-to-unseen town gap (route-averaged SR)\n\n";
  os << "| method | Town-A | Town-B | gap |\n|---|---|---|---|\n";
  for (const GapRow& g : gaps) {
    if (g.complete) {
      std::snprintf(buf, sizeof buf, "%.1f | %.1f | %.1f", g.sr_a, g.sr_b, g.gap);
      os << "| " << g.method << " | " << buf << " |\n";
    } else {
      os << "| " << g.method << " | incomplete | incomplete | n/a |\n";
    }
  }
}

void write_report_svg(const std::vector<AggregateRow>& rows, const std::string& path) {
  if (rows.empty()) throw ContractError("refusing to write an empty report: " + path);
  const int bar_h = 18, gap = 6, left = 260, chart_w = 400;
  const int height = static_cast<int>(rows.size()) * (bar_h + gap) + 40;
  std::ofstream os(path);
  if (!os) throw IoError("cannot write report: " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + chart_w + 60
     << "\" height=\"" << height << "\" font-family=\"monospace\" font-size=\"12\">\n";
  os << "<text x=\"10\" y=\"20\">density-averaged success rate (%)</text>\n";
  int y = 34;
  char buf[32];
  for (const AggregateRow& r : rows) {
    const int w = static_cast<int>(r.density_avg_sr / 100.0 * chart_w);
    os << "<text x=\"10\" y=\"" << y + bar_h - 5 << "\">" << r.town << " " << r.route << " "
       << r.method << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << std::max(w, 1)
       << "\" height=\"" << bar_h << "\" fill=\"#4a90d9\"/>\n";
    std::snprintf(buf, sizeof buf, "%.1f", r.density_avg_sr);
    os << "<text x=\"" << left + w + 6 << "\" y=\"" << y + bar_h - 5 << "\">" << buf
       << "</text>\n";
    y += bar_h + gap;
  }
  os << "</svg>\n";
}

}  // namespace gridwm
