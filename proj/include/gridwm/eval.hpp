#pragma once

#include "gridwm/checkpoint.hpp"
#include "gridwm/config.hpp"

namespace gridwm {

// One evaluated episode. Success means the destination termination cause and
// nothing else; every seed used is recorded so any cell can be replayed.
struct EvalRecord {
  std::string town;    // "Town-A" / "Town-B"
  std::string route;   // route name
  std::string method;  // e.g. "disagreement-zeroshot"
  int density = 0;
  uint64_t tm_seed = 0;
  uint64_t spawn_seed = 0;
  int episode = 0;
  bool success = false;
  std::string cause;
  int steps = 0;
  double progress = 0.0;
};

// Full grid: 2 towns x 4 routes x |densities| x episodes_per_cell. Traffic
// seeds cycle episode % |tm_seeds|, spawn seeds episode % |spawn_seeds|.
// Models are rebuilt per worker from the checkpoint and frozen; results are
// independent of the worker count.
std::vector<EvalRecord> run_eval_grid(const Config& cfg, const Checkpoint& ckpt, AcRole role,
                                      const std::string& method, int workers);

void save_records_jsonl(const std::vector<EvalRecord>& records, const std::string& path);
std::vector<EvalRecord> load_records_jsonl(const std::string& path);

// Per (town, route, method): success rate by density, the density-averaged
// success rate, and failure rate = 100 - SR by construction.
struct AggregateRow {
  std::string town, route, method;
  std::map<int, double> sr_by_density;  // percent
  double density_avg_sr = 0.0;
  double fr = 0.0;
  int n = 0;  // episodes behind the row
};

std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records);

// Per method: route-averaged SR per town and the Town-A minus Town-B gap.
// A method missing one town is reported incomplete, never imputed.
struct GapRow {
  std::string method;
  double sr_a = 0.0, sr_b = 0.0, gap = 0.0;
  bool complete = false;
};

std::vector<GapRow> gap_table(const std::vector<AggregateRow>& rows);

// CSV columns: town,route,method,density_avg_sr,fr,n. Empty input is an
// error; no file is created.
void write_report_csv(const std::vector<AggregateRow>& rows, const std::string& path);
std::vector<AggregateRow> read_report_csv(const std::string& path);

void write_report_markdown(const std::vector<AggregateRow>& rows, const std::vector<GapRow>& gaps,
                           const std::string& path);
void write_report_svg(const std::vector<AggregateRow>& rows, const std::string& path);

}  // namespace gridwm
