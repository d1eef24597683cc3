#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "rlvr/config.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/metrics_io.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/trainer.hpp"

namespace rlvr {

struct RunOutcome {
  TrainResult result;
  RunSummary summary;
};

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

inline void check_written(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw IoError("write to '" + p.string() + "' failed");
}

}  // namespace detail

/// Trains on the reference dataset described by cfg.env and writes, under
/// cfg.output_dir: metrics.jsonl (one object per step), summary.csv (header
/// plus one row), resolved_config.json (a complete config that reproduces the
/// run), and params.bin when dump_params is set.
inline RunOutcome run_experiment(const RunConfig& config) {
  RunConfig cfg = config;
  resolve(cfg);
  validate(cfg);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  {
    const auto p = dir / "resolved_config.json";
    auto out = detail::open_for_write(p);
    out << to_json(cfg).dump(2) << '\n';
    detail::check_written(out, p);
  }

  const auto dataset = make_dataset(cfg.env);
  const auto metrics_path = dir / "metrics.jsonl";
  auto metrics_out = detail::open_for_write(metrics_path);
  RunOutcome outcome;
  outcome.result = train(cfg, dataset, [&](const StepMetrics& m) {
    metrics_out << to_json(m).dump() << '\n';
  });
  detail::check_written(metrics_out, metrics_path);

  outcome.summary = summarize(cfg, outcome.result.metrics);
  {
    const auto p = dir / "summary.csv";
    auto out = detail::open_for_write(p);
    out << summary_csv_header() << '\n' << summary_csv_row(outcome.summary) << '\n';
    detail::check_written(out, p);
  }
  if (cfg.dump_params) save_params(outcome.result.params, (dir / "params.bin").string());
  return outcome;
}

}  // namespace rlvr
