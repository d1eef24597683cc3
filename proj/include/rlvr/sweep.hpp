#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/config.hpp"
#include "rlvr/experiment.hpp"
#include "rlvr/metrics_io.hpp"
#include "rlvr/parallel.hpp"

namespace rlvr {

struct SweepVariant {
  std::string name;
  RunConfig config;
};

/// Named config variants run over a shared list of training seeds. All
/// variants share env parameters (and so the dataset), which makes every
/// comparison paired.
struct SweepSpec {
  std::vector<SweepVariant> variants;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "runs/sweep";
  std::size_t jobs = 1;
};

/// Sweep file layout:
///   { "output_dir": "...", "seeds": [..], "jobs": 1,
///     "base": { <config> },
///     "variants": [ { "name": "grpo", "config": { <partial config> } }, ... ] }
/// Each variant's config is merged over base. Seed and output directory are
/// set per run by the sweep.
inline SweepSpec sweep_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sweep", "top level must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "output_dir" && k != "seeds" && k != "jobs" && k != "base" && k != "variants")
      throw ConfigError("sweep/" + k, "unknown sweep key");
  }
  SweepSpec spec;
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("sweep/output_dir", "expected a string");
    spec.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("jobs")) {
    if (!j["jobs"].is_number_integer() || j["jobs"].get<std::int64_t>() <= 0)
      throw ConfigError("sweep/jobs", "expected a positive integer");
    spec.jobs = j["jobs"].get<std::size_t>();
  }
  if (!j.contains("seeds") || !j["seeds"].is_array())
    throw ConfigError("sweep/seeds", "expected a list of seeds");
  for (const auto& s : j["seeds"]) {
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw ConfigError("sweep/seeds", "seeds must be non-negative integers");
    spec.seeds.push_back(s.get<std::uint64_t>());
  }
  if (spec.seeds.empty()) throw ConfigError("sweep/seeds", "at least one seed is required");

  const nlohmann::json base = j.value("base", nlohmann::json::object());
  if (!base.is_object()) throw ConfigError("sweep/base", "expected an object");
  if (!j.contains("variants") || !j["variants"].is_array() || j["variants"].empty())
    throw ConfigError("sweep/variants", "expected a nonempty list of variants");

  std::set<std::string> names;
  for (const auto& v : j["variants"]) {
    if (!v.is_object() || !v.contains("name") || !v["name"].is_string())
      throw ConfigError("sweep/variants", "every variant needs a string name");
    const auto name = v["name"].get<std::string>();
    if (name.empty() || name.find_first_of("/\\ ") != std::string::npos || name == "." ||
        name == "..")
      throw ConfigError("sweep/variants", "variant name '" + name + "' is not a valid directory name");
    if (!names.insert(name).second)
      throw ConfigError("sweep/variants", "duplicate variant name '" + name + "'");
    nlohmann::json merged = base;
    if (v.contains("config")) merged.merge_patch(v["config"]);
    try {
      spec.variants.push_back({name, config_from_json(merged)});
    } catch (const ConfigError& e) {
      throw ConfigError("sweep/variants/" + name + "/" + e.field(), e.what());
    }
  }
  const auto& env0 = spec.variants.front().config.env;
  for (const auto& v : spec.variants) {
    if (!(v.config.env == env0))
      throw ConfigError("sweep/variants/" + v.name + "/env",
                        "all variants must share env parameters");
  }
  return spec;
}

inline SweepSpec load_sweep(const std::string& path) {
  return sweep_from_json(read_config_file(path));
}

struct SweepRow {
  std::string name;
  std::size_t runs_completed = 0;
  std::size_t runs_failed = 0;
  double mean_final_accuracy = 0.0;
  double mean_responses_per_prompt = 0.0;
  double mean_responses_per_step = 0.0;
  /// responses per step of the variant named "dapo" over this variant's.
  std::optional<double> speedup;
};

struct SweepRun {
  std::string variant;
  std::uint64_t seed = 0;
  std::optional<RunSummary> summary;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRun> runs;
};

inline std::string sweep_table_csv(const SweepResult& r) {
  std::ostringstream out;
  out << "variant,runs_completed,runs_failed,mean_final_accuracy,mean_responses_per_prompt,"
         "mean_responses_per_step,speedup_vs_dapo\n";
  for (const auto& row : r.rows) {
    out << row.name << ',' << row.runs_completed << ',' << row.runs_failed << ','
        << fmt_double(row.mean_final_accuracy) << ',' << fmt_double(row.mean_responses_per_prompt)
        << ',' << fmt_double(row.mean_responses_per_step) << ','
        << (row.speedup ? fmt_double(*row.speedup) : std::string()) << '\n';
  }
  return out.str();
}

/// Human-readable table for the terminal.
inline std::string sweep_table_text(const SweepResult& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %6s %10s %12s %14s %10s\n", "variant", "runs",
                "accuracy", "resp/prompt", "resp/step", "speedup");
  out << line;
  for (const auto& row : r.rows) {
    char sp[32] = "-";
    if (row.speedup) std::snprintf(sp, sizeof(sp), "%.2f", *row.speedup);
    std::snprintf(line, sizeof(line), "%-16s %3zu/%-2zu %10.4f %12.3f %14.1f %10s\n",
                  row.name.c_str(), row.runs_completed, row.runs_completed + row.runs_failed,
                  row.mean_final_accuracy, row.mean_responses_per_prompt,
                  row.mean_responses_per_step, sp);
    out << line;
  }
  return out.str();
}

/// Runs every (variant, seed) pair into output_dir/<variant>/seed_<seed>/.
/// A failed run is recorded and excluded from the means; the table is still
/// produced. Writes comparison.csv and runs.csv to output_dir.
inline SweepResult run_sweep(const SweepSpec& spec) {
  SweepResult result;
  for (const auto& v : spec.variants)
    for (auto seed : spec.seeds) result.runs.push_back({v.name, seed, std::nullopt, {}});

  parallel_for(result.runs.size(), spec.jobs, [&](std::size_t i) {
    auto& run = result.runs[i];
    const auto& variant = *std::find_if(spec.variants.begin(), spec.variants.end(),
                                        [&](const SweepVariant& v) { return v.name == run.variant; });
    RunConfig cfg = variant.config;
    cfg.seed = run.seed;
    cfg.output_dir = (std::filesystem::path(spec.output_dir) / run.variant /
                      ("seed_" + std::to_string(run.seed)))
                         .string();
    try {
      run.summary = run_experiment(cfg).summary;
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  });

  for (const auto& v : spec.variants) {
    SweepRow row;
    row.name = v.name;
    for (const auto& run : result.runs) {
      if (run.variant != v.name) continue;
      if (!run.summary) {
        ++row.runs_failed;
        continue;
      }
      ++row.runs_completed;
      row.mean_final_accuracy += run.summary->final_eval_accuracy;
      row.mean_responses_per_prompt += run.summary->mean_responses_per_prompt;
      row.mean_responses_per_step += run.summary->mean_responses_sampled;
    }
    if (row.runs_completed > 0) {
      const auto n = static_cast<double>(row.runs_completed);
      row.mean_final_accuracy /= n;
      row.mean_responses_per_prompt /= n;
      row.mean_responses_per_step /= n;
    }
    result.rows.push_back(row);
  }
  auto dapo = std::find_if(result.rows.begin(), result.rows.end(),
                           [](const SweepRow& r) { return r.name == "dapo"; });
  if (dapo != result.rows.end() && dapo->runs_completed > 0) {
    const double ref = dapo->mean_responses_per_step;
    for (auto& row : result.rows)
      if (row.runs_completed > 0 && row.mean_responses_per_step > 0.0)
        row.speedup = ref / row.mean_responses_per_step;
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) throw IoError("cannot create sweep directory '" + spec.output_dir + "'");
  {
    const auto p = fs::path(spec.output_dir) / "comparison.csv";
    auto out = detail::open_for_write(p);
    out << sweep_table_csv(result);
    detail::check_written(out, p);
  }
  {
    const auto p = fs::path(spec.output_dir) / "runs.csv";
    auto out = detail::open_for_write(p);
    out << "variant," << summary_csv_header() << ",error\n";
    for (const auto& run : result.runs) {
      if (run.summary) {
        out << run.variant << ',' << summary_csv_row(*run.summary) << ",\n";
      } else {
        std::string msg = run.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << run.variant << ",,," << run.seed << ",,,,,,,,," << msg << '\n';
      }
    }
    detail::check_written(out, p);
  }
  return result;
}

}  // namespace rlvr
