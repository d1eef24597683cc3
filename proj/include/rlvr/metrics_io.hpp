#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/trainer.hpp"

namespace rlvr {

// JSONL field names are a stable interface; see README before renaming.
inline nlohmann::json to_json(const StepMetrics& m) {
  nlohmann::json j;
  j["step"] = m.step;
  j["avg_reward"] = m.avg_reward;
  j["avg_response_length"] = m.avg_response_length;
  j["zero_signal_ratio_pre_reuse"] = m.zero_signal_ratio_pre_reuse;
  j["zero_signal_ratio_post_reuse"] = m.zero_signal_ratio_post_reuse;
  j["responses_sampled"] = m.responses_sampled;
  j["responses_per_prompt"] = m.responses_per_prompt;
  j["prompts_drawn"] = m.prompts_drawn;
  j["groups_trained"] = m.groups_trained;
  j["prompts_discarded"] = m.prompts_discarded;
  j["underfilled"] = m.underfilled;
  j["reuse_eligible"] = m.reuse_eligible;
  j["reuse_fired"] = m.reuse_fired;
  j["buffer_entries"] = m.buffer_entries;
  j["tokens_total"] = m.tokens_total;
  j["tokens_clipped"] = m.tokens_clipped;
  j["mean_ratio"] = m.mean_ratio;
  j["objective_value"] = m.objective_value;
  j["bucket_prompts"] = m.bucket_prompts;
  j["bucket_responses"] = m.bucket_responses;
  j["eval_accuracy"] = m.eval_accuracy ? nlohmann::json(*m.eval_accuracy) : nlohmann::json(nullptr);
  return j;
}

inline void write_jsonl(std::ostream& out, const std::vector<StepMetrics>& metrics) {
  for (const auto& m : metrics) out << to_json(m).dump() << '\n';
}

/// %.17g: round-trips doubles and prints identically for identical inputs.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct RunSummary {
  std::string algo;
  std::string reuse_mode;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  double final_eval_accuracy = 0.0;
  double mean_responses_per_prompt = 0.0;
  double mean_responses_sampled = 0.0;
  std::size_t total_responses = 0;
  double final_avg_reward = 0.0;
  double mean_zero_signal_ratio_pre_reuse = 0.0;
  double mean_zero_signal_ratio_post_reuse = 0.0;
};

inline RunSummary summarize(const RunConfig& cfg, const std::vector<StepMetrics>& metrics) {
  RunSummary s;
  s.algo = std::string(enum_name(cfg.algo));
  s.reuse_mode = std::string(enum_name(effective_reuse_mode(cfg)));
  s.seed = cfg.seed;
  s.steps = static_cast<std::int64_t>(metrics.size());
  for (const auto& m : metrics) {
    s.mean_responses_per_prompt += m.responses_per_prompt;
    s.mean_responses_sampled += static_cast<double>(m.responses_sampled);
    s.total_responses += m.responses_sampled;
    s.mean_zero_signal_ratio_pre_reuse += m.zero_signal_ratio_pre_reuse;
    s.mean_zero_signal_ratio_post_reuse += m.zero_signal_ratio_post_reuse;
  }
  if (!metrics.empty()) {
    const auto n = static_cast<double>(metrics.size());
    s.mean_responses_per_prompt /= n;
    s.mean_responses_sampled /= n;
    s.mean_zero_signal_ratio_pre_reuse /= n;
    s.mean_zero_signal_ratio_post_reuse /= n;
    s.final_avg_reward = metrics.back().avg_reward;
    s.final_eval_accuracy = metrics.back().eval_accuracy.value_or(0.0);
  }
  return s;
}

inline std::string summary_csv_header() {
  return "algo,reuse_mode,seed,steps,final_eval_accuracy,mean_responses_per_prompt,"
         "mean_responses_sampled,total_responses,final_avg_reward,"
         "mean_zero_signal_ratio_pre_reuse,mean_zero_signal_ratio_post_reuse";
}

inline std::string summary_csv_row(const RunSummary& s) {
  return s.algo + "," + s.reuse_mode + "," + std::to_string(s.seed) + "," +
         std::to_string(s.steps) + "," + fmt_double(s.final_eval_accuracy) + "," +
         fmt_double(s.mean_responses_per_prompt) + "," + fmt_double(s.mean_responses_sampled) +
         "," + std::to_string(s.total_responses) + "," + fmt_double(s.final_avg_reward) + "," +
         fmt_double(s.mean_zero_signal_ratio_pre_reuse) + "," +
         fmt_double(s.mean_zero_signal_ratio_post_reuse);
}

}  // namespace rlvr
