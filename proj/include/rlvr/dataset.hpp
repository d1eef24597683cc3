#pragma once

#include <vector>

#include "rlvr/config.hpp"
#include "rlvr/rng.hpp"
#include "rlvr/types.hpp"

namespace rlvr {

/// Reference synthetic dataset: answer length uniform in [1, max_answer_len],
/// answer tokens uniform over the non-EOS vocabulary, difficulty (target
/// per-rollout success probability) uniform in [difficulty_low, difficulty_high].
inline std::vector<PromptSpec> make_dataset(const EnvConfig& env) {
  std::vector<PromptSpec> out;
  out.reserve(static_cast<std::size_t>(env.dataset_size));
  for (int p = 0; p < env.dataset_size; ++p) {
    auto g = rng_stream(env.dataset_seed, 0, static_cast<std::uint64_t>(p), 0, Purpose::dataset);
    PromptSpec spec;
    spec.prompt_id = p;
    const auto len = 1 + uniform_index(g, static_cast<std::size_t>(env.max_answer_len));
    for (std::size_t t = 0; t < len; ++t)
      spec.answer.push_back(
          static_cast<Token>(1 + uniform_index(g, static_cast<std::size_t>(env.vocab_size - 1))));
    spec.answer.push_back(kEos);
    spec.difficulty_seed =
        env.difficulty_low + (env.difficulty_high - env.difficulty_low) * uniform01(g);
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace rlvr
