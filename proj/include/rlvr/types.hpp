#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "rlvr/errors.hpp"

namespace rlvr {

using Token = std::int32_t;
using PromptId = std::int32_t;

/// Reserved end-of-sequence id. Answer tokens live in [1, V).
inline constexpr Token kEos = 0;

/// A synthetic task instance. `answer` is stored in canonical form, i.e.
/// terminated by kEos. `difficulty_seed` is the per-rollout success
/// probability the initial policy is calibrated to.
struct PromptSpec {
  PromptId prompt_id = 0;
  std::vector<Token> answer;
  double difficulty_seed = 0.5;
};

struct Response {
  PromptId prompt_id = 0;
  std::vector<Token> tokens;
  std::vector<double> behavior_logprobs;
  int reward = 0;
  std::int64_t origin_step = 0;
  bool reused = false;

  std::size_t size() const noexcept { return tokens.size(); }
};

enum class ReuseMode : std::uint8_t { off, direct, option1, option2 };

struct Group {
  PromptId prompt_id = 0;
  std::vector<Response> responses;
  std::vector<double> advantages;
  ReuseMode reuse_mode_applied = ReuseMode::off;

  std::size_t size() const noexcept { return responses.size(); }

  std::size_t num_correct() const noexcept {
    std::size_t n = 0;
    for (const auto& r : responses) n += r.reward == 1 ? 1 : 0;
    return n;
  }

  std::vector<double> rewards() const {
    std::vector<double> out;
    out.reserve(responses.size());
    for (const auto& r : responses) out.push_back(static_cast<double>(r.reward));
    return out;
  }

  /// Option II reuse: the reused response shapes advantages only.
  bool gradient_excluded(std::size_t i) const noexcept {
    return reuse_mode_applied == ReuseMode::option2 && responses[i].reused;
  }
};

enum class Algo : std::uint8_t { grpo, dapo, ar3po };

inline std::string_view to_string(Algo a) {
  switch (a) {
    case Algo::grpo: return "grpo";
    case Algo::dapo: return "dapo";
    case Algo::ar3po: return "ar3po";
  }
  return "?";
}

inline std::string_view to_string(ReuseMode m) {
  switch (m) {
    case ReuseMode::off: return "off";
    case ReuseMode::direct: return "direct";
    case ReuseMode::option1: return "option1";
    case ReuseMode::option2: return "option2";
  }
  return "?";
}

}  // namespace rlvr

namespace rlvr {

enum class OptimizerKind : std::uint8_t { sgd, rmsprop };

/// How surrogate token sums are normalized: by each group's own token count
/// (then averaged over groups) or by the mini-batch's total token count.
enum class TokenNorm : std::uint8_t { group, batch };

enum class StdKind : std::uint8_t { population, sample };

}  // namespace rlvr
