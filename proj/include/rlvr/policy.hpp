#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rlvr/config.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/rng.hpp"
#include "rlvr/types.hpp"

namespace rlvr {

/// Tabular autoregressive softmax policy. Logits are indexed by
/// (prompt, position, token); the distribution at a position depends on the
/// prompt and the position only, not on earlier tokens.
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(std::size_t num_prompts, std::size_t max_len, std::size_t vocab)
      : num_prompts_(num_prompts),
        max_len_(max_len),
        vocab_(vocab),
        logits_(num_prompts * max_len * vocab, 0.0) {}

  std::size_t num_prompts() const noexcept { return num_prompts_; }
  std::size_t max_len() const noexcept { return max_len_; }
  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t num_slices() const noexcept { return num_prompts_ * max_len_; }

  std::size_t slice_index(PromptId prompt, std::size_t pos) const noexcept {
    return static_cast<std::size_t>(prompt) * max_len_ + pos;
  }

  std::span<double> slice(std::size_t s) noexcept { return {logits_.data() + s * vocab_, vocab_}; }
  std::span<const double> slice(std::size_t s) const noexcept {
    return {logits_.data() + s * vocab_, vocab_};
  }
  std::span<double> row(PromptId prompt, std::size_t pos) noexcept {
    return slice(slice_index(prompt, pos));
  }
  std::span<const double> row(PromptId prompt, std::size_t pos) const noexcept {
    return slice(slice_index(prompt, pos));
  }

  std::span<double> logits() noexcept { return logits_; }
  std::span<const double> logits() const noexcept { return logits_; }

  bool operator==(const PolicyParams&) const = default;

 private:
  std::size_t num_prompts_ = 0;
  std::size_t max_len_ = 0;
  std::size_t vocab_ = 0;
  std::vector<double> logits_;
};

/// Frozen copy of the parameters taken at rollout time. Cheap to copy and safe
/// to share between rollout workers.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(PolicyParams params)
      : params_(std::make_shared<const PolicyParams>(std::move(params))) {}

  const PolicyParams& params() const noexcept { return *params_; }
  const PolicyParams* operator->() const noexcept { return params_.get(); }

 private:
  std::shared_ptr<const PolicyParams> params_;
};

inline double log_sum_exp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double x : row) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_softmax_at(std::span<const double> row, Token token) {
  return row[static_cast<std::size_t>(token)] - log_sum_exp(row);
}

inline void softmax(std::span<const double> row, std::span<double> out) {
  const double lse = log_sum_exp(row);
  for (std::size_t v = 0; v < row.size(); ++v) out[v] = std::exp(row[v] - lse);
}

/// Gradient of a scalar with respect to the logits, stored only for the
/// (prompt, position) slices it touches. Keyed by slice index; iteration
/// order is deterministic.
class SparseGradient {
 public:
  SparseGradient() = default;
  explicit SparseGradient(std::size_t vocab) : vocab_(vocab) {}

  std::size_t vocab() const noexcept { return vocab_; }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t num_rows() const noexcept { return rows_.size(); }
  const std::map<std::size_t, std::vector<double>>& rows() const noexcept { return rows_; }

  std::vector<double>& row(std::size_t slice) {
    auto [it, inserted] = rows_.try_emplace(slice);
    if (inserted) it->second.assign(vocab_, 0.0);
    return it->second;
  }

  double at(std::size_t slice, std::size_t v) const {
    auto it = rows_.find(slice);
    return it == rows_.end() ? 0.0 : it->second[v];
  }

  /// this += scale * other
  void add(const SparseGradient& other, double scale = 1.0) {
    for (const auto& [s, r] : other.rows_) {
      auto& dst = row(s);
      for (std::size_t v = 0; v < vocab_; ++v) dst[v] += scale * r[v];
    }
  }

  void scale(double c) {
    for (auto& [s, r] : rows_)
      for (double& x : r) x *= c;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [s, r] : rows_)
      for (double x : r) m = std::max(m, std::abs(x));
    return m;
  }

  std::vector<double> to_dense(std::size_t num_slices) const {
    std::vector<double> out(num_slices * vocab_, 0.0);
    for (const auto& [s, r] : rows_) std::copy(r.begin(), r.end(), out.begin() + s * vocab_);
    return out;
  }

 private:
  std::size_t vocab_ = 0;
  std::map<std::size_t, std::vector<double>> rows_;
};

namespace detail {

inline void check_tokens(const PolicyParams& params, PromptId prompt_id,
                         std::span<const Token> tokens) {
  if (prompt_id < 0 || static_cast<std::size_t>(prompt_id) >= params.num_prompts())
    throw TokenOutOfRange("prompt id " + std::to_string(prompt_id) + " outside policy table of " +
                          std::to_string(params.num_prompts()) + " prompts");
  if (tokens.size() > params.max_len())
    throw TokenOutOfRange("sequence of length " + std::to_string(tokens.size()) +
                          " exceeds max response length " + std::to_string(params.max_len()));
  for (Token t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= params.vocab())
      throw TokenOutOfRange("token " + std::to_string(t) + " outside vocabulary of size " +
                            std::to_string(params.vocab()));
  }
}

/// grad += coef * d log pi(token | prompt, pos) / d logits
inline void accumulate_logprob_grad(const PolicyParams& params, PromptId prompt, std::size_t pos,
                                    Token token, double coef, SparseGradient& grad) {
  if (coef == 0.0) return;
  auto logits = params.row(prompt, pos);
  auto& dst = grad.row(params.slice_index(prompt, pos));
  const double lse = log_sum_exp(logits);
  for (std::size_t v = 0; v < logits.size(); ++v) dst[v] -= coef * std::exp(logits[v] - lse);
  dst[static_cast<std::size_t>(token)] += coef;
}

}  // namespace detail

/// Per-token log pi(o_t | prompt, t).
inline std::vector<double> logprob(const PolicyParams& params, PromptId prompt_id,
                                   std::span<const Token> tokens) {
  detail::check_tokens(params, prompt_id, tokens);
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t)
    out.push_back(log_softmax_at(params.row(prompt_id, t), tokens[t]));
  return out;
}

/// Gradient of sum_t log pi(o_t | prompt, t); row t is onehot(o_t) - softmax.
inline SparseGradient grad_logprob(const PolicyParams& params, PromptId prompt_id,
                                   std::span<const Token> tokens) {
  detail::check_tokens(params, prompt_id, tokens);
  SparseGradient g(params.vocab());
  for (std::size_t t = 0; t < tokens.size(); ++t)
    detail::accumulate_logprob_grad(params, prompt_id, t, tokens[t], 1.0, g);
  return g;
}

/// Draws tokens position by position until EOS or the length cap. Reward is
/// left at 0; the verifier fills it.
inline Response sample_response(const PolicyParams& params, const PromptSpec& prompt, Stream& rng,
                                std::int64_t origin_step = 0) {
  detail::check_tokens(params, prompt.prompt_id, {});
  Response r;
  r.prompt_id = prompt.prompt_id;
  r.origin_step = origin_step;
  std::vector<double> probs(params.vocab());
  for (std::size_t t = 0; t < params.max_len(); ++t) {
    auto logits = params.row(prompt.prompt_id, t);
    softmax(logits, probs);
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = probs.size() - 1;
    for (std::size_t v = 0; v < probs.size(); ++v) {
      cum += probs[v];
      if (u < cum) {
        pick = v;
        break;
      }
    }
    // Rounding can leave u >= cum; fall back to the last token with mass.
    while (pick > 0 && probs[pick] == 0.0) --pick;
    const auto token = static_cast<Token>(pick);
    r.tokens.push_back(token);
    r.behavior_logprobs.push_back(log_softmax_at(logits, token));
    if (token == kEos) break;
  }
  return r;
}

inline Response sample_response(const PolicySnapshot& snapshot, const PromptSpec& prompt,
                                Stream& rng, std::int64_t origin_step = 0) {
  return sample_response(snapshot.params(), prompt, rng, origin_step);
}

/// Logit bias b such that softmax puts mass q on the biased token with the
/// other V-1 tokens at logit 0.
inline double bias_for_mass(double q, std::size_t vocab) {
  return std::log(q / (1.0 - q)) + std::log(static_cast<double>(vocab - 1));
}

/// Initial policy calibrated so that prompt p's per-rollout success
/// probability equals its difficulty_seed: each of the L canonical positions
/// puts mass difficulty^(1/L) on the answer token. Positions past the answer
/// are EOS-biased with the same logit.
inline PolicyParams initial_policy(std::span<const PromptSpec> dataset, const EnvConfig& env) {
  const auto vocab = static_cast<std::size_t>(env.vocab_size);
  const auto max_len = static_cast<std::size_t>(env.max_response_len);
  PolicyParams params(dataset.size(), max_len, vocab);
  for (const auto& prompt : dataset) {
    if (prompt.prompt_id < 0 || static_cast<std::size_t>(prompt.prompt_id) >= dataset.size())
      throw ContractViolation("prompt ids must be 0..n-1");
    if (prompt.answer.empty() || prompt.answer.back() != kEos || prompt.answer.size() > max_len)
      throw ContractViolation("prompt " + std::to_string(prompt.prompt_id) +
                              " answer is not in canonical EOS-terminated form");
    const double len = static_cast<double>(prompt.answer.size());
    const double b = bias_for_mass(std::pow(prompt.difficulty_seed, 1.0 / len), vocab);
    for (std::size_t t = 0; t < max_len; ++t) {
      const Token target = t < prompt.answer.size() ? prompt.answer[t] : kEos;
      params.row(prompt.prompt_id, t)[static_cast<std::size_t>(target)] = b;
    }
  }
  return params;
}

/// Probability that a single rollout reproduces the canonical answer exactly.
inline double success_probability(const PolicyParams& params, const PromptSpec& prompt) {
  double lp = 0.0;
  for (double x : logprob(params, prompt.prompt_id, prompt.answer)) lp += x;
  return std::exp(lp);
}

namespace detail {

inline void commit_update(PolicyParams& params, const SparseGradient& step) {
  for (const auto& [s, r] : step.rows()) {
    if (s >= params.num_slices()) throw ContractViolation("gradient slice outside parameter table");
    auto dst = params.slice(s);
    for (std::size_t v = 0; v < r.size(); ++v) {
      const double next = dst[v] + r[v];
      if (!std::isfinite(next))
        throw NumericalFailure("non-finite logit after update at slice " + std::to_string(s) +
                               ", token " + std::to_string(v) + " (logit " +
                               std::to_string(dst[v]) + ", step " + std::to_string(r[v]) + ")");
    }
  }
  for (const auto& [s, r] : step.rows()) {
    auto dst = params.slice(s);
    for (std::size_t v = 0; v < r.size(); ++v) dst[v] += r[v];
  }
}

}  // namespace detail

/// Gradient-ascent optimizer. sgd is the plain update; rmsprop scales each
/// coordinate by a running RMS of its gradient (no momentum).
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double decay = 0.99, double eps = 1e-8)
      : kind_(kind), decay_(decay), eps_(eps) {}

  void step(PolicyParams& params, const SparseGradient& grad, double learning_rate) {
    SparseGradient delta(grad.vocab());
    if (kind_ == OptimizerKind::sgd) {
      delta.add(grad, learning_rate);
    } else {
      if (second_moment_.size() != params.logits().size())
        second_moment_.assign(params.logits().size(), 0.0);
      for (const auto& [s, r] : grad.rows()) {
        auto& out = delta.row(s);
        for (std::size_t v = 0; v < r.size(); ++v) {
          double& m = second_moment_[s * grad.vocab() + v];
          m = decay_ * m + (1.0 - decay_) * r[v] * r[v];
          out[v] = learning_rate * r[v] / (std::sqrt(m) + eps_);
        }
      }
    }
    detail::commit_update(params, delta);
  }

 private:
  OptimizerKind kind_;
  double decay_;
  double eps_;
  std::vector<double> second_moment_;
};

// Parameter dump: three little-endian uint64 (V, T_max, n_prompts) followed by
// the logits as row-major float64, index order (prompt, position, token).

inline void save_params(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::uint64_t header[3] = {params.vocab(), params.max_len(), params.num_prompts()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(params.logits().data()),
            static_cast<std::streamsize>(params.logits().size() * sizeof(double)));
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline PolicyParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open params dump '" + path + "'");
  std::uint64_t header[3] = {};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] < 2 || header[1] == 0 || header[2] == 0 || header[0] > (1u << 20) ||
      header[1] > (1u << 20) || header[2] > (1u << 24))
    throw Error("'" + path + "' is not a params dump (bad header)");
  PolicyParams params(header[2], header[1], header[0]);
  auto logits = params.logits();
  in.read(reinterpret_cast<char*>(logits.data()),
          static_cast<std::streamsize>(logits.size() * sizeof(double)));
  if (!in) throw Error("'" + path + "' is truncated");
  for (double x : logits)
    if (!std::isfinite(x)) throw Error("'" + path + "' contains non-finite logits");
  return params;
}

}  // namespace rlvr
