#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "rlvr/dataset.hpp"
#include "rlvr/objective.hpp"
#include "rlvr/policy.hpp"

namespace rlvr {
namespace {

PromptSpec prompt_with(std::vector<Token> answer, PromptId id = 0) {
  PromptSpec p;
  p.prompt_id = id;
  p.answer = std::move(answer);
  return p;
}

PolicyParams random_params(std::size_t n, std::size_t t, std::size_t v, std::uint64_t seed) {
  PolicyParams p(n, t, v);
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  for (double& x : p.logits()) x = d(g);
  return p;
}

TEST(Sampling, UniformLogitsGiveUniformTokens) {
  PolicyParams params(1, 1, 4);
  const auto prompt = prompt_with({1, kEos});
  auto rng = rng_stream(11, 0, 0, 0);
  const int n = 100000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) {
    auto r = sample_response(params, prompt, rng);
    ASSERT_EQ(r.size(), 1u);
    ++counts[static_cast<std::size_t>(r.tokens[0])];
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) EXPECT_LT(std::abs(c - n * 0.25), 3 * sigma) << c;
}

TEST(Sampling, SaturatedLogitsReproduceTheAnswer) {
  PolicyParams params(1, 5, 6);
  const auto prompt = prompt_with({3, 5, 1, kEos});
  for (std::size_t t = 0; t < prompt.answer.size(); ++t)
    params.row(0, t)[static_cast<std::size_t>(prompt.answer[t])] = 1000.0;
  auto rng = rng_stream(1, 0, 0, 0);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_response(params, prompt, rng).tokens, prompt.answer);
}

TEST(Sampling, FixedStreamRepeats) {
  const auto params = random_params(1, 6, 5, 3);
  const auto prompt = prompt_with({1, kEos});
  auto a = rng_stream(5, 1, 0, 0);
  auto b = rng_stream(5, 1, 0, 0);
  for (int i = 0; i < 50; ++i) {
    const auto x = sample_response(params, prompt, a);
    const auto y = sample_response(params, prompt, b);
    EXPECT_EQ(x.tokens, y.tokens);
    EXPECT_EQ(x.behavior_logprobs, y.behavior_logprobs);
  }
}

TEST(Sampling, StopsAtEosOrLengthCap) {
  const auto params = random_params(1, 4, 3, 8);
  const auto prompt = prompt_with({1, kEos});
  auto rng = rng_stream(2, 0, 0, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto r = sample_response(params, prompt, rng);
    ASSERT_FALSE(r.tokens.empty());
    ASSERT_LE(r.size(), 4u);
    for (std::size_t t = 0; t + 1 < r.size(); ++t) EXPECT_NE(r.tokens[t], kEos);
    if (r.size() < 4) {
      EXPECT_EQ(r.tokens.back(), kEos);
    }
  }
}

TEST(Sampling, BehaviorLogprobsAreSelfConsistent) {
  const auto params = random_params(3, 6, 5, 9);
  for (PromptId p = 0; p < 3; ++p) {
    auto rng = rng_stream(4, 0, static_cast<std::uint64_t>(p), 0);
    for (int i = 0; i < 200; ++i) {
      const auto r = sample_response(params, prompt_with({1, kEos}, p), rng);
      EXPECT_EQ(logprob(params, p, r.tokens), r.behavior_logprobs);
    }
  }
}

TEST(Logprob, UniformLogits) {
  PolicyParams params(1, 3, 4);
  for (double lp : logprob(params, 0, std::vector<Token>{2, 1, 0}))
    EXPECT_NEAR(lp, std::log(0.25), 1e-15);
}

TEST(Logprob, TwoTokenVocab) {
  PolicyParams params(1, 1, 2);
  params.row(0, 0)[1] = std::log(3.0);
  EXPECT_NEAR(logprob(params, 0, std::vector<Token>{1})[0], std::log(0.75), 1e-15);
  EXPECT_NEAR(logprob(params, 0, std::vector<Token>{0})[0], std::log(0.25), 1e-15);
}

TEST(Logprob, RejectsOutOfRange) {
  PolicyParams params(2, 3, 4);
  EXPECT_THROW(logprob(params, 0, std::vector<Token>{4}), TokenOutOfRange);
  EXPECT_THROW(logprob(params, 0, std::vector<Token>{-1}), TokenOutOfRange);
  EXPECT_THROW(logprob(params, 2, std::vector<Token>{1}), TokenOutOfRange);
  EXPECT_THROW(logprob(params, 0, std::vector<Token>{1, 1, 1, 1}), TokenOutOfRange);
  EXPECT_THROW(grad_logprob(params, 0, std::vector<Token>{9}), TokenOutOfRange);
}

TEST(Softmax, SumsToOneEverywhere) {
  auto params = random_params(8, 6, 7, 21);
  for (double& x : params.logits()) x *= 30.0;
  std::vector<double> probs(7);
  for (std::size_t s = 0; s < params.num_slices(); ++s) {
    softmax(params.slice(s), probs);
    double sum = 0.0;
    for (double q : probs) sum += q;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(GradLogprob, UniformRow) {
  PolicyParams params(1, 1, 4);
  const auto g = grad_logprob(params, 0, std::vector<Token>{2});
  const std::array<double, 4> expected{-0.25, -0.25, 0.75, -0.25};
  for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(g.at(0, v), expected[v], 1e-15);
}

TEST(GradLogprob, RowsSumToZeroAndTouchOnlyVisitedSlices) {
  const auto params = random_params(4, 6, 5, 17);
  const std::vector<Token> tokens{3, 1, 4, 0};
  const auto g = grad_logprob(params, 2, tokens);
  EXPECT_EQ(g.rows().size(), tokens.size());
  for (const auto& [s, row] : g.rows()) {
    EXPECT_GE(s, params.slice_index(2, 0));
    EXPECT_LT(s, params.slice_index(2, tokens.size()));
    double sum = 0.0;
    for (double x : row) sum += x;
    EXPECT_NEAR(sum, 0.0, 1e-10);
  }
}

// Independent oracle: central differences of sum_t log pi(o_t) over every
// logit of the touched slices.
TEST(GradLogprob, MatchesFiniteDifferences) {
  std::mt19937_64 g(77);
  const double h = 1e-5;
  int pairs = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t vocab = 2 + g() % 6;
    const std::size_t max_len = 1 + g() % 5;
    auto params = random_params(2, max_len, vocab, g());
    const PromptId pid = static_cast<PromptId>(g() % 2);
    std::vector<Token> tokens(1 + g() % max_len);
    for (auto& t : tokens) t = static_cast<Token>(g() % vocab);
    const auto analytic = grad_logprob(params, pid, tokens);
    auto total = [&] {
      double s = 0.0;
      for (double x : logprob(params, pid, tokens)) s += x;
      return s;
    };
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      for (std::size_t v = 0; v < vocab; ++v) {
        double& x = params.row(pid, t)[v];
        const double saved = x;
        x = saved + h;
        const double up = total();
        x = saved - h;
        const double down = total();
        x = saved;
        const double fd = (up - down) / (2 * h);
        const double a = analytic.at(params.slice_index(pid, t), v);
        worst = std::max(worst, std::abs(a - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    ++pairs;
  }
  EXPECT_GE(pairs, 100);
  EXPECT_LT(worst, 1e-6);
}

TEST(InitialPolicy, CalibratedToDifficulty) {
  EnvConfig env;
  const auto dataset = make_dataset(env);
  const auto params = initial_policy(dataset, env);
  for (const auto& p : dataset)
    EXPECT_NEAR(success_probability(params, p), p.difficulty_seed, 1e-12) << p.prompt_id;
}

TEST(InitialPolicy, BiasForMassOracle) {
  for (double q : {0.1, 0.5, 0.9}) {
    for (std::size_t v : {2u, 4u, 8u}) {
      std::vector<double> row(v, 0.0);
      row[1] = bias_for_mass(q, v);
      EXPECT_NEAR(std::exp(log_softmax_at(row, 1)), q, 1e-13);
    }
  }
}

TEST(Optimizer, SgdIsPlainAscent) {
  auto params = random_params(1, 2, 3, 4);
  const auto before = params;
  const auto grad = grad_logprob(params, 0, std::vector<Token>{1, 2});
  Optimizer opt(OptimizerKind::sgd);
  opt.step(params, grad, 0.5);
  for (std::size_t i = 0; i < params.logits().size(); ++i) {
    const auto s = i / 3, v = i % 3;
    EXPECT_DOUBLE_EQ(params.logits()[i], before.logits()[i] + 0.5 * grad.at(s, v));
  }
}

TEST(Optimizer, RmspropFirstStepIsScaledSign) {
  auto params = random_params(1, 1, 3, 5);
  const auto before = params;
  const auto grad = grad_logprob(params, 0, std::vector<Token>{1});
  Optimizer opt(OptimizerKind::rmsprop, 0.99, 1e-8);
  opt.step(params, grad, 0.01);
  for (std::size_t v = 0; v < 3; ++v) {
    const double gv = grad.at(0, v);
    const double expected = 0.01 * gv / (std::sqrt(0.01 * gv * gv) + 1e-8);
    EXPECT_NEAR(params.logits()[v] - before.logits()[v], expected, 1e-15);
  }
}

TEST(ParamsDump, RoundTrips) {
  const auto params = random_params(3, 4, 5, 6);
  const auto path = (std::filesystem::temp_directory_path() / "rlvr_params_roundtrip.bin").string();
  save_params(params, path);
  EXPECT_EQ(std::filesystem::file_size(path), 3 * 8 + 3 * 4 * 5 * 8u);
  EXPECT_EQ(load_params(path), params);
  std::filesystem::remove(path);
  EXPECT_THROW(load_params(path), Error);
}

}  // namespace
}  // namespace rlvr
