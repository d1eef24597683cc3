#include <gtest/gtest.h>

#include <random>

#include "rlvr/verifier.hpp"

namespace rlvr {
namespace {

Response response_of(std::vector<Token> tokens) {
  Response r;
  r.tokens = std::move(tokens);
  r.reward = -7;
  return r;
}

PromptSpec prompt_of(std::vector<Token> answer) {
  PromptSpec p;
  p.answer = std::move(answer);
  return p;
}

TEST(Verifier, ExactMatchScoresOne) {
  auto r = response_of({2, 3, kEos});
  EXPECT_EQ(verify({}, prompt_of({2, 3, kEos}), r), 1);
  EXPECT_EQ(r.reward, 1);
}

TEST(Verifier, SubstitutionScoresZero) {
  auto r = response_of({2, 4, kEos});
  EXPECT_EQ(verify({}, prompt_of({2, 3, kEos}), r), 0);
  EXPECT_EQ(r.reward, 0);
}

TEST(Verifier, TruncatedPrefixScoresZero) {
  // Hit the length cap with the right prefix but no EOS.
  auto r = response_of({2, 3});
  EXPECT_EQ(verify({}, prompt_of({2, 3, kEos}), r), 0);
  auto longer = response_of({2, 3, 1});
  EXPECT_EQ(verify({}, prompt_of({2, 3, kEos}), longer), 0);
}

TEST(Verifier, EarlyEosScoresZero) {
  auto r = response_of({kEos});
  EXPECT_EQ(verify({}, prompt_of({2, kEos}), r), 0);
}

TEST(Verifier, PureAndBinary) {
  std::mt19937_64 g(3);
  for (int i = 0; i < 10000; ++i) {
    std::vector<Token> a(1 + g() % 4), b(1 + g() % 4);
    for (auto& t : a) t = static_cast<Token>(g() % 3);
    for (auto& t : b) t = static_cast<Token>(g() % 3);
    const auto prompt = prompt_of(a);
    auto r1 = response_of(b);
    auto r2 = response_of(b);
    const int x = verify({}, prompt, r1);
    const int y = verify({}, prompt, r2);
    ASSERT_EQ(x, y);
    ASSERT_TRUE(x == 0 || x == 1);
    ASSERT_EQ(x, a == b ? 1 : 0);
  }
}

}  // namespace
}  // namespace rlvr
