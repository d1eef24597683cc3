#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace rlvr {

/// What a stream is used for. Part of the key, so two consumers at the same
/// (step, prompt, stage) never share draws.
enum class Purpose : std::uint64_t {
  rollout = 1,
  reuse = 2,
  shuffle = 3,
  eval = 4,
  dataset = 5,
};

using Stream = std::mt19937_64;

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t step,
                                   std::uint64_t prompt_id, std::uint64_t stage,
                                   Purpose purpose) noexcept {
  std::uint64_t h = detail::mix64(seed);
  h = detail::mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = detail::mix64(h ^ step);
  h = detail::mix64(h ^ prompt_id);
  h = detail::mix64(h ^ stage);
  return h;
}

/// Independent stream keyed by its coordinates rather than by draw order, so
/// rollout results do not depend on how prompts are scheduled over workers.
inline Stream rng_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t prompt_id,
                         std::uint64_t stage, Purpose purpose = Purpose::rollout) {
  return Stream{stream_key(seed, step, prompt_id, stage, purpose)};
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Stream& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Stream& g, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(g) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

template <typename T>
void shuffle(std::span<T> v, Stream& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(g, i);
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace rlvr
