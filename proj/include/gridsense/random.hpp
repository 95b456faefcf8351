#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace gridsense {

/// Independent generator for one (seed, key...) coordinate. Every Monte Carlo
/// unit derives its own stream, so results do not depend on execution order.
inline std::mt19937_64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (std::uint64_t k : keys) {
    material.push_back(static_cast<std::uint32_t>(k));
    material.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(material.begin(), material.end());
  return std::mt19937_64(seq);
}

}  // namespace gridsense
