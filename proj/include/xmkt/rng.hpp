#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace xmkt::rng {

using Engine = std::mt19937_64;

/// Derives an independent sub-seed from a root seed, a named stream
/// ("synth", "screening", "model", "randomization", ...) and integer keys.
std::uint64_t derive(std::uint64_t root, std::string_view stream,
                     std::initializer_list<std::uint64_t> keys = {});

inline Engine engine(std::uint64_t root, std::string_view stream,
                     std::initializer_list<std::uint64_t> keys = {}) {
  return Engine(derive(root, stream, keys));
}

}  // namespace xmkt::rng
