// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace uiinstruct {

/// Seeded random stream with platform-independent draws. The standard
/// distributions are implementation-defined, so bounded draws and shuffles
/// are done here on top of the fully specified mt19937_64 engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for one unit of work, derived from a global seed and labels
  /// (e.g. screen id and sample kind). Independent of scheduling order.
  static Rng derive(std::uint64_t seed, std::string_view a, std::string_view b = {});

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n). n must be positive.
  std::uint64_t uniform(std::uint64_t n);

  bool coin() { return (next() >> 63) != 0; }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uiinstruct
