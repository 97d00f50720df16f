// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/rng.hpp"

#include <limits>
#include <stdexcept>

#include "uiinstruct/text.hpp"

namespace uiinstruct {

Rng Rng::derive(std::uint64_t seed, std::string_view a, std::string_view b) {
  std::uint64_t h = text::fnv1a64(text::hex64(seed));
  h = text::fnv1a64(std::string_view("\x1f", 1), h);
  h = text::fnv1a64(a, h);
  h = text::fnv1a64(std::string_view("\x1f", 1), h);
  h = text::fnv1a64(b, h);
  return Rng(h);
}

std::uint64_t Rng::uniform(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::uniform needs a positive bound");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

}  // namespace uiinstruct
