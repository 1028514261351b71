#pragma once

#include <cstdint>
#include <random>

namespace skyherd {

// MT19937-64 is fully specified by the standard; the distributions are not,
// so the helpers below do their own integer/real conversion to keep streams
// identical across standard libraries.
using Rng = std::mt19937_64;

// SplitMix64 finaliser over (master, stream). Used to give every episode,
// fold, or step its own independent generator.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

Rng make_rng(std::uint64_t master, std::uint64_t stream);

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform integer in [0, bound). bound must be > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

double uniform_real(Rng& rng, double lo, double hi);

}  // namespace skyherd
