#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace msd {

// Portable helpers on top of mt19937_64 (whose output sequence is fixed by
// the standard). The std distributions are implementation-defined, so seeded
// runs would differ between standard libraries if we used them.
using Rng = std::mt19937_64;

double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);  // in [0, n)
double standard_normal(Rng& rng);

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace msd
