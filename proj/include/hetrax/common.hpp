#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hetrax {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Raised for invalid inputs, contract violations and infeasible requests.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG helpers.
//
// std::uniform_int_distribution and std::shuffle are implementation-defined,
// so archives would differ between standard libraries. Rng is a self-contained
// xoshiro256** generator with its own range reduction and shuffle.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Uniform double in [0, 1).
    double unit();

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_[4];
};

/// 64-bit FNV-1a over raw bytes; stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Shortest round-trippable decimal text for a double ("%.17g").
std::string format_double(double v);

}  // namespace hetrax
