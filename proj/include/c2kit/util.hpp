#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace c2kit {

/// 64-bit FNV-1a. Stable across platforms and processes.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// Child seed for a named sub-stream (e.g. per query id).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// mt19937_64 with a portable bounded draw. std::uniform_int_distribution is
/// implementation-defined, which would break cross-platform fixture equality.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

std::string trim_copy(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

/// Lowercased alphanumeric tokens with stopwords removed.
std::vector<std::string> content_words(std::string_view text);

}  // namespace c2kit
