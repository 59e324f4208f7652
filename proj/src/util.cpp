#include "c2kit/util.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace c2kit {

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf.data(), 16);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    // splitmix64 finaliser over the mixed value
    std::uint64_t z = fnv1a(label) ^ (seed + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index needs n > 0");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

std::string trim_copy(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string line(text.substr(pos, eol - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        pos = eol + 1;
    }
    return lines;
}

std::vector<std::string> content_words(std::string_view text) {
    static const std::unordered_set<std::string> stop = {
        "a",    "an",   "the",  "and",  "or",   "but",  "of",    "in",   "on",   "at",   "to",    "for",
        "by",   "with", "from", "as",   "is",   "are",  "was",   "were", "be",   "been", "being", "it",
        "its",  "this", "that", "these","those","what", "which", "who",  "whom", "how",  "why",   "when",
        "where","do",   "does", "did",  "has",  "have", "had",   "i",    "you",  "he",   "she",   "they",
        "we",   "me",   "my",   "your", "our",  "their","them",  "his",  "her",  "about","into",  "any",
        "can",  "could","would","should","will","not",  "no",    "so",   "if",   "than", "then",  "there"};
    std::vector<std::string> words;
    std::string cur;
    const auto flush = [&] {
        if (!cur.empty() && !stop.count(cur)) words.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else {
            flush();
        }
    }
    flush();
    return words;
}

}  // namespace c2kit
