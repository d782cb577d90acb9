#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace smokeynet {

/// Derives independent, reproducible seeds from one root seed.
///
/// Each consumer (data order, augmentation, weight init, ...) asks for a
/// named stream; the same (root, name, index) always yields the same seed.
class SeedStreams {
public:
    explicit SeedStreams(std::uint64_t root) : root_(root) {}

    std::uint64_t root() const { return root_; }

    std::uint64_t seed(std::string_view name, std::uint64_t index = 0) const {
        // FNV-1a over the stream name, then mixed with root and index.
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return mix(mix(root_ ^ h) + index);
    }

    std::mt19937_64 engine(std::string_view name, std::uint64_t index = 0) const {
        return std::mt19937_64(seed(name, index));
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t root_;
};

}  // namespace smokeynet
