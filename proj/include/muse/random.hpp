#pragma once
//
// Counter-based random streams.
//
// A Stream is identified by a 64-bit Philox key plus a 64-bit stream id. Draws
// walk a 64-bit block counter, so a stream never shares output with another
// stream unless their (key, id) pairs collide. Child streams are derived by
// encrypting the child index under the parent's key, which gives
//
//     derive_substream(seed, {a, b}) == Stream::root(seed).child(a).child(b)
//
// by construction. Replicate i of a batch always sees the same numbers no
// matter which thread runs it.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>

namespace muse {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., Random123).
constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += detail::kPhiloxW0;
            key[1] += detail::kPhiloxW1;
        }
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        detail::mulhilo32(detail::kPhiloxM0, ctr[0], hi0, lo0);
        detail::mulhilo32(detail::kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

struct StreamKey {
    PhiloxKey key{};
    std::uint64_t id = 0;

    friend constexpr bool operator==(const StreamKey&, const StreamKey&) = default;
};

class Stream {
public:
    using result_type = std::uint64_t;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Stream() : Stream(root(0)) {}

    static Stream root(std::uint64_t seed) {
        return Stream(StreamKey{{lo32(seed), hi32(seed)}, kRootId});
    }

    [[nodiscard]] Stream child(std::uint64_t index) const {
        const PhiloxKey k{key_.key[0] ^ kDeriveTweak0, key_.key[1] ^ kDeriveTweak1};
        const PhiloxBlock out =
            philox4x32_10({lo32(index), hi32(index), lo32(key_.id), hi32(key_.id)}, k);
        return Stream(StreamKey{{out[0], out[1]}, (static_cast<std::uint64_t>(out[3]) << 32) | out[2]});
    }

    [[nodiscard]] Stream child(std::span<const std::uint64_t> path) const {
        Stream s = *this;
        for (std::uint64_t p : path) s = s.child(p);
        return s;
    }

    [[nodiscard]] const StreamKey& key() const noexcept { return key_; }

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    result_type operator()() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // (0, 1]; safe for log().
    double uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

    // Standard normal via Box-Muller; draws come in pairs, the second is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Uniform integer in [0, n), n >= 1. Multiply-shift; bias below n / 2^64.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

private:
    static constexpr std::uint64_t kRootId = 0x6A09E667F3BCC908ull;
    static constexpr std::uint32_t kDeriveTweak0 = 0x243F6A88u;
    static constexpr std::uint32_t kDeriveTweak1 = 0x85A308D3u;

    explicit Stream(StreamKey key) : key_(key) {}

    static constexpr std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
    static constexpr std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

    void refill() {
        buf_ = philox4x32_10({lo32(block_), hi32(block_), lo32(key_.id), hi32(key_.id)}, key_.key);
        ++block_;
        pos_ = 0;
    }

    StreamKey key_;
    std::uint64_t block_ = 0;
    PhiloxBlock buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct SeedSpec {
    std::uint64_t master_seed = 0;

    [[nodiscard]] Stream root() const { return Stream::root(master_seed); }
};

inline Stream derive_substream(std::uint64_t master_seed, std::span<const std::uint64_t> path) {
    return Stream::root(master_seed).child(path);
}

inline Stream derive_substream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) {
    return derive_substream(master_seed, std::span<const std::uint64_t>(path.begin(), path.size()));
}

} // namespace muse
