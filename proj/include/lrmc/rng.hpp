#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace lrmc {

/// Name recorded in output metadata next to every seed.
inline constexpr std::string_view kRngName = "philox4x32-10";

/// Counter-based Philox4x32-10 generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key and the 64-bit stream id occupies the upper
/// half of the counter, so `Philox4x32(seed, k)` for distinct `k` are
/// independent streams. Satisfies UniformRandomBitGenerator.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Skip `n` 32-bit outputs.
    void discard(std::uint64_t n) noexcept;

    /// One application of the 10-round bijection.
    static Block encrypt(Block counter, Key key) noexcept;

private:
    void refill() noexcept;

    Key key_;
    std::uint64_t block_index_ = 0;
    std::uint64_t stream_;
    Block buffer_{};
    unsigned pos_ = 4;
};

/// Derives a child seed for sub-task `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

} // namespace lrmc
