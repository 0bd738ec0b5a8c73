#include "lrmc/rng.hpp"

namespace lrmc {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

Philox4x32::Block Philox4x32::encrypt(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

void Philox4x32::refill() noexcept {
    const Block ctr{static_cast<std::uint32_t>(block_index_),
                    static_cast<std::uint32_t>(block_index_ >> 32),
                    static_cast<std::uint32_t>(stream_),
                    static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = encrypt(ctr, key_);
    ++block_index_;
    pos_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() noexcept {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
}

void Philox4x32::discard(std::uint64_t n) noexcept {
    const std::uint64_t available = 4 - pos_;
    if (n <= available) {
        pos_ += static_cast<unsigned>(n);
        return;
    }
    n -= available;
    block_index_ += n / 4;
    refill();
    pos_ = static_cast<unsigned>(n % 4);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    // Stream 2^63 is reserved for seed derivation so it never collides with
    // the data streams a run draws from directly.
    const Philox4x32::Block out = Philox4x32::encrypt(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u, 0x80000000u},
        {static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32)});
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

} // namespace lrmc
