#ifndef T1T2_RNG_HPP
#define T1T2_RNG_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "t1t2/tensor.hpp"

namespace t1t2 {

// Counter-based stream (Philox4x32-10). A draw is a pure function of
// (seed, stream id, block counter), so the same stream replays bit-identically
// across runs and thread schedules. Streams are single-owner: never share one
// instance across threads.
class RngStream {
  public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t block_index() const { return block_; }

    std::uint64_t next_u64();
    double uniform01();                           // [0, 1)
    std::uint64_t uniform_below(std::uint64_t n); // unbiased in [0, n)
    double normal();                              // standard normal (Box-Muller)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::array<std::uint32_t, 4> next_block();

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t block_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// i.i.d. standard normal draws, row-major fill; advances the stream.
Tensor gaussian(RngStream& rng, std::vector<std::size_t> shape);

// Stable stream-id derivation: one 32-bit purpose tag, one 32-bit index
// (epoch, grid cell, ...). Keeps purposes from colliding.
constexpr std::uint64_t stream_id(std::uint32_t purpose, std::uint32_t index = 0) {
    return (static_cast<std::uint64_t>(purpose) << 32) | index;
}

namespace streams {
constexpr std::uint32_t init = 1;
constexpr std::uint32_t noise = 2;
constexpr std::uint32_t shuffle_t1 = 3;
constexpr std::uint32_t shuffle_t2 = 4;
constexpr std::uint32_t split = 5;
constexpr std::uint32_t synth = 6;
}  // namespace streams

}  // namespace t1t2

#endif
