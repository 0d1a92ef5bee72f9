#pragma once

#include <cmath>
#include <cstdint>

namespace pathmc {

// Counter-based random stream (Philox-style 2x64 bijection, 10 rounds).
//
// Every 128-bit output block is a pure function of (seed, replica, substream,
// block index), so replica streams are independent of evaluation order and of
// how replicas are sharded across workers.  That property is what makes every
// estimator in this library bitwise reproducible for a fixed seed no matter
// how many threads run it.  Substreams decouple draws used for different
// purposes within one replica (e.g. path increments vs. thinning decisions),
// so a consumer may interleave them freely without perturbing either stream.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t replica, uint64_t substream = 0) noexcept
        : key_(seed), hi_(replica), base_(substream << 56), block_(0) {}

    uint64_t next_u64() noexcept {
        if (avail_ == 0) refill();
        return buf_[--avail_];
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second variate of each pair is
    // cached, so draws come in deterministic stream order.
    double normal() noexcept {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] so the log is finite; u2 in [0, 1).
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        cached_ = rad * std::sin(ang);
        have_cached_ = true;
        return rad * std::cos(ang);
    }

private:
    static constexpr uint64_t kMul = 0xD2B74407B1CE6E93ULL;
    static constexpr uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

    void refill() noexcept {
        uint64_t c0 = base_ | block_;
        uint64_t c1 = hi_;
        uint64_t k = key_;
        for (int r = 0; r < 10; ++r) {
            const unsigned __int128 prod =
                static_cast<unsigned __int128>(kMul) * c0;
            const uint64_t lo = static_cast<uint64_t>(prod);
            const uint64_t hi = static_cast<uint64_t>(prod >> 64);
            c0 = hi ^ k ^ c1;
            c1 = lo;
            k += kWeyl;
        }
        buf_[0] = c0;
        buf_[1] = c1;
        avail_ = 2;
        ++block_;
    }

    uint64_t key_;
    uint64_t hi_;
    uint64_t base_;
    uint64_t block_;
    uint64_t buf_[2] = {0, 0};
    int avail_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace pathmc
