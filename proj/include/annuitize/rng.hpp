#ifndef ANNUITIZE_RNG_HPP
#define ANNUITIZE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace annuitize {

/**
 * Counter-based RNG: Philox-4x32-10. Each (seed, stream) pair is an
 * independent substream indexed by a 128-bit counter, so path i draws the
 * same numbers under any threading layout.
 */
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream) : key0_(low(seed)), key1_(high(seed)) {
        ctr_[2] = low(stream);
        ctr_[3] = high(stream);
    }

    /// next uniform in (0, 1)
    double uniform() {
        if (idx_ == 4) refill();
        const std::uint32_t u = out_[idx_++];
        return (static_cast<double>(u) + 0.5) * 0x1p-32;
    }

    /// next standard normal (Box-Muller, pairs cached)
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// next exponential with given rate
    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    static constexpr std::uint32_t low(std::uint64_t v) {
        return static_cast<std::uint32_t>(v);
    }
    static constexpr std::uint32_t high(std::uint64_t v) {
        return static_cast<std::uint32_t>(v >> 32);
    }
    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                        std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    void refill() {
        std::uint32_t x0 = ctr_[0], x1 = ctr_[1], x2 = ctr_[2], x3 = ctr_[3];
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, x0, hi0, lo0);
            mulhilo(0xCD9E8D57u, x2, hi1, lo1);
            const std::uint32_t y0 = hi1 ^ x1 ^ k0;
            const std::uint32_t y1 = lo1;
            const std::uint32_t y2 = hi0 ^ x3 ^ k1;
            const std::uint32_t y3 = lo0;
            x0 = y0; x1 = y1; x2 = y2; x3 = y3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_[0] = x0; out_[1] = x1; out_[2] = x2; out_[3] = x3;
        if (++ctr_[0] == 0 && ++ctr_[1] == 0) ++ctr_[2];
        idx_ = 0;
    }

    std::uint32_t key0_, key1_;
    std::uint32_t ctr_[4] = {0, 0, 0, 0};
    std::uint32_t out_[4] = {0, 0, 0, 0};
    int idx_ = 4;
    double cached_ = 0;
    bool have_cached_ = false;
};

}  // namespace annuitize

#endif  // ANNUITIZE_RNG_HPP
