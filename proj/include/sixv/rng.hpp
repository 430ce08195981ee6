#pragma once

// Counter-based RNG (Philox4x32-10, Salmon et al. SC 2011).
//
// Every draw is a pure function of (seed, stream, t, y, purpose, slot).
// This is what makes the samplers reproducible and lets coupled
// experiments (e.g. two window cutoffs, or sequential vs parallel
// updates) consume literally the same Bernoulli driver family.

#include <cstdint>
#include <array>

namespace sixv {

namespace detail {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void philox_round(uint32_t ctr[4], const uint32_t key[2]) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM4x32A) * ctr[0];
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM4x32B) * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    const uint32_t r0 = hi1 ^ ctr[1] ^ key[0];
    const uint32_t r1 = lo1;
    const uint32_t r2 = hi0 ^ ctr[3] ^ key[1];
    const uint32_t r3 = lo0;
    ctr[0] = r0; ctr[1] = r1; ctr[2] = r2; ctr[3] = r3;
}

inline std::array<uint32_t, 4> philox10(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr.data(), key.data());
        key[0] += kPhiloxW32A;
        key[1] += kPhiloxW32B;
    }
    return ctr;
}

// 64 -> 64 bit mixer, used to fold (seed, stream) into a Philox key.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

// Purpose tags keep driver families independent of each other.
enum class Draw : uint32_t {
    WakeB = 1,      // B(t,y;eta)   ~ Ber(1 - b1^eta)
    FlightB = 2,    // B'(t,y;eta)  ~ Ber(b2^(1-eta))
    InitOcc = 3,    // initial condition occupancy
    GibbsVertex = 4,
    GibbsBoundary = 5,
    Generic = 6,
};

class CounterRng {
public:
    CounterRng() : CounterRng(0, 0) {}
    CounterRng(uint64_t seed, uint64_t stream) {
        const uint64_t k = detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632BE59BD9B4E019ull));
        key_[0] = static_cast<uint32_t>(k);
        key_[1] = static_cast<uint32_t>(k >> 32);
    }

    // One uniform in [0,1) addressed by (t, y, purpose). y may be negative.
    double uniform(int64_t t, int64_t y, Draw purpose, uint32_t slot = 0) const {
        std::array<uint32_t, 4> ctr = {
            static_cast<uint32_t>(static_cast<uint64_t>(t)),
            static_cast<uint32_t>(static_cast<uint64_t>(y)),
            static_cast<uint32_t>(static_cast<uint64_t>(y) >> 32) ^ (static_cast<uint32_t>(purpose) << 8),
            slot ^ (static_cast<uint32_t>(static_cast<uint64_t>(t) >> 32) << 4),
        };
        const auto out = detail::philox10(ctr, key_);
        const uint64_t bits = (static_cast<uint64_t>(out[0]) << 32) | out[1];
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p, int64_t t, int64_t y, Draw purpose, uint32_t slot = 0) const {
        return uniform(t, y, purpose, slot) < p;
    }

private:
    std::array<uint32_t, 2> key_;
};

// Stream-splitting for replicas: replica r of a run with master seed s
// uses CounterRng(s, r). Distinct replicas never share a key.
inline CounterRng replica_rng(uint64_t seed, uint64_t replica) { return CounterRng(seed, replica); }

} // namespace sixv
