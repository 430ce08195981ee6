#pragma once

// Particle dynamics of the stochastic six vertex model on finite
// windows: sequential (particle-wise) and parallel (column-wise) update
// forms, the height function N(t,x), stationary boundary data, and the
// left-cutoff bound for approximating the bi-infinite process.
//
// Sign conventions, fixed once: spatial increments N(t,y) - N(t,y-1) =
// eta(t,y) in {0,1}; a particle crossing column y during step t
// decrements, N(t,y) - N(t+1,y) in {0,1}. Both update forms consume the
// same keyed driver family {B(t,y), B'(t,y)}, so coupled runs agree
// pathwise, not just in law.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "params.hpp"
#include "rng.hpp"

namespace sixv {

// Flux h(v): the probability that a particle crosses a given column per
// step when the occupancies are Bernoulli(v). Solves the crossing
// balance h (1-v)(1-b2) = (1-h) v (1-b1), i.e.
//   v/(1-v) (1-b1) = h/(1-h) (1-b2).
// This is the unique flux the sequential rules preserve (checked by
// direct simulation at the per-mille level); note the printed form of
// the density relation circulates with b1 and b2 interchanged.
inline double stationary_h(double v, const ModelParams& p) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("stationary_h: v outside [0,1]");
    const double num = v * (1.0 - p.b1);
    return num / (num + (1.0 - v) * (1.0 - p.b2));
}

enum class BoundaryPolicy {
    Vacuum,           // nothing outside the window, ever
    LeftFiniteCutoff, // window approximates a bi-infinite configuration; sites < a vacant
    BernoulliInject,  // horizontal lines enter at the left edge with the stationary flux
};

enum class RightEdge {
    AutoExtend,  // window grows when a particle flies past the right edge
    Absorb,      // fliers past the right edge are dropped; exact for observables <= b
};

struct InitialCondition {
    enum class Kind { Step, Bernoulli, Explicit };
    Kind kind = Kind::Bernoulli;
    double v = 0.5;                  // Bernoulli density
    std::vector<uint8_t> table;      // Explicit occupancies
    int64_t table_left = 0;

    static InitialCondition step() { return {Kind::Step, 0.0, {}, 0}; }
    static InitialCondition bernoulli(double v) { return {Kind::Bernoulli, v, {}, 0}; }
    static InitialCondition explicit_occ(int64_t left, std::vector<uint8_t> occ) {
        return {Kind::Explicit, 0.0, std::move(occ), left};
    }
};

// Height field on a window [a, b]: occupancies plus the height table
// N(t, y), maintained incrementally (one decrement per crossing).
class HeightField {
public:
    HeightField() = default;

    static HeightField from_initial(const InitialCondition& ic, int64_t a, int64_t b,
                                    const CounterRng& rng, BoundaryPolicy policy,
                                    RightEdge right = RightEdge::AutoExtend) {
        if (b < a) throw std::invalid_argument("height field: empty window");
        HeightField f;
        f.a_ = a;
        f.policy_ = policy;
        f.right_ = right;
        f.occ_.resize(static_cast<std::size_t>(b - a + 1), 0);
        switch (ic.kind) {
            case InitialCondition::Kind::Step:
                for (int64_t y = a; y <= b; ++y) f.occ_ref(y) = y >= 1 ? 1 : 0;
                break;
            case InitialCondition::Kind::Bernoulli:
                for (int64_t y = a; y <= b; ++y)
                    f.occ_ref(y) = rng.bernoulli(ic.v, -1, y, Draw::InitOcc) ? 1 : 0;
                f.v_ = ic.v;
                break;
            case InitialCondition::Kind::Explicit: {
                if (ic.table_left != a ||
                    ic.table.size() != static_cast<std::size_t>(b - a + 1))
                    throw std::invalid_argument("height field: explicit table does not fit window");
                f.occ_ = ic.table;
                break;
            }
        }
        // normalization N(0,0) = 0 when the origin is inside; otherwise
        // N(0, a-1) = 0.
        int64_t base = 0;
        if (a <= 0) {
            for (int64_t y = a; y <= std::min<int64_t>(0, b); ++y) base -= f.occ_ref(y);
        }
        f.base_ = base;
        f.n_.resize(f.occ_.size());
        int64_t acc = base;
        for (std::size_t i = 0; i < f.occ_.size(); ++i) {
            acc += f.occ_[i];
            f.n_[i] = acc;
        }
        return f;
    }

    int64_t t() const { return t_; }
    int64_t left() const { return a_; }
    int64_t right() const { return a_ + static_cast<int64_t>(occ_.size()) - 1; }
    int escaped() const { return escaped_; }
    BoundaryPolicy policy() const { return policy_; }

    uint8_t occupancy(int64_t y) const {
        if (y < a_) return 0;  // vacuum / cutoff convention
        if (y > right()) {
            if (right_ == RightEdge::Absorb)
                throw std::out_of_range("occupancy beyond absorbing edge");
            return 0;
        }
        return occ_[static_cast<std::size_t>(y - a_)];
    }

    // N(t, y); constant below the window under vacuum/cutoff boundaries.
    int64_t height(int64_t y) const {
        if (y < a_) return base_;
        if (y > right()) throw std::out_of_range("height beyond window");
        return n_[static_cast<std::size_t>(y - a_)];
    }

    // prefix table over [a-1, b]
    std::vector<int64_t> height_table() const {
        std::vector<int64_t> out;
        out.reserve(n_.size() + 1);
        out.push_back(base_);
        out.insert(out.end(), n_.begin(), n_.end());
        return out;
    }

    std::vector<int64_t> particle_positions() const {
        std::vector<int64_t> xs;
        for (int64_t y = a_; y <= right(); ++y)
            if (occupancy(y)) xs.push_back(y);
        return xs;
    }

    // One parallel update consuming the keyed driver family. Returns the
    // number of columns whose height decremented.
    int parallel_step(const ModelParams& p, const CounterRng& rng, int64_t extend_cap = 1 << 20) {
        bool carry = false;
        if (policy_ == BoundaryPolicy::BernoulliInject) {
            const double h = stationary_h(v_, p);
            carry = rng.bernoulli(h, t_, a_ - 1, Draw::FlightB);
            if (carry) --base_;  // crossing at column a-1
        }
        const int64_t n_right_pre = n_.empty() ? base_ : n_.back();
        int crossings = 0;
        for (std::size_t i = 0; i < occ_.size(); ++i) {
            const int64_t y = a_ + static_cast<int64_t>(i);
            const bool occupied = occ_[i] != 0;
            bool crossing;
            if (carry)
                crossing = occupied ? true : rng.bernoulli(p.b2, t_, y, Draw::FlightB);
            else
                crossing = occupied ? rng.bernoulli(1.0 - p.b1, t_, y, Draw::WakeB) : false;
            occ_[i] = static_cast<uint8_t>((occupied ? 1 : 0) + (carry ? 1 : 0) -
                                           (crossing ? 1 : 0));
            if (crossing) {
                --n_[i];
                ++crossings;
            }
            carry = crossing;
        }
        if (carry) {
            if (right_ == RightEdge::Absorb) {
                ++escaped_;
            } else {
                while (carry) {
                    if (static_cast<int64_t>(occ_.size()) >= extend_cap)
                        throw std::runtime_error("window overflow: right extension exceeded cap");
                    const int64_t y = right() + 1;
                    const bool crossing = rng.bernoulli(p.b2, t_, y, Draw::FlightB);
                    occ_.push_back(crossing ? 0 : 1);
                    n_.push_back(crossing ? n_right_pre - 1 : n_right_pre);
                    carry = crossing;
                    if (crossing) ++crossings;
                }
            }
        }
        ++t_;
        return crossings;
    }

private:
    uint8_t& occ_ref(int64_t y) { return occ_[static_cast<std::size_t>(y - a_)]; }

    int64_t a_ = 0;
    int64_t t_ = 0;
    int64_t base_ = 0;
    std::vector<uint8_t> occ_;
    std::vector<int64_t> n_;
    BoundaryPolicy policy_ = BoundaryPolicy::Vacuum;
    RightEdge right_ = RightEdge::AutoExtend;
    double v_ = 0.5;
    int escaped_ = 0;
};

// Sequential (particle-wise) update of an ordered configuration,
// consuming the *same* driver draws as HeightField::parallel_step: wake
// at the particle's column, flight continuation at each column crossed.
inline void sequential_step(std::vector<int64_t>& xs, const ModelParams& p, const CounterRng& rng,
                            int64_t t, int64_t flight_cap = 4096) {
    const std::size_t n = xs.size();
    for (std::size_t i = 0; i < n; ++i) {
        const int64_t x = xs[i];
        const bool pushed = (i > 0 && xs[i - 1] == x);
        const bool moves = pushed ? true : rng.bernoulli(1.0 - p.b1, t, x, Draw::WakeB);
        if (!moves) continue;
        int64_t z = x + 1;
        while (true) {
            if (i + 1 < n && z == xs[i + 1]) break;  // collision: stop here, push the next one
            if (!rng.bernoulli(p.b2, t, z, Draw::FlightB)) break;
            ++z;
            if (z - x > flight_cap)
                throw std::runtime_error("window overflow: flight exceeded cap");
        }
        xs[i] = z;
    }
    for (std::size_t i = 1; i < n; ++i)
        if (xs[i - 1] == xs[i]) throw std::logic_error("sequential_step: order violated");
}

// Left cutoff for approximating the bi-infinite process: influence from
// sites left of the returned edge reaches the observation window within
// t_max steps with probability < tol.
//
// A disturbance advances one site per step plus a geometric run: flights
// continue across vacant sites with probability b2 and across occupied
// sites with probability 1 (push chains), so under site density d the
// per-site run-continuation rate is gamma = d + (1-d) b2. The total
// excess over t steps is negative binomial NB(t, gamma); the one-jump
// union bound undercounts push chains and fails coupling experiments.
inline int64_t window_truncation(int64_t t_max, int64_t observation_left, double tol,
                                 const ModelParams& p, double run_density = 0.5) {
    if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("window_truncation: tol in (0,1)");
    if (t_max < 0) throw std::invalid_argument("window_truncation: negative horizon");
    if (!(run_density >= 0.0 && run_density <= 1.0))
        throw std::invalid_argument("window_truncation: density outside [0,1]");
    if (t_max == 0) return observation_left;
    const double gamma = std::min(0.999, run_density + (1.0 - run_density) * p.b2);
    // accumulate the NB(t, gamma) pmf until the tail drops below tol
    const double lg = std::log(gamma), l1g = std::log(1.0 - gamma);
    double log_pmf = static_cast<double>(t_max) * l1g;  // j = 0 term
    double tail = 1.0 - std::exp(log_pmf);
    int64_t j = 0;
    while (tail >= tol) {
        ++j;
        if (j > 2000000) throw std::runtime_error("window_truncation: tail summation overflow");
        // pmf(j)/pmf(j-1) = gamma (j + t - 1)/j
        log_pmf += lg + std::log((static_cast<double>(j + t_max) - 1.0) / static_cast<double>(j));
        tail -= std::exp(log_pmf);
    }
    const int64_t distance = t_max + j + 1;
    return observation_left - distance;
}

} // namespace sixv
