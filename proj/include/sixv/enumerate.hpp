#pragma once

// Exhaustive small-system oracles.
//
// ParticleEnumerator expands the sequential update rules for an ordered
// k-particle configuration on Z; geometric flight tails are cut once a
// branch drops below `tail_cut` and the dropped mass is tracked.
//
// DriverEnumerator expands every Bernoulli driver outcome of the
// parallel height-function update on a finite window. Influence never
// travels leftward, so dropping particles that fly past the right edge
// keeps the law of everything on the window exact; total probability
// still sums to one.

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "params.hpp"

namespace sixv {

using ParticleConfig = std::vector<int64_t>;  // strictly increasing

class ParticleEnumerator {
public:
    ParticleEnumerator(const ModelParams& p, ParticleConfig initial, double tail_cut = 1e-16)
        : p_(p), tail_cut_(tail_cut) {
        for (std::size_t i = 1; i < initial.size(); ++i)
            if (initial[i] <= initial[i - 1])
                throw std::invalid_argument("particle configuration must be strictly increasing");
        dist_[initial] = 1.0;
    }

    void step() {
        std::map<ParticleConfig, double> next;
        for (const auto& [cfg, prob] : dist_) expand(cfg, prob, next);
        dist_ = std::move(next);
        ++t_;
    }

    void run(int steps) {
        for (int s = 0; s < steps; ++s) step();
    }

    const std::map<ParticleConfig, double>& distribution() const { return dist_; }
    double probability_of(const ParticleConfig& cfg) const {
        auto it = dist_.find(cfg);
        return it == dist_.end() ? 0.0 : it->second;
    }
    double dropped_mass() const { return dropped_; }
    int time() const { return t_; }

    // Reversed-model distribution: reflect, run forward, reflect back.
    static std::map<ParticleConfig, double> reversed_distribution(const ModelParams& p,
                                                                  const ParticleConfig& from,
                                                                  int steps,
                                                                  double tail_cut = 1e-16) {
        ParticleEnumerator fwd(p, reflect(from), tail_cut);
        fwd.run(steps);
        std::map<ParticleConfig, double> out;
        for (const auto& [cfg, prob] : fwd.distribution()) out[reflect(cfg)] += prob;
        return out;
    }

    static ParticleConfig reflect(const ParticleConfig& c) {
        ParticleConfig r(c.rbegin(), c.rend());
        for (auto& x : r) x = -x;
        return r;
    }

private:
    void expand(const ParticleConfig& cfg, double prob, std::map<ParticleConfig, double>& out) {
        ParticleConfig updated(cfg.size(), 0);
        expand_particle(cfg, updated, 0, prob, out);
    }

    // Recursive per-particle expansion; `i` is the particle being moved,
    // positions of particles < i are already updated.
    void expand_particle(const ParticleConfig& cfg, ParticleConfig& updated, std::size_t i,
                         double prob, std::map<ParticleConfig, double>& out) {
        if (prob < tail_cut_) { dropped_ += prob; return; }
        if (i == cfg.size()) { out[updated] += prob; return; }
        const int64_t x = cfg[i];
        const bool pushed = (i > 0 && updated[i - 1] == x);
        const int64_t gap = (i + 1 < cfg.size()) ? cfg[i + 1] - x
                                                 : std::numeric_limits<int64_t>::max();
        const double b1 = p_.b1, b2 = p_.b2;

        if (!pushed) {
            updated[i] = x;
            expand_particle(cfg, updated, i + 1, prob * b1, out);
        }
        // moving branches
        const double start = pushed ? 1.0 : (1.0 - b1);
        double geo = start;  // start * b2^(j-1)
        for (int64_t j = 1;; ++j) {
            if (gap != std::numeric_limits<int64_t>::max() && j == gap) {
                updated[i] = x + j;  // lands on the next particle, which is then pushed
                expand_particle(cfg, updated, i + 1, prob * geo, out);
                break;
            }
            updated[i] = x + j;
            expand_particle(cfg, updated, i + 1, prob * geo * (1.0 - b2), out);
            geo *= b2;
            if (prob * geo < tail_cut_) { dropped_ += prob * geo; break; }
        }
    }

    ModelParams p_;
    double tail_cut_;
    std::map<ParticleConfig, double> dist_;
    double dropped_ = 0.0;
    int t_ = 0;
};

// ---------------------------------------------------------------------------

// Terminal data of one driver outcome on the window [a, b].
struct WindowOutcome {
    double prob = 0.0;
    std::vector<uint8_t> occ;    // eta(t, y), y in [a, b]
    std::vector<int> crossings;  // N(0, y) - N(t, y), cumulative, y in [a, b]
    int escaped = 0;             // particles that flew past b
};

class DriverEnumerator {
public:
    static constexpr int kMaxSites = 48;
    static constexpr int kMaxSteps = 8;

    DriverEnumerator(const ModelParams& p, int64_t a, std::vector<uint8_t> occ0)
        : p_(p), a_(a), width_(static_cast<int>(occ0.size())), occ0_(occ0) {
        if (width_ <= 0 || width_ > kMaxSites)
            throw std::invalid_argument("driver enumeration window out of range");
        State s;
        s.occ = occ0;
        s.cross.assign(occ0.size(), 0);
        s.escaped = 0;
        dist_[s] = 1.0;
    }

    void step() {
        if (t_ >= kMaxSteps) throw std::runtime_error("driver enumeration step cap exceeded");
        std::map<State, double> next;
        for (const auto& [st, prob] : dist_) expand(st, prob, next);
        dist_ = std::move(next);
        ++t_;
    }

    void run(int steps) {
        for (int s = 0; s < steps; ++s) step();
    }

    std::vector<WindowOutcome> outcomes() const {
        std::vector<WindowOutcome> v;
        v.reserve(dist_.size());
        for (const auto& [st, prob] : dist_)
            v.push_back(WindowOutcome{prob, st.occ, st.cross, st.escaped});
        return v;
    }

    int64_t left_edge() const { return a_; }
    int width() const { return width_; }
    int time() const { return t_; }
    const std::vector<uint8_t>& initial_occupancy() const { return occ0_; }

    // N(0, y) for y in [a, b], normalized to N(0, a-1) = 0.
    std::vector<int> initial_heights() const {
        std::vector<int> n(occ0_.size());
        int acc = 0;
        for (std::size_t i = 0; i < occ0_.size(); ++i) {
            acc += occ0_[i];
            n[i] = acc;
        }
        return n;
    }

private:
    struct State {
        std::vector<uint8_t> occ;
        std::vector<int> cross;
        int escaped;
        bool operator<(const State& o) const {
            if (occ != o.occ) return occ < o.occ;
            if (cross != o.cross) return cross < o.cross;
            return escaped < o.escaped;
        }
    };

    void expand(const State& st, double prob, std::map<State, double>& out) const {
        // depth-first over columns with the in-flight carry bit
        struct Frame { State s; double p; int col; bool carry; };
        std::vector<Frame> stack;
        stack.push_back({st, prob, 0, false});
        while (!stack.empty()) {
            Frame f = std::move(stack.back());
            stack.pop_back();
            if (f.col == width_) {
                State done = std::move(f.s);
                if (f.carry) ++done.escaped;  // particle flies past b; irrelevant on [a,b]
                out[done] += f.p;
                continue;
            }
            const int y = f.col;
            const bool occupied = f.s.occ[static_cast<std::size_t>(y)] != 0;
            auto push_branch = [&](bool crossing, double q) {
                if (q == 0.0) return;
                Frame nf = f;
                nf.p = f.p * q;
                // eta'(y) = eta(y) + c(y-1) - c(y)
                nf.s.occ[static_cast<std::size_t>(y)] = static_cast<uint8_t>(
                    (occupied ? 1 : 0) + (f.carry ? 1 : 0) - (crossing ? 1 : 0));
                if (crossing) nf.s.cross[static_cast<std::size_t>(y)] += 1;
                nf.carry = crossing;
                nf.col = y + 1;
                stack.push_back(std::move(nf));
            };
            if (!f.carry) {
                if (occupied) {  // B(t,y;1) ~ Ber(1-b1)
                    push_branch(true, 1.0 - p_.b1);
                    push_branch(false, p_.b1);
                } else {
                    push_branch(false, 1.0);
                }
            } else {
                if (occupied) {  // B'(t,y;1) ~ Ber(1): forced move
                    push_branch(true, 1.0);
                } else {  // B'(t,y;0) ~ Ber(b2)
                    push_branch(true, p_.b2);
                    push_branch(false, 1.0 - p_.b2);
                }
            }
        }
    }

    ModelParams p_;
    int64_t a_;
    int width_;
    std::vector<uint8_t> occ0_;
    std::map<State, double> dist_;
    int t_ = 0;
};

} // namespace sixv
