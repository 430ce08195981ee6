#pragma once

// Stationary (Gibbs) sampling of the stochastic six vertex model on a
// box: Bernoulli(v) vertical lines enter from below, Bernoulli(h)
// horizontal lines from the left with h = stationary_h(v), and interior
// vertices propagate by the stochastic weights. The quadrant law is
// already stationary along down-right paths; the burn-in margin only
// washes out edge effects of the finite box.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace sixv {

struct GibbsSample {
    int64_t width = 0, height = 0;
    // per vertex (x, y), row-major with y fastest varying in memory? no:
    // index = y * width + x; y is the time axis.
    std::vector<uint8_t> v_in, h_in, v_out, h_out;
    double target_v = 0.0, target_h = 0.0;

    std::size_t idx(int64_t x, int64_t y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
    double empirical_v() const {
        double s = 0;
        for (auto b : v_in) s += b;
        return s / static_cast<double>(v_in.size());
    }
    double empirical_h() const {
        double s = 0;
        for (auto b : h_in) s += b;
        return s / static_cast<double>(h_in.size());
    }
};

// Sample a width x height box. The returned box is cut from the
// interior of a larger quadrant sample, `margin` deep from the boundary
// data (default twice the box diameter).
inline GibbsSample sample_gibbs(const ModelParams& p, double v, int64_t width, int64_t height,
                                const CounterRng& rng, int64_t margin = -1) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("sample_gibbs: empty box");
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("sample_gibbs: v outside [0,1]");
    const double h = stationary_h(v, p);
    if (margin < 0) margin = 2 * std::max(width, height);
    const int64_t W = width + margin, H = height + margin;

    GibbsSample out;
    out.width = width;
    out.height = height;
    out.target_v = v;
    out.target_h = h;
    out.v_in.resize(static_cast<std::size_t>(width * height));
    out.h_in.resize(out.v_in.size());
    out.v_out.resize(out.v_in.size());
    out.h_out.resize(out.v_in.size());

    // one full row of vertical edges, updated in place while sweeping up
    std::vector<uint8_t> vert(static_cast<std::size_t>(W));
    for (int64_t x = 0; x < W; ++x)
        vert[static_cast<std::size_t>(x)] = rng.bernoulli(v, -2, x, Draw::GibbsBoundary) ? 1 : 0;

    for (int64_t y = 0; y < H; ++y) {
        uint8_t horiz = rng.bernoulli(h, y, -2, Draw::GibbsBoundary) ? 1 : 0;
        for (int64_t x = 0; x < W; ++x) {
            const uint8_t vi = vert[static_cast<std::size_t>(x)];
            const uint8_t hi = horiz;
            uint8_t vo, ho;
            if (vi == hi) {  // conservative pass-through, weight 1
                vo = vi;
                ho = hi;
            } else if (vi == 1) {  // vertical in: stays with prob b1
                const bool stay = rng.bernoulli(p.b1, y, x, Draw::GibbsVertex);
                vo = stay ? 1 : 0;
                ho = stay ? 0 : 1;
            } else {  // horizontal in: stays with prob b2
                const bool stay = rng.bernoulli(p.b2, y, x, Draw::GibbsVertex);
                ho = stay ? 1 : 0;
                vo = stay ? 0 : 1;
            }
            if (x >= margin && y >= margin) {
                const std::size_t i = out.idx(x - margin, y - margin);
                out.v_in[i] = vi;
                out.h_in[i] = hi;
                out.v_out[i] = vo;
                out.h_out[i] = ho;
            }
            vert[static_cast<std::size_t>(x)] = vo;
            horiz = ho;
        }
    }
    return out;
}

// Incoming occupancies along canned down-right paths.
inline std::vector<uint8_t> row_vertical_in(const GibbsSample& s, int64_t y) {
    std::vector<uint8_t> out;
    out.reserve(static_cast<std::size_t>(s.width));
    for (int64_t x = 0; x < s.width; ++x) out.push_back(s.v_in[s.idx(x, y)]);
    return out;
}

inline std::vector<uint8_t> column_horizontal_in(const GibbsSample& s, int64_t x) {
    std::vector<uint8_t> out;
    out.reserve(static_cast<std::size_t>(s.height));
    for (int64_t y = 0; y < s.height; ++y) out.push_back(s.h_in[s.idx(x, y)]);
    return out;
}

// Staircase path from the top-left going right, down, right, ...;
// records the incoming edge crossed at each move (vertical edges on
// rightward moves, horizontal edges on downward moves).
struct PathEntry {
    uint8_t occupied;
    bool vertical;  // vertical edge (Ber(v)) or horizontal (Ber(h))
};

inline std::vector<PathEntry> staircase_incoming(const GibbsSample& s) {
    std::vector<PathEntry> out;
    int64_t x = 0, y = s.height - 1;
    bool go_right = true;
    while (x < s.width && y >= 0) {
        if (go_right) {
            out.push_back({s.v_in[s.idx(x, y)], true});
            ++x;
        } else {
            out.push_back({s.h_in[s.idx(x, y)], false});
            --y;
        }
        go_right = !go_right;
    }
    return out;
}

} // namespace sixv
