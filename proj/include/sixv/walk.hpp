#pragma once

// One-particle walk laws and the tilted/centered kernel on the shifted
// lattice Xi(t) = Z - t*mu.
//
// Sites of Xi(t) are stored as (t, integer index k) with embedded
// coordinate x = k - mu*t; all lattice arithmetic stays in integers.
// The kernel acts between consecutive lattices: for x in Xi(t+1) and
// y in Xi(t), the offset x - y equals (kx - ky) - mu, so the pmf of the
// centered jump is indexed by the integer n = kx - ky >= 0.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "params.hpp"

namespace sixv {

struct ShiftedSite {
    int64_t t = 0;  // time
    int64_t k = 0;  // integer index; embedded coordinate is k - mu*t
    double coordinate(const ModelParams& p) const {
        return static_cast<double>(k) - p.mu * static_cast<double>(t);
    }
};

// Integer index on Xi(s) of the compensated site x_star - mu*s + floor(mu*s).
inline int64_t compensated_index(int64_t x_star, int64_t s, const ModelParams& p) {
    return x_star + static_cast<int64_t>(std::floor(p.mu * static_cast<double>(s)));
}

// P(r = n): the single-particle jump of the sequential dynamics.
inline double walk_pmf(const ModelParams& p, int64_t n) {
    if (n < 0) return 0.0;
    if (n == 0) return p.b1;
    return (1.0 - p.b1) * (1.0 - p.b2) * std::pow(p.b2, static_cast<double>(n - 1));
}

// P(Rbar = n - mu), indexed by the integer n = offset + mu >= 0.
inline double tilted_pmf(const ModelParams& p, int64_t n) {
    if (n < 0) return 0.0;
    if (n == 0) return p.lambda * p.b1;
    const double q = p.tilt_ratio();
    return p.lambda * (1.0 - p.b1) * (1.0 - p.b2) * std::pow(p.tau, -p.rho) *
           std::pow(q, static_cast<double>(n - 1));
}

// Kernel evaluated at a real offset x; nonzero only when x + mu is a
// nonnegative integer (within rounding slack).
inline double tilted_kernel(const ModelParams& p, double x) {
    const double shifted = x + p.mu;
    const double n = std::round(shifted);
    if (std::fabs(shifted - n) > 1e-9 || n < -0.5) return 0.0;
    return tilted_pmf(p, static_cast<int64_t>(n));
}

// Tail u_eps(j) = sum_{i >= j} p_eps(i - mu), closed form. Requires j >= 1.
inline double u_coeff(const ModelParams& p, int64_t j) {
    if (j < 1) throw std::invalid_argument("u_coeff: j must be >= 1");
    const double q = p.tilt_ratio();
    const double u1 = p.lambda * (1.0 - p.b1) * (1.0 - p.b2) * std::pow(p.tau, -p.rho) / (1.0 - q);
    return u1 * std::pow(q, static_cast<double>(j - 1));
}

// sum_{j>=1} u_eps(j)^2, closed form; tends to (1-b1)/(1+b1) as eps -> 0.
inline double u_coeff_square_sum(const ModelParams& p) {
    const double q = p.tilt_ratio();
    const double u1 = u_coeff(p, 1);
    return u1 * u1 / (1.0 - q * q);
}

struct WalkLaw {
    double mean_untilted;   // E[r]
    double mean_tilted;     // mu = E[R]
    double var_tilted;      // Var(Rbar) -> nu_star as eps -> 0
};

inline WalkLaw walk_law(const ModelParams& p) {
    WalkLaw w;
    w.mean_untilted = (1.0 - p.b1) / (1.0 - p.b2);
    w.mean_tilted = p.mu;
    const double q = p.tilt_ratio();
    const double mu = p.mu;
    const double one_q = 1.0 - q;
    w.var_tilted = mu * mu * p.lambda * p.b1 +
                   p.lambda * (1.0 - p.b1) * (1.0 - p.b2) * std::pow(p.tau, -p.rho) *
                       (mu * mu / one_q - (2.0 * mu + 1.0) / (one_q * one_q) +
                        2.0 / (one_q * one_q * one_q));
    return w;
}

// Number of kernel terms needed before the remaining tail mass drops
// below `tail_tol`.
inline int64_t kernel_support_length(const ModelParams& p, double tail_tol) {
    const double q = p.tilt_ratio();
    int64_t n = 1;
    // u_coeff(j) = u1 q^(j-1); solve u1 q^(n-1) < tail_tol
    const double u1 = u_coeff(p, 1);
    if (u1 <= tail_tol) return 1;
    n = 1 + static_cast<int64_t>(std::ceil(std::log(tail_tol / u1) / std::log(q)));
    return n < 1 ? 1 : n;
}

// Dense table of a function on a contiguous index window of Xi(t).
struct LatticeTable {
    int64_t t = 0;
    int64_t lo = 0;  // first integer index
    std::vector<double> v;
    int64_t hi() const { return lo + static_cast<int64_t>(v.size()) - 1; }
    double at(int64_t k) const { return v[static_cast<std::size_t>(k - lo)]; }
    double& at(int64_t k) { return v[static_cast<std::size_t>(k - lo)]; }
    bool contains(int64_t k) const { return k >= lo && k <= hi(); }
};

// (kernel * f)(k) = sum_{n>=0} phat(n) f(k-n) for f given on a window.
// `vanishes_left` declares f == 0 left of the window (finite support);
// otherwise the truncated tail must stay below `tail_tol` * max|f|.
inline double kernel_convolve_at(const ModelParams& p, const LatticeTable& f, int64_t k,
                                 bool vanishes_left, double tail_tol = 1e-12) {
    if (k > f.hi() || k < f.lo) throw std::out_of_range("kernel_convolve_at: index outside table");
    double acc = 0.0;
    double maxabs = 0.0;
    for (int64_t n = 0; k - n >= f.lo; ++n) {
        const double fv = f.at(k - n);
        acc += tilted_pmf(p, n) * fv;
        const double a = std::fabs(fv);
        if (a > maxabs) maxabs = a;
    }
    if (!vanishes_left) {
        const double tail = u_coeff(p, k - f.lo + 1) * (maxabs > 0 ? maxabs : 1.0);
        if (tail > tail_tol)
            throw std::runtime_error("window too small: kernel tail exceeds tolerance");
    }
    return acc;
}

// Generator (L f)(k at t+1) = (kernel * f)(k) - f(k), same window handling.
inline LatticeTable generator_apply(const ModelParams& p, const LatticeTable& f, int64_t out_lo,
                                    int64_t out_hi, bool vanishes_left, double tail_tol = 1e-12) {
    if (out_lo < f.lo || out_hi > f.hi() || out_lo > out_hi)
        throw std::invalid_argument("generator_apply: output window must sit inside input window");
    LatticeTable g;
    g.t = f.t + 1;
    g.lo = out_lo;
    g.v.resize(static_cast<std::size_t>(out_hi - out_lo + 1));
    for (int64_t k = out_lo; k <= out_hi; ++k)
        g.at(k) = kernel_convolve_at(p, f, k, vanishes_left, tail_tol) - f.at(k);
    return g;
}

} // namespace sixv
