#pragma once

// k-particle transition probabilities of the stochastic six vertex
// model as k-fold contour integrals (Bethe ansatz form). The contour is
// a circle enclosing every pole of the integrand; the radius comes from
// an explicit pole inventory rather than a magic constant.
//
// For k = 2 the interaction term
//     NUM/DEN = (1 - c1 z2 + c2 z1 z2) / (1 - c1 z1 + c2 z1 z2)
// has a denominator linear in z1, so 1/DEN expands into a Laurent
// series in 1/(z1 (c1 - c2 z2)) that converges geometrically on the
// contour. Each series term makes the double sum separable, turning an
// O(M^2) node loop into O(M) per term. The direct O(M^2) loop is kept
// as a cross-check path.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "params.hpp"
#include "quadrature.hpp"

namespace sixv {

struct KernelQuery {
    std::vector<int64_t> source;  // y, strictly increasing
    std::vector<int64_t> target;  // x, strictly increasing
    int64_t t = 0;

    std::size_t k() const { return source.size(); }
    void validate() const {
        if (source.empty() || source.size() != target.size())
            throw std::invalid_argument("kernel query: source/target size mismatch");
        for (std::size_t i = 1; i < source.size(); ++i)
            if (source[i] <= source[i - 1] || target[i] <= target[i - 1])
                throw std::invalid_argument("kernel query: tuples must be strictly increasing");
        if (t < 0) throw std::invalid_argument("kernel query: t must be >= 0");
    }
};

struct PoleInventory {
    double per_variable = 0.0;  // modulus of the one-variable pole
    double interaction = 0.0;   // worst-case two-variable pole modulus
    double radius = 0.0;        // chosen contour radius
};

inline cplx ipow(cplx z, int64_t e) {
    if (e < 0) return 1.0 / ipow(z, -e);
    cplx acc{1.0, 0.0};
    while (e > 0) {
        if (e & 1) acc *= z;
        z *= z;
        e >>= 1;
    }
    return acc;
}

namespace detail {

inline void overflow_guard(double radius, int64_t max_abs_exp, int64_t t, double max_abs_factor) {
    const double budget = static_cast<double>(max_abs_exp) * std::fabs(std::log(radius)) +
                          static_cast<double>(t) * std::max(0.0, std::log(max_abs_factor));
    if (budget > 600.0)
        throw std::domain_error("kernel query rejected: exponent/time budget would overflow doubles");
}

// mean over node pairs of W1_j W2_m (1 - c1 z_m + c2 z_j z_m)/(1 - c1 z_j + c2 z_j z_m),
// via the Laurent series in 1/(z_j (c1 - c2 z_m)). Falls back to the
// direct O(M^2) loop when the series ratio is not comfortably < 1.
inline cplx interaction_pair_sum(const std::vector<cplx>& z, const std::vector<cplx>& w1,
                                 const std::vector<cplx>& w2, cplx c1, cplx c2,
                                 bool force_direct = false) {
    const std::size_t m = z.size();
    std::vector<cplx> v(m);
    double min_zv = 1e300;
    for (std::size_t i = 0; i < m; ++i) {
        v[i] = c1 - c2 * z[i];
        min_zv = std::min(min_zv, std::abs(z[i]) * std::abs(v[i]));
    }
    if (force_direct || min_zv < 1.3) {
        cplx acc{0.0, 0.0};
        for (std::size_t j = 0; j < m; ++j) {
            cplx inner{0.0, 0.0};
            for (std::size_t i = 0; i < m; ++i) {
                const cplx num = 1.0 - c1 * z[i] + c2 * z[j] * z[i];
                const cplx den = 1.0 - c1 * z[j] + c2 * z[j] * z[i];
                inner += w2[i] * num / den;
            }
            acc += w1[j] * inner;
        }
        return acc / (static_cast<double>(m) * static_cast<double>(m));
    }
    // series: 1/DEN = -sum_{n>=1} z_j^{-n} v_m^{-n}
    std::vector<cplx> a(m), b1v(m), b2v(m);
    for (std::size_t i = 0; i < m; ++i) {
        a[i] = w1[i] / z[i];                          // -> w1 z^{-n}
        const cplx invv = 1.0 / v[i];
        b1v[i] = w2[i] * (1.0 - c1 * z[i]) * invv;    // -> w2 (1-c1 z) v^{-n}
        b2v[i] = w2[i] * c2 * z[i] * invv;            // -> w2 c2 z v^{-n}
    }
    cplx acc{0.0, 0.0};
    for (int n = 1; n <= 400; ++n) {
        cplx sa{0, 0}, sza{0, 0}, sb1{0, 0}, sb2{0, 0};
        for (std::size_t i = 0; i < m; ++i) {
            sa += a[i];
            sza += a[i] * z[i];
            sb1 += b1v[i];
            sb2 += b2v[i];
        }
        const cplx term = -(sa * sb1 + sza * sb2);
        acc += term;
        if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(acc)) && n >= 3) break;
        for (std::size_t i = 0; i < m; ++i) {
            a[i] /= z[i];
            b1v[i] /= v[i];
            b2v[i] /= v[i];
        }
    }
    return acc / (static_cast<double>(m) * static_cast<double>(m));
}

} // namespace detail

// Pole inventory for the untilted kernel: per-variable pole at z = b2,
// z = 0 under negative exponents, and for k >= 2 the interaction pole
// z_i = 1/((1+1/tau) - z_j/tau) at the worst z_j on the contour.
inline PoleInventory kernel_pole_inventory(const ModelParams& p, std::size_t k) {
    PoleInventory inv;
    inv.per_variable = p.b2;
    double r = 1.5 * std::max(1.0, p.b2);
    if (k >= 2) {
        const double ti = 1.0 / p.tau;
        // smallest radius with 1/(ti r - (1+ti)) <= r/1.5, i.e. the worst
        // interaction pole strictly inside; smaller radii also keep the
        // noise scale r^|exponent| down
        const double rstar =
            ((1.0 + ti) + std::sqrt((1.0 + ti) * (1.0 + ti) + 6.0 * ti)) / (2.0 * ti);
        r = std::max({r, 1.08 * rstar, 1.2 * (1.0 + p.tau)});
        const double denom_min = ti * r - (1.0 + ti);
        if (!(denom_min > 0.0))
            throw std::domain_error("contour too small: interaction pole cannot be enclosed");
        inv.interaction = 1.0 / denom_min;
        if (inv.interaction > r / 1.4)
            throw std::domain_error("contour too small: interaction pole cannot be enclosed");
    }
    inv.radius = r;
    return inv;
}

inline ContourSpec default_kernel_contour(const ModelParams& p, std::size_t k) {
    ContourSpec c;
    c.radius = kernel_pole_inventory(p, k).radius;
    c.start_nodes = 256;
    c.max_nodes = k >= 3 ? 2048 : 65536;
    c.rel_tol = 1e-10;
    return c;
}

struct KernelOptions {
    bool force_direct_pair_sum = false;  // disable the series fast path
};

// P(source -> target; t) for the forward k-particle chain.
inline KernelValue transition_prob(const ModelParams& p, const KernelQuery& q,
                                   const ContourSpec& contour, const KernelOptions& opt = {}) {
    q.validate();
    const std::size_t k = q.k();
    const double ti = 1.0 / p.tau;
    const double r = contour.radius;
    if (!(r > p.b2)) throw std::domain_error("contour too small: per-variable pole not enclosed");

    int64_t max_abs_exp = 1;
    int64_t total_exp = 0;  // worst joint magnitude of the k-variable product
    for (std::size_t i = 0; i < k; ++i) {
        int64_t ei = 1;
        for (std::size_t j = 0; j < k; ++j)
            ei = std::max<int64_t>(ei, std::llabs(q.target[i] - q.source[j]) + 1);
        max_abs_exp = std::max(max_abs_exp, ei);
        total_exp += ei;
    }
    const double dmax = (p.b1 * r + std::fabs(1.0 - p.b1 - p.b2)) / (r - p.b2);
    detail::overflow_guard(r, total_exp, q.t * static_cast<int64_t>(k), dmax);

    auto fac = [&](cplx z) {  // D(z) = (b1 z + 1 - b1 - b2)/(z - b2)
        return (p.b1 * z + (1.0 - p.b1 - p.b2)) / (z - p.b2);
    };

    auto eval_level = [&](int m) -> cplx {
        const auto z = circle_nodes(r, m);
        std::vector<cplx> dt(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) dt[j] = ipow(fac(z[j]), q.t);

        if (k == 1) {
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < z.size(); ++j)
                acc += ipow(z[j], q.target[0] - q.source[0]) * dt[j];
            return acc / static_cast<double>(m);
        }
        if (k == 2) {
            // swapped term: the denominator of the interaction factor
            // distinguishes the variable carrying x2 - y1, the numerator
            // the one carrying x1 - y2 (fixed against exact enumeration)
            cplx d1{0, 0}, d2{0, 0};
            std::vector<cplx> w1(z.size()), w2(z.size());
            for (std::size_t j = 0; j < z.size(); ++j) {
                d1 += ipow(z[j], q.target[0] - q.source[0]) * dt[j];
                d2 += ipow(z[j], q.target[1] - q.source[1]) * dt[j];
                w1[j] = ipow(z[j], q.target[1] - q.source[0]) * dt[j];
                w2[j] = ipow(z[j], q.target[0] - q.source[1]) * dt[j];
            }
            const cplx direct = d1 * d2 / (static_cast<double>(m) * static_cast<double>(m));
            const cplx swap = detail::interaction_pair_sum(z, w1, w2, cplx(1.0 + ti), cplx(ti),
                                                           opt.force_direct_pair_sum);
            return direct - swap;
        }

        // generic k: full permutation sum over node tuples
        std::vector<std::vector<std::size_t>> perms;
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        do { perms.push_back(idx); } while (std::next_permutation(idx.begin(), idx.end()));
        auto perm_sign = [](const std::vector<std::size_t>& s) {
            int sgn = 1;
            for (std::size_t i = 0; i < s.size(); ++i)
                for (std::size_t j = i + 1; j < s.size(); ++j)
                    if (s[i] > s[j]) sgn = -sgn;
            return sgn;
        };
        // power tables: pw[i][j][node] = z_node^(x_i - y_j - 1) * z_node (measure)
        std::vector<std::vector<std::vector<cplx>>> pw(
            k, std::vector<std::vector<cplx>>(k, std::vector<cplx>(z.size())));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t n = 0; n < z.size(); ++n)
                    pw[i][j][n] = ipow(z[n], q.target[i] - q.source[j]);
        std::vector<std::size_t> tup(k, 0);
        cplx total{0.0, 0.0};
        while (true) {
            std::vector<cplx> zz(k);
            for (std::size_t i = 0; i < k; ++i) zz[i] = z[tup[i]];
            cplx denom{1.0, 0.0};
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = i + 1; j < k; ++j)
                    denom *= 1.0 - (1.0 + ti) * zz[j] + ti * zz[i] * zz[j];
            cplx sum{0.0, 0.0};
            for (const auto& sg : perms) {
                cplx num{1.0, 0.0};
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = i + 1; j < k; ++j)
                        num *= 1.0 - (1.0 + ti) * zz[sg[j]] + ti * zz[sg[i]] * zz[sg[j]];
                cplx powers{1.0, 0.0};
                for (std::size_t i = 0; i < k; ++i) powers *= pw[sg[i]][i][tup[sg[i]]];
                sum += static_cast<double>(perm_sign(sg)) * num * powers;
            }
            cplx term = sum / denom;
            for (std::size_t i = 0; i < k; ++i) term *= dt[tup[i]];
            total += term;
            std::size_t d = 0;
            while (d < k && ++tup[d] == z.size()) { tup[d] = 0; ++d; }
            if (d == k) break;
        }
        double norm = 1.0;
        for (std::size_t i = 0; i < k; ++i) norm *= static_cast<double>(m);
        return total / norm;
    };

    int m = std::max(contour.start_nodes, 8);
    while (m < max_abs_exp + 2) m *= 2;
    // cancellation floor of the trapezoid sums: the k-variable integrand has
    // constant modulus ~ r^(e1+...+ek) on the torus while the result can be
    // arbitrarily small; refinement below that scale is unattainable in
    // doubles. The constant is calibrated against measured cancellation
    // noise; multi-variable sums average over M^k nodes and sit ~M lower.
    const double floor_const = k == 1 ? 3e-16 : 1e-18;
    const double noise_floor =
        std::pow(r, static_cast<double>(total_exp)) *
        std::pow(std::max(1.0, dmax), static_cast<double>(q.t * static_cast<int64_t>(k))) *
        floor_const;
    QuadValue qa;
    cplx prev = eval_level(m);
    qa.value = prev;
    qa.nodes = m;
    if (contour.adaptive) {
        qa.converged = false;
        while (m < contour.max_nodes) {
            m *= 2;
            const cplx cur = eval_level(m);
            const double err = std::abs(cur - prev);
            qa.value = cur;
            qa.nodes = m;
            qa.est_error = std::max(err, noise_floor);
            if (err <= std::max(contour.rel_tol * std::max(1.0, std::abs(cur)), noise_floor)) {
                qa.converged = true;
                break;
            }
            prev = cur;
        }
        if (!qa.converged)
            throw std::runtime_error("contour quadrature failed to converge within node cap");
    }
    return KernelValue::from(qa);
}

inline KernelValue transition_prob(const ModelParams& p, const KernelQuery& q) {
    return transition_prob(p, q, default_kernel_contour(p, q.k()));
}

// Reversed-model kernel through the space reversal of the configuration.
inline KernelValue reversed_transition_prob(const ModelParams& p, const KernelQuery& q,
                                            const ContourSpec& contour) {
    KernelQuery rq;
    rq.t = q.t;
    rq.source.assign(q.source.rbegin(), q.source.rend());
    rq.target.assign(q.target.rbegin(), q.target.rend());
    for (auto& v : rq.source) v = -v;
    for (auto& v : rq.target) v = -v;
    return transition_prob(p, rq, contour);
}

inline KernelValue reversed_transition_prob(const ModelParams& p, const KernelQuery& q) {
    return reversed_transition_prob(p, q, default_kernel_contour(p, q.k()));
}

} // namespace sixv
