#pragma once

// The tilted two-point semigroup V of the Hopf-Cole pair process and
// its discrete gradients, by double contour quadrature.
//
// Sites are passed as integer indices: y-pair (j1 < j2) on Xi(s),
// x-pair (k1 < k2) on Xi(t+s). The fractional compensation mu*t -
// floor(mu*t) in the written exponents combines with the z^floor(mu*t)
// factor of the time term so that only the integer differences k - j
// ever enter; that keeps every power of z integral, as required.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "bethe.hpp"
#include "params.hpp"
#include "quadrature.hpp"

namespace sixv {

enum class GradientSel { None, X1, X2, Y1, Y2 };

struct SemigroupQuery {
    int64_t j1 = 0, j2 = 1;  // source pair, strictly increasing
    int64_t k1 = 0, k2 = 1;  // target pair, strictly increasing
    int64_t t = 0;
    GradientSel grad = GradientSel::None;

    void validate() const {
        if (!(j1 < j2) || !(k1 < k2)) throw std::invalid_argument("semigroup query: Weyl chamber violated");
        if (t < 0) throw std::invalid_argument("semigroup query: t must be >= 0");
        if (grad == GradientSel::X1 && !(k1 + 1 < k2))
            throw std::invalid_argument("semigroup query: gradient in x1 leaves the Weyl chamber");
        if (grad == GradientSel::Y1 && !(j1 + 1 < j2))
            throw std::invalid_argument("semigroup query: gradient in y1 leaves the Weyl chamber");
    }
};

inline PoleInventory semigroup_pole_inventory(const ModelParams& p) {
    PoleInventory inv;
    const double ti = 1.0 / p.tau;
    const double trho = std::pow(p.tau, p.rho);
    const double c1 = (1.0 + ti) * trho;
    const double c2 = std::pow(p.tau, 2.0 * p.rho - 1.0);
    inv.per_variable = p.b2 / trho;
    // smallest radius enclosing every pole: 1/(c2 r - c1) <= r/1.5 with
    // c2 r > c1, plus headroom over the per-variable pole
    const double rstar = (c1 + std::sqrt(c1 * c1 + 6.0 * c2)) / (2.0 * c2);
    double r = std::max({1.25 * std::max(1.0, inv.per_variable), 1.08 * rstar, 1.2 * c1 / c2});
    const double denom_min = c2 * r - c1;
    if (!(denom_min > 0.0))
        throw std::domain_error("contour too small: semigroup interaction pole cannot be enclosed");
    inv.interaction = 1.0 / denom_min;
    if (inv.interaction > r / 1.4)
        throw std::domain_error("contour too small: semigroup interaction pole cannot be enclosed");
    inv.radius = r;
    return inv;
}

inline ContourSpec default_semigroup_contour(const ModelParams& p) {
    ContourSpec c;
    c.radius = semigroup_pole_inventory(p).radius;
    c.start_nodes = 256;
    c.max_nodes = 65536;
    c.rel_tol = 1e-10;
    return c;
}

struct SemigroupSplit {
    KernelValue total;        // V
    KernelValue free_part;    // product of the two single integrals
    KernelValue interacting;  // swapped-exponent double integral; V = free - interacting
};

// Evaluates V and its parts for a fixed t, caching nodes and the time
// factor h(z) = (lambda * Dt(z))^t across queries and levels.
class SemigroupEvaluator {
public:
    SemigroupEvaluator(const ModelParams& p, int64_t t)
        : SemigroupEvaluator(p, t, default_semigroup_contour(p)) {}
    SemigroupEvaluator(const ModelParams& p, int64_t t, ContourSpec contour,
                       KernelOptions opt = {})
        : p_(p), t_(t), contour_(contour), opt_(opt) {
        const double ti = 1.0 / p.tau;
        trho_ = std::pow(p.tau, p.rho);
        c1_ = (1.0 + ti) * trho_;
        c2_ = std::pow(p.tau, 2.0 * p.rho - 1.0);
    }

    const ModelParams& params() const { return p_; }
    int64_t t() const { return t_; }
    const ContourSpec& contour() const { return contour_; }

    KernelValue value(const SemigroupQuery& q) { return split(q).total; }

    SemigroupSplit split(const SemigroupQuery& q) {
        q.validate();
        if (q.t != t_) throw std::invalid_argument("semigroup evaluator: query t mismatch");
        const int64_t e1 =
            std::max<int64_t>({std::llabs(q.k1 - q.j1), std::llabs(q.k2 - q.j1), 1}) + 1;
        const int64_t e2 =
            std::max<int64_t>({std::llabs(q.k2 - q.j2), std::llabs(q.k1 - q.j2), 1}) + 1;
        const int64_t max_abs_exp = std::max(e1, e2);
        const double r = contour_.radius;
        if (!(r > p_.b2 / trho_))
            throw std::domain_error("contour too small: semigroup per-variable pole not enclosed");
        const double hmax = p_.lambda * (p_.b1 * trho_ * r + std::fabs(1.0 - p_.b1 - p_.b2)) /
                            (trho_ * r - p_.b2);
        detail::overflow_guard(r, e1 + e2, 2 * t_, hmax);
        const double noise_floor = std::pow(r, static_cast<double>(e1 + e2)) *
                                   std::pow(std::max(1.0, hmax), 2.0 * static_cast<double>(t_)) *
                                   1e-18;

        int m = std::max(contour_.start_nodes, 8);
        while (m < max_abs_exp + 2) m *= 2;

        auto level = [&](int nodes) { return eval_level(q, nodes); };
        std::array<cplx, 2> prev = level(m);
        SemigroupSplit out;
        auto pack = [&](const std::array<cplx, 2>& fi, int nodes, double err, bool conv) {
            QuadValue qv;
            qv.nodes = nodes;
            qv.est_error = err;
            qv.converged = conv;
            qv.value = fi[0];
            out.free_part = KernelValue::from(qv);
            qv.value = fi[1];
            out.interacting = KernelValue::from(qv);
            qv.value = fi[0] - fi[1];
            out.total = KernelValue::from(qv);
        };
        if (!contour_.adaptive) {
            pack(prev, m, 0.0, true);
            return out;
        }
        while (m < contour_.max_nodes) {
            m *= 2;
            const std::array<cplx, 2> cur = level(m);
            const double err = std::max(std::abs(cur[0] - prev[0]), std::abs(cur[1] - prev[1]));
            const double scale = std::max({1.0, std::abs(cur[0]), std::abs(cur[1])});
            if (err <= std::max(contour_.rel_tol * scale, noise_floor)) {
                pack(cur, m, std::max(err, noise_floor), true);
                return out;
            }
            prev = cur;
        }
        throw std::runtime_error("semigroup quadrature failed to converge within node cap");
    }

    // Independent evaluation of the same double integral: the full
    // integrand (direct minus interacting term) accumulated jointly over
    // node pairs, rather than separable-plus-series. Used to check that
    // the free/interacting split sums back to V.
    KernelValue value_joint(const SemigroupQuery& q) {
        q.validate();
        if (q.t != t_) throw std::invalid_argument("semigroup evaluator: query t mismatch");
        if (q.grad != GradientSel::None)
            throw std::invalid_argument("value_joint: gradients unsupported");
        const int64_t max_abs_exp =
            std::max<int64_t>({std::llabs(q.k1 - q.j1), std::llabs(q.k2 - q.j2),
                               std::llabs(q.k2 - q.j1), std::llabs(q.k1 - q.j2), 1});
        const double r = contour_.radius;
        const double hmax = p_.lambda * (p_.b1 * trho_ * r + std::fabs(1.0 - p_.b1 - p_.b2)) /
                            (trho_ * r - p_.b2);
        const double noise_floor = std::pow(r, 2.0 * static_cast<double>(max_abs_exp + 1)) *
                                   std::pow(std::max(1.0, hmax), 2.0 * static_cast<double>(t_)) *
                                   1e-18;
        auto level = [&](int m) -> cplx {
            const Level& lv = level_cache(m);
            const std::size_t n = lv.z.size();
            std::vector<cplx> w1d(n), w2d(n), w1s(n), w2s(n);
            for (std::size_t i = 0; i < n; ++i) {
                const cplx z = lv.z[i];
                const cplx h = lv.h[i];
                w1d[i] = ipow(z, q.k1 - q.j1) * h;
                w2d[i] = ipow(z, q.k2 - q.j2) * h;
                w1s[i] = ipow(z, q.k2 - q.j1) * h;
                w2s[i] = ipow(z, q.k1 - q.j2) * h;
            }
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) {
                cplx inner{0.0, 0.0};
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx num = 1.0 - c1_ * lv.z[i] + c2_ * lv.z[j] * lv.z[i];
                    const cplx den = 1.0 - c1_ * lv.z[j] + c2_ * lv.z[j] * lv.z[i];
                    inner += w1d[j] * w2d[i] - num / den * w1s[j] * w2s[i];
                }
                acc += inner;
            }
            return acc / (static_cast<double>(n) * static_cast<double>(n));
        };
        int m = std::max(contour_.start_nodes, 8);
        while (m < max_abs_exp + 2) m *= 2;
        cplx prev = level(m);
        while (m < std::min(contour_.max_nodes, 4096)) {
            m *= 2;
            const cplx cur = level(m);
            const double err = std::abs(cur - prev);
            if (err <= std::max(contour_.rel_tol * std::max(1.0, std::abs(cur)),
                                std::max(1e-13, noise_floor))) {
                QuadValue qv;
                qv.value = cur;
                qv.nodes = m;
                qv.est_error = std::max(err, noise_floor);
                qv.converged = true;
                return KernelValue::from(qv);
            }
            prev = cur;
        }
        throw std::runtime_error("joint semigroup quadrature failed to converge");
    }

    // Gradient by actually differencing two V evaluations (cross-check path).
    KernelValue gradient_by_difference(SemigroupQuery q) {
        const GradientSel g = q.grad;
        q.validate();
        q.grad = GradientSel::None;
        SemigroupQuery shifted = q;
        switch (g) {
            case GradientSel::X1: shifted.k1 += 1; break;
            case GradientSel::X2: shifted.k2 += 1; break;
            case GradientSel::Y1: shifted.j1 += 1; break;
            case GradientSel::Y2: shifted.j2 += 1; break;
            case GradientSel::None: throw std::invalid_argument("no gradient selected");
        }
        const KernelValue a = value(shifted);
        const KernelValue b = value(q);
        KernelValue out;
        out.value = a.value - b.value;
        out.imag_residual = a.imag_residual + b.imag_residual;
        out.nodes = std::max(a.nodes, b.nodes);
        out.est_error = a.est_error + b.est_error;
        out.converged = a.converged && b.converged;
        return out;
    }

private:
    struct Level {
        std::vector<cplx> z;
        std::vector<cplx> h;  // (lambda * Dt(z))^t
    };

    const Level& level_cache(int m) {
        auto it = levels_.find(m);
        if (it != levels_.end()) return it->second;
        Level lv;
        lv.z = circle_nodes(contour_.radius, m);
        lv.h.resize(lv.z.size());
        for (std::size_t i = 0; i < lv.z.size(); ++i) {
            const cplx z = lv.z[i];
            const cplx dt = (p_.b1 * trho_ * z + (1.0 - p_.b1 - p_.b2)) / (trho_ * z - p_.b2);
            lv.h[i] = ipow(p_.lambda * dt, t_);
        }
        return levels_.emplace(m, std::move(lv)).first->second;
    }

    std::array<cplx, 2> eval_level(const SemigroupQuery& q, int m) {
        const Level& lv = level_cache(m);
        const std::size_t n = lv.z.size();
        // gradient factors per variable for the direct and swapped terms
        auto one = [](cplx) { return cplx{1.0, 0.0}; };
        auto up = [](cplx z) { return z - 1.0; };
        auto down = [](cplx z) { return 1.0 / z - 1.0; };
        std::function<cplx(cplx)> gd1 = one, gd2 = one, gs1 = one, gs2 = one;
        switch (q.grad) {
            case GradientSel::None: break;
            case GradientSel::X1: gd1 = up; gs2 = up; break;    // x1 sits on z2 in the swap term
            case GradientSel::X2: gd2 = up; gs1 = up; break;
            case GradientSel::Y1: gd1 = down; gs1 = down; break;
            case GradientSel::Y2: gd2 = down; gs2 = down; break;
        }
        cplx s1{0, 0}, s2{0, 0};
        std::vector<cplx> w1(n), w2(n);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx z = lv.z[i];
            const cplx h = lv.h[i];
            s1 += ipow(z, q.k1 - q.j1) * gd1(z) * h;
            s2 += ipow(z, q.k2 - q.j2) * gd2(z) * h;
            w1[i] = ipow(z, q.k2 - q.j1) * gs1(z) * h;
            w2[i] = ipow(z, q.k1 - q.j2) * gs2(z) * h;
        }
        const cplx freep = (s1 / static_cast<double>(n)) * (s2 / static_cast<double>(n));
        const cplx inter = detail::interaction_pair_sum(lv.z, w1, w2, cplx(c1_), cplx(c2_),
                                                        opt_.force_direct_pair_sum);
        return {freep, inter};
    }

    ModelParams p_;
    int64_t t_;
    ContourSpec contour_;
    KernelOptions opt_;
    double trho_ = 0.0, c1_ = 0.0, c2_ = 0.0;
    std::map<int, Level> levels_;
};

inline KernelValue semigroup_V(const ModelParams& p, const SemigroupQuery& q) {
    SemigroupEvaluator ev(p, q.t);
    return ev.value(q);
}

inline KernelValue gradient_V(const ModelParams& p, const SemigroupQuery& q) {
    if (q.grad == GradientSel::None) throw std::invalid_argument("gradient_V: no gradient selected");
    SemigroupEvaluator ev(p, q.t);
    return ev.value(q);
}

// The tilting route: V = lambda^(2t) tau^(-rho (k1+k2-j1-j2)) U, with U
// the untilted two-particle kernel on the integer lattice.
inline double semigroup_via_tilted_kernel(const ModelParams& p, const SemigroupQuery& q) {
    KernelQuery kq;
    kq.source = {q.j1, q.j2};
    kq.target = {q.k1, q.k2};
    kq.t = q.t;
    const KernelValue u = transition_prob(p, kq);
    const double tilt = std::pow(p.lambda, 2.0 * static_cast<double>(q.t)) *
                        std::pow(p.tau, -p.rho * static_cast<double>(q.k1 + q.k2 - q.j1 - q.j2));
    return tilt * u.value;
}

// ---- decay-bound verification (report only) --------------------------------

struct BoundsRow {
    int64_t t;
    int64_t j1, j2, k1, k2;
    double v = 0.0;
    double grad_x1 = 0.0;
    double split_gap = 0.0;   // |V - (free - interacting)|
    bool v_ok = true;
    bool grad_ok = true;
};

struct BoundsReport {
    double alpha = 0.0;
    double fitted_c_v = 0.0;     // fitted on the smallest t, then frozen
    double fitted_c_grad = 0.0;
    double fitted_c_int = 0.0;   // swapped-pairing constant for the interacting part
    double max_split_gap = 0.0;
    int violations_v = 0;
    int violations_grad = 0;
    int violations_int = 0;
    std::vector<BoundsRow> rows;
    bool all_ok() const { return violations_v == 0 && violations_grad == 0 && violations_int == 0; }
};

// Checks |V| <= C/(t+1) exp(-alpha d/(sqrt(t+1)+c0)) and the gradient
// analogue with (t+1)^{3/2}; C is fitted at the smallest grid t and
// frozen (x slack). Also accumulates the free/interacting split gap and
// the swapped-pairing decay of the interacting part.
inline BoundsReport verify_bounds(const ModelParams& p, double alpha, double T,
                                  const std::vector<int64_t>& t_grid,
                                  const std::vector<int64_t>& offset_grid, double slack = 1.10) {
    if (t_grid.empty() || offset_grid.empty())
        throw std::invalid_argument("verify_bounds: empty grid");
    if (p.eps > 0.0) {
        const double tmax = T / (p.eps * p.eps);
        for (int64_t t : t_grid)
            if (static_cast<double>(t) > tmax)
                throw std::invalid_argument("verify_bounds: t grid exceeds eps^-2 T");
    }
    const double c0 = 2.0 * alpha;  // frozen exponential-denominator constant
    BoundsReport rep;
    rep.alpha = alpha;
    const int64_t j1 = 0, j2 = 2;

    auto dist_direct = [&](int64_t t, int64_t k1, int64_t k2) {
        const double drift = p.mu * static_cast<double>(t);
        return std::fabs(static_cast<double>(k1 - j1) - drift) +
               std::fabs(static_cast<double>(k2 - j2) - drift);
    };
    auto dist_swapped = [&](int64_t t, int64_t k1, int64_t k2) {
        const double drift = p.mu * static_cast<double>(t);
        return std::fabs(static_cast<double>(k2 - j1) - drift) +
               std::fabs(static_cast<double>(k1 - j2) - drift);
    };
    auto phi = [&](int64_t t, double dist, double power) {
        return std::pow(static_cast<double>(t + 1), -power) *
               std::exp(-alpha * dist / (std::sqrt(static_cast<double>(t + 1)) + c0));
    };

    bool first_t = true;
    for (int64_t t : t_grid) {
        SemigroupEvaluator ev(p, t);
        const int64_t shift = static_cast<int64_t>(std::floor(p.mu * static_cast<double>(t)));
        std::vector<BoundsRow> rows;
        for (int64_t d1 : offset_grid) {
            for (int64_t d2 : offset_grid) {
                const int64_t k1 = j1 + shift + d1;
                const int64_t k2 = j2 + shift + d2;
                if (!(k1 < k2)) continue;
                BoundsRow row;
                row.t = t;
                row.j1 = j1; row.j2 = j2; row.k1 = k1; row.k2 = k2;
                SemigroupQuery q{j1, j2, k1, k2, t, GradientSel::None};
                const SemigroupSplit sp = ev.split(q);
                row.v = sp.total.value;
                // the split must reassemble the independently evaluated
                // joint integral; checked near the diffusive center
                if (std::llabs(d1) <= 1 && std::llabs(d2) <= 1) {
                    row.split_gap = std::fabs(ev.value_joint(q).value -
                                              (sp.free_part.value - sp.interacting.value));
                    rep.max_split_gap = std::max(rep.max_split_gap, row.split_gap);
                }
                if (k1 + 1 < k2) {
                    SemigroupQuery g = q;
                    g.grad = GradientSel::X1;
                    row.grad_x1 = ev.value(g).value;
                }
                rows.push_back(row);
                // swapped-pairing decay of the interacting part
                const double phint = phi(t, dist_swapped(t, k1, k2), 1.0);
                const double cint = std::fabs(sp.interacting.value) / phint;
                if (first_t) rep.fitted_c_int = std::max(rep.fitted_c_int, cint);
                else if (cint > slack * rep.fitted_c_int) ++rep.violations_int;
            }
        }
        for (auto& row : rows) {
            const double pv = phi(t, dist_direct(t, row.k1, row.k2), 1.0);
            const double pg = phi(t, dist_direct(t, row.k1, row.k2), 1.5);
            if (first_t) {
                rep.fitted_c_v = std::max(rep.fitted_c_v, std::fabs(row.v) / pv);
                rep.fitted_c_grad = std::max(rep.fitted_c_grad, std::fabs(row.grad_x1) / pg);
            } else {
                row.v_ok = std::fabs(row.v) <= slack * rep.fitted_c_v * pv;
                row.grad_ok = std::fabs(row.grad_x1) <= slack * rep.fitted_c_grad * pg;
                if (!row.v_ok) ++rep.violations_v;
                if (!row.grad_ok) ++rep.violations_grad;
            }
            rep.rows.push_back(row);
        }
        first_t = false;
    }
    return rep;
}

} // namespace sixv
