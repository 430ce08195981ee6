#pragma once

// Duality identity checks: the tau^N and eta tau^N dualities against
// the k-particle kernel (both right-hand representations), the Z-pair
// duality against the two-point semigroup V, conditional expectation
// tables in gradient-of-kernel form, and the time-averaged moment
// diagnostics.
//
// Exact mode enumerates every driver outcome of a window configuration;
// Monte Carlo mode pairs each replica's observable with the kernel sum
// over its own initial data, so the identity holds replica by replica
// in expectation.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "bethe.hpp"
#include "dynamics.hpp"
#include "enumerate.hpp"
#include "hopf_cole.hpp"
#include "params.hpp"
#include "semigroup.hpp"
#include "stats.hpp"
#include "walk.hpp"

namespace sixv {

enum class DualObservable { H, Htilde, ZPair, EtaZPair };

struct DualityQuery {
    std::vector<int64_t> sites;  // strictly increasing; 1 or 2 of them
    int64_t t = 1;
    DualObservable obs = DualObservable::H;

    void validate() const {
        if (sites.empty() || sites.size() > 2)
            throw std::invalid_argument("duality query: one or two sites");
        if (sites.size() == 2 && !(sites[0] < sites[1]))
            throw std::invalid_argument("duality query: sites must increase");
        if ((obs == DualObservable::ZPair || obs == DualObservable::EtaZPair) && sites.size() != 2)
            throw std::invalid_argument("duality query: Z observables need a site pair");
        if (t < 0) throw std::invalid_argument("duality query: t >= 0");
    }
};

struct DualityReport {
    double lhs = 0.0;
    double rhs = 0.0;           // primary right-hand representation
    double rhs_alt = 0.0;       // second representation (reversed kernel / tilted-U route)
    double gap = 0.0;           // lhs - rhs
    double form_gap = 0.0;      // rhs - rhs_alt
    double sigma = 0.0;         // standard error of the gap (MC mode; 0 exact)
    std::size_t replicas = 0;
    double enum_dropped = 0.0;  // enumeration mass outside caps (exact mode)
};

namespace detail {

// N(0, y) of a window configuration extended by the cutoff convention:
// 0 left of the window, constant right of it. Normalized at a-1.
class InitialProfile {
public:
    InitialProfile(int64_t a, const std::vector<uint8_t>& occ) : a_(a) {
        n_.resize(occ.size());
        int64_t acc = 0;
        for (std::size_t i = 0; i < occ.size(); ++i) {
            acc += occ[i];
            n_[i] = acc;
        }
        total_ = acc;
    }
    int64_t N(int64_t y) const {
        if (y < a_) return 0;
        const std::size_t i = static_cast<std::size_t>(y - a_);
        if (i >= n_.size()) return total_;
        return n_[i];
    }
    uint8_t eta(int64_t y) const { return static_cast<uint8_t>(N(y) - N(y - 1)); }

private:
    int64_t a_;
    std::vector<int64_t> n_;
    int64_t total_ = 0;
};

inline double z_of(const ModelParams& p, int64_t t, int64_t n_val, int64_t k) {
    return std::exp(static_cast<double>(t) * std::log(p.lambda) +
                    (static_cast<double>(n_val) - p.rho * static_cast<double>(k)) *
                        std::log(p.tau));
}

} // namespace detail

// Cached kernel sums used on the right side of the dualities. The
// kernels are translation invariant, so values are cached on offsets.
class DualityEvaluator {
public:
    DualityEvaluator(const ModelParams& p, int64_t t, double sum_tol = 1e-13,
                     double err_cap = 1e-12)
        : p_(p), t_(t), sum_tol_(sum_tol), err_cap_(err_cap) {}

    // Kernel accessors return 0 when the quadrature's honest error bar
    // exceeds err_cap; such terms are covered by the domination cutoff
    // and would only inject cancellation noise into the sums.
    double p1(int64_t j, int64_t k) {
        const auto it = cache1_.find(k - j);
        if (it != cache1_.end()) return gate(it->second);
        KernelQuery q{{j}, {k}, t_};
        const KernelValue v = transition_prob(p_, q);
        cache1_.emplace(k - j, std::pair{v.value, v.est_error});
        return gate({v.value, v.est_error});
    }
    double p2(int64_t j1, int64_t j2, int64_t k1, int64_t k2) {
        const std::array<int64_t, 3> key{j2 - j1, k1 - j1, k2 - j1};
        const auto it = cache2_.find(key);
        if (it != cache2_.end()) return gate(it->second);
        KernelQuery q{{j1, j2}, {k1, k2}, t_};
        const KernelValue v = transition_prob(p_, q);
        cache2_.emplace(key, std::pair{v.value, v.est_error});
        return gate({v.value, v.est_error});
    }
    double v2(int64_t j1, int64_t j2, int64_t k1, int64_t k2) {
        const std::array<int64_t, 3> key{j2 - j1, k1 - j1, k2 - j1};
        const auto it = cachev_.find(key);
        if (it != cachev_.end()) return gate(it->second);
        if (!sg_) sg_ = std::make_unique<SemigroupEvaluator>(p_, t_);
        SemigroupQuery q{j1, j2, k1, k2, t_, GradientSel::None};
        const KernelValue v = sg_->value(q);
        cachev_.emplace(key, std::pair{v.value, v.est_error});
        return gate({v.value, v.est_error});
    }
    double v2_tilted_route(int64_t j1, int64_t j2, int64_t k1, int64_t k2) {
        return std::pow(p_.lambda, 2.0 * static_cast<double>(t_)) *
               std::pow(p_.tau, -p_.rho * static_cast<double>(k1 + k2 - j1 - j2)) *
               p2(j1, j2, k1, k2);
    }
    // reversed-model kernels, same gating and caches
    double p1_rev(int64_t from, int64_t to) {
        const auto it = cache1r_.find(to - from);
        if (it != cache1r_.end()) return gate(it->second);
        KernelQuery q{{from}, {to}, t_};
        const KernelValue v = reversed_transition_prob(p_, q);
        cache1r_.emplace(to - from, std::pair{v.value, v.est_error});
        return gate({v.value, v.est_error});
    }
    double p2_rev(int64_t f1, int64_t f2, int64_t t1, int64_t t2) {
        const std::array<int64_t, 3> key{f2 - f1, t1 - f1, t2 - f1};
        const auto it = cache2r_.find(key);
        if (it != cache2r_.end()) return gate(it->second);
        KernelQuery q{{f1, f2}, {t1, t2}, t_};
        const KernelValue v = reversed_transition_prob(p_, q);
        cache2r_.emplace(key, std::pair{v.value, v.est_error});
        return gate({v.value, v.est_error});
    }

    // Shell sum of kernel * f over single sources. `support` encodes the
    // kernel's exact support (particles never move left), and `max_d` is
    // the domination cutoff: the per-step geometric flight tail bounds
    // everything beyond it below the working tolerance.
    template <typename Kernel, typename F, typename Support>
    double sum1(int64_t center, Kernel&& kernel, F&& f, Support&& support, int64_t max_d) {
        double acc = support(center) ? kernel(center) * f(center) : 0.0;
        double scale = std::max(1.0, std::fabs(acc));
        int quiet = 0;
        for (int64_t d = 1; d <= max_d; ++d) {
            double shell = 0.0;
            if (support(center - d)) shell += kernel(center - d) * f(center - d);
            if (support(center + d)) shell += kernel(center + d) * f(center + d);
            acc += shell;
            scale = std::max(scale, std::fabs(acc));
            if (std::fabs(shell) < sum_tol_ * scale) {
                if (++quiet >= 3) return acc;
            } else {
                quiet = 0;
            }
        }
        return acc;
    }

    // Same over ordered pairs j1 < j2 around the target pair.
    template <typename Kernel, typename F, typename Support>
    double sum2(int64_t c1, int64_t c2, Kernel&& kernel, F&& f, Support&& support,
                int64_t max_d) {
        double acc = 0.0;
        double scale = 1.0;
        int quiet = 0;
        for (int64_t d = 0; d <= max_d; ++d) {
            double shell = 0.0;
            for (int64_t j1 = c1 - d; j1 <= c1 + d; ++j1) {
                for (int64_t j2 = c2 - d; j2 <= c2 + d; ++j2) {
                    if (!(j1 < j2) || !support(j1, j2)) continue;
                    const int64_t r = std::max(std::llabs(j1 - c1), std::llabs(j2 - c2));
                    if (r != d) continue;  // only the new shell
                    shell += kernel(j1, j2) * f(j1, j2);
                }
            }
            acc += shell;
            scale = std::max(scale, std::fabs(acc));
            if (d > 0 && std::fabs(shell) < sum_tol_ * scale) {
                if (++quiet >= 3) return acc;
            } else {
                quiet = 0;
            }
        }
        return acc;
    }

    const ModelParams& params() const { return p_; }
    int64_t t() const { return t_; }

private:
    double gate(const std::pair<double, double>& ve) const {
        return ve.second > err_cap_ ? 0.0 : ve.first;
    }

    ModelParams p_;
    int64_t t_;
    double sum_tol_;
    double err_cap_;
    std::map<int64_t, std::pair<double, double>> cache1_;
    std::map<int64_t, std::pair<double, double>> cache1r_;
    std::map<std::array<int64_t, 3>, std::pair<double, double>> cache2_;
    std::map<std::array<int64_t, 3>, std::pair<double, double>> cache2r_;
    std::map<std::array<int64_t, 3>, std::pair<double, double>> cachev_;
    std::unique_ptr<SemigroupEvaluator> sg_;
};

// ---- exact (enumeration) mode ----------------------------------------------

// Domination cutoff: kernel mass beyond this source distance is bounded
// by the geometric flight tail below ~1e-14 of the observable scale.
inline int64_t domination_reach(const ModelParams& p, int64_t t) {
    return 3 * t + 4 + static_cast<int64_t>(std::ceil(32.0 / -std::log(p.b2)));
}

struct ExactDualityOptions {
    // evaluate the second right-hand representation (reversed kernel for
    // the tau^N dualities, direct semigroup route for the Z dualities)
    bool compute_alt = true;
    // quadrature error bar above which a kernel term is dropped as
    // negligible (its true value is covered by the domination cutoff)
    double err_cap = 1e-12;
};

// Exact duality check from a deterministic window configuration at s=0.
// For the Z-pair dualities the primary right side uses the tilted
// two-particle kernel route (identical to V, far better conditioned at
// strong asymmetry); the direct contour V goes into rhs_alt.
inline DualityReport duality_check_exact(const ModelParams& p, int64_t window_left,
                                         const std::vector<uint8_t>& occ0, const DualityQuery& q,
                                         const ExactDualityOptions& opt = {}) {
    q.validate();
    const detail::InitialProfile init(window_left, occ0);
    const int64_t b = window_left + static_cast<int64_t>(occ0.size()) - 1;
    for (int64_t y : q.sites)
        if (y < window_left || y + 1 > b)
            throw std::invalid_argument("duality sites must sit inside the window");

    DriverEnumerator en(p, window_left, occ0);
    en.run(static_cast<int>(q.t));

    auto obs_terminal = [&](const WindowOutcome& o, int64_t y, bool with_eta) {
        const std::size_t i = static_cast<std::size_t>(y - window_left);
        const int64_t n_t = init.N(y) - o.crossings[i];
        double val;
        if (q.obs == DualObservable::H || q.obs == DualObservable::Htilde)
            val = std::pow(p.tau, static_cast<double>(n_t));
        else
            val = detail::z_of(p, q.t, n_t, y);
        if (with_eta) val *= o.occ[static_cast<std::size_t>(y + 1 - window_left)];
        return val;
    };
    const bool with_eta = (q.obs == DualObservable::Htilde || q.obs == DualObservable::EtaZPair);

    double lhs = 0.0;
    for (const auto& o : en.outcomes()) {
        double prod = 1.0;
        for (int64_t y : q.sites) prod *= obs_terminal(o, y, with_eta);
        lhs += o.prob * prod;
    }

    auto obs_initial = [&](int64_t y) {
        double val;
        if (q.obs == DualObservable::H || q.obs == DualObservable::Htilde)
            val = std::pow(p.tau, static_cast<double>(init.N(y)));
        else
            val = detail::z_of(p, 0, init.N(y), y);
        if (with_eta) val *= init.eta(y + 1);
        return val;
    };

    DualityEvaluator ev(p, q.t, 1e-13, opt.err_cap);
    const int64_t reach = domination_reach(p, q.t);
    DualityReport rep;
    rep.lhs = lhs;
    if (q.obs == DualObservable::H || q.obs == DualObservable::Htilde) {
        if (q.sites.size() == 1) {
            const int64_t y = q.sites[0];
            auto support = [&](int64_t j) { return j <= y; };
            rep.rhs = ev.sum1(y, [&](int64_t j) { return ev.p1(j, y); }, obs_initial, support,
                              reach);
            rep.rhs_alt = opt.compute_alt
                              ? ev.sum1(y, [&](int64_t j) { return ev.p1_rev(y, j); },
                                        obs_initial, support, reach)
                              : rep.rhs;
        } else {
            const int64_t y1 = q.sites[0], y2 = q.sites[1];
            auto fpair = [&](int64_t j1, int64_t j2) { return obs_initial(j1) * obs_initial(j2); };
            auto support = [&](int64_t j1, int64_t j2) { return j1 <= y1 && j2 <= y2; };
            rep.rhs = ev.sum2(y1, y2,
                              [&](int64_t j1, int64_t j2) { return ev.p2(j1, j2, y1, y2); }, fpair,
                              support, reach);
            rep.rhs_alt =
                opt.compute_alt
                    ? ev.sum2(y1, y2,
                              [&](int64_t j1, int64_t j2) { return ev.p2_rev(y1, y2, j1, j2); },
                              fpair, support, reach)
                    : rep.rhs;
        }
    } else {
        const int64_t k1 = q.sites[0], k2 = q.sites[1];
        auto fpair = [&](int64_t j1, int64_t j2) { return obs_initial(j1) * obs_initial(j2); };
        auto support = [&](int64_t j1, int64_t j2) { return j1 <= k1 && j2 <= k2; };
        rep.rhs = ev.sum2(
            k1, k2, [&](int64_t j1, int64_t j2) { return ev.v2_tilted_route(j1, j2, k1, k2); },
            fpair, support, reach);
        rep.rhs_alt =
            opt.compute_alt
                ? ev.sum2(k1, k2,
                          [&](int64_t j1, int64_t j2) { return ev.v2(j1, j2, k1, k2); }, fpair,
                          support, reach)
                : rep.rhs;
    }
    rep.gap = rep.lhs - rep.rhs;
    rep.form_gap = rep.rhs - rep.rhs_alt;
    rep.sigma = 0.0;
    return rep;
}

// ---- Monte Carlo mode -------------------------------------------------------

// MC duality check from Bernoulli(rho) initial data; the report's gap is
// the mean of per-replica differences and sigma its standard error.
inline DualityReport duality_check_mc(const ModelParams& p, const DualityQuery& q,
                                      std::size_t replicas, uint64_t seed) {
    q.validate();
    const int64_t lo_site = q.sites.front(), hi_site = q.sites.back();
    // kernel mass beyond this offset is negligible against the MC noise
    const int64_t reach =
        2 * q.t + 4 + static_cast<int64_t>(std::ceil(14.0 / -std::log(p.b2)));
    const int64_t a = lo_site - reach - 4;
    const int64_t b = hi_site + reach + 2 * q.t;

    // quadrature error bars only need to sit below the MC noise
    DualityEvaluator ev(p, q.t, 1e-13, 1e-7);
    // precompute kernel weights over the source box once; sources never
    // sit right of their target (particles only move right)
    std::vector<int64_t> singles;
    std::vector<double> w1;
    std::vector<std::array<int64_t, 2>> pairs;
    std::vector<double> w2;
    const bool zobs = (q.obs == DualObservable::ZPair || q.obs == DualObservable::EtaZPair);
    if (q.sites.size() == 1) {
        for (int64_t j = lo_site - reach; j <= lo_site; ++j) {
            const double w = ev.p1(j, q.sites[0]);
            if (std::fabs(w) > 1e-14) {
                singles.push_back(j);
                w1.push_back(w);
            }
        }
    } else {
        for (int64_t j1 = lo_site - reach; j1 <= lo_site; ++j1)
            for (int64_t j2 = j1 + 1; j2 <= hi_site; ++j2) {
                const double w = zobs ? ev.v2(j1, j2, q.sites[0], q.sites[1])
                                      : ev.p2(j1, j2, q.sites[0], q.sites[1]);
                if (std::fabs(w) > 1e-13) {
                    pairs.push_back({j1, j2});
                    w2.push_back(w);
                }
            }
    }

    const bool with_eta = (q.obs == DualObservable::Htilde || q.obs == DualObservable::EtaZPair);
    RunningStats diff, lhs_stats;
    for (std::size_t r = 0; r < replicas; ++r) {
        const CounterRng rng = replica_rng(seed, r);
        HeightField h = HeightField::from_initial(InitialCondition::bernoulli(p.rho), a, b, rng,
                                                  BoundaryPolicy::BernoulliInject,
                                                  RightEdge::Absorb);
        auto obs_at = [&](const HeightField& f, int64_t y) {
            double val;
            if (zobs)
                val = detail::z_of(p, f.t(), f.height(y), y);
            else
                val = std::pow(p.tau, static_cast<double>(f.height(y)));
            if (with_eta) val *= f.occupancy(y + 1);
            return val;
        };
        double rhs = 0.0;
        if (q.sites.size() == 1) {
            for (std::size_t i = 0; i < singles.size(); ++i) rhs += w1[i] * obs_at(h, singles[i]);
        } else {
            for (std::size_t i = 0; i < pairs.size(); ++i)
                rhs += w2[i] * obs_at(h, pairs[i][0]) * obs_at(h, pairs[i][1]);
        }
        for (int64_t s = 0; s < q.t; ++s) h.parallel_step(p, rng);
        double lhs = 1.0;
        for (int64_t y : q.sites) lhs *= obs_at(h, y);
        diff.add(lhs - rhs);
        lhs_stats.add(lhs);
    }
    DualityReport rep;
    rep.lhs = lhs_stats.mean();
    rep.rhs = rep.lhs - diff.mean();
    rep.rhs_alt = rep.rhs;
    rep.gap = diff.mean();
    rep.form_gap = 0.0;
    rep.sigma = diff.stderr_mean();
    rep.replicas = replicas;
    return rep;
}

// ---- conditional expectation tables (gradient-of-kernel forms) -------------

// Exact two-particle semigroup values through the tilting route with the
// chain enumerated directly; cached per source gap. This backend has no
// quadrature noise, so the full-mass kernel sums stay exact; the contour
// route is certified against it elsewhere.
class ExactPairSemigroup {
public:
    ExactPairSemigroup(const ModelParams& p, int64_t t) : p_(p), t_(t) {}

    double u(int64_t j1, int64_t j2, int64_t k1, int64_t k2) {
        const int64_t gap = j2 - j1;
        auto it = by_gap_.find(gap);
        if (it == by_gap_.end()) {
            ParticleEnumerator en(p_, {0, gap}, 1e-18);
            en.run(static_cast<int>(t_));
            it = by_gap_.emplace(gap, en.distribution()).first;
        }
        const auto& dist = it->second;
        const auto jt = dist.find({k1 - j1, k2 - j1});
        return jt == dist.end() ? 0.0 : jt->second;
    }

    double v(int64_t j1, int64_t j2, int64_t k1, int64_t k2) {
        return std::pow(p_.lambda, 2.0 * static_cast<double>(t_)) *
               std::pow(p_.tau, -p_.rho * static_cast<double>(k1 + k2 - j1 - j2)) *
               u(j1, j2, k1, k2);
    }

private:
    ModelParams p_;
    int64_t t_;
    std::map<int64_t, std::map<ParticleConfig, double>> by_gap_;
};

struct CondExpRow {
    int64_t k1 = 0, k2 = 0, t = 0;
    // enumeration of the full window process
    double zg_enum = 0.0;   // E[Zg(t,k1,k2)]
    double zt_enum = 0.0;   // E[Ztilde(t,k1,k2)]
    double zz_enum = 0.0;   // E[Z(t,k1) Z(t,k2)]
    // kernel representations over the two-particle dual chain
    double zg_kernel = 0.0;  // grad_x1 of the semigroup, summed against Z Z
    double zt_kernel = 0.0;  // semigroup against Ztilde(0)
    // form-to-form contour identities, both sides truncated identically
    double grad_form_lhs = 0.0;  // grad-factor integral form
    double grad_form_rhs = 0.0;  // differenced plain evaluations
    double sbp_lhs = 0.0;        // summation-by-parts arrangements
    double sbp_rhs = 0.0;
};

inline CondExpRow conditional_expectation_table(const ModelParams& p, int64_t window_left,
                                                const std::vector<uint8_t>& occ0, int64_t t,
                                                int64_t k1, int64_t k2) {
    if (!(k1 + 1 < k2))
        throw std::invalid_argument("conditional expectations need k1 + 1 < k2 (grad-Weyl)");
    if (!(p.eps > 0.0))
        throw std::invalid_argument("conditional expectations need weak-asymmetry scaling");
    const double se = std::sqrt(p.eps);
    const detail::InitialProfile init(window_left, occ0);
    const int64_t b = window_left + static_cast<int64_t>(occ0.size()) - 1;
    if (k1 < window_left || k2 + 1 > b)
        throw std::invalid_argument("conditional expectation sites must sit inside the window");

    CondExpRow row;
    row.k1 = k1;
    row.k2 = k2;
    row.t = t;

    DriverEnumerator en(p, window_left, occ0);
    en.run(static_cast<int>(t));
    for (const auto& o : en.outcomes()) {
        auto zt_of = [&](int64_t y) {
            const std::size_t i = static_cast<std::size_t>(y - window_left);
            return detail::z_of(p, t, init.N(y) - o.crossings[i], y);
        };
        auto eta_of = [&](int64_t y) {
            return static_cast<double>(o.occ[static_cast<std::size_t>(y - window_left)]);
        };
        const double z1 = zt_of(k1), z2 = zt_of(k2);
        row.zg_enum += o.prob * ((zt_of(k1 + 1) - z1) / se) * z2;
        row.zz_enum += o.prob * z1 * z2;
        row.zt_enum +=
            o.prob * (eta_of(k1 + 1) * z1 * eta_of(k2 + 1) * z2 - p.rho * p.rho * z1 * z2);
    }

    auto z0 = [&](int64_t j) { return detail::z_of(p, 0, init.N(j), j); };
    auto zt0 = [&](int64_t j1, int64_t j2) {
        return init.eta(j1 + 1) * z0(j1) * init.eta(j2 + 1) * z0(j2) -
               p.rho * p.rho * z0(j1) * z0(j2);
    };

    // full-mass kernel sums with the exact backend
    {
        ExactPairSemigroup ex(p, t);
        DualityEvaluator ev(p, t);
        const int64_t reach = domination_reach(p, t);
        auto zz = [&](int64_t j1, int64_t j2) { return z0(j1) * z0(j2); };
        row.zg_kernel = ev.sum2(
            k1, k2,
            [&](int64_t j1, int64_t j2) {
                return (ex.v(j1, j2, k1 + 1, k2) - ex.v(j1, j2, k1, k2)) / se;
            },
            zz, [&](int64_t j1, int64_t j2) { return j1 <= k1 + 1 && j2 <= k2; }, reach);
        row.zt_kernel = ev.sum2(
            k1, k2, [&](int64_t j1, int64_t j2) { return ex.v(j1, j2, k1, k2); }, zt0,
            [&](int64_t j1, int64_t j2) { return j1 <= k1 && j2 <= k2; }, reach);
    }

    // contour form-to-form identities on an identically truncated range
    {
        ContourSpec tight = default_semigroup_contour(p);
        tight.rel_tol = 1e-13;
        SemigroupEvaluator sg(p, t, tight);
        auto vplain = [&](int64_t j1, int64_t j2, int64_t x1, int64_t x2) {
            SemigroupQuery q{j1, j2, x1, x2, t, GradientSel::None};
            return sg.value(q).value;
        };
        const int64_t w = 7;  // restricted range keeps contour noise far below tolerance
        for (int64_t j1 = k1 - w; j1 <= k1 + 2; ++j1)
            for (int64_t j2 = std::max(j1 + 1, k2 - w); j2 <= k2 + 2; ++j2) {
                SemigroupQuery g{j1, j2, k1, k2, t, GradientSel::X1};
                row.grad_form_lhs += sg.value(g).value / se * z0(j1) * z0(j2);
                row.grad_form_rhs +=
                    (vplain(j1, j2, k1 + 1, k2) - vplain(j1, j2, k1, k2)) / se * z0(j1) * z0(j2);
            }
        // Abel rearrangement at fixed j2, finite range, both boundary
        // terms; j2 = k2 keeps the summands in the kernel's bulk
        const int64_t j2 = k2;
        const int64_t A = k1 - w;
        const int64_t B = j2 - 2;
        double lhs = 0.0, rhs = 0.0;
        for (int64_t y = A; y <= B; ++y)
            lhs += vplain(y, j2, k1, k2) * (z0(y + 1) - z0(y));
        for (int64_t y = A + 1; y <= B; ++y) {
            SemigroupQuery g{y - 1, j2, k1, k2, t, GradientSel::Y1};
            rhs -= sg.value(g).value * z0(y);
        }
        rhs += vplain(B, j2, k1, k2) * z0(B + 1) - vplain(A, j2, k1, k2) * z0(A);
        row.sbp_lhs = lhs;
        row.sbp_rhs = rhs;
    }
    return row;
}

// ---- time-averaged moment diagnostics --------------------------------------

struct MomentEstimates {
    double xg_moment = 0.0;   // E[(eps^2 sum_s Zg(s, k1(s), k2(s)))^2]
    double xg_se = 0.0;
    double xgg_moment = 0.0;  // same with Ztilde
    double xgg_se = 0.0;
    std::size_t replicas = 0;
};

inline MomentEstimates time_averaged_moments(const ModelParams& p, const InitialCondition& ic,
                                             int64_t x1_star, int64_t x2_star, int64_t horizon,
                                             std::size_t replicas, uint64_t seed) {
    if (!(std::llabs(x1_star - x2_star) > 1))
        throw std::invalid_argument("time_averaged_moments: need |x1-x2| > 1");
    if (!(x1_star < x2_star)) std::swap(x1_star, x2_star);
    if (!(p.eps > 0.0))
        throw std::invalid_argument("time_averaged_moments: needs weak-asymmetry scaling");
    const double se = std::sqrt(p.eps);
    const int64_t k_max =
        x2_star + 2 + static_cast<int64_t>(std::ceil(p.mu * static_cast<double>(horizon)));
    const bool stationary = ic.kind == InitialCondition::Kind::Bernoulli;
    const int64_t a = stationary ? x1_star - 8
                                 : window_truncation(horizon, x1_star, 1e-10, p, 0.0) - 4;
    const BoundaryPolicy policy =
        stationary ? BoundaryPolicy::BernoulliInject : BoundaryPolicy::LeftFiniteCutoff;

    RunningStats xg, xgg;
    for (std::size_t r = 0; r < replicas; ++r) {
        const CounterRng rng = replica_rng(seed, r);
        HeightField h = HeightField::from_initial(ic, a, k_max, rng, policy,
                                                  RightEdge::Absorb);
        double s_g = 0.0, s_gg = 0.0;
        for (int64_t s = 0; s <= horizon; ++s) {
            const int64_t k1 = compensated_index(x1_star, s, p);
            const int64_t k2 = compensated_index(x2_star, s, p);
            auto z_at = [&](int64_t k) { return detail::z_of(p, s, h.height(k), k); };
            const double z1 = z_at(k1), z2 = z_at(k2);
            s_g += ((z_at(k1 + 1) - z1) / se) * z2;
            s_gg += h.occupancy(k1 + 1) * z1 * h.occupancy(k2 + 1) * z2 -
                    p.rho * p.rho * z1 * z2;
            if (s < horizon) h.parallel_step(p, rng);
        }
        const double e2 = p.eps * p.eps;
        xg.add(e2 * s_g * e2 * s_g);
        xgg.add(e2 * s_gg * e2 * s_gg);
    }
    MomentEstimates out;
    out.xg_moment = xg.mean();
    out.xg_se = xg.stderr_mean();
    out.xgg_moment = xgg.mean();
    out.xgg_se = xgg.stderr_mean();
    out.replicas = replicas;
    return out;
}

} // namespace sixv
