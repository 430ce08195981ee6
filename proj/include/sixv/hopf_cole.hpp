#pragma once

// Microscopic Hopf-Cole transform Z(t,x) = lambda^t tau^(N(t,x+mu t) - rho (x+mu t)),
// its martingale increment, the Theta pair driving the quadratic
// covariance, and the self-averaging statistic.
//
// Integer indexing: a site x in Xi(t) is stored by k = x + mu t, so
// Z_t(k) = lambda^t tau^(N(t,k) - rho k). The kernel convolution
// (p * Z)(x - mu) keeps the same integer index k. On windows with
// vacuum left of the edge the convolution tail has a closed form, so
// Theta values are exact, not truncated.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "walk.hpp"

namespace sixv {

struct ThetaPair {
    double theta1 = 0.0;  // lambda/tau Z - (p*Z)
    double theta2 = 0.0;  // -lambda Z + (p*Z)
};

class HopfColeField {
public:
    static HopfColeField transform(const HeightField& h, const ModelParams& p) {
        HopfColeField f;
        f.p_ = p;
        f.t_ = h.t();
        f.lo_ = h.left();
        const auto heights = h.height_table();  // over [a-1, b]
        f.base_height_ = heights.front();
        f.vacuum_left_ = true;
        f.z_.resize(heights.size() - 1);
        const double logtau = std::log(p.tau);
        const double loglam = std::log(p.lambda);
        for (std::size_t i = 0; i < f.z_.size(); ++i) {
            const int64_t k = f.lo_ + static_cast<int64_t>(i);
            f.z_[i] = std::exp(static_cast<double>(f.t_) * loglam +
                               (static_cast<double>(heights[i + 1]) -
                                p.rho * static_cast<double>(k)) * logtau);
        }
        return f;
    }

    // Arbitrary positive table; no vacuum structure assumed, so kernel
    // tails get the tolerance check instead of the closed form.
    static HopfColeField from_table(const ModelParams& p, int64_t t, int64_t lo,
                                    std::vector<double> z) {
        for (double v : z)
            if (!(v > 0.0)) throw std::invalid_argument("hopf-cole field must be positive");
        HopfColeField f;
        f.p_ = p;
        f.t_ = t;
        f.lo_ = lo;
        f.z_ = std::move(z);
        f.vacuum_left_ = false;
        return f;
    }

    const ModelParams& params() const { return p_; }
    int64_t t() const { return t_; }
    int64_t lo() const { return lo_; }
    int64_t hi() const { return lo_ + static_cast<int64_t>(z_.size()) - 1; }

    double Z(int64_t k) const {
        if (k >= lo_ && k <= hi()) return z_[static_cast<std::size_t>(k - lo_)];
        if (k < lo_ && vacuum_left_) return vacuum_Z(k);
        throw std::out_of_range("hopf-cole field: index outside window");
    }

    // (p * Z)(k); exact under a vacuum left edge, otherwise tail-checked.
    double convolve(int64_t k, double tail_tol = 1e-12) const {
        if (k < lo_ || k > hi()) throw std::out_of_range("convolve: index outside window");
        double acc = 0.0;
        const int64_t m0 = k - lo_;
        for (int64_t n = 0; n <= m0; ++n) acc += tilted_pmf(p_, n) * z_[static_cast<std::size_t>(k - n - lo_)];
        if (vacuum_left_) {
            // sum_{n > m0} phat(n) Z_vac(k-n) = lambda (1-b1) b2^{m0} * Z_vac(k)
            // since phat(n) tau^(rho n) = lambda P(r = n).
            acc += p_.lambda * (1.0 - p_.b1) * std::pow(p_.b2, static_cast<double>(m0)) *
                   vacuum_Z(k);
        } else {
            double maxabs = 0.0;
            for (double v : z_) maxabs = std::max(maxabs, std::fabs(v));
            if (u_coeff(p_, m0 + 1) * maxabs > tail_tol)
                throw std::runtime_error("window too small: Hopf-Cole kernel tail exceeds tolerance");
        }
        return acc;
    }

    ThetaPair theta(int64_t k, double tail_tol = 1e-12) const {
        const double conv = convolve(k, tail_tol);
        const double z = Z(k);
        return {p_.lambda / p_.tau * z - conv, -p_.lambda * z + conv};
    }

    // centered occupancy eta-bar+(t, x) for x = k - mu t is eta(t, k+1),
    // recovered from the ratio Z(k+1)/Z(k) = tau^(eta(k+1) - rho).
    int eta_plus(int64_t k) const {
        const double ratio = Z(k + 1) / Z(k);
        const double e = std::log(ratio) / std::log(p_.tau) + p_.rho;
        const int ei = static_cast<int>(std::lround(e));
        if (std::fabs(e - ei) > 1e-6 || (ei != 0 && ei != 1))
            throw std::logic_error("hopf-cole field: spatial ratio is not of the two-value form");
        return ei;
    }

    // N recovered from Z by inverting the transform (round-trip check).
    int64_t height_from_Z(int64_t k) const {
        const double n = (std::log(Z(k)) - static_cast<double>(t_) * std::log(p_.lambda)) /
                             std::log(p_.tau) +
                         p_.rho * static_cast<double>(k);
        const int64_t ni = static_cast<int64_t>(std::llround(n));
        if (std::fabs(n - static_cast<double>(ni)) > 1e-9)
            throw std::logic_error("hopf-cole field: height recovery not integral");
        return ni;
    }

private:
    double vacuum_Z(int64_t k) const {
        return std::exp(static_cast<double>(t_) * std::log(p_.lambda) +
                        (static_cast<double>(base_height_) - p_.rho * static_cast<double>(k)) *
                            std::log(p_.tau));
    }

    ModelParams p_;
    int64_t t_ = 0;
    int64_t lo_ = 0;
    int64_t base_height_ = 0;  // N(t, lo-1), constant in t under cutoff boundaries
    bool vacuum_left_ = false;
    std::vector<double> z_;
};

// m(t,x) = Z(t+1, x-mu) - Z(t,x) - (L Z(t))(x-mu) = Z_{t+1}(k) - (p*Z_t)(k).
inline double martingale_increment(const HopfColeField& before, const HopfColeField& after,
                                   int64_t k) {
    if (after.t() != before.t() + 1)
        throw std::invalid_argument("martingale_increment: fields must be one step apart");
    return after.Z(k) - before.convolve(k);
}

// Exact conditional covariance formula of the increments:
// (b1 tau^(1-rho))^{|k1-k2|} Theta1 Theta2 (k1 ^ k2).
inline double quadvar_formula(const HopfColeField& f, int64_t k1, int64_t k2) {
    const auto& p = f.params();
    const int64_t kmin = std::min(k1, k2);
    const ThetaPair th = f.theta(kmin);
    const double decay = std::pow(p.b1 * std::pow(p.tau, 1.0 - p.rho),
                                  static_cast<double>(std::llabs(k1 - k2)));
    return decay * th.theta1 * th.theta2;
}

inline double covariance_decay_rate(const ModelParams& p) {
    return p.b1 * std::pow(p.tau, 1.0 - p.rho);
}

// sum_y (b1 tau^(1-rho))^{|y|} = (1+q)/(1-q); tends to (1+b1)/(1-b1).
inline double geometric_prefactor_sum(const ModelParams& p) {
    const double q = covariance_decay_rate(p);
    return (1.0 + q) / (1.0 - q);
}

// ---- decomposition diagnostics (Section-7-style, exactly computable parts) --

struct DecompositionResidual {
    double total = 0.0;        // eps^-1 Theta1 Theta2 - c Z^2
    double grad_sq = 0.0;      // (eps^-1/2 grad Z)^2
    double rho_term = 0.0;     // rho (1-rho) Z^2
    double zg_term = 0.0;      // (1-2 rho) * Zg(k, k+1)
    double diag_residual = 0.0;  // grad_sq - rho_term + zg_term, should be O(sqrt(eps)) Z^2
    double z_sq = 0.0;
};

// Note: the diagonal identity carries the coefficient (1 - 2 rho) on the
// Zg term; it collapses at rho = 1/2.
inline DecompositionResidual decomposition_residual(const HopfColeField& f, int64_t k) {
    const auto& p = f.params();
    if (!(p.eps > 0.0))
        throw std::invalid_argument("decomposition_residual: needs weak-asymmetry scaling");
    const double se = std::sqrt(p.eps);
    DecompositionResidual r;
    const double z = f.Z(k);
    r.z_sq = z * z;
    const ThetaPair th = f.theta(k);
    r.total = th.theta1 * th.theta2 / p.eps - p.selfav_constant() * z * z;
    const double gz = (f.Z(k + 1) - z) / se;
    r.grad_sq = gz * gz;
    r.rho_term = p.rho * (1.0 - p.rho) * z * z;
    r.zg_term = (1.0 - 2.0 * p.rho) * gz * f.Z(k + 1);
    r.diag_residual = r.grad_sq - r.rho_term + r.zg_term;
    return r;
}

// Local evaluation of (Z, Theta) at one column straight from a height
// field, without materializing the whole transformed window. Kernel
// terms are cut once they fall below ~1e-17 relative (the summand is
// dominated by b1^n) or closed in the vacuum tail at the window edge.
struct LocalTheta {
    double z = 0.0;
    ThetaPair th;
};

// kernel terms needed by the local Theta evaluation (summand ~ b1^n)
inline int64_t theta_support_cut(const ModelParams& p) {
    return static_cast<int64_t>(std::ceil(17.0 * std::log(10.0) / -std::log(p.b1))) + 2;
}

inline LocalTheta theta_at(const HeightField& h, const ModelParams& p, int64_t k) {
    const double logtau = std::log(p.tau);
    const double loglam = std::log(p.lambda);
    const double t = static_cast<double>(h.t());
    auto Zof = [&](int64_t j) {
        return std::exp(t * loglam +
                        (static_cast<double>(h.height(j)) - p.rho * static_cast<double>(j)) *
                            logtau);
    };
    const int64_t m_cut = theta_support_cut(p);
    const int64_t m0 = k - h.left();
    if (m0 < 0) throw std::out_of_range("theta_at: column left of window");
    const int64_t m = std::min(m_cut, m0);
    if (m == m0 && h.policy() == BoundaryPolicy::BernoulliInject)
        throw std::runtime_error("theta_at: window too small left of the injection edge");
    double conv = 0.0;
    for (int64_t n = 0; n <= m; ++n) conv += tilted_pmf(p, n) * Zof(k - n);
    if (m == m0) {
        // vacuum tail, closed form
        const double z_vac = std::exp(
            t * loglam + (static_cast<double>(h.height(h.left() - 1)) -
                          p.rho * static_cast<double>(k)) * logtau);
        conv += p.lambda * (1.0 - p.b1) * std::pow(p.b2, static_cast<double>(m0)) * z_vac;
    }
    LocalTheta out;
    out.z = Zof(k);
    out.th = {p.lambda / p.tau * out.z - conv, -p.lambda * out.z + conv};
    return out;
}

// ---- self-averaging statistic --------------------------------------------

struct SelfAvgStatistic {
    double eps = 0.0;
    int64_t horizon = 0;
    int64_t x_star = 0;
    std::size_t replicas = 0;
    double l2_estimate = 0.0;   // sqrt(E[X^2]) of the time-averaged deviation
    double std_error = 0.0;     // delta-method error of the estimate
};

// Monte Carlo estimate of
//   || eps^2 sum_{s<=t} (eps^-1 Theta1 Theta2 - c Z^2)(s, x* - mu s + floor(mu s)) ||_2 .
// The evaluation column at step s has integer index x* + floor(mu s).
inline SelfAvgStatistic self_averaging_stat(const ModelParams& p, const InitialCondition& ic,
                                            int64_t horizon, int64_t x_star,
                                            std::size_t replicas, uint64_t seed) {
    if (!(p.eps > 0.0))
        throw std::invalid_argument("self_averaging_stat: needs weak-asymmetry scaling");
    const double c = p.selfav_constant();
    const int64_t k_max = x_star + static_cast<int64_t>(std::ceil(p.mu * static_cast<double>(horizon))) + 2;
    // Bernoulli starts use the exact flux-injection boundary (the window
    // law equals the bi-infinite stationary law); other starts fall back
    // to the influence-bound cutoff
    const int64_t margin = std::max(kernel_support_length(p, 1e-15), theta_support_cut(p)) + 8;
    const bool stationary = ic.kind == InitialCondition::Kind::Bernoulli;
    const int64_t a = stationary ? x_star - margin
                                 : std::min(window_truncation(horizon, x_star, 1e-10, p, 0.0),
                                            x_star - margin);
    const BoundaryPolicy policy =
        stationary ? BoundaryPolicy::BernoulliInject : BoundaryPolicy::LeftFiniteCutoff;

    std::vector<double> sq(replicas, 0.0);
    double mean_sq = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
        const CounterRng rng = replica_rng(seed, r);
        HeightField h = HeightField::from_initial(ic, a, k_max + 1, rng, policy,
                                                  RightEdge::Absorb);
        double acc = 0.0;
        for (int64_t s = 0; s <= horizon; ++s) {
            const int64_t k = compensated_index(x_star, s, p);
            const LocalTheta lt = theta_at(h, p, k);
            acc += lt.th.theta1 * lt.th.theta2 / p.eps - c * lt.z * lt.z;
            if (s < horizon) h.parallel_step(p, rng);
        }
        const double x = p.eps * p.eps * acc;
        sq[r] = x * x;
        const double d = sq[r] - mean_sq;
        mean_sq += d / static_cast<double>(r + 1);
        m2 += d * (sq[r] - mean_sq);
    }
    SelfAvgStatistic out;
    out.eps = p.eps;
    out.horizon = horizon;
    out.x_star = x_star;
    out.replicas = replicas;
    out.l2_estimate = std::sqrt(std::max(0.0, mean_sq));
    if (replicas > 1 && out.l2_estimate > 0.0) {
        const double se_meansq = std::sqrt(m2 / static_cast<double>(replicas - 1) /
                                           static_cast<double>(replicas));
        out.std_error = se_meansq / (2.0 * out.l2_estimate);
    }
    return out;
}

} // namespace sixv
