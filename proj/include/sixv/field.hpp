#pragma once

// The scaled empirical distribution of incoming vertical lines and the
// C^-1-type seminorm used to quantify it. Test functions are smooth
// compactly supported bumps, normalized so that the sup norm plus the
// x-derivative sup norm is 1.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace sixv {

// Smooth compactly supported test function of two reals.
class TestFunction {
public:
    // Tensor bump exp(-1/(1-u^2)) in each scaled coordinate, supported
    // on |x - cx| < wx, |y - cy| < wy.
    static TestFunction bump(double cx, double cy, double wx, double wy) {
        TestFunction f;
        f.cx_ = cx; f.cy_ = cy; f.wx_ = wx; f.wy_ = wy;
        f.name_ = "bump";
        f.normalize();
        return f;
    }

    double operator()(double x, double y) const {
        return scale_ * raw(x, y);
    }
    double dx(double x, double y) const {
        const double u = (x - cx_) / wx_, v = (y - cy_) / wy_;
        if (std::fabs(u) >= 1.0 || std::fabs(v) >= 1.0) return 0.0;
        const double du = -2.0 * u / ((1.0 - u * u) * (1.0 - u * u));
        return scale_ * bump1(u) * du / wx_ * bump1(v);
    }
    double sup_norm() const { return scale_ * sup_raw_; }
    double dx_sup_norm() const { return scale_ * dsup_raw_; }
    double support_x_lo() const { return cx_ - wx_; }
    double support_x_hi() const { return cx_ + wx_; }
    double support_y_lo() const { return cy_ - wy_; }
    double support_y_hi() const { return cy_ + wy_; }
    const std::string& name() const { return name_; }

private:
    static double bump1(double u) {
        const double s = 1.0 - u * u;
        return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
    }
    double raw(double x, double y) const {
        const double u = (x - cx_) / wx_, v = (y - cy_) / wy_;
        if (std::fabs(u) >= 1.0 || std::fabs(v) >= 1.0) return 0.0;
        return bump1(u) * bump1(v);
    }
    void normalize() {
        // grid maxima of |f| and |df/dx|; the bump's extrema are interior
        double fmax = 0.0, dmax = 0.0;
        for (int i = -200; i <= 200; ++i) {
            const double u = i / 200.0 * 0.999;
            const double f1 = bump1(u);
            fmax = std::max(fmax, f1);
            const double du = -2.0 * u / ((1.0 - u * u) * (1.0 - u * u));
            dmax = std::max(dmax, std::fabs(f1 * du));
        }
        sup_raw_ = fmax * fmax;  // peak of the tensor product
        dsup_raw_ = dmax * fmax / wx_;
        scale_ = 1.0 / (sup_raw_ + dsup_raw_);
    }

    double cx_ = 0, cy_ = 0, wx_ = 1, wy_ = 1;
    double sup_raw_ = 1, dsup_raw_ = 1, scale_ = 1;
    std::string name_;
};

// Centered incoming-vertical-line indicators u(x,y) - v of a stationary
// trajectory; u(x,y) = eta(y, x) in particle terms. Lattice box
// x in [x_lo, x_hi], y in [0, y_hi].
struct EmpiricalField {
    double eps = 0.0;
    double v = 0.0;
    double mu = 0.0;  // characteristic slope used in the tilt
    int64_t x_lo = 0, x_hi = 0;
    int64_t y_hi = 0;
    std::vector<uint8_t> occ;  // eta(y, x); index (y, x)

    std::size_t idx(int64_t x, int64_t y) const {
        return static_cast<std::size_t>(y) *
                   static_cast<std::size_t>(x_hi - x_lo + 1) +
               static_cast<std::size_t>(x - x_lo);
    }
    double centered(int64_t x, int64_t y) const {
        return static_cast<double>(occ[idx(x, y)]) - v;
    }
};

// Simulate the stationary model and collect the field on a box sized to
// cover the tilted support of test functions scaled by eps.
inline EmpiricalField sample_empirical_field(const ModelParams& p, double v, double x_extent,
                                             double y_extent, const CounterRng& rng) {
    if (!(p.eps > 0.0))
        throw std::invalid_argument("empirical field: needs weak-asymmetry scaling");
    EmpiricalField f;
    f.eps = p.eps;
    f.v = v;
    f.mu = p.mu;
    f.y_hi = static_cast<int64_t>(std::ceil(y_extent / (p.eps * p.eps)));
    const int64_t x_half = static_cast<int64_t>(std::ceil(x_extent / p.eps)) + 2;
    const int64_t drift = static_cast<int64_t>(std::ceil(p.mu * static_cast<double>(f.y_hi))) + 2;
    f.x_lo = window_truncation(f.y_hi, -x_half, 1e-10, p);
    f.x_hi = x_half + drift;
    f.occ.resize(static_cast<std::size_t>(f.x_hi - f.x_lo + 1) *
                 static_cast<std::size_t>(f.y_hi + 1));

    HeightField h = HeightField::from_initial(InitialCondition::bernoulli(v), f.x_lo, f.x_hi, rng,
                                              BoundaryPolicy::LeftFiniteCutoff, RightEdge::Absorb);
    for (int64_t y = 0; y <= f.y_hi; ++y) {
        for (int64_t x = f.x_lo; x <= f.x_hi; ++x) f.occ[f.idx(x, y)] = h.occupancy(x);
        if (y < f.y_hi) h.parallel_step(p, rng);
    }
    return f;
}

// <U_eps, f> = eps^(5/2) sum (u(x,y) - v) f(eps (x - mu y), eps^2 y).
inline double empirical_pairing(const EmpiricalField& field, const TestFunction& f) {
    const double eps = field.eps;
    const double e2 = eps * eps;
    // support escape check: the tilted support must sit inside the box
    const int64_t y_lo_need = static_cast<int64_t>(std::floor(std::max(0.0, f.support_y_lo()) / e2));
    const int64_t y_hi_need =
        std::min<int64_t>(field.y_hi, static_cast<int64_t>(std::ceil(f.support_y_hi() / e2)));
    for (int64_t y : {y_lo_need, y_hi_need}) {
        const double drift = field.mu * static_cast<double>(y);
        const int64_t xl = static_cast<int64_t>(std::floor(f.support_x_lo() / eps + drift));
        const int64_t xh = static_cast<int64_t>(std::ceil(f.support_x_hi() / eps + drift));
        if (xl < field.x_lo || xh > field.x_hi)
            throw std::runtime_error("empirical pairing: test function support escapes the box");
    }
    if (f.support_y_hi() / e2 > static_cast<double>(field.y_hi) + 0.5)
        throw std::runtime_error("empirical pairing: test function support escapes the box");

    double acc = 0.0;
    for (int64_t y = std::max<int64_t>(0, y_lo_need); y <= y_hi_need; ++y) {
        const double drift = field.mu * static_cast<double>(y);
        const double fy = e2 * static_cast<double>(y);
        const int64_t xl =
            std::max(field.x_lo, static_cast<int64_t>(std::floor(f.support_x_lo() / eps + drift)));
        const int64_t xh =
            std::min(field.x_hi, static_cast<int64_t>(std::ceil(f.support_x_hi() / eps + drift)));
        for (int64_t x = xl; x <= xh; ++x) {
            const double fx = eps * (static_cast<double>(x) - field.mu * static_cast<double>(y));
            acc += field.centered(x, y) * f(fx, fy);
        }
    }
    return std::pow(eps, 2.5) * acc;
}

// <U, f_delta> with f_delta(x, y) = f(x/delta, y); delta = 1 recovers the
// plain pairing up to the support handling.
inline double empirical_pairing_scaled(const EmpiricalField& field, const TestFunction& f,
                                       double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("pairing: delta outside (0,1]");
    const double eps = field.eps;
    const double e2 = eps * eps;
    double acc = 0.0;
    const int64_t y_hi_need =
        std::min<int64_t>(field.y_hi, static_cast<int64_t>(std::ceil(f.support_y_hi() / e2)));
    for (int64_t y = std::max<int64_t>(
             0, static_cast<int64_t>(std::floor(std::max(0.0, f.support_y_lo()) / e2)));
         y <= y_hi_need; ++y) {
        const double drift = field.mu * static_cast<double>(y);
        const double fy = e2 * static_cast<double>(y);
        const int64_t xl = std::max(
            field.x_lo, static_cast<int64_t>(std::floor(delta * f.support_x_lo() / eps + drift)));
        const int64_t xh = std::min(
            field.x_hi, static_cast<int64_t>(std::ceil(delta * f.support_x_hi() / eps + drift)));
        for (int64_t x = xl; x <= xh; ++x) {
            const double fx = eps * (static_cast<double>(x) - field.mu * static_cast<double>(y));
            acc += field.centered(x, y) * f(fx / delta, fy);
        }
    }
    return std::pow(eps, 2.5) * acc;
}

// Documented lower bound of the C^-1 seminorm: max over a fixed family
// and delta grid of |<U, f_delta>| * delta.
struct SeminormResult {
    double value = 0.0;
    double best_delta = 0.0;
    std::size_t best_index = 0;
};

inline SeminormResult cminus1_seminorm(const EmpiricalField& field,
                                       const std::vector<TestFunction>& family,
                                       const std::vector<double>& delta_grid) {
    if (family.empty() || delta_grid.empty())
        throw std::invalid_argument("seminorm: empty family or grid");
    SeminormResult best;
    for (double d : delta_grid) {
        for (std::size_t i = 0; i < family.size(); ++i) {
            const double val = std::fabs(empirical_pairing_scaled(field, family[i], d)) * d;
            if (val > best.value) {
                best.value = val;
                best.best_delta = d;
                best.best_index = i;
            }
        }
    }
    return best;
}

// Seminorm of the difference of two independent fields: the pairing is
// linear, so <U - U', f_delta> is the difference of pairings.
inline SeminormResult cminus1_seminorm_difference(const EmpiricalField& a,
                                                  const EmpiricalField& b,
                                                  const std::vector<TestFunction>& family,
                                                  const std::vector<double>& delta_grid) {
    if (family.empty() || delta_grid.empty())
        throw std::invalid_argument("seminorm: empty family or grid");
    SeminormResult best;
    for (double d : delta_grid) {
        for (std::size_t i = 0; i < family.size(); ++i) {
            const double val = std::fabs(empirical_pairing_scaled(a, family[i], d) -
                                         empirical_pairing_scaled(b, family[i], d)) * d;
            if (val > best.value) {
                best.value = val;
                best.best_delta = d;
                best.best_index = i;
            }
        }
    }
    return best;
}

// The documented default family: tensor bumps at 3 widths x 5 translates.
inline std::vector<TestFunction> default_test_family(double ell) {
    std::vector<TestFunction> fam;
    for (double w : {ell, ell / 2.0, ell / 4.0})
        for (int k = -2; k <= 2; ++k)
            fam.push_back(TestFunction::bump(k * ell / 3.0, ell / 2.0, w, ell / 2.0));
    return fam;
}

} // namespace sixv
