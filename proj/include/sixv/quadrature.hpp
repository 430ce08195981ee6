#pragma once

// Trapezoidal contour quadrature on origin-centered circles. For
// integrands analytic in a neighborhood of the contour the rule
// converges geometrically in the node count, so adaptivity is plain
// doubling until two levels agree.
//
// Normalization: integrate(f, ...) returns (1/2*pi*i) * closed integral
// of f(z) dz, i.e. the sum of enclosed residues.

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sixv {

using cplx = std::complex<double>;

struct ContourSpec {
    double radius = 2.0;
    int start_nodes = 256;
    int max_nodes = 65536;
    double rel_tol = 1e-10;
    bool adaptive = true;
};

struct QuadValue {
    cplx value{0.0, 0.0};
    int nodes = 0;
    double est_error = 0.0;
    bool converged = true;
};

inline std::vector<cplx> circle_nodes(double radius, int m) {
    std::vector<cplx> z(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double th = 2.0 * M_PI * j / m;
        z[static_cast<std::size_t>(j)] = std::polar(radius, th);
    }
    return z;
}

// (1/2*pi*i) closed integral of f(z) dz  ==  mean over nodes of f(z) * z.
template <typename F>
QuadValue contour_integral(F&& f, const ContourSpec& c) {
    if (c.start_nodes < 4) throw std::invalid_argument("contour_integral: too few nodes");
    int m = c.start_nodes;
    auto eval = [&](int nodes) {
        const auto z = circle_nodes(c.radius, nodes);
        cplx acc{0.0, 0.0};
        for (const auto& zi : z) acc += f(zi) * zi;
        return acc / static_cast<double>(nodes);
    };
    cplx prev = eval(m);
    if (!c.adaptive) return {prev, m, 0.0, true};
    while (m < c.max_nodes) {
        m *= 2;
        const cplx cur = eval(m);
        const double err = std::abs(cur - prev);
        if (err <= c.rel_tol * std::max(1.0, std::abs(cur)))
            return {cur, m, err, true};
        prev = cur;
    }
    return {prev, m, std::abs(prev), false};
}

// Same rule on the product of two circles of a common radius.
template <typename F>
QuadValue contour_integral2(F&& f, const ContourSpec& c) {
    int m = c.start_nodes;
    auto eval = [&](int nodes) {
        const auto z = circle_nodes(c.radius, nodes);
        cplx acc{0.0, 0.0};
        for (const auto& z1 : z) {
            cplx inner{0.0, 0.0};
            for (const auto& z2 : z) inner += f(z1, z2) * z2;
            acc += inner * z1;
        }
        return acc / (static_cast<double>(nodes) * static_cast<double>(nodes));
    };
    cplx prev = eval(m);
    if (!c.adaptive) return {prev, m, 0.0, true};
    while (m < c.max_nodes) {
        m *= 2;
        const cplx cur = eval(m);
        const double err = std::abs(cur - prev);
        if (err <= c.rel_tol * std::max(1.0, std::abs(cur)))
            return {cur, m, err, true};
        prev = cur;
    }
    return {prev, m, std::abs(prev), false};
}

// Result wrapper shared by the kernel evaluators: real value plus the
// imaginary part that was discarded.
struct KernelValue {
    double value = 0.0;
    double imag_residual = 0.0;
    int nodes = 0;
    double est_error = 0.0;
    bool converged = true;

    static KernelValue from(const QuadValue& q) {
        KernelValue k;
        k.value = q.value.real();
        k.imag_residual = std::fabs(q.value.imag());
        k.nodes = q.nodes;
        k.est_error = q.est_error;
        k.converged = q.converged;
        return k;
    }
    bool accepted(double tol = 1e-8) const {
        return converged && imag_residual < tol * std::max(1.0, std::fabs(value));
    }
};

} // namespace sixv
