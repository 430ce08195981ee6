#pragma once

// Model parameters for the stochastic six vertex model with asymmetry
// b2 < b1, density rho, and the tilt/centering pair (lambda, mu) of the
// associated one-particle walk. Everything is closed-form; the series
// versions live in the tests as independent oracles.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sixv {

struct ModelParams {
    double b1 = 0.0;
    double b2 = 0.0;
    double tau = 0.0;   // b2/b1
    double rho = 0.0;   // density, open interval (0,1)
    double eps = 0.0;   // scaling parameter; 0 means no coupling
    double lambda = 0.0;
    double mu = 0.0;
    bool weak_asymmetry = false;

    // b2 * tau^(-rho); the tilted geometric ratio. Must be < 1.
    double tilt_ratio() const { return b2 * std::pow(tau, -rho); }

    double nu_star() const { return 2.0 * b1 / (1.0 - b1); }

    // Constant in front of Z^2 in the self-averaging statistic.
    double selfav_constant() const { return 2.0 * b1 * rho * (1.0 - rho) / (1.0 + b1); }

    double sqrt_eps() const { return std::sqrt(eps); }

    static ModelParams general(double b1, double b2, double rho) {
        validate_b(b1, b2);
        validate_rho(rho);
        ModelParams p;
        p.b1 = b1;
        p.b2 = b2;
        p.tau = b2 / b1;
        p.rho = rho;
        p.eps = 0.0;
        p.weak_asymmetry = false;
        derive_tilt(p);
        return p;
    }

    // Weak asymmetry coupling: tau = exp(-sqrt(eps)), b2 = b1 * tau.
    static ModelParams weak(double b1, double eps, double rho) {
        if (!(eps > 0.0)) throw std::invalid_argument("weak asymmetry requires eps > 0");
        if (!(b1 > 0.0 && b1 < 1.0)) throw std::invalid_argument("b1 must lie in (0,1)");
        validate_rho(rho);
        ModelParams p;
        p.b1 = b1;
        p.tau = std::exp(-std::sqrt(eps));
        p.b2 = b1 * p.tau;
        p.rho = rho;
        p.eps = eps;
        p.weak_asymmetry = true;
        derive_tilt(p);
        return p;
    }

private:
    static void validate_b(double b1, double b2) {
        if (!(b1 > 0.0 && b1 < 1.0) || !(b2 > 0.0 && b2 < 1.0))
            throw std::invalid_argument("b1, b2 must lie in (0,1)");
        if (!(b2 < b1)) throw std::invalid_argument("asymmetry requires b2 < b1");
    }
    static void validate_rho(double rho) {
        if (!(rho > 0.0 && rho < 1.0))
            throw std::invalid_argument("density rho must lie in the open interval (0,1)");
    }
    static void derive_tilt(ModelParams& p) {
        const auto lm = derive_lambda_mu(p.b1, p.b2, p.rho);
        p.lambda = lm[0];
        p.mu = lm[1];
    }

public:
    // Closed forms for lambda = 1/E[tau^(-rho r)] and mu = E[tilted jump].
    static std::array<double, 2> derive_lambda_mu(double b1, double b2, double rho) {
        validate_b(b1, b2);
        validate_rho(rho);
        const double tau = b2 / b1;
        const double trho = std::pow(tau, -rho);
        const double q = b2 * trho;
        if (!(q < 1.0))
            throw std::domain_error("divergent tilt: b2 * tau^(-rho) >= 1, series does not converge");
        const double denom = b1 - (b1 + b2 - 1.0) * trho;
        const double lambda = (1.0 - q) / denom;
        const double mu = trho * (1.0 - b1) * (1.0 - b2) / (denom * (1.0 - q));
        return {lambda, mu};
    }
};

struct ExpansionRow {
    double eps;
    double lambda_residual;  // lambda_eps - (1 - rho sqrt(eps))
    double mu_residual;      // mu_eps - (1 + (b1 - 2 b1 rho)/(b1 - 1) sqrt(eps))
};

// First-order expansion residuals of (lambda_eps, mu_eps); both are O(eps).
inline std::vector<ExpansionRow> expansion_check(double b1, double rho,
                                                 const std::vector<double>& eps_grid) {
    std::vector<ExpansionRow> rows;
    rows.reserve(eps_grid.size());
    for (double e : eps_grid) {
        ExpansionRow r;
        r.eps = e;
        if (e == 0.0) {
            r.lambda_residual = 0.0;
            r.mu_residual = 0.0;
        } else {
            const auto p = ModelParams::weak(b1, e, rho);
            const double se = std::sqrt(e);
            r.lambda_residual = p.lambda - (1.0 - rho * se);
            r.mu_residual = p.mu - (1.0 + (b1 - 2.0 * b1 * rho) / (b1 - 1.0) * se);
        }
        rows.push_back(r);
    }
    return rows;
}

// ---- vertex weights -------------------------------------------------------
//
// Vertex types in the fixed order of the weight table, encoded as the
// four edge occupancies (vertical-in, horizontal-in, vertical-out,
// horizontal-out):
//   0: 0000 empty            1: 1111 both lines through
//   2: 1010 vertical pass    3: 0101 horizontal pass
//   4: 1001 corner v->h      5: 0110 corner h->v

enum class WeightVariant { Stochastic, Symmetric, Asymmetric };

struct VertexWeights {
    std::array<double, 6> w{};
    WeightVariant variant = WeightVariant::Stochastic;

    static constexpr std::array<std::array<int, 4>, 6> kEdges = {{
        {0, 0, 0, 0}, {1, 1, 1, 1}, {1, 0, 1, 0}, {0, 1, 0, 1}, {1, 0, 0, 1}, {0, 1, 1, 0},
    }};

    static VertexWeights stochastic(double b1, double b2) {
        VertexWeights v;
        v.variant = WeightVariant::Stochastic;
        v.w = {1.0, 1.0, b1, b2, 1.0 - b1, 1.0 - b2};
        return v;
    }
    static VertexWeights symmetric(double a, double b, double c) {
        VertexWeights v;
        v.variant = WeightVariant::Symmetric;
        v.w = {a, a, b, b, c, c};
        return v;
    }
    static VertexWeights asymmetric(double a, double b, double c, double H, double V) {
        VertexWeights v;
        v.variant = WeightVariant::Asymmetric;
        v.w = {std::exp(-H - V) * a, std::exp(H + V) * a,
               std::exp(-H + V) * b, std::exp(H - V) * b, c, c};
        return v;
    }

    // Type index for given inputs/outputs, or -1 if not conservative.
    static int type_of(int v_in, int h_in, int v_out, int h_out) {
        for (int i = 0; i < 6; ++i) {
            const auto& e = kEdges[i];
            if (e[0] == v_in && e[1] == h_in && e[2] == v_out && e[3] == h_out) return i;
        }
        return -1;
    }

    // For fixed inputs, the weights over admissible outputs. Stochastic
    // variants sum to exactly 1 by construction.
    double output_weight(int v_in, int h_in, int v_out, int h_out) const {
        const int t = type_of(v_in, h_in, v_out, h_out);
        return t < 0 ? 0.0 : w[static_cast<std::size_t>(t)];
    }
};

// ---- symmetric <-> stochastic parameter maps ------------------------------

struct SymmetricMap {
    double b1, b2, Delta;
};

inline SymmetricMap map_symmetric_to_stochastic(double a, double b, double c) {
    if (!(a > 0 && b > 0 && c > 0)) throw std::invalid_argument("weights must be positive");
    const double Delta = (a * a + b * b - c * c) / (2.0 * a * b);
    if (!(Delta > 1.0) || !(a > b + c))
        throw std::domain_error("ferroelectric phase requires Delta > 1 and a > b + c");
    const double s = std::sqrt(Delta * Delta - 1.0);
    SymmetricMap m;
    m.Delta = Delta;
    m.b1 = (b / a) * (Delta + s);
    m.b2 = (b / a) * (Delta - s);
    return m;
}

// Inverse direction, normalized to a = 1: b = sqrt(b1 b2),
// c = sqrt((1-b1)(1-b2)), Delta = (b1+b2)/(2 sqrt(b1 b2)).
inline std::array<double, 4> stochastic_to_symmetric(double b1, double b2) {
    const double b = std::sqrt(b1 * b2);
    const double c = std::sqrt((1.0 - b1) * (1.0 - b2));
    return {1.0, b, c, (b1 + b2) / (2.0 * b)};
}

struct BaxterWeights {
    double a, b, c, Delta;
};

inline BaxterWeights baxter_weights(double u, double eta) {
    if (!(u > 0 && eta > 0)) throw std::invalid_argument("Baxter parameters must be positive");
    return {std::sinh(u + eta), std::sinh(u), std::sinh(eta), std::cosh(eta)};
}

// Conical line-density relation h(v) at the ferroelectric/disordered
// interface; sign picks the lens boundary branch.
inline double conical_density(double v, double u, double eta, int sign) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("v must lie in [0,1]");
    if (sign != +1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    const double th = std::tanh(u + eta) * static_cast<double>(sign);
    return v * (1.0 + th) / (1.0 + th * (2.0 * v - 1.0));
}

} // namespace sixv
