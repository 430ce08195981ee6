#pragma once

// Small statistics toolbox: running moments, chi-square and KS tests,
// least-squares slopes. Nothing here knows about the model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sixv {

class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double stderr_mean() const {
        return n_ > 1 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }
    void merge(const RunningStats& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
        const double d = o.mean_ - mean_;
        const double n = na + nb;
        m2_ += o.m2_ + d * d * na * nb / n;
        mean_ += d * nb / n;
        n_ += o.n_;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Regularized upper incomplete gamma Q(a,x), used for chi-square p-values.
inline double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0) return 1.0;
    auto gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a,x)
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction for Q(a,x)
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// p-value of a chi-square statistic with k degrees of freedom.
inline double chi2_pvalue(double stat, int dof) {
    return gamma_q(0.5 * dof, 0.5 * stat);
}

// Pearson chi-square against given cell probabilities.
inline double chi2_statistic(const std::vector<double>& observed, const std::vector<double>& expected) {
    if (observed.size() != expected.size()) throw std::invalid_argument("chi2: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0) throw std::invalid_argument("chi2: nonpositive expected cell");
        const double d = observed[i] - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov distribution tail Q_KS(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double ks_q(double lambda) {
    if (lambda <= 0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

// One-sample KS test against the standard normal. Returns the p-value.
inline double ks_test_standard_normal(std::vector<double> sample) {
    const std::size_t n = sample.size();
    if (n == 0) throw std::invalid_argument("ks_test: empty sample");
    std::sort(sample.begin(), sample.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    const double rn = std::sqrt(static_cast<double>(n));
    return ks_q((rn + 0.12 + 0.11 / rn) * d);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: bad input");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::fabs(det) < 1e-300) throw std::invalid_argument("least_squares: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// Deterministic pairwise reduction; the result does not depend on how the
// inputs were produced in parallel, only on their order.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

} // namespace sixv
