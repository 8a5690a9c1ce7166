#pragma once

// Gauss-Legendre and Gauss-Lobatto rules on the reference interval [0,1]
// plus tensor-product volume rules on [0,1]^d. Nodes are computed by Newton
// iteration on the Legendre recurrence, which is accurate to machine
// precision for the small orders used here.

#include <cmath>
#include <vector>

#include "rkdg/core.hpp"

namespace rkdg {

/// Legendre polynomial value and derivative at x in [-1,1].
inline std::pair<double, double> legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

struct Rule1d {
    std::vector<double> points;   // in [0,1]
    std::vector<double> weights;  // sum to 1
};

/// n-point Gauss-Legendre rule on [0,1]; exact for polynomials of degree 2n-1.
inline Rule1d gauss_rule(int n) {
    if (n < 1) throw Error("gauss_rule: need at least one point");
    Rule1d r;
    r.points.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            auto [p, dp] = legendre(n, x);
            double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        auto [p, dp] = legendre(n, x);
        (void)p;
        r.points[i] = 0.5 * (x + 1.0);
        r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

/// n-point Gauss-Lobatto rule on [0,1] (includes both endpoints, n >= 2);
/// exact for polynomials of degree 2n-3.
inline Rule1d lobatto_rule(int n) {
    if (n < 2) throw Error("lobatto_rule: need at least two points");
    Rule1d r;
    r.points.resize(n);
    r.weights.resize(n);
    int m = n - 1;
    for (int i = 0; i < n; ++i) {
        double x;
        if (i == 0) {
            x = -1.0;
        } else if (i == n - 1) {
            x = 1.0;
        } else {
            // interior points are the roots of P'_{n-1}
            x = std::cos(M_PI * (m - i) / m);
            for (int it = 0; it < 100; ++it) {
                auto [p, dp] = legendre(m, x);
                // second derivative from the Legendre ODE
                double d2p = (2.0 * x * dp - m * (m + 1) * p) / (1.0 - x * x);
                double dx = dp / d2p;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
        }
        auto [p, dp] = legendre(m, x);
        (void)dp;
        r.points[i] = 0.5 * (x + 1.0);
        r.weights[i] = 1.0 / (m * (m + 1) * p * p);
    }
    return r;
}

/// Tensor-product volume rule on [0,1]^d built from a 1d rule.
struct VolumeRule {
    std::vector<Point> points;
    std::vector<double> weights;  // sum to 1
    int size() const { return int(points.size()); }
};

inline VolumeRule tensor_rule(const Rule1d& line, int dim) {
    VolumeRule r;
    if (dim == 1) {
        for (std::size_t i = 0; i < line.points.size(); ++i) {
            r.points.push_back({line.points[i], 0.0});
            r.weights.push_back(line.weights[i]);
        }
    } else {
        for (std::size_t j = 0; j < line.points.size(); ++j)
            for (std::size_t i = 0; i < line.points.size(); ++i) {
                r.points.push_back({line.points[i], line.points[j]});
                r.weights.push_back(line.weights[i] * line.weights[j]);
            }
    }
    return r;
}

}  // namespace rkdg
