#pragma once

// Independent reference computations used to cross-check the library. Each
// one deliberately takes a different route than the production code:
// quadrature nodes come from an eigenvalue problem instead of Newton
// iteration, basis values from closed-form polynomials, least-squares fits
// from a dense QR factorization.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracles {

struct rule1d {
    std::vector<double> points;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [0,1] via the Golub-Welsch method: nodes are the
/// eigenvalues of the symmetric tridiagonal Jacobi matrix of the Legendre
/// recurrence, weights come from the first eigenvector components.
inline rule1d gauss_golub_welsch(int n) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        double b = i / std::sqrt(4.0 * i * i - 1.0);
        jacobi(i - 1, i) = b;
        jacobi(i, i - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    rule1d r;
    r.points.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // eigenvalues are sorted ascending; map [-1,1] -> [0,1]
        r.points[i] = 0.5 * (es.eigenvalues()[i] + 1.0);
        r.weights[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    }
    return r;
}

/// Orthonormal Legendre polynomials on [0,1] in closed form (first four).
inline double onb_closed_form(int i, double x) {
    double t = 2.0 * x - 1.0;
    switch (i) {
        case 0: return 1.0;
        case 1: return std::sqrt(3.0) * t;
        case 2: return std::sqrt(5.0) * 0.5 * (3.0 * t * t - 1.0);
        case 3: return std::sqrt(7.0) * 0.5 * (5.0 * t * t * t - 3.0 * t);
    }
    throw std::runtime_error("onb_closed_form: only degrees 0..3");
}

/// Derivative of onb_closed_form with respect to x on [0,1].
inline double onb_closed_form_deriv(int i, double x) {
    double t = 2.0 * x - 1.0;
    switch (i) {
        case 0: return 0.0;
        case 1: return std::sqrt(3.0) * 2.0;
        case 2: return std::sqrt(5.0) * 6.0 * t;
        case 3: return std::sqrt(7.0) * (15.0 * t * t - 3.0);
    }
    throw std::runtime_error("onb_closed_form_deriv: only degrees 0..3");
}

/// Slope of the least-squares line rhs_r = x0 + s * (-log(r+1)), solved as an
/// overdetermined system with a rank-revealing QR factorization.
inline double ls_slope_qr(const std::vector<double>& rhs) {
    int n = int(rhs.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (int r = 0; r < n; ++r) {
        a(r, 0) = 1.0;
        a(r, 1) = -std::log(double(r + 1));
        b(r) = rhs[r];
    }
    Eigen::Vector2d sol = a.colPivHouseholderQr().solve(b);
    return sol(1);
}

}  // namespace oracles
