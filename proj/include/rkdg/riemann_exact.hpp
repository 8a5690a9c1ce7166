#pragma once

// Exact solution of the 1d Riemann problem for an ideal gas: Newton
// iteration on the pressure function across the two nonlinear waves,
// then self-similar sampling at x/t. Used as the reference solution for
// shock-tube runs and as an oracle for the approximate fluxes.

#include <cmath>

#include "rkdg/core.hpp"

namespace rkdg {

struct GasState {
    double rho, u, p;  // primitive
};

class RiemannExact {
  public:
    RiemannExact(double gamma, GasState left, GasState right)
        : g_(gamma), L_(left), R_(right) {
        cL_ = std::sqrt(g_ * L_.p / L_.rho);
        cR_ = std::sqrt(g_ * R_.p / R_.rho);
        if (2.0 * (cL_ + cR_) / (g_ - 1.0) <= R_.u - L_.u)
            throw Error("RiemannExact: initial states generate vacuum");
        solve_star();
    }

    double p_star() const { return ps_; }
    double u_star() const { return us_; }

    /// Primitive state on the ray x/t = xi.
    GasState sample(double xi) const {
        if (xi < us_) return sample_left(xi);
        return sample_right(xi);
    }

  private:
    double g_;
    GasState L_, R_;
    double cL_, cR_;
    double ps_ = 0, us_ = 0;

    // f_K(p): velocity change across the wave adjacent to state K
    static double wave_fn(double p, const GasState& s, double c, double g, double* deriv) {
        if (p > s.p) {  // shock
            double A = 2.0 / ((g + 1.0) * s.rho);
            double B = (g - 1.0) / (g + 1.0) * s.p;
            double root = std::sqrt(A / (p + B));
            if (deriv) *deriv = root * (1.0 - 0.5 * (p - s.p) / (B + p));
            return (p - s.p) * root;
        }
        // rarefaction
        double pr = std::pow(p / s.p, (g - 1.0) / (2.0 * g));
        if (deriv) *deriv = 1.0 / (s.rho * c) * std::pow(p / s.p, -(g + 1.0) / (2.0 * g));
        return 2.0 * c / (g - 1.0) * (pr - 1.0);
    }

    void solve_star() {
        // two-rarefaction initial guess, positivity-clamped
        double z = (g_ - 1.0) / (2.0 * g_);
        double p0 = std::pow((cL_ + cR_ - 0.5 * (g_ - 1.0) * (R_.u - L_.u)) /
                                 (cL_ / std::pow(L_.p, z) + cR_ / std::pow(R_.p, z)),
                             1.0 / z);
        double p = std::max(p0, 1e-12);
        for (int it = 0; it < 100; ++it) {
            double dL, dR;
            double f = wave_fn(p, L_, cL_, g_, &dL) + wave_fn(p, R_, cR_, g_, &dR) + (R_.u - L_.u);
            double dp = f / (dL + dR);
            double pn = p - dp;
            if (pn <= 0) pn = 0.5 * p;
            if (std::abs(pn - p) < 1e-14 * (1.0 + pn)) {
                p = pn;
                break;
            }
            p = pn;
        }
        ps_ = p;
        us_ = 0.5 * (L_.u + R_.u) +
              0.5 * (wave_fn(ps_, R_, cR_, g_, nullptr) - wave_fn(ps_, L_, cL_, g_, nullptr));
    }

    GasState sample_left(double xi) const {
        if (ps_ > L_.p) {  // left shock
            double sp = L_.u - cL_ * std::sqrt((g_ + 1.0) / (2.0 * g_) * ps_ / L_.p +
                                               (g_ - 1.0) / (2.0 * g_));
            if (xi < sp) return L_;
            double rho = L_.rho * ((ps_ / L_.p + (g_ - 1.0) / (g_ + 1.0)) /
                                   ((g_ - 1.0) / (g_ + 1.0) * ps_ / L_.p + 1.0));
            return {rho, us_, ps_};
        }
        // left rarefaction
        double head = L_.u - cL_;
        double cs = cL_ * std::pow(ps_ / L_.p, (g_ - 1.0) / (2.0 * g_));
        double tail = us_ - cs;
        if (xi < head) return L_;
        if (xi > tail) {
            double rho = L_.rho * std::pow(ps_ / L_.p, 1.0 / g_);
            return {rho, us_, ps_};
        }
        double u = 2.0 / (g_ + 1.0) * (cL_ + 0.5 * (g_ - 1.0) * L_.u + xi);
        double c = 2.0 / (g_ + 1.0) * (cL_ + 0.5 * (g_ - 1.0) * (L_.u - xi));
        double rho = L_.rho * std::pow(c / cL_, 2.0 / (g_ - 1.0));
        return {rho, u, L_.p * std::pow(c / cL_, 2.0 * g_ / (g_ - 1.0))};
    }

    GasState sample_right(double xi) const {
        if (ps_ > R_.p) {  // right shock
            double sp = R_.u + cR_ * std::sqrt((g_ + 1.0) / (2.0 * g_) * ps_ / R_.p +
                                               (g_ - 1.0) / (2.0 * g_));
            if (xi > sp) return R_;
            double rho = R_.rho * ((ps_ / R_.p + (g_ - 1.0) / (g_ + 1.0)) /
                                   ((g_ - 1.0) / (g_ + 1.0) * ps_ / R_.p + 1.0));
            return {rho, us_, ps_};
        }
        // right rarefaction
        double head = R_.u + cR_;
        double cs = cR_ * std::pow(ps_ / R_.p, (g_ - 1.0) / (2.0 * g_));
        double tail = us_ + cs;
        if (xi > head) return R_;
        if (xi < tail) {
            double rho = R_.rho * std::pow(ps_ / R_.p, 1.0 / g_);
            return {rho, us_, ps_};
        }
        double u = 2.0 / (g_ + 1.0) * (-cR_ + 0.5 * (g_ - 1.0) * R_.u + xi);
        double c = 2.0 / (g_ + 1.0) * (cR_ - 0.5 * (g_ - 1.0) * (R_.u - xi));
        double rho = R_.rho * std::pow(c / cR_, 2.0 / (g_ - 1.0));
        return {rho, u, R_.p * std::pow(c / cR_, 2.0 * g_ / (g_ - 1.0))};
    }
};

}  // namespace rkdg
