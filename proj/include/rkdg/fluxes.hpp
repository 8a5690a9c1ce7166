#pragma once

// Numerical face fluxes. Advective: local Lax-Friedrichs (default) and HLL
// with Einfeldt-style speed bounds (gas dynamics only, needs the model's
// primitive decomposition). Diffusive: symmetric interior penalty built from
// the model's viscous flux; the symmetrizing gradient term it pairs with is
// assembled by the spatial operator.

#include <algorithm>
#include <cmath>
#include <string>

#include "rkdg/model.hpp"

namespace rkdg {

enum class AdvectiveFlux { llf, hll };
enum class DiffusiveFlux { interior_penalty };

inline AdvectiveFlux parse_advective_flux(const std::string& s) {
    if (s == "llf" || s == "rusanov") return AdvectiveFlux::llf;
    if (s == "hll") return AdvectiveFlux::hll;
    throw Error("unknown advective flux: " + s);
}

/// F_hat . n for the advective part; `lambda` returns the fastest signal
/// speed seen at this point (feeds the time step estimate).
inline StateVec advective_flux(AdvectiveFlux kind, const ModelSpec& m, double t, const Point& x,
                               const StateVec& uL, const StateVec& uR, const Point& n,
                               double& lambda) {
    FluxMat fL = m.flux_c(t, x, uL);
    FluxMat fR = m.flux_c(t, x, uR);
    if (kind == AdvectiveFlux::llf) {
        double le = std::max(m.max_wave_speed(t, x, uL, n), m.max_wave_speed(t, x, uR, n));
        lambda = le;
        StateVec flux = fL.apply(n) + fR.apply(n);
        flux *= 0.5;
        flux += (0.5 * le) * (uL - uR);
        return flux;
    }
    // hll
    if (!m.primitive)
        throw Error("hll flux requires a model with a primitive decomposition");
    double rL, pL, rR, pR;
    Point vL, vR;
    m.primitive(uL, rL, vL, pL);
    m.primitive(uR, rR, vR, pR);
    // recover sound speeds from the model's wave speed bound
    double cL = m.max_wave_speed(t, x, uL, n) - std::abs(dot(vL, n));
    double cR = m.max_wave_speed(t, x, uR, n) - std::abs(dot(vR, n));
    double sL = std::min(dot(vL, n) - cL, dot(vR, n) - cR);
    double sR = std::max(dot(vL, n) + cL, dot(vR, n) + cR);
    lambda = std::max(std::abs(sL), std::abs(sR));
    if (sL >= 0) return fL.apply(n);
    if (sR <= 0) return fR.apply(n);
    StateVec flux = (sR * fL.apply(n)) - (sL * fR.apply(n)) + (sL * sR) * (uR - uL);
    flux *= 1.0 / (sR - sL);
    return flux;
}

/// Default interior-penalty coefficient for degree k in d dimensions.
inline double default_penalty(int k, int d) { return double((k + 1) * (k + d)) / double(d); }

/// F_hat_v . n: average viscous flux minus the penalty, which reuses the
/// model's viscous flux with the jump outer product in the gradient slot so
/// nonlinear diffusion is penalized consistently.
inline StateVec diffusive_flux(const ModelSpec& m, double t, const Point& x, const StateVec& uL,
                               const FluxMat& gL, const StateVec& uR, const FluxMat& gR,
                               const Point& n, double h_face, double penalty) {
    StateVec avg = m.flux_v(t, x, uL, gL).apply(n) + m.flux_v(t, x, uR, gR).apply(n);
    avg *= 0.5;
    StateVec mid = uL + uR;
    mid *= 0.5;
    FluxMat jump_n = FluxMat::outer(uL - uR, n, m.dim);
    StateVec pen = m.flux_v(t, x, mid, jump_n).apply(n);
    pen *= penalty / h_face;
    return avg - pen;
}

}  // namespace rkdg
