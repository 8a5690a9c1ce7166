#pragma once

// Problem description consumed by the spatial operator:
//   d_t U = -div( F_c(t,x,U) - F_v(t,x,U,grad U) ) + S_i + S_e
// All physics enters through host-language callbacks; absent callbacks are
// empty std::functions. Models also carry the domain, initial/boundary data,
// limiter hooks (jump measure, velocity, physicality, bounds) and an
// optional scalar indicator triple used by the residual-based estimator.

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "rkdg/core.hpp"
#include "rkdg/function.hpp"

namespace rkdg {

/// Boundary data for one boundary id: either an exterior state (Dirichlet,
/// fed to the numerical flux) or prescribed normal fluxes.
struct BoundaryCondition {
    std::function<StateVec(double t, const Point& x, const StateVec& u_in)> dirichlet;
    std::function<StateVec(double t, const Point& x, const StateVec& u_in, const Point& n)>
        advective_flux;
    std::function<StateVec(double t, const Point& x, const StateVec& u_in, const FluxMat& grad_in,
                           const Point& n)>
        diffusive_flux;

    static BoundaryCondition state(
        std::function<StateVec(double, const Point&, const StateVec&)> fn) {
        BoundaryCondition bc;
        bc.dirichlet = std::move(fn);
        return bc;
    }
};

/// Scalar quantity eta with flux and source, advanced alongside the solution
/// by the residual estimator: d_t eta + div F = S.
struct IndicatorSpec {
    std::function<double(double t, const Point& x, const StateVec& u)> eta;
    std::function<Point(double t, const Point& x, const StateVec& u, const FluxMat& grad)> flux;
    std::function<double(double t, const Point& x, const StateVec& u, const FluxMat& grad)> source;
    bool present() const { return bool(eta); }
};

struct ModelSpec {
    std::string name;
    int dim = 2;
    int components = 1;
    double end_time = 1.0;

    // default domain; run configuration may override the base resolution
    Point domain_lo = {0, 0};
    Point domain_hi = {1, 1};
    std::array<int, 2> cells = {1, 1};
    std::array<bool, 2> periodic = {false, false};

    std::function<FluxMat(double t, const Point& x, const StateVec& u)> flux_c;
    std::function<FluxMat(double t, const Point& x, const StateVec& u, const FluxMat& grad)> flux_v;
    std::function<StateVec(double t, const Point& x, const StateVec& u, const FluxMat& grad)>
        source_e;  // explicit source
    std::function<StateVec(double t, const Point& x, const StateVec& u, const FluxMat& grad)>
        source_i;  // implicit source
    /// Largest signal speed of F_c in direction n (exact or upper bound).
    std::function<double(double t, const Point& x, const StateVec& u, const Point& n)>
        max_wave_speed;

    // limiter hooks
    std::function<Point(double t, const Point& x, const StateVec& u)> velocity;
    std::function<double(const StateVec& u, const StateVec& v)> jump;
    std::function<bool(double t, const Point& x, const StateVec& u)> physical;
    std::optional<StateVec> lower_bound, upper_bound;

    SpatialFn initial;
    std::function<StateVec(double t, const Point& x)> exact;  // optional reference solution
    std::map<int, BoundaryCondition> boundary;
    IndicatorSpec indicator;

    /// Conserved -> (rho, velocity, pressure); set by gas-dynamics models,
    /// required by wave-speed-resolving fluxes (hll).
    std::function<void(const StateVec& u, double& rho, Point& v, double& p)> primitive;

    bool has_advection() const { return bool(flux_c); }
    bool has_diffusion() const { return bool(flux_v); }

    void validate() const {
        if (dim < 1 || dim > 2) throw Error("model '" + name + "': dim must be 1 or 2");
        if (components < 1 || components > max_components)
            throw Error("model '" + name + "': components out of range");
        if (!flux_c && !flux_v)
            throw Error("model '" + name + "': needs at least one of F_c, F_v");
        if (flux_c && !max_wave_speed)
            throw Error("model '" + name + "': F_c requires max_wave_speed");
        if (!initial) throw Error("model '" + name + "': missing initial data");
        if (!(end_time > 0)) throw Error("model '" + name + "': end_time must be positive");
    }
};

}  // namespace rkdg
