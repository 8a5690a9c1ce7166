#pragma once

// Built-in problem setups: rotating scalar advection (three-body /
// rotating-hump / 1d sine), compressible Euler presets (Sod tube, planar and
// cylindrical shock-bubble interaction, Kelvin-Helmholtz), compressible
// Navier-Stokes, a 1d heat equation, and a three-species
// advection-diffusion-reaction system.

#include <cmath>

#include "rkdg/model.hpp"
#include "rkdg/riemann_exact.hpp"

namespace rkdg {
namespace models {

// ---------------------------------------------------------------------------
// scalar advection in a rotating velocity field around (1/2, 1/2)
// ---------------------------------------------------------------------------

inline Point rotation_velocity(const Point& x) { return {-(x[1] - 0.5), x[0] - 0.5}; }

inline double hump(const Point& x) {
    double dx = x[0] - 0.25, dy = x[1] - 0.5;
    double r2 = dx * dx + dy * dy;
    if (r2 >= 0.01) return 0.0;
    return (2.0 / 3.0) * (0.5 + std::cos(M_PI * std::sqrt(r2) / 0.15));
}

inline double slotted_cylinder(const Point& x) {
    double dx = x[0] - 0.5, dy = x[1] - 0.75;
    if (dx * dx + dy * dy >= 0.01) return 0.0;
    return (std::abs(x[0] - 0.5) >= 0.02 || x[1] >= 0.8) ? 1.0 : 0.0;
}

inline double cube(const Point& x) {
    return (x[0] > 0.6 && x[0] < 0.8 && x[1] > 0.2 && x[1] < 0.4) ? 1.0 : 0.0;
}

inline ModelSpec rotating_advection_base() {
    ModelSpec m;
    m.dim = 2;
    m.components = 1;
    m.domain_lo = {0, 0};
    m.domain_hi = {1, 1};
    m.cells = {40, 40};
    m.flux_c = [](double, const Point& x, const StateVec& u) {
        Point v = rotation_velocity(x);
        FluxMat f(1, 2);
        f(0, 0) = v[0] * u[0];
        f(0, 1) = v[1] * u[0];
        return f;
    };
    m.max_wave_speed = [](double, const Point& x, const StateVec&, const Point& n) {
        return std::abs(dot(rotation_velocity(x), n));
    };
    m.velocity = [](double, const Point& x, const StateVec&) { return rotation_velocity(x); };
    m.jump = [](const StateVec& u, const StateVec& v) { return u[0] - v[0]; };
    m.physical = [](double, const Point&, const StateVec& u) {
        return u[0] > -1e-8 && u[0] < 1.0 + 1e-8;
    };
    m.lower_bound = StateVec{0.0};
    m.upper_bound = StateVec{1.0};
    for (int id = 1; id <= 4; ++id)
        m.boundary[id] = BoundaryCondition::state(
            [](double, const Point&, const StateVec&) { return StateVec{0.0}; });
    m.indicator.eta = [](double, const Point&, const StateVec& u) { return u[0]; };
    m.indicator.flux = [](double, const Point& x, const StateVec& u, const FluxMat&) {
        Point v = rotation_velocity(x);
        return Point{v[0] * u[0], v[1] * u[0]};
    };
    m.indicator.source = [](double, const Point&, const StateVec&, const FluxMat&) { return 0.0; };
    return m;
}

/// Cube, slotted cylinder and smooth hump revolving about the domain center.
inline ModelSpec three_body() {
    ModelSpec m = rotating_advection_base();
    m.name = "three_body";
    m.end_time = M_PI;  // half revolution
    m.initial = [](const Point& x) { return StateVec{cube(x) + slotted_cylinder(x) + hump(x)}; };
    m.exact = [initial = m.initial](double t, const Point& x) {
        double c = std::cos(-t), s = std::sin(-t);
        double dx = x[0] - 0.5, dy = x[1] - 0.5;
        return initial(Point{0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy});
    };
    return m;
}

/// Smooth hump only; used for convergence studies.
inline ModelSpec rotating_hump() {
    ModelSpec m = rotating_advection_base();
    m.name = "rotating_hump";
    m.end_time = 0.5 * M_PI;
    m.initial = [](const Point& x) { return StateVec{hump(x)}; };
    m.exact = [initial = m.initial](double t, const Point& x) {
        double c = std::cos(-t), s = std::sin(-t);
        double dx = x[0] - 0.5, dy = x[1] - 0.5;
        return initial(Point{0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy});
    };
    return m;
}

/// sin(2 pi x) advected with unit speed on the periodic unit interval.
inline ModelSpec advection_sin_1d() {
    ModelSpec m;
    m.name = "advection_sin_1d";
    m.dim = 1;
    m.components = 1;
    m.end_time = 0.5;
    m.domain_lo = {0, 0};
    m.domain_hi = {1, 1};
    m.cells = {16, 1};
    m.periodic = {true, false};
    m.flux_c = [](double, const Point&, const StateVec& u) {
        FluxMat f(1, 1);
        f(0, 0) = u[0];
        return f;
    };
    m.max_wave_speed = [](double, const Point&, const StateVec&, const Point& n) {
        return std::abs(n[0]);
    };
    m.velocity = [](double, const Point&, const StateVec&) { return Point{1.0, 0.0}; };
    m.jump = [](const StateVec& u, const StateVec& v) { return u[0] - v[0]; };
    m.lower_bound = StateVec{-1.0};
    m.upper_bound = StateVec{1.0};
    m.initial = [](const Point& x) { return StateVec{std::sin(2.0 * M_PI * x[0])}; };
    m.exact = [](double t, const Point& x) { return StateVec{std::sin(2.0 * M_PI * (x[0] - t))}; };
    m.indicator.eta = [](double, const Point&, const StateVec& u) { return u[0]; };
    m.indicator.flux = [](double, const Point&, const StateVec& u, const FluxMat&) {
        return Point{u[0], 0.0};
    };
    m.indicator.source = [](double, const Point&, const StateVec&, const FluxMat&) { return 0.0; };
    return m;
}

/// u_t = eps u_xx on (0,1) with homogeneous Dirichlet data.
inline ModelSpec heat_1d(double eps = 0.05) {
    ModelSpec m;
    m.name = "heat_1d";
    m.dim = 1;
    m.components = 1;
    m.end_time = 0.05;
    m.domain_lo = {0, 0};
    m.domain_hi = {1, 1};
    m.cells = {16, 1};
    m.flux_v = [eps](double, const Point&, const StateVec&, const FluxMat& g) {
        FluxMat f(1, 1);
        f(0, 0) = eps * g(0, 0);
        return f;
    };
    m.initial = [](const Point& x) { return StateVec{std::sin(2.0 * M_PI * x[0])}; };
    m.exact = [eps](double t, const Point& x) {
        return StateVec{std::exp(-4.0 * M_PI * M_PI * eps * t) * std::sin(2.0 * M_PI * x[0])};
    };
    for (int id = 1; id <= 2; ++id)
        m.boundary[id] = BoundaryCondition::state(
            [](double, const Point&, const StateVec&) { return StateVec{0.0}; });
    return m;
}

// ---------------------------------------------------------------------------
// compressible Euler equations
// ---------------------------------------------------------------------------

/// (rho, v, p) -> conserved (rho, rho v, rho E).
inline StateVec euler_to_cons(int dim, double gamma, double rho, const Point& v, double p) {
    StateVec u(dim + 2);
    u[0] = rho;
    double kin = 0;
    for (int a = 0; a < dim; ++a) {
        u[1 + a] = rho * v[a];
        kin += v[a] * v[a];
    }
    u[dim + 1] = p / (gamma - 1.0) + 0.5 * rho * kin;
    return u;
}

/// Conserved -> (rho, v, p); rejects non-positive density.
inline void euler_primitive(int dim, double gamma, const StateVec& u, double& rho, Point& v,
                            double& p) {
    rho = u[0];
    if (!(rho > 0)) throw Error("euler_primitive: non-positive density");
    double kin = 0;
    v = {0, 0};
    for (int a = 0; a < dim; ++a) {
        v[a] = u[1 + a] / rho;
        kin += u[1 + a] * v[a];
    }
    p = (gamma - 1.0) * (u[dim + 1] - 0.5 * kin);
}

inline ModelSpec euler_base(int dim, double gamma = 1.4) {
    ModelSpec m;
    m.dim = dim;
    m.components = dim + 2;
    auto raw_prim = [dim, gamma](const StateVec& u, double& rho, Point& v, double& p) {
        rho = u[0];
        double kin = 0;
        v = {0, 0};
        for (int a = 0; a < dim; ++a) {
            v[a] = u[1 + a] / rho;
            kin += u[1 + a] * v[a];
        }
        p = (gamma - 1.0) * (u[dim + 1] - 0.5 * kin);
    };
    m.primitive = raw_prim;
    m.flux_c = [dim, raw_prim](double, const Point&, const StateVec& u) {
        double rho, p;
        Point v;
        raw_prim(u, rho, v, p);
        FluxMat f(dim + 2, dim);
        for (int a = 0; a < dim; ++a) {
            f(0, a) = u[1 + a];
            for (int b = 0; b < dim; ++b) f(1 + b, a) = u[1 + b] * v[a];
            f(1 + a, a) += p;
            f(dim + 1, a) = (u[dim + 1] + p) * v[a];
        }
        return f;
    };
    m.max_wave_speed = [raw_prim, gamma](double, const Point&, const StateVec& u, const Point& n) {
        double rho, p;
        Point v;
        raw_prim(u, rho, v, p);
        return std::abs(dot(v, n)) + std::sqrt(gamma * p / rho);
    };
    m.velocity = [raw_prim](double, const Point&, const StateVec& u) {
        double rho, p;
        Point v;
        raw_prim(u, rho, v, p);
        return v;
    };
    m.jump = [raw_prim](const StateVec& u, const StateVec& v) {
        double ru, pu, rv, pv;
        Point vu, vv;
        raw_prim(u, ru, vu, pu);
        raw_prim(v, rv, vv, pv);
        return (pu - pv) / (0.5 * (pu + pv));
    };
    m.physical = [dim, gamma](double, const Point&, const StateVec& u) {
        if (!(u[0] > 1e-8)) return false;
        double kin = 0;
        for (int a = 0; a < dim; ++a) kin += u[1 + a] * u[1 + a];
        double p = (gamma - 1.0) * (u[dim + 1] - 0.5 * kin / u[0]);
        return p > 1e-8;
    };
    // physical entropy density as the adapted quantity
    m.indicator.eta = [dim, gamma, raw_prim](double, const Point&, const StateVec& u) {
        double rho, p;
        Point v;
        raw_prim(u, rho, v, p);
        return rho * std::log(p / std::pow(rho, gamma));
    };
    m.indicator.flux = [ind_eta = m.indicator.eta, raw_prim](double t, const Point& x,
                                                             const StateVec& u, const FluxMat&) {
        double rho, p;
        Point v;
        raw_prim(u, rho, v, p);
        double eta = ind_eta(t, x, u);
        return Point{v[0] * eta, v[1] * eta};
    };
    m.indicator.source = [](double, const Point&, const StateVec&, const FluxMat&) { return 0.0; };
    return m;
}

/// Sod shock tube on (0,1), diaphragm at 1/2; exact solution attached.
inline ModelSpec euler_sod(double gamma = 1.4) {
    ModelSpec m = euler_base(1, gamma);
    m.name = "euler_sod";
    m.end_time = 0.2;
    m.domain_lo = {0, 0};
    m.domain_hi = {1, 1};
    m.cells = {100, 1};
    GasState left{1.0, 0.0, 1.0}, right{0.125, 0.0, 0.1};
    m.initial = [gamma, left, right](const Point& x) {
        const GasState& s = x[0] < 0.5 ? left : right;
        return euler_to_cons(1, gamma, s.rho, {s.u, 0}, s.p);
    };
    m.exact = [gamma, left, right](double t, const Point& x) {
        if (t <= 0) {
            const GasState& s = x[0] < 0.5 ? left : right;
            return euler_to_cons(1, gamma, s.rho, {s.u, 0}, s.p);
        }
        RiemannExact rp(gamma, left, right);
        GasState s = rp.sample((x[0] - 0.5) / t);
        return euler_to_cons(1, gamma, s.rho, {s.u, 0}, s.p);
    };
    m.boundary[1] = BoundaryCondition::state([gamma, left](double, const Point&, const StateVec&) {
        return euler_to_cons(1, gamma, left.rho, {left.u, 0}, left.p);
    });
    m.boundary[2] = BoundaryCondition::state([gamma, right](double, const Point&, const StateVec&) {
        return euler_to_cons(1, gamma, right.rho, {right.u, 0}, right.p);
    });
    return m;
}

/// Mach-adjusted planar shock at x = -1/4 running into a low-density bubble
/// centered at the origin; slip walls top and bottom. With `cylindrical`
/// the second coordinate is the radius and the axisymmetric geometric
/// source is active (the domain then keeps a positive minimum radius).
inline ModelSpec euler_shock_bubble(bool cylindrical = false, double gamma = 1.4) {
    ModelSpec m = euler_base(2, gamma);
    m.name = cylindrical ? "euler_shock_bubble_cyl" : "euler_shock_bubble";
    m.end_time = 0.5;
    m.domain_lo = {-1.0, cylindrical ? 0.05 : 0.0};
    m.domain_hi = {1.0, cylindrical ? 1.05 : 1.0};
    m.cells = {32, 16};
    double pinf = 5.0;
    double rinf = (1.0 - gamma + (gamma + 1.0) * pinf) / ((gamma + 1.0) + (gamma - 1.0) * pinf);
    double vinf = (1.0 / std::sqrt(gamma)) * (pinf - 1.0) /
                  std::sqrt(0.5 * ((gamma + 1.0) / gamma) * pinf + 0.5 * (gamma - 1.0) / gamma);
    StateVec Ul = euler_to_cons(2, gamma, rinf, {vinf, 0}, pinf);
    StateVec Ur = euler_to_cons(2, gamma, 1.0, {0, 0}, 1.0);
    StateVec Ub = euler_to_cons(2, gamma, 0.1, {0, 0}, 1.0);
    m.initial = [Ul, Ur, Ub](const Point& x) {
        if (x[0] < -0.25) return Ul;
        if (dot(x, x) < 0.04) return Ub;
        return Ur;
    };
    m.boundary[1] =
        BoundaryCondition::state([Ul](double, const Point&, const StateVec&) { return Ul; });
    m.boundary[2] =
        BoundaryCondition::state([Ur](double, const Point&, const StateVec&) { return Ur; });
    // slip wall: zero mass/energy flux, pressure-only momentum flux
    BoundaryCondition wall;
    wall.advective_flux = [gamma](double, const Point&, const StateVec& u, const Point& n) {
        double rho, p;
        Point v;
        euler_primitive(2, gamma, u, rho, v, p);
        return StateVec{0.0, p * n[0], p * n[1], 0.0};
    };
    m.boundary[3] = wall;
    m.boundary[4] = wall;
    if (cylindrical) {
        m.source_e = [gamma](double, const Point& x, const StateVec& u, const FluxMat&) {
            double rho, p;
            Point v;
            euler_primitive(2, gamma, u, rho, v, p);
            double vr_over_r = v[1] / x[1];
            StateVec s(4);
            s[0] = -vr_over_r * u[0];
            s[1] = -vr_over_r * u[1];
            s[2] = -vr_over_r * u[2];
            s[3] = -vr_over_r * (u[3] + p);
            return s;
        };
        m.indicator.source = [ind_eta = m.indicator.eta, gamma](double t, const Point& x,
                                                                const StateVec& u, const FluxMat&) {
            double rho, p;
            Point v;
            euler_primitive(2, gamma, u, rho, v, p);
            return -ind_eta(t, x, u) * v[1] / x[1];
        };
    }
    return m;
}

/// Double shear layer with a sinusoidal transverse perturbation; periodic in
/// x, reflecting walls top and bottom.
inline ModelSpec euler_kelvin_helmholtz(double gamma = 1.4) {
    ModelSpec m = euler_base(2, gamma);
    m.name = "euler_kh";
    m.end_time = 1.5;
    m.domain_lo = {0, 0};
    m.domain_hi = {1, 1};
    m.cells = {32, 32};
    m.periodic = {true, false};
    double sigma = 0.05 / std::sqrt(2.0);
    m.initial = [gamma, sigma](const Point& x) {
        bool inner = std::abs(x[1] - 0.5) < 0.25;
        double rho = inner ? 2.0 : 1.0;
        double u = inner ? 0.5 : -0.5;
        double dy = x[1] - 0.25;
        double v = 0.1 * std::sin(4.0 * M_PI * x[0]) * std::exp(-dy * dy / (2.0 * sigma * sigma));
        return euler_to_cons(2, gamma, rho, {u, v}, 2.5);
    };
    auto reflect = [](const Point& n) {
        return BoundaryCondition::state([n](double, const Point&, const StateVec& u) {
            StateVec r = u;
            double mn = u[1] * n[0] + u[2] * n[1];
            r[1] -= 2.0 * mn * n[0];
            r[2] -= 2.0 * mn * n[1];
            return r;
        });
    };
    m.boundary[3] = reflect({0.0, -1.0});
    m.boundary[4] = reflect({0.0, 1.0});
    return m;
}

// ---------------------------------------------------------------------------
// compressible Navier-Stokes
// ---------------------------------------------------------------------------

/// Viscous flux with Stokes hypothesis and Fourier heat conduction,
/// evaluated from conserved variables and their gradient.
inline FluxMat ns_viscous_flux(int dim, double gamma, double mu, double Pr, const StateVec& u,
                               const FluxMat& du) {
    double rho = u[0];
    // grad of velocity: (d(rho u_i) rho - rho u_i d(rho)) / rho^2
    double grad_u[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < dim; ++i)
        for (int a = 0; a < dim; ++a)
            grad_u[i][a] = (du(1 + i, a) * rho - u[1 + i] * du(0, a)) / (rho * rho);
    double div_u = 0;
    for (int a = 0; a < dim; ++a) div_u += grad_u[a][a];
    double tau[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < dim; ++i)
        for (int a = 0; a < dim; ++a) {
            tau[i][a] = mu * (grad_u[i][a] + grad_u[a][i]);
            if (i == a) tau[i][a] -= mu * (2.0 / 3.0) * div_u;
        }
    // grad of specific total energy E = (rho E)/rho
    double grad_E[2] = {0, 0};
    for (int a = 0; a < dim; ++a)
        grad_E[a] = (du(dim + 1, a) * rho - u[dim + 1] * du(0, a)) / (rho * rho);
    // K grad T = mu gamma / Pr (grad E - (rho u . grad u) / rho)
    double kgt[2] = {0, 0};
    for (int a = 0; a < dim; ++a) {
        double s = 0;
        for (int i = 0; i < dim; ++i) s += u[1 + i] * grad_u[i][a];
        kgt[a] = mu * gamma / Pr * (grad_E[a] - s / rho);
    }
    FluxMat f(dim + 2, dim);
    for (int a = 0; a < dim; ++a) {
        for (int i = 0; i < dim; ++i) f(1 + i, a) = tau[i][a];
        double work = 0;
        for (int i = 0; i < dim; ++i) work += tau[a][i] * u[1 + i];
        f(dim + 1, a) = work / rho + kgt[a];
    }
    return f;
}

/// Kelvin-Helmholtz setup with physical viscosity.
inline ModelSpec navier_stokes_kh(double mu = 1e-3, double Pr = 0.72, double gamma = 1.4) {
    ModelSpec m = euler_kelvin_helmholtz(gamma);
    m.name = "ns_kh";
    m.flux_v = [gamma, mu, Pr](double, const Point&, const StateVec& u, const FluxMat& g) {
        return ns_viscous_flux(2, gamma, mu, Pr, u, g);
    };
    return m;
}

// ---------------------------------------------------------------------------
// advection-diffusion-reaction system (three species)
// ---------------------------------------------------------------------------

/// Divergence-free transport field: curl of psi = 2.5 sin(x) sin(y).
inline Point reaction_velocity(const Point& x) {
    return {-2.5 * std::sin(x[0]) * std::cos(x[1]), 2.5 * std::cos(x[0]) * std::sin(x[1])};
}

/// Two species fed on disjoint disks react to produce a third:
/// d_t U + div(v U) - div(mu grad U) = f - r(U).
inline ModelSpec reaction(double mu = 0.02) {
    ModelSpec m;
    m.name = "reaction";
    m.dim = 2;
    m.components = 3;
    m.end_time = 10.0;
    m.domain_lo = {0, 0};
    m.domain_hi = {2.0 * M_PI, 2.0 * M_PI};
    m.cells = {20, 20};
    m.flux_c = [](double, const Point& x, const StateVec& u) {
        Point v = reaction_velocity(x);
        FluxMat f(3, 2);
        for (int c = 0; c < 3; ++c) {
            f(c, 0) = v[0] * u[c];
            f(c, 1) = v[1] * u[c];
        }
        return f;
    };
    m.flux_v = [mu](double, const Point&, const StateVec&, const FluxMat& g) {
        FluxMat f(3, 2);
        for (int c = 0; c < 3; ++c)
            for (int a = 0; a < 2; ++a) f(c, a) = mu * g(c, a);
        return f;
    };
    m.max_wave_speed = [](double, const Point& x, const StateVec&, const Point& n) {
        return std::abs(dot(reaction_velocity(x), n));
    };
    m.velocity = [](double, const Point& x, const StateVec&) { return reaction_velocity(x); };
    m.jump = [](const StateVec& u, const StateVec& v) {
        return (u[0] - v[0]) + (u[1] - v[1]) + (u[2] - v[2]);
    };
    m.lower_bound = StateVec{0.0, 0.0, 0.0};
    auto feed = [](double t, const Point& x) {
        StateVec f(3);
        if (t < 5.0) {
            Point p1{0.2 * M_PI, 0.2 * M_PI}, p2{1.8 * M_PI, 1.8 * M_PI};
            Point d1 = x - p1, d2 = x - p2;
            if (dot(d1, d1) < 0.2) f[0] = 1.0;
            if (dot(d2, d2) < 0.2) f[1] = 1.0;
        }
        return f;
    };
    m.source_e = [feed](double t, const Point& x, const StateVec& u, const FluxMat&) {
        StateVec s = feed(t, x);
        double r = 10.0 * u[0] * u[1];
        s[0] -= r;
        s[1] -= r;
        s[2] += 2.0 * r;
        return s;
    };
    m.initial = [](const Point&) { return StateVec{0.0, 0.0, 0.0}; };
    for (int id = 1; id <= 4; ++id)
        m.boundary[id] = BoundaryCondition::state(
            [](double, const Point&, const StateVec&) { return StateVec{0.0, 0.0, 0.0}; });
    // total concentration moves passively (the reaction conserves it)
    m.indicator.eta = [](double, const Point&, const StateVec& u) { return u[0] + u[1] + u[2]; };
    m.indicator.flux = [mu](double, const Point& x, const StateVec& u, const FluxMat& g) {
        Point v = reaction_velocity(x);
        double eta = u[0] + u[1] + u[2];
        return Point{v[0] * eta - mu * (g(0, 0) + g(1, 0) + g(2, 0)),
                     v[1] * eta - mu * (g(0, 1) + g(1, 1) + g(2, 1))};
    };
    m.indicator.source = [feed](double t, const Point& x, const StateVec&, const FluxMat&) {
        StateVec f = feed(t, x);
        return f[0] + f[1];  // the reaction terms cancel in the sum
    };
    return m;
}

}  // namespace models

/// Factory used by the CLI; `mu` feeds the viscous presets.
inline ModelSpec make_model(const std::string& name, double mu = -1.0) {
    if (name == "three_body") return models::three_body();
    if (name == "rotating_hump") return models::rotating_hump();
    if (name == "advection_sin_1d") return models::advection_sin_1d();
    if (name == "heat_1d") return models::heat_1d(mu > 0 ? mu : 0.05);
    if (name == "euler_sod") return models::euler_sod();
    if (name == "euler_shock_bubble") return models::euler_shock_bubble(false);
    if (name == "euler_shock_bubble_cyl") return models::euler_shock_bubble(true);
    if (name == "euler_kh") return models::euler_kelvin_helmholtz();
    if (name == "ns_kh") return models::navier_stokes_kh(mu > 0 ? mu : 1e-3);
    if (name == "reaction") return models::reaction(mu > 0 ? mu : 0.02);
    throw Error("unknown problem name: " + name);
}

}  // namespace rkdg
