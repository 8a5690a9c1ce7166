#pragma once

// Residual-based a-posteriori error indicator and the mesh-adaptation
// drivers built on it. The model supplies a scalar quantity eta with flux F
// and source S satisfying d_t eta + div F = S for exact solutions; the
// violation of that balance by the discrete solution, evaluated between two
// consecutive time levels, drives refinement:
//
//   eta_E^2 = h_E^2 ||R_vol||^2_E
//           + 1/2 sum_faces ( h_e ||R_e2||^2_e + (1/h_e) ||R_e1||^2_e )
//
//   R_vol = (eta^{n+1} - eta^n)/dt + 1/2 div(F^n + F^{n+1})
//         - 1/2 (S^n + S^{n+1})
//   R_e2  = 1/2 [[ (F^n + F^{n+1}) . n ]]      (flux jump)
//   R_e1  = 1/2 [[ eta^n + eta^{n+1} ]]        (value jump)
//
// Boundary faces carry no exterior trace of eta and are excluded. The
// divergence is taken of the composite map x -> F(t, x, u_h(x), grad
// u_h(x)) by central differences, with the solution and its gradient
// evaluated exactly from the cell polynomial.

#include <cmath>
#include <vector>

#include "rkdg/function.hpp"
#include "rkdg/mesh.hpp"
#include "rkdg/model.hpp"
#include "rkdg/spatial_operator.hpp"
#include "rkdg/time_stepping.hpp"

namespace rkdg {

struct AdaptConfig {
    int min_level = 0;
    int max_level = 0;
    /// coarsen tolerance = factor * refine tolerance
    double initial_coarsen_factor = 0.2;  // during the start-up loop
    double step_coarsen_factor = 0.1;     // during the time loop
};

class AdaptationDriver {
  public:
    AdaptationDriver(Mesh& mesh, const Space& space, const ModelSpec& model, AdaptConfig cfg)
        : mesh_(&mesh), space_(&space), model_(&model), cfg_(cfg) {
        if (!model.indicator.present())
            throw Error("model '" + model.name +
                        "': the estimator needs the indicator triple (eta, flux, source)");
    }

    const AdaptConfig& config() const { return cfg_; }

    /// Per-cell squared indicator between two consecutive time levels.
    std::vector<double> estimate(const DiscreteFunction& u_old, const DiscreteFunction& u_new,
                                 double t, double dt) const {
        if (u_old.mesh_version() != mesh_->version() || u_new.mesh_version() != mesh_->version())
            throw Error("estimate: states are on a stale mesh version");
        if (!(dt > 0)) throw Error("estimate: dt must be positive");
        const IndicatorSpec& ind = model_->indicator;
        const double t1 = t + dt;
        const int n = mesh_->num_leaves();
        std::vector<double> eta2(n, 0.0);

        // volume residual
        for (int e = 0; e < n; ++e) {
            const CellGeometry& g = mesh_->geometry(e);
            double vol_int = 0.0;
            for (int q = 0; q < space_->vol.size(); ++q) {
                const Point& xi = space_->vol.points[q];
                Point x = DiscreteFunction::ref_to_phys(g, xi);
                StateVec u0 = u_old.evaluate(e, xi);
                StateVec u1 = u_new.evaluate(e, xi);
                FluxMat g0 = gradient(u_old, e, xi);
                FluxMat g1 = gradient(u_new, e, xi);
                double deta = (ind.eta(t1, x, u1) - ind.eta(t, x, u0)) / dt;
                double divF = 0.5 * (divergence(ind, u_old, e, t, xi) +
                                     divergence(ind, u_new, e, t1, xi));
                double S = 0.0;
                if (ind.source)
                    S = 0.5 * (ind.source(t, x, u0, g0) + ind.source(t1, x, u1, g1));
                double rvol = deta + divF - S;
                vol_int += g.volume * space_->vol.weights[q] * rvol * rvol;
            }
            eta2[e] = g.diameter * g.diameter * vol_int;
        }

        // face residuals: jump of eta and of F.n, halved between the cells
        const int nfq = space_->face_npoints();
        for (const Face& f : mesh_->faces()) {
            if (f.outside < 0) continue;
            const CellGeometry& gin = mesh_->geometry(f.inside);
            double i1 = 0.0, i2 = 0.0;
            for (int q = 0; q < nfq; ++q) {
                Point xi_in = space_->face_point(f.side_in, q);
                Point x = DiscreteFunction::ref_to_phys(gin, xi_in);
                Point xi_out = out_ref_point(f, q);

                double eta_L = 0, eta_R = 0, fn_L = 0, fn_R = 0;
                side_values(ind, u_old, u_new, f.inside, xi_in, t, dt, x, f.normal, eta_L, fn_L);
                side_values(ind, u_old, u_new, f.outside, xi_out, t, dt, x, f.normal, eta_R, fn_R);
                double re1 = 0.5 * (eta_L - eta_R);
                double re2 = 0.5 * (fn_L - fn_R);
                double w = f.area * space_->face_weight(q);
                i1 += w * re1 * re1;
                i2 += w * re2 * re2;
            }
            double contrib = 0.5 * (f.h_face * i2 + i1 / f.h_face);
            eta2[f.inside] += contrib;
            eta2[f.outside] += contrib;
        }
        return eta2;
    }

    /// Start-up refinement: (max_level + 1) rounds of trial step ->
    /// estimate -> mark -> adapt -> re-project the initial data -> limit.
    /// Returns the per-time tolerance for the adaptive time loop.
    double initial_adapt(DiscreteFunction& u, SpatialOperator& op, TimeStepper& stepper) const {
        double max_size =
            double(mesh_->num_leaves()) * std::pow(2.0, mesh_->dim() * cfg_.max_level);
        double time_tol = 0.0;
        for (int iter = 0; iter <= cfg_.max_level; ++iter) {
            DiscreteFunction trial = u;
            double t0 = stepper.time();
            double dt = stepper.step(trial);
            stepper.set_time(t0);
            std::vector<double> est = estimate(u, trial, t0, dt);
            double total = 0.0;
            for (double v : est) total += v;
            time_tol = total / model_->end_time / max_size;
            double h_tol = time_tol * dt;
            mesh_->mark(est, h_tol, cfg_.initial_coarsen_factor * h_tol, cfg_.min_level,
                        cfg_.max_level);
            adapt_mesh(*mesh_, {&u});
            u.project(model_->initial);
            op.reset_timestep_estimate();
            op.set_time(t0);
            op.apply_limiter(u);
        }
        return time_tol;
    }

    /// In-loop adaptation after a completed step from (t, u_old) to
    /// (t + dt, u_new); transfers u_new to the new mesh. Returns true if
    /// the mesh changed.
    bool adapt_step(DiscreteFunction& u_old, DiscreteFunction& u_new, double t, double dt,
                    double time_tol) const {
        std::vector<double> est = estimate(u_old, u_new, t, dt);
        double h_tol = time_tol * dt;
        mesh_->mark(est, h_tol, cfg_.step_coarsen_factor * h_tol, cfg_.min_level, cfg_.max_level);
        int before = mesh_->version();
        adapt_mesh(*mesh_, {&u_new});
        return mesh_->version() != before;
    }

  private:
    Mesh* mesh_;
    const Space* space_;
    const ModelSpec* model_;
    AdaptConfig cfg_;

    FluxMat gradient(const DiscreteFunction& u, int leaf, const Point& xi) const {
        double dphi[Space::max_nb * 2];
        space_->ref_grads(xi, dphi);
        const CellGeometry& g = mesh_->geometry(leaf);
        Point invw = {1.0 / g.widths[0], mesh_->dim() == 2 ? 1.0 / g.widths[1] : 1.0};
        return eval_grad(u.block(leaf), u.components(), space_->nb, dphi,
                         space_->scale(g.volume), invw, mesh_->dim());
    }

    /// div of x -> F(t, x, u_h(x), grad u_h(x)) by central differences in
    /// reference coordinates (the polynomial is exact along the line).
    double divergence(const IndicatorSpec& ind, const DiscreteFunction& u, int leaf, double t,
                      const Point& xi) const {
        const CellGeometry& g = mesh_->geometry(leaf);
        double div = 0.0;
        for (int a = 0; a < mesh_->dim(); ++a) {
            double delta = 1e-4;  // reference-space offset; physical 1e-4 * width
            Point xp = xi, xm = xi;
            xp[a] += delta;
            xm[a] -= delta;
            Point xpp = DiscreteFunction::ref_to_phys(g, xp);
            Point xmp = DiscreteFunction::ref_to_phys(g, xm);
            double fp = ind.flux(t, xpp, u.evaluate(leaf, xp), gradient(u, leaf, xp))[a];
            double fm = ind.flux(t, xmp, u.evaluate(leaf, xm), gradient(u, leaf, xm))[a];
            div += (fp - fm) / (2.0 * delta * g.widths[a]);
        }
        return div;
    }

    Point out_ref_point(const Face& f, int q) const {
        if (f.out_half < 0) return space_->face_point(f.side_out, q);
        return space_->face_point(f.side_out, q, 0.5 * f.out_half, 0.5);
    }

    void side_values(const IndicatorSpec& ind, const DiscreteFunction& u_old,
                     const DiscreteFunction& u_new, int leaf, const Point& xi, double t,
                     double dt, const Point& x, const Point& n, double& eta_sum,
                     double& fn_sum) const {
        StateVec u0 = u_old.evaluate(leaf, xi);
        StateVec u1 = u_new.evaluate(leaf, xi);
        FluxMat g0 = gradient(u_old, leaf, xi);
        FluxMat g1 = gradient(u_new, leaf, xi);
        eta_sum = ind.eta(t, x, u0) + ind.eta(t + dt, x, u1);
        fn_sum = dot(ind.flux(t, x, u0, g0), n) + dot(ind.flux(t + dt, x, u1, g1), n);
    }
};

}  // namespace rkdg
