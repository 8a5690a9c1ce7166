#pragma once

// Run orchestration: build model/mesh/space/operator/stepper from a
// RunConfig, optionally bootstrap the adapted mesh, advance to the end
// time with per-step dynamic adaptation and output cadence, and report
// norms/extrema. convergence_study() repeats a run on dyadically refined
// grids and tabulates errors and observed orders.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rkdg/config.hpp"
#include "rkdg/estimator.hpp"
#include "rkdg/models.hpp"
#include "rkdg/output.hpp"
#include "rkdg/time_stepping.hpp"

namespace rkdg {

struct RunReport {
    std::string problem;
    double final_time = 0.0;
    int steps = 0;
    int cells = 0;
    long long dofs = 0;
    double wallclock_s = 0.0;
    bool has_norms = false;
    ErrorNorms norms;               // against the exact solution, component 0
    StateVec total{1};              // integral of U over the domain
    StateVec mean_min{1}, mean_max{1};    // extrema of cell means
    StateVec point_min{1}, point_max{1};  // extrema over quadrature points
};

struct RunHooks {
    /// Called after every completed step (post-adaptation).
    std::function<void(int step, double t, double dt, const DiscreteFunction& u)> on_step;
};

/// Componentwise extrema over all volume and face quadrature points.
inline void point_extrema(const DiscreteFunction& u, StateVec& mn, StateVec& mx) {
    const Space& sp = u.space();
    const Mesh& mesh = u.mesh();
    int r = u.components();
    mn = StateVec(r);
    mx = StateVec(r);
    for (int c = 0; c < r; ++c) {
        mn[c] = 1e300;
        mx[c] = -1e300;
    }
    int nsides = 2 * mesh.dim(), nfq = sp.face_npoints();
    for (int e = 0; e < mesh.num_leaves(); ++e) {
        double sc = sp.scale(mesh.geometry(e).volume);
        auto scan = [&](const double* phi) {
            StateVec v = eval_state(u.block(e), r, sp.nb, phi, sc);
            for (int c = 0; c < r; ++c) {
                mn[c] = std::min(mn[c], v[c]);
                mx[c] = std::max(mx[c], v[c]);
            }
        };
        for (int q = 0; q < sp.vol.size(); ++q) scan(sp.vol_phi(q));
        for (int s = 0; s < nsides; ++s)
            for (int q = 0; q < nfq; ++q) scan(sp.face_phi(s, q));
    }
}

inline void mean_extrema(const DiscreteFunction& u, StateVec& mn, StateVec& mx) {
    int r = u.components();
    mn = StateVec(r);
    mx = StateVec(r);
    for (int c = 0; c < r; ++c) {
        mn[c] = 1e300;
        mx[c] = -1e300;
    }
    for (int e = 0; e < u.mesh().num_leaves(); ++e) {
        StateVec m = u.cell_mean(e);
        for (int c = 0; c < r; ++c) {
            mn[c] = std::min(mn[c], m[c]);
            mx[c] = std::max(mx[c], m[c]);
        }
    }
}

inline RunReport run(const RunConfig& rc, const RunHooks& hooks = {}) {
    auto wall0 = std::chrono::steady_clock::now();

    ModelSpec model = make_model(rc.problem, rc.mu);
    model.validate();
    const double t_end = rc.end_time ? *rc.end_time : model.end_time;

    std::array<int, 2> cells = {rc.nx > 0 ? rc.nx : model.cells[0],
                                model.dim == 2 ? (rc.ny > 0 ? rc.ny : model.cells[1]) : 1};
    Mesh mesh = Mesh::cartesian(model.domain_lo, model.domain_hi, cells, model.dim,
                                model.periodic);
    Space space = Space::make(rc.basis, rc.k, model.dim);
    DiscreteFunction u(mesh, space, model.components);
    u.project(model.initial);

    OperatorConfig ocfg;
    ocfg.advective = rc.advective;
    ocfg.penalty = rc.penalty;
    ocfg.limiter = rc.limiter;
    ocfg.workers = rc.workers;
    SpatialOperator op(mesh, space, model, ocfg);
    auto stepper = make_stepper(rc.stepper, op);

    op.set_time(0.0);
    op.apply_limiter(u);

    std::optional<AdaptationDriver> driver;
    double time_tol = 0.0;
    if (rc.adapt) {
        driver.emplace(mesh, space, model, rc.adapt_cfg);
        time_tol = driver->initial_adapt(u, op, *stepper);
    }

    const bool writes = rc.vtk_every > 0 || rc.csv_final;
    if (writes) std::filesystem::create_directories(rc.out_dir);
    int frame = 0;
    auto write_frame = [&]() {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04d.vtk", rc.prefix.c_str(), frame++);
        IndicatorReport rep = op.indicator_report(u);
        write_vtk(u, rc.out_dir + "/" + name, &rep.value, rc.vtk_points);
    };
    if (rc.vtk_every > 0) write_frame();

    DiscreteFunction u_prev = u;
    int steps = 0;
    double t = 0.0;
    const double t_eps = 1e-12 * std::max(1.0, t_end);
    while (t < t_end - t_eps) {
        double dt;
        try {
            dt = stepper->step(u, t_end - t);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (step " + std::to_string(steps + 1) +
                        ", t = " + std::to_string(t) + ")");
        }
        double t_old = t;
        t = stepper->time();
        ++steps;
        if (driver) {
            if (driver->adapt_step(u_prev, u, t_old, dt, time_tol))
                op.reset_timestep_estimate();
            u_prev = u;
        }
        if (hooks.on_step) hooks.on_step(steps, t, dt, u);
        if (rc.vtk_every > 0 && steps % rc.vtk_every == 0) write_frame();
    }

    if (rc.vtk_every > 0 && steps % rc.vtk_every != 0) write_frame();
    if (rc.csv_final && model.dim == 1)
        write_csv_1d(u, rc.out_dir + "/" + rc.prefix + ".csv");

    RunReport rep;
    rep.problem = rc.problem;
    rep.final_time = t;
    rep.steps = steps;
    rep.cells = mesh.num_leaves();
    rep.dofs = (long long)mesh.num_leaves() * space.nb * model.components;
    rep.total = u.total_integral();
    mean_extrema(u, rep.mean_min, rep.mean_max);
    point_extrema(u, rep.point_min, rep.point_max);
    if (model.exact) {
        rep.has_norms = true;
        rep.norms = error_norms(
            u, [&](const Point& x) { return model.exact(t, x); }, 0);
    }
    rep.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return rep;
}

struct StudyRow {
    int level = 0;
    int cells = 0;
    long long dofs = 0;
    ErrorNorms norms;
    double eoc_l2 = 0.0;  // vs the previous (coarser) row
    double wallclock_s = 0.0;
};

/// Run the configuration on `levels` dyadically refined grids; EOC between
/// consecutive levels is log2(e_h / e_{h/2}).
inline std::vector<StudyRow> convergence_study(RunConfig rc, int levels,
                                               const std::string& csv_path = "") {
    if (levels < 1) throw Error("convergence study needs at least one level");
    ModelSpec base = make_model(rc.problem, rc.mu);
    int bx = rc.nx > 0 ? rc.nx : base.cells[0];
    int by = rc.ny > 0 ? rc.ny : base.cells[1];
    std::vector<StudyRow> rows;
    for (int l = 0; l < levels; ++l) {
        RunConfig r = rc;
        r.nx = bx << l;
        r.ny = by << l;
        r.vtk_every = 0;
        r.csv_final = false;
        RunReport rep = run(r);
        if (!rep.has_norms)
            throw Error("convergence study needs a model with an exact solution ('" +
                        rc.problem + "' has none)");
        StudyRow row;
        row.level = l;
        row.cells = rep.cells;
        row.dofs = rep.dofs;
        row.norms = rep.norms;
        row.wallclock_s = rep.wallclock_s;
        if (l > 0) row.eoc_l2 = std::log2(rows.back().norms.l2 / rep.norms.l2);
        rows.push_back(row);
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw Error("cannot write study table: " + csv_path);
        out << "level,cells,dofs,l1,l2,linf,eoc_l2,wallclock_s\n";
        for (const StudyRow& r : rows) {
            out << r.level << ',' << r.cells << ',' << r.dofs << ',' << format_g(r.norms.l1)
                << ',' << format_g(r.norms.l2) << ',' << format_g(r.norms.linf) << ','
                << format_g(r.eoc_l2) << ',' << format_g(r.wallclock_s) << '\n';
        }
    }
    return rows;
}

}  // namespace rkdg
