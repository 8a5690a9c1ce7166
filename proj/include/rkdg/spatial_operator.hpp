#pragma once

// Discrete spatial operator L_h: out = M^{-1} [ volume terms + face terms ]
// for d_t U = -div(F_c - F_v) + S, in weak form per test function phi:
//
//   <phi, L_h(u)> = int_E (F_c - F_v) : grad phi + S . phi          (volume)
//                 + int_e (1/2) F_v(u_side, [[u]] (x) n) : grad phi (faces,
//                   symmetrizing interior-penalty term, both sides)
//                 - int_e (Fhat_c - Fhat_v) . [[phi]]               (faces)
//
// The limiter is pre-composed (L_h o Pi_h) so every stage evaluation sees
// stabilized data. Face integrals are computed once per face and scattered
// to both cells in a fixed order, making results independent of the worker
// count. A CFL time-step estimate and the outward boundary-flux total are
// recorded as side outputs of apply().

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rkdg/basis.hpp"
#include "rkdg/fluxes.hpp"
#include "rkdg/function.hpp"
#include "rkdg/mesh.hpp"
#include "rkdg/model.hpp"
#include "rkdg/stabilization.hpp"

namespace rkdg {

/// Which part of the implicit/explicit split this operator evaluates:
/// L_e = -div F_c + S_e, L_i = div F_v + S_i, full = L_e + L_i.
enum class SplitMode { full, explicit_part, implicit_part };

struct OperatorConfig {
    AdvectiveFlux advective = AdvectiveFlux::llf;
    DiffusiveFlux diffusive = DiffusiveFlux::interior_penalty;
    /// Interior-penalty factor; negative selects (k+1)(k+d)/d.
    double penalty = -1.0;
    /// Degree factor in the CFL estimate h / (factor * lambda); negative
    /// selects the standard 2k+1.
    double cfl_degree_factor = -1.0;
    LimiterConfig limiter;
    SplitMode split = SplitMode::full;
    int workers = 1;
};

class SpatialOperator {
  public:
    SpatialOperator(const Mesh& mesh, const Space& space, const ModelSpec& model,
                    OperatorConfig cfg = {})
        : mesh_(&mesh), space_(&space), model_(&model), cfg_(cfg) {
        model.validate();
        if (space.dim != mesh.dim()) throw Error("space and mesh dimensions differ");
        if (cfg_.penalty < 0) cfg_.penalty = default_penalty(space.k, mesh.dim());
        if (cfg_.cfl_degree_factor < 0) cfg_.cfl_degree_factor = 2.0 * space.k + 1.0;
        if (cfg_.limiter.mode != LimiterMode::none)
            stab_.emplace(mesh, space, model, cfg_.limiter);
    }

    const Mesh& mesh() const { return *mesh_; }
    const Space& space() const { return *space_; }
    const ModelSpec& model() const { return *model_; }
    const OperatorConfig& config() const { return cfg_; }

    void set_split(SplitMode s) { cfg_.split = s; }
    SplitMode split() const { return cfg_.split; }
    void set_limiter_placement(LimiterPlacement p) { cfg_.limiter.placement = p; }

    /// Temporarily bypass the limiter pre-composition. Newton/Krylov trial
    /// states inside implicit solves are not physical states; feeding them
    /// through the limiter breaks the residual's smoothness and trips the
    /// scaling limiter's mean check.
    void set_limit_inputs(bool on) { limit_inputs_ = on; }
    bool limit_inputs() const { return limit_inputs_; }

    /// Set the step base time t_n; stage evaluations offset from it.
    void set_time(double t) {
        base_time_ = t;
        stage_time_ = t;
    }
    /// Stage time t_n + c*dt used by every time-dependent callback.
    void set_stage_time(double c, double dt) { stage_time_ = base_time_ + c * dt; }
    double time() const { return stage_time_; }
    double base_time() const { return base_time_; }

    /// CFL estimate min_E h_E / (factor * max face wave speed); +inf until
    /// apply() has seen an advective evaluation.
    double timestep_estimate() const { return dt_estimate_; }
    /// Drop the estimate (e.g. after mesh adaptation) so the next step
    /// re-evaluates it on the new mesh before choosing dt.
    void reset_timestep_estimate() { dt_estimate_ = std::numeric_limits<double>::infinity(); }

    /// Outward boundary flux integral of the last apply(), per component
    /// (sum over boundary faces of int_e (Fhat_c - Fhat_v) . n ds).
    const StateVec& boundary_flux_total() const { return bflux_total_; }

    /// Stabilize U in place (no-op when the limiter mode is none). Degree-0
    /// slopes have no basis representation and are dropped here; inside
    /// apply() they do take effect through the overlay. Strict mode errors
    /// when a cell mean sits outside the scaling bounds; steppers limit
    /// mid-run states leniently instead (collapse onto the mean).
    void apply_limiter(DiscreteFunction& u, bool strict = true) const {
        if (stab_) stab_->apply(u, stage_time_, strict);
    }

    IndicatorReport indicator_report(const DiscreteFunction& u) const {
        if (stab_) return stab_->troubled_cells(u, stage_time_);
        IndicatorReport rep;
        rep.value.assign(mesh_->num_leaves(), 0.0);
        rep.troubled.assign(mesh_->num_leaves(), 0);
        rep.reason.assign(mesh_->num_leaves(), TroubleReason::none);
        return rep;
    }

    /// out = M^{-1} L_h(Pi_h u) at the current stage time.
    void apply(const DiscreteFunction& u, DiscreteFunction& out) {
        if (u.mesh_version() != mesh_->version())
            throw Error("apply: state was built for a stale mesh version");
        if (out.mesh_version() != mesh_->version() || out.components() != u.components())
            throw Error("apply: output container does not match the state");

        const int n = mesh_->num_leaves();
        const int r = u.components();
        const int nb = space_->nb;
        const int d = mesh_->dim();
        const double t = stage_time_;

        const bool use_fc = bool(model_->flux_c) && cfg_.split != SplitMode::implicit_part;
        const bool use_fv = bool(model_->flux_v) && cfg_.split != SplitMode::explicit_part;
        const bool use_se = bool(model_->source_e) && cfg_.split != SplitMode::implicit_part;
        const bool use_si = bool(model_->source_i) && cfg_.split != SplitMode::explicit_part;
        const bool need_grad = use_fv || use_se || use_si;

        // Pi_h pre-composition on a scratch copy; degree-0 slopes ride in
        // the overlay and are folded into traces and gradients below.
        const DiscreteFunction* src = &u;
        overlay_.any = false;
        overlay_.active.clear();
        if (stab_ && limit_inputs_ && cfg_.limiter.placement == LimiterPlacement::each_apply) {
            if (scratch_ && scratch_->mesh_version() == u.mesh_version() &&
                scratch_->components() == r) {
                *scratch_ = u;
            } else {
                scratch_.emplace(u);
            }
            overlay_ = stab_->apply(*scratch_, t, /*strict=*/false);
            src = &*scratch_;
        }

        out.fill(0.0);
        lambda_cell_.assign(n, 0.0);

        // ---- volume terms ------------------------------------------------
        parallel_for(n, cfg_.workers, [&](int e0, int e1) {
            for (int e = e0; e < e1; ++e) {
                const CellGeometry& g = mesh_->geometry(e);
                double sc = space_->scale(g.volume);
                Point invw = inverse_widths(g, d);
                double* b = out.block(e);
                const double* blk = src->block(e);
                for (int q = 0; q < space_->vol.size(); ++q) {
                    const double* phi = space_->vol_phi(q);
                    const double* dphi = space_->vol_dphi(q);
                    Point x = DiscreteFunction::ref_to_phys(g, space_->vol.points[q]);
                    StateVec uq = eval_state(blk, r, nb, phi, sc);
                    FluxMat grad(r, d);
                    if (need_grad) grad = eval_grad(blk, r, nb, dphi, sc, invw, d);
                    add_overlay(e, g, x, uq, grad);

                    FluxMat F(r, d);
                    if (use_fc) F += model_->flux_c(t, x, uq);
                    if (use_fv) {
                        FluxMat fv = model_->flux_v(t, x, uq, grad);
                        fv *= -1.0;
                        F += fv;
                    }
                    StateVec S(r);
                    if (use_se) S += model_->source_e(t, x, uq, grad);
                    if (use_si) S += model_->source_i(t, x, uq, grad);

                    double w = g.volume * space_->vol.weights[q] * sc;
                    for (int c = 0; c < r; ++c) {
                        double* bc = b + c * nb;
                        for (int i = 0; i < nb; ++i) {
                            double v = S[c] * phi[i];
                            for (int a = 0; a < d; ++a)
                                v += F(c, a) * dphi[i * 2 + a] * invw[a];
                            bc[i] += w * v;
                        }
                    }
                }
            }
        });

        // ---- face terms, phase 1: per-face contributions (parallel) ------
        const auto& faces = mesh_->faces();
        const int nfaces = int(faces.size());
        const int blk_sz = r * nb;
        contrib_in_.assign(std::size_t(nfaces) * blk_sz, 0.0);
        contrib_out_.assign(std::size_t(nfaces) * blk_sz, 0.0);
        face_lambda_.assign(nfaces, 0.0);
        face_bflux_.assign(std::size_t(nfaces) * r, 0.0);

        parallel_for(nfaces, cfg_.workers, [&](int f0, int f1) {
            for (int fi = f0; fi < f1; ++fi)
                face_contribution(*src, faces[fi], fi, t, use_fc, use_fv, r, nb, d);
        });

        // ---- face terms, phase 2: scatter in fixed face order ------------
        bflux_total_ = StateVec(r);
        for (int fi = 0; fi < nfaces; ++fi) {
            const Face& f = faces[fi];
            double* bi = out.block(f.inside);
            const double* ci = &contrib_in_[std::size_t(fi) * blk_sz];
            for (int j = 0; j < blk_sz; ++j) bi[j] += ci[j];
            lambda_cell_[f.inside] = std::max(lambda_cell_[f.inside], face_lambda_[fi]);
            if (f.outside >= 0) {
                double* bo = out.block(f.outside);
                const double* co = &contrib_out_[std::size_t(fi) * blk_sz];
                for (int j = 0; j < blk_sz; ++j) bo[j] += co[j];
                lambda_cell_[f.outside] = std::max(lambda_cell_[f.outside], face_lambda_[fi]);
            } else {
                for (int c = 0; c < r; ++c) bflux_total_[c] += face_bflux_[std::size_t(fi) * r + c];
            }
        }

        // ---- mass inverse (identity for onb, diagonal for nodal) ---------
        if (space_->nodal()) {
            parallel_for(n, cfg_.workers, [&](int e0, int e1) {
                for (int e = e0; e < e1; ++e) {
                    double V = mesh_->geometry(e).volume;
                    double* b = out.block(e);
                    for (int c = 0; c < r; ++c)
                        for (int i = 0; i < nb; ++i)
                            b[c * nb + i] /= V * space_->vol.weights[i];
                }
            });
        }

        // ---- sanity and time-step estimate --------------------------------
        double dt = std::numeric_limits<double>::infinity();
        for (int e = 0; e < n; ++e) {
            const double* b = out.block(e);
            for (int j = 0; j < blk_sz; ++j)
                if (!std::isfinite(b[j]))
                    throw Error("apply: non-finite result in cell " + std::to_string(e));
            if (use_fc && lambda_cell_[e] > 0)
                dt = std::min(dt,
                              mesh_->geometry(e).diameter / (cfg_.cfl_degree_factor * lambda_cell_[e]));
        }
        // implicit-part evaluations see no advective speeds; keep the last
        // advective estimate instead of resetting it to infinity
        if (use_fc) dt_estimate_ = dt;
    }

  private:
    const Mesh* mesh_;
    const Space* space_;
    const ModelSpec* model_;
    OperatorConfig cfg_;
    std::optional<Stabilizer> stab_;

    double base_time_ = 0.0;
    double stage_time_ = 0.0;
    bool limit_inputs_ = true;
    double dt_estimate_ = std::numeric_limits<double>::infinity();
    StateVec bflux_total_{1};

    std::optional<DiscreteFunction> scratch_;
    ReconstructionOverlay overlay_;
    std::vector<double> contrib_in_, contrib_out_, face_lambda_, face_bflux_;
    std::vector<double> lambda_cell_;

    static Point inverse_widths(const CellGeometry& g, int d) {
        Point iw = {1.0, 1.0};
        for (int a = 0; a < d; ++a) iw[a] = 1.0 / g.widths[a];
        return iw;
    }

    /// Fold the degree-0 reconstruction slope into a point value + gradient.
    void add_overlay(int leaf, const CellGeometry& g, const Point& x, StateVec& uq,
                     FluxMat& grad) const {
        if (!overlay_.any || !overlay_.active[leaf]) return;
        int r = uq.size(), d = mesh_->dim();
        const double* s = &overlay_.slope[(std::size_t(leaf) * r) * d];
        for (int c = 0; c < r; ++c)
            for (int a = 0; a < d; ++a) {
                uq[c] += s[c * d + a] * (x[a] - g.center[a]);
                grad(c, a) += s[c * d + a];
            }
    }

    void face_contribution(const DiscreteFunction& src, const Face& f, int fi, double t,
                           bool use_fc, bool use_fv, int r, int nb, int d) {
        const int blk_sz = r * nb;
        double* ci = &contrib_in_[std::size_t(fi) * blk_sz];
        double* co = &contrib_out_[std::size_t(fi) * blk_sz];
        double* bflux = &face_bflux_[std::size_t(fi) * r];

        const CellGeometry& gin = mesh_->geometry(f.inside);
        double sc_in = space_->scale(gin.volume);
        Point invw_in = inverse_widths(gin, d);
        const double* blk_in = src.block(f.inside);

        const bool interior = f.outside >= 0;
        const CellGeometry* gout = interior ? &mesh_->geometry(f.outside) : nullptr;
        double sc_out = interior ? space_->scale(gout->volume) : 0.0;
        Point invw_out = interior ? inverse_widths(*gout, d) : Point{1, 1};
        const double* blk_out = interior ? src.block(f.outside) : nullptr;

        const BoundaryCondition* bc = nullptr;
        if (!interior) {
            auto it = model_->boundary.find(f.boundary_id);
            if (it == model_->boundary.end())
                throw Error("model '" + model_->name + "': no boundary condition for id " +
                            std::to_string(f.boundary_id));
            bc = &it->second;
        }

        double lam_face = 0.0;
        const int nfq = space_->face_npoints();
        for (int q = 0; q < nfq; ++q) {
            double w = f.area * space_->face_weight(q);
            Point x = DiscreteFunction::ref_to_phys(gin, space_->face_point(f.side_in, q));
            const double* phi_in = space_->face_phi(f.side_in, q);
            const double* dphi_in = space_->face_dphi(f.side_in, q);
            StateVec uL = eval_state(blk_in, r, nb, phi_in, sc_in);
            FluxMat gL(r, d);
            if (use_fv) gL = eval_grad(blk_in, r, nb, dphi_in, sc_in, invw_in, d);
            add_overlay(f.inside, gin, x, uL, gL);

            StateVec total(r);
            if (interior) {
                const double* phi_out = f.out_half < 0 ? space_->face_phi(f.side_out, q)
                                                       : space_->half_phi(f.side_out, f.out_half, q);
                const double* dphi_out = f.out_half < 0
                                             ? space_->face_dphi(f.side_out, q)
                                             : space_->half_dphi(f.side_out, f.out_half, q);
                StateVec uR = eval_state(blk_out, r, nb, phi_out, sc_out);
                FluxMat gR(r, d);
                if (use_fv) gR = eval_grad(blk_out, r, nb, dphi_out, sc_out, invw_out, d);
                add_overlay(f.outside, *gout, x, uR, gR);

                if (use_fc) {
                    double lam = 0;
                    total += advective_flux(cfg_.advective, *model_, t, x, uL, uR, f.normal, lam);
                    lam_face = std::max(lam_face, lam);
                }
                if (use_fv) {
                    StateVec fv = diffusive_flux(*model_, t, x, uL, gL, uR, gR, f.normal,
                                                 f.h_face, cfg_.penalty);
                    fv *= -1.0;
                    total += fv;

                    // symmetrizing term: + 1/2 F_v(u_side, [[u]] (x) n) : grad phi_side
                    StateVec ujump = uL;
                    ujump -= uR;
                    FluxMat jn = FluxMat::outer(ujump, f.normal, d);
                    FluxMat GL = model_->flux_v(t, x, uL, jn);
                    FluxMat GR = model_->flux_v(t, x, uR, jn);
                    for (int c = 0; c < r; ++c)
                        for (int i = 0; i < nb; ++i) {
                            double vl = 0, vr = 0;
                            for (int a = 0; a < d; ++a) {
                                vl += GL(c, a) * dphi_in[i * 2 + a] * invw_in[a];
                                vr += GR(c, a) * dphi_out[i * 2 + a] * invw_out[a];
                            }
                            ci[c * nb + i] += 0.5 * w * sc_in * vl;
                            co[c * nb + i] += 0.5 * w * sc_out * vr;
                        }
                }
                for (int c = 0; c < r; ++c)
                    for (int i = 0; i < nb; ++i) {
                        ci[c * nb + i] -= w * total[c] * phi_in[i] * sc_in;
                        co[c * nb + i] += w * total[c] * phi_out[i] * sc_out;
                    }
            } else {
                if (use_fc) {
                    if (bc->advective_flux) {
                        total += bc->advective_flux(t, x, uL, f.normal);
                        lam_face = std::max(lam_face,
                                            model_->max_wave_speed(t, x, uL, f.normal));
                    } else if (bc->dirichlet) {
                        StateVec uext = bc->dirichlet(t, x, uL);
                        double lam = 0;
                        total += advective_flux(cfg_.advective, *model_, t, x, uL, uext,
                                                f.normal, lam);
                        lam_face = std::max(lam_face, lam);
                    } else {
                        throw Error("model '" + model_->name + "': boundary id " +
                                    std::to_string(f.boundary_id) +
                                    " has neither a state nor an advective flux");
                    }
                }
                if (use_fv) {
                    StateVec fv(r);
                    if (bc->diffusive_flux) {
                        fv = bc->diffusive_flux(t, x, uL, gL, f.normal);
                    } else if (bc->dirichlet) {
                        // exterior gradient taken equal to the interior one
                        StateVec uext = bc->dirichlet(t, x, uL);
                        fv = diffusive_flux(*model_, t, x, uL, gL, uext, gL, f.normal,
                                            f.h_face, cfg_.penalty);
                    } else {
                        throw Error("model '" + model_->name + "': boundary id " +
                                    std::to_string(f.boundary_id) +
                                    " has neither a state nor a diffusive flux");
                    }
                    fv *= -1.0;
                    total += fv;
                }
                for (int c = 0; c < r; ++c) {
                    for (int i = 0; i < nb; ++i)
                        ci[c * nb + i] -= w * total[c] * phi_in[i] * sc_in;
                    bflux[c] += w * total[c];
                }
            }
        }
        face_lambda_[fi] = lam_face;
    }
};

}  // namespace rkdg
