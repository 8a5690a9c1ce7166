#pragma once

// Shock stabilization: compose a troubled-cell indicator with a
// mean-preserving projection.
//
//   * jump indicator: scaled inflow-face integrals of the model's jump
//     measure, J_E = sum_e |int_e phi(u_E,u_K) ds| / (alpha_d(k)
//     h_E^{(k+1)/4} |e|) with alpha_d(k) = (2/125) d 5^k; troubled iff
//     J_E > tolerance or any quadrature value is unphysical.
//   * modal decay indicator: least-squares slope of the log modal skyline
//     (onb only); a cell is troubled iff 1/slope > tolerance.
//   * reconstruction: limited least-squares linear rebuild from neighbor
//     means on troubled cells. For degree-0 spaces the slope cannot live in
//     the basis, so it is returned in an overlay the operator consumes
//     (second-order MUSCL finite volume behavior).
//   * scaling limiter: pointwise rescale about the mean enforcing
//     user-supplied componentwise bounds at all quadrature points.
//
// All pieces leave cell means untouched, reproduce planes (the linear
// least-squares fit is exact on them), and touch only face-neighbor data.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rkdg/basis.hpp"
#include "rkdg/function.hpp"
#include "rkdg/mesh.hpp"
#include "rkdg/model.hpp"

namespace rkdg {

enum class LimiterMode { none, standard, scaling, standard_scaling };
enum class IndicatorKind { jump, modal, custom };
enum class TroubleReason : uint8_t { none, smoothness, unphysical };
/// Cell size entering the jump-indicator normalization.
enum class CellSizeMeasure { diameter, volume_root };
/// Where the time stepper invokes the limiter: inside every operator
/// evaluation, or once per completed step.
enum class LimiterPlacement { each_apply, step_end };

inline LimiterMode parse_limiter_mode(const std::string& s) {
    if (s == "none") return LimiterMode::none;
    if (s == "default") return LimiterMode::standard;
    if (s == "scaling") return LimiterMode::scaling;
    if (s == "default_scaling" || s == "default+scaling") return LimiterMode::standard_scaling;
    throw Error("unknown limiter mode: " + s);
}

struct LimiterConfig {
    LimiterMode mode = LimiterMode::none;
    IndicatorKind indicator = IndicatorKind::jump;
    double tolerance = 1.0;
    CellSizeMeasure h_measure = CellSizeMeasure::diameter;
    LimiterPlacement placement = LimiterPlacement::each_apply;
    /// Custom per-cell indicator value (used with IndicatorKind::custom).
    std::function<double(const DiscreteFunction&, int leaf)> custom;

    bool wants_reconstruction() const {
        return mode == LimiterMode::standard || mode == LimiterMode::standard_scaling;
    }
    bool wants_scaling() const {
        return mode == LimiterMode::scaling || mode == LimiterMode::standard_scaling;
    }
};

/// alpha_d(k): dimension- and degree-dependent normalization of the jump
/// indicator, calibrated so tolerance 1 separates smooth from non-smooth.
inline double jump_indicator_alpha(int dim, int k) {
    return (2.0 / 125.0) * dim * std::pow(5.0, k);
}

/// Decay rate of a modal coefficient block (component slice, onb layout).
/// Returns 1000 for constant content, 100 when only one mode level exists,
/// otherwise the least-squares slope s of log(skyline) vs -log(mode).
inline double modal_decay_rate(const Space& sp, const double* coef, double cell_volume) {
    int P = sp.k;
    if (P == 0) return 1000.0;
    double factor = 1.0 / std::sqrt(cell_volume);
    std::vector<double> q(P + 1, 0.0), b2(P + 1, 0.0), nof(P + 1, 0.0);
    q[0] = coef[0] * coef[0];
    for (int i = 0; i < sp.nb; ++i) {
        int deg = sp.mode_degree(i);
        if (deg >= 1) nof[deg] += 1.0;
    }
    double l2norm2 = 0.0, f = 0.0;
    for (int i = 0; i < sp.nb; ++i) {
        int deg = sp.mode_degree(i);
        if (deg < 1) continue;
        q[deg] += coef[i] * coef[i] / nof[deg];
        l2norm2 += coef[i] * coef[i] / nof[deg];
    }
    for (int d = 1; d <= P; ++d) {
        b2[d] = std::pow(1.0 / d, 2.0 * P);
        f += b2[d];
    }
    for (int d = 1; d <= P; ++d) q[d] = std::sqrt(q[d] + l2norm2 * b2[d] / f) / factor;

    double maxQ = std::max(q[P], q[P - 1]);
    int significant = 0;
    for (int i = P; i >= 1; --i) {
        maxQ = std::max(maxQ, q[i]);
        if (maxQ > 1e-14) {
            significant = i;
            break;
        }
    }
    if (significant == 0) return 1000.0;  // constant
    if (significant == 1) return 100.0;   // too little content to fit
    // skyline least squares: log q~ = x0 - s log(mode)
    double a11 = 0, a12 = 0, a22 = 0, r1 = 0, r2 = 0;
    for (int r = significant; r-- > 0;) {
        maxQ = std::max(maxQ, q[r + 1]);
        double xr = -std::log(double(r + 1));
        double rhs = std::log(maxQ);
        a11 += 1.0;
        a12 += xr;
        a22 += xr * xr;
        r1 += rhs;
        r2 += xr * rhs;
    }
    double det = a11 * a22 - a12 * a12;
    return (a11 * r2 - a12 * r1) / det;
}

/// Per-cell linear slopes that do not fit into the basis (degree 0 only);
/// the operator adds slope . (x - x_E) when evaluating such cells.
struct ReconstructionOverlay {
    std::vector<uint8_t> active;
    std::vector<double> slope;  // [cell * r * dim]
    bool any = false;
    void reset(int cells, int r, int dim) {
        active.assign(cells, 0);
        slope.assign(std::size_t(cells) * r * dim, 0.0);
        any = false;
    }
};

struct IndicatorReport {
    std::vector<double> value;          // indicator value per cell
    std::vector<uint8_t> troubled;      // indicator above tolerance or unphysical
    std::vector<TroubleReason> reason;  // why the cell was flagged
    int num_troubled = 0;
};

class Stabilizer {
  public:
    Stabilizer(const Mesh& mesh, const Space& space, const ModelSpec& model, LimiterConfig cfg)
        : mesh_(&mesh), space_(&space), model_(&model), cfg_(cfg) {
        if (cfg_.wants_reconstruction()) {
            if (cfg_.indicator == IndicatorKind::jump && (!model.jump || !model.velocity))
                throw Error("jump indicator needs the model's jump and velocity hooks");
            if (cfg_.indicator == IndicatorKind::modal && space.kind != BasisKind::onb)
                throw Error("modal indicator requires the onb basis");
            if (cfg_.indicator == IndicatorKind::custom && !cfg_.custom)
                throw Error("custom indicator selected but no callback given");
        }
        if (cfg_.wants_scaling() && !model.lower_bound && !model.upper_bound)
            throw Error("scaling limiter needs lower and/or upper bounds on the model");
    }

    const LimiterConfig& config() const { return cfg_; }

    /// Largest tolerated relative mean-bound violation before a strict
    /// scaling pass gives up.
    static constexpr double mean_slack = 1e-8;

    double indicator_value(const DiscreteFunction& u, double t, int leaf) const {
        switch (cfg_.indicator) {
            case IndicatorKind::jump: return jump_indicator(u, t, leaf);
            case IndicatorKind::modal: {
                double s = modal_decay_rate(*space_, u.component(leaf, 0),
                                            mesh_->geometry(leaf).volume);
                return std::abs(s) > 1e-14 ? 1.0 / s : 0.0;
            }
            default: return cfg_.custom(u, leaf);
        }
    }

    /// Scaled sum of jump integrals over inflow faces (advection direction
    /// taken at the cell mean).
    double jump_indicator(const DiscreteFunction& u, double t, int leaf) const {
        const CellGeometry& g = mesh_->geometry(leaf);
        StateVec mean = u.cell_mean(leaf);
        Point vel = model_->velocity(t, g.center, mean);
        double alpha = jump_indicator_alpha(mesh_->dim(), space_->k);
        double h = cfg_.h_measure == CellSizeMeasure::diameter
                       ? g.diameter
                       : std::pow(g.volume, 1.0 / mesh_->dim());
        double hpow = std::pow(h, double(space_->k + 1) / 4.0);
        double J = 0.0;
        int nf = space_->face_npoints();
        for (int fi : mesh_->cell_faces(leaf)) {
            const Face& f = mesh_->faces()[fi];
            if (f.outside < 0) continue;
            bool is_inside = f.inside == leaf;
            Point n_out = (is_inside ? 1.0 : -1.0) * f.normal;
            if (dot(vel, n_out) >= 0) continue;  // only inflow faces
            int other = is_inside ? f.outside : f.inside;
            double integral = 0.0;
            for (int q = 0; q < nf; ++q) {
                StateVec mine = trace(u, leaf, f, is_inside, q);
                StateVec theirs = trace(u, other, f, !is_inside, q);
                integral += space_->face_weight(q) * model_->jump(mine, theirs);
            }
            J += std::abs(integral) / (alpha * hpow);
        }
        return J;
    }

    /// True iff the model's physicality predicate holds at every volume and
    /// face quadrature point of the cell.
    bool physical_cell(const DiscreteFunction& u, double t, int leaf) const {
        if (!model_->physical) return true;
        const CellGeometry& g = mesh_->geometry(leaf);
        double sc = space_->scale(g.volume);
        for (int q = 0; q < space_->vol.size(); ++q) {
            StateVec v = eval_state(u.block(leaf), u.components(), space_->nb, space_->vol_phi(q), sc);
            if (!model_->physical(t, DiscreteFunction::ref_to_phys(g, space_->vol.points[q]), v))
                return false;
        }
        int nf = space_->face_npoints();
        for (int side = 0; side < 2 * mesh_->dim(); ++side)
            for (int q = 0; q < nf; ++q) {
                StateVec v = eval_state(u.block(leaf), u.components(), space_->nb,
                                        space_->face_phi(side, q), sc);
                Point x = DiscreteFunction::ref_to_phys(g, space_->face_point(side, q));
                if (!model_->physical(t, x, v)) return false;
            }
        return true;
    }

    IndicatorReport troubled_cells(const DiscreteFunction& u, double t) const {
        int n = mesh_->num_leaves();
        IndicatorReport rep;
        rep.value.resize(n);
        rep.troubled.assign(n, 0);
        rep.reason.assign(n, TroubleReason::none);
        for (int e = 0; e < n; ++e) {
            rep.value[e] = indicator_value(u, t, e);
            if (rep.value[e] > cfg_.tolerance) {
                rep.reason[e] = TroubleReason::smoothness;
            } else if (model_->physical && !physical_cell(u, t, e)) {
                rep.reason[e] = TroubleReason::unphysical;
            }
            if (rep.reason[e] != TroubleReason::none) {
                rep.troubled[e] = 1;
                ++rep.num_troubled;
            }
        }
        return rep;
    }

    /// Full stabilization pass in place. Returns the degree-0 overlay (empty
    /// `any` flag when unused). Identity on cells that are not troubled.
    /// `strict` governs the scaling limiter's reaction to means outside the
    /// bounds: error when true, collapse onto the mean when false (used for
    /// operator-internal inputs, which include intermediate stage states).
    ReconstructionOverlay apply(DiscreteFunction& u, double t, bool strict = true) const {
        ReconstructionOverlay ov;
        if (cfg_.mode == LimiterMode::none) return ov;
        if (cfg_.wants_reconstruction()) {
            IndicatorReport rep = troubled_cells(u, t);
            if (rep.num_troubled > 0) {
                if (space_->k == 0)
                    ov.reset(mesh_->num_leaves(), u.components(), mesh_->dim());
                for (int e = 0; e < mesh_->num_leaves(); ++e)
                    if (rep.troubled[e]) reconstruct_cell(u, e, ov);
            }
        }
        if (cfg_.wants_scaling()) scaling_limit(u, t, strict);
        return ov;
    }

    /// Limited least-squares linear rebuild of one cell from neighbor means.
    void reconstruct_cell(DiscreteFunction& u, int leaf, ReconstructionOverlay& ov) const {
        const CellGeometry& g = mesh_->geometry(leaf);
        int r = u.components(), d = mesh_->dim();
        StateVec mean = u.cell_mean(leaf);
        std::vector<int> nbs = mesh_->neighbors(leaf);

        // normal equations of the slope fit, shared by all components
        double A[2][2] = {{0, 0}, {0, 0}};
        std::vector<Point> dx(nbs.size());
        std::vector<StateVec> nmean(nbs.size());
        for (std::size_t j = 0; j < nbs.size(); ++j) {
            dx[j] = mesh_->displacement(leaf, nbs[j]);
            nmean[j] = u.cell_mean(nbs[j]);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) A[a][b] += dx[j][a] * dx[j][b];
        }
        double det = d == 1 ? A[0][0] : A[0][0] * A[1][1] - A[0][1] * A[1][0];
        double slope[max_components][2] = {};
        if (std::abs(det) > 1e-300) {
            for (int c = 0; c < r; ++c) {
                double b0 = 0, b1 = 0;
                for (std::size_t j = 0; j < nbs.size(); ++j) {
                    double diff = nmean[j][c] - mean[c];
                    b0 += dx[j][0] * diff;
                    if (d == 2) b1 += dx[j][1] * diff;
                }
                if (d == 1) {
                    slope[c][0] = b0 / A[0][0];
                } else {
                    slope[c][0] = (A[1][1] * b0 - A[0][1] * b1) / det;
                    slope[c][1] = (A[0][0] * b1 - A[1][0] * b0) / det;
                }
            }
        }

        // limit against the min/max envelope of cell and neighbor means at
        // the face quadrature points
        int nf = space_->face_npoints();
        for (int c = 0; c < r; ++c) {
            double lo = mean[c], hi = mean[c];
            for (const StateVec& nm : nmean) {
                lo = std::min(lo, nm[c]);
                hi = std::max(hi, nm[c]);
            }
            double theta = 1.0;
            for (int side = 0; side < 2 * d; ++side)
                for (int q = 0; q < nf; ++q) {
                    Point x = DiscreteFunction::ref_to_phys(g, space_->face_point(side, q));
                    double delta =
                        slope[c][0] * (x[0] - g.center[0]) + slope[c][1] * (x[1] - g.center[1]);
                    if (delta > 1e-14) theta = std::min(theta, (hi - mean[c]) / delta);
                    else if (delta < -1e-14) theta = std::min(theta, (mean[c] - lo) / (-delta));
                }
            theta = std::max(0.0, theta);
            slope[c][0] *= theta;
            slope[c][1] *= theta;
        }

        if (space_->k == 0) {
            // the basis cannot hold a linear: keep the mean, export the slope
            for (int c = 0; c < r; ++c)
                for (int a = 0; a < d; ++a)
                    ov.slope[(std::size_t(leaf) * r + c) * d + a] = slope[c][a];
            ov.active[leaf] = 1;
            ov.any = true;
            return;
        }
        // project the limited linear onto the cell basis (exact: degree >= 1)
        int nb = space_->nb;
        double* blk = u.block(leaf);
        if (space_->nodal()) {
            for (int q = 0; q < nb; ++q) {
                Point x = DiscreteFunction::ref_to_phys(g, space_->vol.points[q]);
                for (int c = 0; c < r; ++c)
                    blk[c * nb + q] = mean[c] + slope[c][0] * (x[0] - g.center[0]) +
                                      slope[c][1] * (x[1] - g.center[1]);
            }
        } else {
            double sv = std::sqrt(g.volume);
            std::fill(blk, blk + r * nb, 0.0);
            for (int q = 0; q < space_->vol.size(); ++q) {
                Point x = DiscreteFunction::ref_to_phys(g, space_->vol.points[q]);
                const double* phi = space_->vol_phi(q);
                double w = space_->vol.weights[q];
                for (int c = 0; c < r; ++c) {
                    double val = mean[c] + slope[c][0] * (x[0] - g.center[0]) +
                                 slope[c][1] * (x[1] - g.center[1]);
                    for (int i = 0; i < nb; ++i) blk[c * nb + i] += sv * w * val * phi[i];
                }
            }
        }
    }

    /// Rescale every cell about its mean, per component, so all volume and
    /// face quadrature values respect the model's componentwise bounds.
    void scaling_limit(DiscreteFunction& u, double t, bool strict = true) const {
        (void)t;
        int r = u.components(), nb = space_->nb;
        int nf = space_->face_npoints(), nsides = 2 * mesh_->dim();
        for (int e = 0; e < mesh_->num_leaves(); ++e) {
            const CellGeometry& g = mesh_->geometry(e);
            double sc = space_->scale(g.volume);
            double* blk = u.block(e);
            StateVec mean = u.cell_mean(e);
            for (int c = 0; c < r; ++c) {
                bool has_lo = model_->lower_bound.has_value();
                bool has_hi = model_->upper_bound.has_value();
                double lo = has_lo ? (*model_->lower_bound)[c] : -1e300;
                double hi = has_hi ? (*model_->upper_bound)[c] : 1e300;
                double umin = 1e300, umax = -1e300;
                double* bc = blk + c * nb;
                auto sample = [&](const double* phi) {
                    double s = 0;
                    for (int i = 0; i < nb; ++i) s += bc[i] * phi[i];
                    s *= sc;
                    umin = std::min(umin, s);
                    umax = std::max(umax, s);
                };
                for (int q = 0; q < space_->vol.size(); ++q) sample(space_->vol_phi(q));
                for (int side = 0; side < nsides; ++side)
                    for (int q = 0; q < nf; ++q) sample(space_->face_phi(side, q));
                // A mean outside the bounds cannot be rescued by scaling about
                // it; the best available repair is collapsing the cell onto
                // its mean. For states handed in from outside that is an
                // error beyond a roundoff-level slack. Operator-internal
                // inputs (strict=false) tolerate it: implicit stage states
                // carry small bound violations by nature -- discrete
                // diffusion is not monotone -- and must stay evaluable.
                double slack = mean_slack * std::max({1.0, has_lo ? std::abs(lo) : 0.0,
                                                      has_hi ? std::abs(hi) : 0.0});
                if (strict && (mean[c] < lo - slack || mean[c] > hi + slack))
                    throw Error("scaling limiter: cell mean violates the bounds (cell " +
                                std::to_string(e) + ", component " + std::to_string(c) +
                                ", mean " + std::to_string(mean[c]) + ")");
                double theta = 1.0;
                if (umin < lo && mean[c] - umin > 0)
                    theta = std::min(theta, (mean[c] - lo) / (mean[c] - umin));
                if (umax > hi && umax - mean[c] > 0)
                    theta = std::min(theta, (hi - mean[c]) / (umax - mean[c]));
                theta = std::max(0.0, theta);
                if (theta >= 1.0) continue;
                if (space_->nodal()) {
                    for (int q = 0; q < nb; ++q) bc[q] = mean[c] + theta * (bc[q] - mean[c]);
                } else {
                    for (int i = 1; i < nb; ++i) bc[i] *= theta;
                }
            }
        }
    }

  private:
    const Mesh* mesh_;
    const Space* space_;
    const ModelSpec* model_;
    LimiterConfig cfg_;

    /// Trace of u on cell `leaf` at face quadrature point q of face f.
    StateVec trace(const DiscreteFunction& u, int leaf, const Face& f, bool is_inside,
                   int q) const {
        const double* phi;
        if (is_inside) {
            phi = space_->face_phi(f.side_in, q);
        } else if (f.out_half < 0) {
            phi = space_->face_phi(f.side_out, q);
        } else {
            phi = space_->half_phi(f.side_out, f.out_half, q);
        }
        return eval_state(u.block(leaf), u.components(), space_->nb, phi,
                          space_->scale(mesh_->geometry(leaf).volume));
    }
};

}  // namespace rkdg
