#pragma once

// SSP Runge-Kutta time steppers over a SpatialOperator:
//
//   * explicit SSP of orders 1-3 (forward Euler, Heun, Shu-Osher),
//   * the low-storage n^2-stage third-order SSP scheme with effective CFL
//     n^2 (1 - 1/n),
//   * diagonally implicit schemes of orders 1-3 (backward Euler and two
//     stiffly accurate, L-stable SDIRK tableaus),
//   * a second-order IMEX pair (3-stage SSP2 with stiffly accurate
//     implicit part, coefficients from Pareschi & Russo) splitting
//     advection explicit / diffusion+stiff source implicit.
//
// Implicit stages solve G(v) = v - u* - dt a_ii L(v) = 0 with a
// Jacobian-free Newton-Krylov method: finite-difference directional
// derivatives inside restarted GMRES, unpreconditioned.
//
// Step size: dt = cfl * operator estimate (or a fixed override), clipped
// by the caller's cap; the estimate is refreshed by every advective stage
// evaluation and bootstrapped by one discarded apply when absent.

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rkdg/spatial_operator.hpp"

namespace rkdg {

enum class StepperType { automatic, explicit_rk, implicit_rk, imex, expl_ssp3 };

inline StepperType parse_stepper_type(const std::string& s) {
    if (s == "default") return StepperType::automatic;
    if (s == "explicit") return StepperType::explicit_rk;
    if (s == "implicit") return StepperType::implicit_rk;
    if (s == "imex") return StepperType::imex;
    if (s == "expl_ssp3") return StepperType::expl_ssp3;
    throw Error("unknown stepper type: " + s);
}

struct StepperConfig {
    StepperType type = StepperType::automatic;
    int order = 3;
    double cfl = 0.45;
    std::optional<double> fixed_dt;
    int ssp3_stages = 16;  // n^2 stage count for expl_ssp3
    // nonlinear solver controls
    double newton_atol = 1e-12;
    double newton_rtol = 1e-8;
    double krylov_rtol = 1e-4;
    int newton_max = 25;
    int krylov_max = 200;
    int gmres_restart = 30;
    /// When unset, built-in steppers limit inside every operator apply and
    /// expl_ssp3 limits once per step.
    std::optional<LimiterPlacement> limiter_placement;
};

struct SolveStats {
    int newton = 0;
    int krylov = 0;
    double residual = 0.0;
};

/// Jacobian-free Newton-Krylov solver for stage residuals G(v) = 0.
class JfnkSolver {
  public:
    JfnkSolver(const StepperConfig& cfg)
        : atol_(cfg.newton_atol),
          rtol_(cfg.newton_rtol),
          eta_(cfg.krylov_rtol),
          newton_max_(cfg.newton_max),
          krylov_max_(cfg.krylov_max),
          restart_(cfg.gmres_restart) {}

    using Residual = std::function<void(const DiscreteFunction&, DiscreteFunction&)>;

    SolveStats solve(const Residual& G, DiscreteFunction& v) const {
        SolveStats st;
        DiscreteFunction g = v, tmp = v, pert = v;
        G(v, g);
        double r0 = g.norm_l2_dofs();
        st.residual = r0;
        double tol = std::max(atol_, rtol_ * r0);
        if (r0 <= tol) return st;  // includes the exact G(v)=0 case

        int budget = krylov_max_;
        const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
        for (int it = 1; it <= newton_max_; ++it) {
            // directional derivative J z ~ (G(v + eps z) - G(v)) / eps
            auto matvec = [&](const DiscreteFunction& z, DiscreteFunction& out) {
                double zn = z.norm_l2_dofs();
                if (zn == 0.0) {
                    out.fill(0.0);
                    return;
                }
                double eps = sqrt_eps * (1.0 + v.norm_l2_dofs()) / zn;
                pert.combine(1.0, v, eps, z);
                G(pert, out);
                out.combine(1.0 / eps, out, -1.0 / eps, g);
            };
            gmres(matvec, g, tmp, budget, st);
            v.axpy(1.0, tmp);
            G(v, g);
            st.newton = it;
            st.residual = g.norm_l2_dofs();
            if (st.residual <= tol) return st;
        }
        throw Error("Newton did not converge: " + std::to_string(st.newton) + " iterations, " +
                    std::to_string(st.krylov) + " matvecs, residual " +
                    std::to_string(st.residual) + " vs target " + std::to_string(tol));
    }

  private:
    double atol_, rtol_, eta_;
    int newton_max_, krylov_max_, restart_;

    /// Restarted GMRES for J s = -g, result in s; target ||J s + g|| <= eta ||g||.
    template <class MatVec>
    void gmres(const MatVec& matvec, const DiscreteFunction& g, DiscreteFunction& s, int& budget,
               SolveStats& st) const {
        const double gnorm = g.norm_l2_dofs();
        const double target = eta_ * gnorm;
        s.fill(0.0);

        DiscreteFunction r = g, w = g;
        std::vector<DiscreteFunction> V;
        std::vector<double> H((restart_ + 1) * restart_), cs(restart_), sn(restart_),
            e(restart_ + 1), y(restart_);
        auto h = [&](int i, int j) -> double& { return H[i * restart_ + j]; };

        bool first_cycle = true;
        while (true) {
            if (first_cycle) {
                r.combine(-1.0, g, 0.0, g);  // r = -g - J*0
                first_cycle = false;
            } else {
                matvec(s, w);
                --budget;
                ++st.krylov;
                r.combine(-1.0, g, -1.0, w);
            }
            double beta = r.norm_l2_dofs();
            if (beta <= target || beta == 0.0) return;

            V.clear();
            V.push_back(r);
            V.back().scale(1.0 / beta);
            std::fill(e.begin(), e.end(), 0.0);
            e[0] = beta;

            int j = 0, used = 0;
            double res = beta;
            for (; j < restart_; ++j) {
                if (budget <= 0)
                    throw Error("Krylov iteration cap exceeded (" +
                                std::to_string(krylov_max_) + " matvecs, residual " +
                                std::to_string(res) + " vs target " + std::to_string(target) + ")");
                matvec(V[j], w);
                --budget;
                ++st.krylov;
                for (int i = 0; i <= j; ++i) {
                    h(i, j) = w.dot_dofs(V[i]);
                    w.axpy(-h(i, j), V[i]);
                }
                double hn = w.norm_l2_dofs();
                h(j + 1, j) = hn;
                bool breakdown = hn < 1e-300;
                if (!breakdown) {
                    V.push_back(w);
                    V.back().scale(1.0 / hn);
                }
                // Givens rotations keep the least-squares problem triangular
                for (int i = 0; i < j; ++i) {
                    double t0 = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
                    double t1 = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
                    h(i, j) = t0;
                    h(i + 1, j) = t1;
                }
                double denom = std::hypot(h(j, j), h(j + 1, j));
                cs[j] = denom == 0 ? 1.0 : h(j, j) / denom;
                sn[j] = denom == 0 ? 0.0 : h(j + 1, j) / denom;
                h(j, j) = denom;
                h(j + 1, j) = 0.0;
                e[j + 1] = -sn[j] * e[j];
                e[j] = cs[j] * e[j];
                res = std::abs(e[j + 1]);
                used = j + 1;
                if (res <= target || breakdown) break;
            }

            // back substitution and solution update
            for (int i = used - 1; i >= 0; --i) {
                double sum = e[i];
                for (int k2 = i + 1; k2 < used; ++k2) sum -= h(i, k2) * y[k2];
                y[i] = sum / h(i, i);
            }
            for (int i = 0; i < used; ++i) s.axpy(y[i], V[i]);
            if (res <= target) return;
        }
    }
};

class TimeStepper {
  public:
    TimeStepper(SpatialOperator& op, StepperConfig cfg) : op_(&op), cfg_(cfg) {}
    virtual ~TimeStepper() = default;

    double time() const { return t_; }
    void set_time(double t) { t_ = t; }
    const StepperConfig& config() const { return cfg_; }
    const SolveStats& last_solve() const { return stats_; }

    /// Advance u in place by one step of at most dt_cap; returns the dt used.
    double step(DiscreteFunction& u, double dt_cap = std::numeric_limits<double>::infinity()) {
        before_step();
        double dt = choose_dt(u, dt_cap);
        advance(u, dt);
        t_ += dt;
        if (op_->config().limiter.placement == LimiterPlacement::step_end) {
            op_->set_time(t_);
            op_->apply_limiter(u, /*strict=*/false);
        }
        return dt;
    }

  protected:
    SpatialOperator* op_;
    StepperConfig cfg_;
    double t_ = 0.0;
    SolveStats stats_;

    virtual void advance(DiscreteFunction& u, double dt) = 0;
    virtual void before_step() {}
    virtual double cfl_multiplier() const { return 1.0; }

    double choose_dt(const DiscreteFunction& u, double cap) {
        double dt;
        if (cfg_.fixed_dt) {
            dt = *cfg_.fixed_dt;
        } else {
            if (!std::isfinite(op_->timestep_estimate())) {
                // one discarded evaluation seeds the estimate
                DiscreteFunction tmp = u;
                op_->set_time(t_);
                op_->apply(u, tmp);
            }
            dt = cfg_.cfl * cfl_multiplier() * op_->timestep_estimate();
        }
        dt = std::min(dt, cap);
        if (!(dt > 0) || !std::isfinite(dt))
            throw Error("no usable time step: the CFL estimate is unavailable "
                        "(configure stepper.fixed_dt)");
        return dt;
    }
};

/// Explicit SSP schemes in Shu-Osher form, orders 1-3.
class ExplicitSSP : public TimeStepper {
  public:
    using TimeStepper::TimeStepper;

  protected:
    void advance(DiscreteFunction& u, double dt) override {
        op_->set_time(t_);
        DiscreteFunction L = u;
        switch (cfg_.order) {
            case 1: {
                op_->set_stage_time(0.0, dt);
                op_->apply(u, L);
                u.axpy(dt, L);
                break;
            }
            case 2: {
                op_->set_stage_time(0.0, dt);
                op_->apply(u, L);
                DiscreteFunction u1 = u;
                u1.axpy(dt, L);
                op_->set_stage_time(1.0, dt);
                op_->apply(u1, L);
                u1.axpy(dt, L);
                u.combine(0.5, u, 0.5, u1);
                break;
            }
            default: {
                op_->set_stage_time(0.0, dt);
                op_->apply(u, L);
                DiscreteFunction u1 = u;
                u1.axpy(dt, L);
                op_->set_stage_time(1.0, dt);
                op_->apply(u1, L);
                u1.axpy(dt, L);
                DiscreteFunction u2 = u;
                u2.combine(0.75, u, 0.25, u1);
                op_->set_stage_time(0.5, dt);
                op_->apply(u2, L);
                u2.axpy(dt, L);
                u.combine(1.0 / 3.0, u, 2.0 / 3.0, u2);
                break;
            }
        }
    }
};

/// Low-storage third-order SSP scheme with n^2 stages and effective CFL
/// n^2 (1 - 1/n): one solution vector, one snapshot, equal increments
/// u += (dt / (n^2 - n)) L(u), one recombination, limiter at step end.
class ExplSSP3 : public TimeStepper {
  public:
    ExplSSP3(SpatialOperator& op, StepperConfig cfg) : TimeStepper(op, cfg) {
        n_ = int(std::lround(std::sqrt(double(cfg.ssp3_stages))));
        if (n_ < 2 || n_ * n_ != cfg.ssp3_stages)
            throw Error("expl_ssp3: stage count must be n^2 with n >= 2, got " +
                        std::to_string(cfg.ssp3_stages));
    }

    double stage_fraction(int i) const {
        int r = n_ * n_ - n_;
        return (i <= (n_ + 2) * (n_ - 1) / 2 + 1) ? double(i - 1) / r : double(i - n_ - 1) / r;
    }

  protected:
    double cfl_multiplier() const override { return n_ * n_ * (1.0 - 1.0 / n_); }

    void advance(DiscreteFunction& u, double dt) override {
        op_->set_time(t_);
        const int stages = n_ * n_;
        const int r = stages - n_;
        const int snapshot_after = (n_ - 1) * (n_ - 2) / 2;
        const int recombine_after = n_ * (n_ + 1) / 2;
        DiscreteFunction L = u, q2 = u;
        for (int i = 1; i <= stages; ++i) {
            if (i - 1 == snapshot_after) q2 = u;
            if (i - 1 == recombine_after)
                u.combine(double(n_ - 1) / (2 * n_ - 1), u, double(n_) / (2 * n_ - 1), q2);
            op_->set_stage_time(stage_fraction(i), dt);
            op_->apply(u, L);
            u.axpy(dt / r, L);
        }
    }

  private:
    int n_;
};

/// Turns off the operator's limiter pre-composition for the lifetime of an
/// implicit solve: Newton/Krylov trial states are not physical states.
class LimitInputsGuard {
  public:
    explicit LimitInputsGuard(SpatialOperator& op) : op_(&op) { op_->set_limit_inputs(false); }
    ~LimitInputsGuard() { op_->set_limit_inputs(true); }
    LimitInputsGuard(const LimitInputsGuard&) = delete;
    LimitInputsGuard& operator=(const LimitInputsGuard&) = delete;

  private:
    SpatialOperator* op_;
};

/// Diagonally implicit schemes: backward Euler, a 2-stage and a 3-stage
/// stiffly accurate, L-stable SDIRK tableau.
class DirkStepper : public TimeStepper {
  public:
    DirkStepper(SpatialOperator& op, StepperConfig cfg) : TimeStepper(op, cfg), jfnk_(cfg) {
        switch (cfg.order) {
            case 1:
                s_ = 1;
                A_[0][0] = 1.0;
                b_ = {1.0, 0, 0};
                c_ = {1.0, 0, 0};
                break;
            case 2: {
                double g = 1.0 - std::sqrt(0.5);
                s_ = 2;
                A_[0][0] = g;
                A_[1][0] = 1.0 - g;
                A_[1][1] = g;
                b_ = {1.0 - g, g, 0};
                c_ = {g, 1.0, 0};
                break;
            }
            default: {
                double g = 0.435866521508459;
                s_ = 3;
                A_[0][0] = g;
                A_[1][0] = (1.0 - g) / 2.0;
                A_[1][1] = g;
                A_[2][0] = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
                A_[2][1] = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
                A_[2][2] = g;
                b_ = {A_[2][0], A_[2][1], g};
                c_ = {g, (1.0 + g) / 2.0, 1.0};
                break;
            }
        }
    }

  protected:
    void before_step() override { op_->set_split(SplitMode::full); }

    void advance(DiscreteFunction& u, double dt) override {
        op_->set_time(t_);
        DiscreteFunction ustar = u, v = u, tmp = u;
        std::vector<DiscreteFunction> K;
        K.reserve(s_);
        for (int i = 0; i < s_; ++i) {
            ustar = u;
            for (int j = 0; j < i; ++j) ustar.axpy(dt * A_[i][j], K[j]);
            double aii = A_[i][i];
            op_->set_stage_time(c_[i], dt);
            auto G = [&](const DiscreteFunction& w, DiscreteFunction& out) {
                op_->apply(w, tmp);
                out.combine(1.0, w, -dt * aii, tmp);
                out.axpy(-1.0, ustar);
            };
            v = ustar;
            {
                LimitInputsGuard guard(*op_);
                stats_ = jfnk_.solve(G, v);
            }
            K.push_back(v);
            K.back().axpy(-1.0, ustar);
            K.back().scale(1.0 / (dt * aii));
        }
        for (int i = 0; i < s_; ++i) u.axpy(dt * b_[i], K[i]);
    }

  private:
    JfnkSolver jfnk_;
    int s_ = 1;
    double A_[3][3] = {};
    std::array<double, 3> b_{}, c_{};
};

/// IMEX SSP2(3,3,2): advection and explicit sources by the explicit
/// tableau, viscous flux and implicit sources by the stiffly accurate
/// implicit partner. Both share the weights (1/3, 1/3, 1/3).
class ImexStepper : public TimeStepper {
  public:
    ImexStepper(SpatialOperator& op, StepperConfig cfg) : TimeStepper(op, cfg), jfnk_(cfg) {}

  protected:
    void before_step() override { op_->set_split(SplitMode::explicit_part); }

    void advance(DiscreteFunction& u, double dt) override {
        static constexpr double AE[3][3] = {{0, 0, 0}, {0.5, 0, 0}, {0.5, 0.5, 0}};
        static constexpr double cE[3] = {0.0, 0.5, 1.0};
        static constexpr double AI[3][3] = {
            {0.25, 0, 0}, {0, 0.25, 0}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        static constexpr double cI[3] = {0.25, 0.25, 1.0};
        static constexpr double w3 = 1.0 / 3.0;  // both sets of weights

        op_->set_time(t_);
        DiscreteFunction ustar = u, v = u, tmp = u;
        std::vector<DiscreteFunction> KE, KI;
        for (int i = 0; i < 3; ++i) {
            ustar = u;
            for (int j = 0; j < i; ++j) {
                ustar.axpy(dt * AE[i][j], KE[j]);
                ustar.axpy(dt * AI[i][j], KI[j]);
            }
            double aii = AI[i][i];
            op_->set_split(SplitMode::implicit_part);
            op_->set_stage_time(cI[i], dt);
            auto G = [&](const DiscreteFunction& w, DiscreteFunction& out) {
                op_->apply(w, tmp);
                out.combine(1.0, w, -dt * aii, tmp);
                out.axpy(-1.0, ustar);
            };
            v = ustar;
            {
                LimitInputsGuard guard(*op_);
                stats_ = jfnk_.solve(G, v);
            }
            KI.push_back(v);
            KI.back().axpy(-1.0, ustar);
            KI.back().scale(1.0 / (dt * aii));

            op_->set_split(SplitMode::explicit_part);
            op_->set_stage_time(cE[i], dt);
            KE.emplace_back(u);
            op_->apply(v, KE.back());
        }
        for (int i = 0; i < 3; ++i) {
            u.axpy(dt * w3, KE[i]);
            u.axpy(dt * w3, KI[i]);
        }
    }

  private:
    JfnkSolver jfnk_;
};

/// Build a stepper, resolving type `automatic` by the model's fluxes:
/// advection only -> explicit, diffusion only -> implicit, both -> imex.
inline std::unique_ptr<TimeStepper> make_stepper(StepperConfig cfg, SpatialOperator& op) {
    const ModelSpec& m = op.model();
    StepperType type = cfg.type;
    if (type == StepperType::automatic) {
        if (m.has_advection() && m.has_diffusion()) type = StepperType::imex;
        else if (m.has_advection()) type = StepperType::explicit_rk;
        else type = StepperType::implicit_rk;
    }
    if (cfg.order < 1 || cfg.order > 3) throw Error("stepper order must be 1, 2 or 3");
    if (type == StepperType::imex && !m.has_diffusion())
        throw Error("imex stepper requires a model with a viscous flux");

    op.set_limiter_placement(cfg.limiter_placement.value_or(
        type == StepperType::expl_ssp3 ? LimiterPlacement::step_end
                                       : LimiterPlacement::each_apply));

    switch (type) {
        case StepperType::explicit_rk: return std::make_unique<ExplicitSSP>(op, cfg);
        case StepperType::expl_ssp3: return std::make_unique<ExplSSP3>(op, cfg);
        case StepperType::implicit_rk: return std::make_unique<DirkStepper>(op, cfg);
        default: return std::make_unique<ImexStepper>(op, cfg);
    }
}

}  // namespace rkdg
