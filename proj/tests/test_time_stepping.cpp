#include <catch2/catch_amalgamated.hpp>

#include "rkdg/models.hpp"
#include "rkdg/spatial_operator.hpp"
#include "rkdg/time_stepping.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

using namespace rkdg;
using Catch::Matchers::ContainsSubstring;

namespace {

// Scalar ODE y' = f(t, y) dressed up as a model: one periodic degree-0 cell,
// an inert viscous flux (so every stepper family accepts the model) and the
// right-hand side as a source term.
ModelSpec scalar_ode(std::function<double(double, double)> f, bool implicit_side = false) {
    ModelSpec m;
    m.name = "scalar_ode";
    m.dim = 1;
    m.components = 1;
    m.end_time = 1.0;
    m.domain_lo = {0, 0};
    m.domain_hi = {1, 1};
    m.cells = {1, 1};
    m.periodic = {true, false};
    m.flux_v = [](double, const Point&, const StateVec&, const FluxMat&) {
        FluxMat g(1, 1);
        g(0, 0) = 0.0;
        return g;
    };
    auto src = [f](double t, const Point&, const StateVec& u, const FluxMat&) {
        return StateVec{f(t, u[0])};
    };
    if (implicit_side) m.source_i = src;
    else m.source_e = src;
    m.initial = [](const Point&) { return StateVec{1.0}; };
    return m;
}

struct OdeRun {
    Mesh mesh;
    Space space;
    SpatialOperator op;
    std::unique_ptr<TimeStepper> stepper;
    DiscreteFunction u;

    OdeRun(const ModelSpec& m, StepperConfig sc)
        : mesh(Mesh::cartesian(m.domain_lo, m.domain_hi, {1, 1}, 1, m.periodic)),
          space(Space::make(BasisKind::onb, 0, 1)),
          op(mesh, space, m),
          stepper(make_stepper(sc, op)),
          u(mesh, space, 1) {
        u.project(m.initial);
    }

    double y() const { return u.cell_mean(0)[0]; }
};

double ode_error(std::function<double(double, double)> f, double y_exact, StepperConfig sc,
                 double dt, double T = 1.0) {
    sc.fixed_dt = dt;
    ModelSpec m = scalar_ode(f);
    OdeRun run(m, sc);
    int n = int(std::lround(T / dt));
    for (int i = 0; i < n; ++i) run.stepper->step(run.u);
    return std::abs(run.y() - y_exact);
}

double relaxation(double t, double y) { return -y + std::cos(t); }
double relaxation_exact(double t) {
    return 0.5 * (std::cos(t) + std::sin(t)) + 0.5 * std::exp(-t);
}

// keep only the first of each run of equal recorded times (implicit solvers
// evaluate the residual repeatedly at one stage time)
std::vector<double> distinct_times(const std::vector<double>& ts) {
    std::vector<double> out;
    for (double t : ts)
        if (out.empty() || std::abs(out.back() - t) > 1e-13) out.push_back(t);
    return out;
}

}  // namespace

TEST_CASE("stepper names parse", "[time]") {
    CHECK(parse_stepper_type("default") == StepperType::automatic);
    CHECK(parse_stepper_type("explicit") == StepperType::explicit_rk);
    CHECK(parse_stepper_type("implicit") == StepperType::implicit_rk);
    CHECK(parse_stepper_type("imex") == StepperType::imex);
    CHECK(parse_stepper_type("expl_ssp3") == StepperType::expl_ssp3);
    CHECK_THROWS_WITH(parse_stepper_type("leapfrog"), ContainsSubstring("unknown stepper type"));
}

TEST_CASE("stepper construction is validated", "[time]") {
    ModelSpec m = scalar_ode(relaxation);
    Mesh mesh = Mesh::cartesian(m.domain_lo, m.domain_hi, {1, 1}, 1, m.periodic);
    Space sp = Space::make(BasisKind::onb, 0, 1);
    SpatialOperator op(mesh, sp, m);

    StepperConfig bad_order;
    bad_order.order = 4;
    CHECK_THROWS_WITH(make_stepper(bad_order, op), ContainsSubstring("order must be 1, 2 or 3"));

    StepperConfig bad_stages;
    bad_stages.type = StepperType::expl_ssp3;
    bad_stages.ssp3_stages = 3;
    CHECK_THROWS_WITH(make_stepper(bad_stages, op),
                      ContainsSubstring("stage count must be n^2 with n >= 2, got 3"));

    ModelSpec adv = models::euler_sod();  // no viscous flux
    Mesh mesh2 = Mesh::cartesian(adv.domain_lo, adv.domain_hi, {10, 1}, 1);
    Space sp2 = Space::make(BasisKind::onb, 1, 1);
    SpatialOperator op2(mesh2, sp2, adv);
    StepperConfig imex;
    imex.type = StepperType::imex;
    CHECK_THROWS_WITH(make_stepper(imex, op2),
                      ContainsSubstring("imex stepper requires a model with a viscous flux"));
}

TEST_CASE("diffusion-only models need a fixed step size", "[time]") {
    ModelSpec m = models::heat_1d();
    Mesh mesh = Mesh::cartesian(m.domain_lo, m.domain_hi, {8, 1}, 1);
    Space sp = Space::make(BasisKind::onb, 1, 1);
    SpatialOperator op(mesh, sp, m);
    StepperConfig sc;  // automatic resolves to implicit, no advective CFL exists
    auto stepper = make_stepper(sc, op);
    DiscreteFunction u(mesh, sp, 1);
    u.project(m.initial);
    CHECK_THROWS_WITH(stepper->step(u),
                      ContainsSubstring("no usable time step") &&
                          ContainsSubstring("stepper.fixed_dt"));

    StepperConfig fixed;
    fixed.fixed_dt = 1e-3;
    SpatialOperator op2(mesh, sp, m);
    auto stepper2 = make_stepper(fixed, op2);
    CHECK(stepper2->step(u) == 1e-3);
    CHECK(stepper2->time() == 1e-3);
}

TEST_CASE("limiter placement defaults depend on the stepper", "[time]") {
    ModelSpec m = models::advection_sin_1d();
    Mesh mesh = Mesh::cartesian(m.domain_lo, m.domain_hi, {8, 1}, 1, m.periodic);
    Space sp = Space::make(BasisKind::onb, 1, 1);

    SpatialOperator op(mesh, sp, m);
    StepperConfig sc;
    sc.type = StepperType::explicit_rk;
    make_stepper(sc, op);
    CHECK(op.config().limiter.placement == LimiterPlacement::each_apply);

    sc.type = StepperType::expl_ssp3;
    make_stepper(sc, op);
    CHECK(op.config().limiter.placement == LimiterPlacement::step_end);

    sc.type = StepperType::explicit_rk;
    sc.limiter_placement = LimiterPlacement::step_end;
    make_stepper(sc, op);
    CHECK(op.config().limiter.placement == LimiterPlacement::step_end);
}

TEST_CASE("first-order stepper is forward Euler", "[time]") {
    StepperConfig sc;
    sc.type = StepperType::explicit_rk;
    sc.order = 1;
    sc.fixed_dt = 0.3;
    ModelSpec m = scalar_ode([](double, double y) { return -2.0 * y; });
    OdeRun run(m, sc);
    run.stepper->step(run.u);
    CHECK(run.y() == Approx(0.4).margin(1e-14));  // 1 - 0.3*2
    run.stepper->step(run.u);
    CHECK(run.y() == Approx(0.16).margin(1e-14));
}

TEST_CASE("explicit stability functions match hand values", "[time]") {
    ModelSpec m = scalar_ode([](double, double y) { return -2.0 * y; });
    // z = lambda*dt = -0.5
    StepperConfig sc;
    sc.type = StepperType::explicit_rk;
    sc.order = 2;
    sc.fixed_dt = 0.25;
    {
        OdeRun run(m, sc);
        run.stepper->step(run.u);
        CHECK(run.y() == Approx(0.625).margin(1e-14));  // 1 + z + z^2/2
    }
    sc.order = 3;
    {
        OdeRun run(m, sc);
        run.stepper->step(run.u);
        CHECK(run.y() == Approx(29.0 / 48.0).margin(1e-14));  // + z^3/6
    }
    // four-stage low-storage variant: R(z) = (1+z/2)^4/3 + 2(1+z/2)/3
    sc.type = StepperType::expl_ssp3;
    sc.ssp3_stages = 4;
    {
        OdeRun run(m, sc);
        run.stepper->step(run.u);
        CHECK(run.y() == Approx(0.60546875).margin(1e-14));
    }
}

TEST_CASE("explicit steppers hit their design orders", "[time]") {
    auto eoc = [](StepperConfig sc) {
        double y1 = relaxation_exact(1.0);
        double e1 = ode_error(relaxation, y1, sc, 0.05);
        double e2 = ode_error(relaxation, y1, sc, 0.025);
        double e3 = ode_error(relaxation, y1, sc, 0.0125);
        double r12 = std::log2(e1 / e2), r23 = std::log2(e2 / e3);
        INFO("errors " << e1 << " " << e2 << " " << e3);
        CHECK(r12 == Approx(r23).margin(0.25));
        return r23;
    };

    StepperConfig sc;
    sc.type = StepperType::explicit_rk;
    sc.order = 2;
    CHECK(eoc(sc) == Approx(2.0).margin(0.1));
    sc.order = 3;
    CHECK(eoc(sc) == Approx(3.0).margin(0.1));
    sc.type = StepperType::expl_ssp3;
    sc.ssp3_stages = 4;
    CHECK(eoc(sc) == Approx(3.0).margin(0.1));
}

TEST_CASE("implicit steppers hit their design orders", "[time]") {
    StepperConfig sc;
    sc.type = StepperType::implicit_rk;
    sc.newton_rtol = 1e-10;
    double y1 = relaxation_exact(1.0);
    for (int order : {1, 2, 3}) {
        sc.order = order;
        double e1 = ode_error(relaxation, y1, sc, 0.05);
        double e2 = ode_error(relaxation, y1, sc, 0.025);
        double r = std::log2(e1 / e2);
        INFO("order " << order << ": " << e1 << " -> " << e2);
        CHECK(r == Approx(double(order)).margin(0.15));
    }
}

TEST_CASE("imex stepper is second order and matches its explicit tableau", "[time]") {
    StepperConfig sc;
    sc.type = StepperType::imex;
    double y1 = relaxation_exact(1.0);
    double e1 = ode_error(relaxation, y1, sc, 0.05);
    double e2 = ode_error(relaxation, y1, sc, 0.025);
    CHECK(std::log2(e1 / e2) == Approx(2.0).margin(0.1));

    // with nothing on the implicit side, one step must reproduce the
    // explicit half of the pair: stages at c = (0, 1/2, 1), weights 1/3
    double dt = 0.2;
    sc.fixed_dt = dt;
    ModelSpec m = scalar_ode(relaxation);
    OdeRun run(m, sc);
    run.stepper->step(run.u);

    double y0 = 1.0;
    double k0 = relaxation(0.0, y0);
    double k1 = relaxation(0.5 * dt, y0 + 0.5 * dt * k0);
    double k2 = relaxation(dt, y0 + 0.5 * dt * k0 + 0.5 * dt * k1);
    double hand = y0 + dt / 3.0 * (k0 + k1 + k2);
    CHECK(run.y() == Approx(hand).margin(1e-14));
    // the implicit stage residual starts at zero, so Newton never iterates
    CHECK(run.stepper->last_solve().newton == 0);
    CHECK(run.stepper->last_solve().residual == 0.0);
}

TEST_CASE("stage times follow the Butcher abscissae", "[time]") {
    double dt = 0.25;

    auto record = [&](StepperConfig sc, bool implicit_side) {
        std::vector<double> times;
        auto f = [&times](double t, double) {
            times.push_back(t);
            return 0.0;
        };
        ModelSpec m = scalar_ode(f, implicit_side);
        sc.fixed_dt = dt;
        OdeRun run(m, sc);
        run.stepper->step(run.u);
        return times;
    };

    StepperConfig sc;
    sc.type = StepperType::explicit_rk;
    sc.order = 3;
    std::vector<double> t3 = record(sc, false);
    REQUIRE(t3.size() == 3);
    CHECK(t3[0] == 0.0);
    CHECK(t3[1] == dt);
    CHECK(t3[2] == 0.5 * dt);

    sc.type = StepperType::expl_ssp3;
    sc.ssp3_stages = 4;
    std::vector<double> t4 = record(sc, false);
    REQUIRE(t4.size() == 4);
    CHECK(t4[0] == 0.0);
    CHECK(t4[1] == 0.5 * dt);
    CHECK(t4[2] == dt);
    CHECK(t4[3] == 0.5 * dt);

    sc.type = StepperType::implicit_rk;
    sc.order = 2;
    std::vector<double> ti2 = distinct_times(record(sc, true));
    double g2 = 1.0 - std::sqrt(0.5);
    REQUIRE(ti2.size() == 2);
    CHECK(ti2[0] == Approx(g2 * dt).margin(1e-14));
    CHECK(ti2[1] == Approx(dt).margin(1e-14));

    sc.order = 3;
    std::vector<double> ti3 = distinct_times(record(sc, true));
    double g3 = 0.435866521508459;
    REQUIRE(ti3.size() == 3);
    CHECK(ti3[0] == Approx(g3 * dt).margin(1e-14));
    CHECK(ti3[1] == Approx(0.5 * (1.0 + g3) * dt).margin(1e-14));
    CHECK(ti3[2] == Approx(dt).margin(1e-14));

    // imex: implicit stages at (1/4, 1/4, 1), explicit at (0, 1/2, 1)
    sc.type = StepperType::imex;
    sc.order = 3;
    std::vector<double> tii = record(sc, true);
    REQUIRE(tii.size() == 3);
    CHECK(tii[0] == 0.25 * dt);
    CHECK(tii[1] == 0.25 * dt);
    CHECK(tii[2] == dt);
    std::vector<double> tie = record(sc, false);
    REQUIRE(tie.size() == 3);
    CHECK(tie[0] == 0.0);
    CHECK(tie[1] == 0.5 * dt);
    CHECK(tie[2] == dt);
}

TEST_CASE("implicit steppers handle stiffness the explicit ones cannot", "[time]") {
    const double lambda = -1000.0;
    auto stiff = [lambda](double t, double y) {
        return lambda * (y - std::cos(t)) - std::sin(t);
    };

    StepperConfig expl;
    expl.type = StepperType::explicit_rk;
    expl.order = 2;
    expl.fixed_dt = 0.01;  // |lambda| dt = 10: far outside the stability region
    ModelSpec m = scalar_ode(stiff);
    bool diverged = false;
    try {
        OdeRun run(m, expl);
        for (int i = 0; i < 100 && !diverged; ++i) {
            run.stepper->step(run.u);
            if (std::abs(run.y()) > 1e3) diverged = true;
        }
    } catch (const Error&) {
        diverged = true;  // non-finite values tripped the operator guard
    }
    CHECK(diverged);

    StepperConfig impl;
    impl.type = StepperType::implicit_rk;
    impl.order = 2;
    impl.fixed_dt = 0.02;
    ModelSpec mi = scalar_ode(stiff, /*implicit_side=*/true);
    OdeRun run(mi, impl);
    for (int i = 0; i < 50; ++i) run.stepper->step(run.u);
    CHECK(std::abs(run.y() - std::cos(1.0)) < 5e-3);

    // the imex pair puts the stiff part on its implicit half
    StepperConfig imex;
    imex.type = StepperType::imex;
    imex.fixed_dt = 0.02;
    OdeRun run2(scalar_ode(stiff, true), imex);
    for (int i = 0; i < 50; ++i) run2.stepper->step(run2.u);
    CHECK(std::abs(run2.y() - std::cos(1.0)) < 5e-3);
}

TEST_CASE("step size selection: caps, accumulation, cfl multiplier", "[time]") {
    StepperConfig sc;
    sc.type = StepperType::explicit_rk;
    sc.fixed_dt = 0.05;
    ModelSpec m = scalar_ode(relaxation);
    OdeRun run(m, sc);
    CHECK(run.stepper->step(run.u, 0.013) == 0.013);  // cap wins
    CHECK(run.stepper->time() == 0.013);
    CHECK(run.stepper->step(run.u) == 0.05);
    CHECK(run.stepper->time() == Approx(0.063).margin(1e-15));
    run.stepper->set_time(0.0);
    CHECK(run.stepper->time() == 0.0);

    // CFL-driven: estimate h / ((2k+1) max|v|) = 0.1 for ten degree-0 cells
    ModelSpec adv = models::advection_sin_1d();
    Mesh mesh = Mesh::cartesian(adv.domain_lo, adv.domain_hi, {10, 1}, 1, adv.periodic);
    Space sp = Space::make(BasisKind::onb, 0, 1);
    StepperConfig cfl;
    cfl.type = StepperType::explicit_rk;
    cfl.cfl = 0.3;
    SpatialOperator op(mesh, sp, adv);
    auto stepper = make_stepper(cfl, op);
    DiscreteFunction u(mesh, sp, 1);
    u.project(adv.initial);
    CHECK(stepper->step(u) == Approx(0.03).margin(1e-15));

    // the n^2-stage scheme buys an n^2 (1 - 1/n) bigger step
    cfl.type = StepperType::expl_ssp3;
    cfl.ssp3_stages = 4;
    SpatialOperator op2(mesh, sp, adv);
    auto stepper2 = make_stepper(cfl, op2);
    DiscreteFunction u2(mesh, sp, 1);
    u2.project(adv.initial);
    CHECK(stepper2->step(u2) == Approx(0.06).margin(1e-15));
}

TEST_CASE("nonlinear solve matches a dense direct solve", "[time]") {
    ModelSpec m = models::heat_1d();
    Mesh mesh = Mesh::cartesian(m.domain_lo, m.domain_hi, {16, 1}, 1);
    Space sp = Space::make(BasisKind::onb, 1, 1);
    const int n = 16 * 2;
    double dt = 0.01;

    // the operator is affine in u: sample it into a dense matrix
    SpatialOperator probe(mesh, sp, m);
    probe.set_time(dt);  // backward Euler evaluates at t0 + dt
    DiscreteFunction w(mesh, sp, 1), Lw(mesh, sp, 1);
    auto set_dofs = [&](DiscreteFunction& v, const Eigen::VectorXd& x) {
        for (int e = 0; e < 16; ++e)
            for (int i = 0; i < 2; ++i) v.block(e)[i] = x[e * 2 + i];
    };
    auto get_dofs = [&](const DiscreteFunction& v) {
        Eigen::VectorXd x(n);
        for (int e = 0; e < 16; ++e)
            for (int i = 0; i < 2; ++i) x[e * 2 + i] = v.block(e)[i];
        return x;
    };
    set_dofs(w, Eigen::VectorXd::Zero(n));
    probe.apply(w, Lw);
    Eigen::VectorXd shift = get_dofs(Lw);
    Eigen::MatrixXd A(n, n);
    for (int j = 0; j < n; ++j) {
        set_dofs(w, Eigen::VectorXd::Unit(n, j));
        probe.apply(w, Lw);
        A.col(j) = get_dofs(Lw) - shift;
    }

    DiscreteFunction u0(mesh, sp, 1);
    u0.project(m.initial);
    Eigen::VectorXd rhs = get_dofs(u0) + dt * shift;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - dt * A;
    Eigen::VectorXd direct = lhs.partialPivLu().solve(rhs);

    StepperConfig sc;
    sc.type = StepperType::implicit_rk;
    sc.order = 1;
    sc.fixed_dt = dt;
    sc.krylov_rtol = 1e-6;
    sc.newton_rtol = 1e-10;
    SpatialOperator op(mesh, sp, m);
    auto stepper = make_stepper(sc, op);
    DiscreteFunction u(mesh, sp, 1);
    u.project(m.initial);
    stepper->step(u);

    double diff = (get_dofs(u) - direct).lpNorm<Eigen::Infinity>();
    CHECK(diff <= 1e-8);
    CHECK(stepper->last_solve().newton <= 3);
    CHECK(stepper->last_solve().residual <= 1e-8);
}

TEST_CASE("solver iteration caps produce diagnosable errors", "[time]") {
    ModelSpec m = models::heat_1d();
    Mesh mesh = Mesh::cartesian(m.domain_lo, m.domain_hi, {16, 1}, 1);
    Space sp = Space::make(BasisKind::onb, 1, 1);

    StepperConfig starved;
    starved.type = StepperType::implicit_rk;
    starved.order = 1;
    starved.fixed_dt = 0.01;
    starved.newton_max = 1;
    starved.krylov_rtol = 0.99;  // one Newton step cannot reach the target
    starved.newton_rtol = 1e-14;
    starved.newton_atol = 0.0;
    {
        SpatialOperator op(mesh, sp, m);
        auto stepper = make_stepper(starved, op);
        DiscreteFunction u(mesh, sp, 1);
        u.project(m.initial);
        CHECK_THROWS_WITH(stepper->step(u), ContainsSubstring("Newton did not converge"));
    }

    StepperConfig choked = starved;
    choked.newton_max = 25;
    choked.krylov_rtol = 1e-12;
    choked.krylov_max = 1;
    {
        SpatialOperator op(mesh, sp, m);
        auto stepper = make_stepper(choked, op);
        DiscreteFunction u(mesh, sp, 1);
        u.project(m.initial);
        CHECK_THROWS_WITH(stepper->step(u), ContainsSubstring("Krylov iteration cap exceeded"));
    }
}
