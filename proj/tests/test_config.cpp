#include <catch2/catch_amalgamated.hpp>

#include "rkdg/config.hpp"

#include <cstdio>
#include <fstream>

using namespace rkdg;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("config text parses sections, comments, and whitespace", "[config]") {
    auto kv = parse_config_text(
        "# a full run\n"
        "problem.name = euler_sod   # trailing comment\n"
        "\n"
        "  space.k=2\n"
        "stepper.cfl   =   0.3\n");
    CHECK(kv.at("problem.name") == "euler_sod");
    CHECK(kv.at("space.k") == "2");
    CHECK(kv.at("stepper.cfl") == "0.3");
    CHECK(kv.size() == 3);
}

TEST_CASE("malformed config lines are reported with their line number", "[config]") {
    CHECK_THROWS_WITH(parse_config_text("problem.name = a\nno equals sign here\n"),
                      ContainsSubstring("line 2") && ContainsSubstring("expected key = value"));
    CHECK_THROWS_WITH(parse_config_text("\n\n = 3\n"),
                      ContainsSubstring("line 3") && ContainsSubstring("empty key"));
    CHECK_THROWS_WITH(parse_config_text("space.k = 1\nspace.k = 2\n"),
                      ContainsSubstring("line 2") && ContainsSubstring("duplicate"));
}

TEST_CASE("defaults match the documented run setup", "[config]") {
    RunConfig rc;
    CHECK(rc.k == 4);
    CHECK(rc.basis == BasisKind::onb);
    CHECK(rc.stepper.cfl == 0.45);
    CHECK(rc.stepper.type == StepperType::automatic);
    CHECK(rc.limiter.mode == LimiterMode::none);
    CHECK(rc.limiter.tolerance == 1.0);
    CHECK(rc.limiter.indicator == IndicatorKind::jump);
    CHECK(rc.adapt_cfg.initial_coarsen_factor == 0.2);
    CHECK(rc.adapt_cfg.step_coarsen_factor == 0.1);
    CHECK(rc.advective == AdvectiveFlux::llf);
    CHECK(rc.workers == 1);
}

TEST_CASE("every documented key is recognized and applied", "[config]") {
    RunConfig rc = RunConfig::from_map(parse_config_text(
        "problem.name = reaction\n"
        "problem.end_time = 2.5\n"
        "problem.mu = 0.01\n"
        "space.k = 3\n"
        "space.basis = gauss\n"
        "grid.nx = 24\n"
        "grid.ny = 12\n"
        "limiter.mode = default_scaling\n"
        "limiter.indicator = modal\n"
        "limiter.tol = 0.5\n"
        "limiter.h_measure = volume_root\n"
        "flux.advective = hll\n"
        "flux.penalty = 7.5\n"
        "stepper.type = imex\n"
        "stepper.order = 2\n"
        "stepper.cfl = 0.2\n"
        "stepper.dt = 0.001\n"
        "stepper.stages = 9\n"
        "stepper.placement = step_end\n"
        "stepper.newton_rtol = 1e-9\n"
        "stepper.krylov_rtol = 1e-5\n"
        "adapt.enabled = yes\n"
        "adapt.max_level = 3\n"
        "adapt.min_level = 1\n"
        "adapt.initial_coarsen = 0.25\n"
        "adapt.step_coarsen = 0.05\n"
        "output.dir = /tmp/x\n"
        "output.prefix = run1\n"
        "output.vtk_every = 10\n"
        "output.csv = off\n"
        "output.points = on\n"
        "run.workers = 4\n"));
    CHECK(rc.problem == "reaction");
    CHECK(rc.end_time == 2.5);
    CHECK(rc.mu == 0.01);
    CHECK(rc.k == 3);
    CHECK(rc.basis == BasisKind::gauss_nodal);
    CHECK(rc.nx == 24);
    CHECK(rc.ny == 12);
    CHECK(rc.limiter.mode == LimiterMode::standard_scaling);
    CHECK(rc.limiter.indicator == IndicatorKind::modal);
    CHECK(rc.limiter.tolerance == 0.5);
    CHECK(rc.limiter.h_measure == CellSizeMeasure::volume_root);
    CHECK(rc.advective == AdvectiveFlux::hll);
    CHECK(rc.penalty == 7.5);
    CHECK(rc.stepper.type == StepperType::imex);
    CHECK(rc.stepper.order == 2);
    CHECK(rc.stepper.cfl == 0.2);
    CHECK(rc.stepper.fixed_dt == 0.001);
    CHECK(rc.stepper.ssp3_stages == 9);
    CHECK(rc.stepper.limiter_placement == LimiterPlacement::step_end);
    CHECK(rc.stepper.newton_rtol == 1e-9);
    CHECK(rc.stepper.krylov_rtol == 1e-5);
    CHECK(rc.adapt);
    CHECK(rc.adapt_cfg.max_level == 3);
    CHECK(rc.adapt_cfg.min_level == 1);
    CHECK(rc.adapt_cfg.initial_coarsen_factor == 0.25);
    CHECK(rc.adapt_cfg.step_coarsen_factor == 0.05);
    CHECK(rc.out_dir == "/tmp/x");
    CHECK(rc.prefix == "run1");
    CHECK(rc.vtk_every == 10);
    CHECK(!rc.csv_final);
    CHECK(rc.vtk_points);
    CHECK(rc.workers == 4);
}

TEST_CASE("unknown keys and missing problem name fail loudly", "[config]") {
    CHECK_THROWS_WITH(RunConfig::from_map(parse_config_text("problem.nam = x\n")),
                      ContainsSubstring("unknown key"));
    CHECK_THROWS_WITH(RunConfig::from_map(parse_config_text("space.k = 2\n")),
                      ContainsSubstring("problem.name"));
}

TEST_CASE("out-of-range and malformed values are rejected", "[config]") {
    RunConfig rc;
    CHECK_THROWS_WITH(rc.set("space.k", "16"), ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(rc.set("space.k", "-1"), ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(rc.set("stepper.order", "4"), ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(rc.set("stepper.cfl", "0"), ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(rc.set("run.workers", "0"), ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(rc.set("grid.nx", "2.5e7"), ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(rc.set("space.k", "two"), ContainsSubstring("expects a number"));
    CHECK_THROWS_WITH(rc.set("space.k", "2 cells"), ContainsSubstring("trailing"));
    CHECK_THROWS_WITH(rc.set("output.csv", "maybe"), ContainsSubstring("boolean"));
    CHECK(!rc.set("nonsense.key", "1"));
}

TEST_CASE("limiter modes parse with both spellings of the combination", "[config]") {
    CHECK(parse_limiter_mode("none") == LimiterMode::none);
    CHECK(parse_limiter_mode("default") == LimiterMode::standard);
    CHECK(parse_limiter_mode("scaling") == LimiterMode::scaling);
    CHECK(parse_limiter_mode("default_scaling") == LimiterMode::standard_scaling);
    CHECK(parse_limiter_mode("default+scaling") == LimiterMode::standard_scaling);
    CHECK_THROWS_AS(parse_limiter_mode("minmod"), Error);
}

TEST_CASE("config files round-trip through the filesystem", "[config]") {
    std::string path = "roundtrip_test.cfg";
    {
        std::ofstream out(path);
        out << "problem.name = advection_sin_1d\nspace.k = 1\ngrid.nx = 8\n";
    }
    RunConfig rc = RunConfig::from_file(path);
    CHECK(rc.problem == "advection_sin_1d");
    CHECK(rc.k == 1);
    CHECK(rc.nx == 8);
    std::remove(path.c_str());
    CHECK_THROWS_WITH(RunConfig::from_file("does_not_exist.cfg"),
                      ContainsSubstring("cannot open"));
}
