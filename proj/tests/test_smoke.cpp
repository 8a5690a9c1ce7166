#include <catch2/catch_amalgamated.hpp>

#include "rkdg/runner.hpp"

TEST_CASE("headers compile and a trivial run completes", "[smoke]") {
    rkdg::RunConfig rc;
    rc.problem = "rotating_hump";
    rc.k = 1;
    rc.nx = 8;
    rc.ny = 8;
    rc.end_time = 0.05;
    rc.csv_final = false;
    rc.limiter.mode = rkdg::LimiterMode::none;
    rkdg::RunReport rep = rkdg::run(rc);
    CHECK(rep.steps > 0);
    CHECK(rep.final_time == Catch::Approx(0.05));
}
