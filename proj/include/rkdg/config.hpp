#pragma once

// Run configuration: flat "section.key = value" text, '#' comments.
// Unknown keys and malformed values are reported with their field path so
// batch runs fail fast and loudly.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "rkdg/basis.hpp"
#include "rkdg/estimator.hpp"
#include "rkdg/fluxes.hpp"
#include "rkdg/stabilization.hpp"
#include "rkdg/time_stepping.hpp"

namespace rkdg {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// key = value lines into a map; comments with '#'.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

struct RunConfig {
    // problem.*
    std::string problem;
    std::optional<double> end_time;  // override; 0 writes initial data only
    double mu = -1.0;                // model parameter (viscosity etc.); <0 = preset default

    // space.*
    int k = 4;
    BasisKind basis = BasisKind::onb;

    // grid.*
    int nx = 0, ny = 0;  // 0 = model default

    // limiter.*
    LimiterConfig limiter;

    // flux.*
    AdvectiveFlux advective = AdvectiveFlux::llf;
    double penalty = -1.0;

    // stepper.*
    StepperConfig stepper;

    // adapt.*
    bool adapt = false;
    AdaptConfig adapt_cfg;

    // output.*
    std::string out_dir = "out";
    std::string prefix = "solution";
    int vtk_every = 0;    // write VTK every N steps (0 = no VTK output)
    bool csv_final = true;
    bool vtk_points = false;  // add corner-evaluated point data

    int workers = 1;

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_map(parse_config_text(ss.str()));
    }

    static RunConfig from_map(const std::map<std::string, std::string>& kv) {
        RunConfig rc;
        for (const auto& [key, val] : kv) {
            if (!rc.set(key, val)) throw Error("config: unknown key '" + key + "'");
        }
        if (rc.problem.empty()) throw Error("config: missing required key 'problem.name'");
        return rc;
    }

    /// Apply one key; false if the key is not recognized.
    bool set(const std::string& key, const std::string& val) {
        auto num = [&](double lo, double hi) {
            double v = parse_double(key, val);
            if (v < lo || v > hi)
                throw Error("config: '" + key + "' out of range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
            return v;
        };
        try {
            if (key == "problem.name") problem = val;
            else if (key == "problem.end_time") end_time = num(0, 1e100);
            else if (key == "problem.mu") mu = num(0, 1e100);
            else if (key == "space.k") k = int(num(0, 15));
            else if (key == "space.basis") basis = parse_basis(val);
            else if (key == "grid.nx") nx = int(num(1, 1 << 20));
            else if (key == "grid.ny") ny = int(num(1, 1 << 20));
            else if (key == "limiter.mode") limiter.mode = parse_limiter_mode(val);
            else if (key == "limiter.indicator") limiter.indicator = parse_indicator(val);
            else if (key == "limiter.tol") limiter.tolerance = num(0, 1e100);
            else if (key == "limiter.h_measure") limiter.h_measure = parse_h_measure(val);
            else if (key == "flux.advective") advective = parse_advective_flux(val);
            else if (key == "flux.penalty") penalty = num(0, 1e100);
            else if (key == "stepper.type") stepper.type = parse_stepper_type(val);
            else if (key == "stepper.order") stepper.order = int(num(1, 3));
            else if (key == "stepper.cfl") stepper.cfl = num(1e-6, 100);
            else if (key == "stepper.dt") stepper.fixed_dt = num(1e-300, 1e100);
            else if (key == "stepper.stages") stepper.ssp3_stages = int(num(4, 4096));
            else if (key == "stepper.placement") stepper.limiter_placement = parse_placement(val);
            else if (key == "stepper.newton_rtol") stepper.newton_rtol = num(0, 1);
            else if (key == "stepper.krylov_rtol") stepper.krylov_rtol = num(0, 1);
            else if (key == "adapt.enabled") adapt = parse_bool(key, val);
            else if (key == "adapt.max_level") adapt_cfg.max_level = int(num(0, 24));
            else if (key == "adapt.min_level") adapt_cfg.min_level = int(num(0, 24));
            else if (key == "adapt.initial_coarsen") adapt_cfg.initial_coarsen_factor = num(0, 1);
            else if (key == "adapt.step_coarsen") adapt_cfg.step_coarsen_factor = num(0, 1);
            else if (key == "output.dir") out_dir = val;
            else if (key == "output.prefix") prefix = val;
            else if (key == "output.vtk_every") vtk_every = int(num(0, 1 << 30));
            else if (key == "output.csv") csv_final = parse_bool(key, val);
            else if (key == "output.points") vtk_points = parse_bool(key, val);
            else if (key == "run.workers") workers = int(num(1, 256));
            else return false;
        } catch (const Error&) {
            throw;
        } catch (const std::exception& ex) {
            throw Error("config: bad value for '" + key + "': " + ex.what());
        }
        return true;
    }

  private:
    static double parse_double(const std::string& key, const std::string& val) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(val, &pos);
        } catch (const std::exception&) {
            throw Error("config: '" + key + "' expects a number, got '" + val + "'");
        }
        if (pos != val.size())
            throw Error("config: '" + key + "' has trailing characters: '" + val + "'");
        return v;
    }
    static bool parse_bool(const std::string& key, const std::string& val) {
        if (val == "1" || val == "true" || val == "on" || val == "yes") return true;
        if (val == "0" || val == "false" || val == "off" || val == "no") return false;
        throw Error("config: '" + key + "' expects a boolean, got '" + val + "'");
    }
    static IndicatorKind parse_indicator(const std::string& s) {
        if (s == "jump") return IndicatorKind::jump;
        if (s == "modal") return IndicatorKind::modal;
        throw Error("unknown indicator kind: " + s);
    }
    static CellSizeMeasure parse_h_measure(const std::string& s) {
        if (s == "diameter") return CellSizeMeasure::diameter;
        if (s == "volume_root") return CellSizeMeasure::volume_root;
        throw Error("unknown cell size measure: " + s);
    }
    static LimiterPlacement parse_placement(const std::string& s) {
        if (s == "each_apply") return LimiterPlacement::each_apply;
        if (s == "step_end") return LimiterPlacement::step_end;
        throw Error("unknown limiter placement: " + s);
    }
};

}  // namespace rkdg
