#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "fopid/csv.hpp"
#include "fopid/lqr_fopid.hpp"
#include "fopid/matops.hpp"
#include "fopid/nsga2.hpp"
#include "fopid/rules.hpp"
#include "fopid/simkit.hpp"

#ifndef FOPID_DEFAULT_DATA
#define FOPID_DEFAULT_DATA "median_solutions.csv"
#endif

namespace fopid::cli {

namespace fs = std::filesystem;

namespace {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlantArgs {
    double gain = 1.0;
    double delay = 0.5;
    double time_constant = 2.0;
    double order = 1.5;

    [[nodiscard]] lqr::NioptdPlant plant() const { return {gain, delay, time_constant, order}; }
};

struct SimArgs {
    std::string method = "oustaloup";
    int approx_order = 5;
    double band_low = 1e-3;
    double band_high = 1e3;

    [[nodiscard]] sim::SimOptions options() const {
        sim::SimOptions o;
        if (method == "oustaloup")
            o.method = sim::SimulationMethod::Oustaloup;
        else if (method == "gl")
            o.method = sim::SimulationMethod::GrunwaldLetnikov;
        else
            throw InputError("unknown --sim-method '" + method + "' (oustaloup|gl)");
        o.approx_order = approx_order;
        o.band = {band_low, band_high};
        return o;
    }
};

struct ScenarioArgs {
    sim::Scenario scenario;
};

struct ControllerArgs {
    std::optional<double> kp, ki, kd;
    std::optional<double> q1, q2, q3, r;
    double integral_order = 1.0;
    double derivative_order = 1.0;
    std::string method = "he";

    [[nodiscard]] lqr::FopidController resolve(const lqr::NioptdPlant& plant) const {
        const bool weights = q1 || q2 || q3 || r;
        const bool gains = kp || ki || kd;
        if (weights && gains)
            throw InputError("give either --Kp/--Ki/--Kd or --Q1/--Q2/--Q3/--R, not both");
        if (weights) {
            if (!(q1 && q2 && q3 && r))
                throw InputError("--Q1, --Q2, --Q3 and --R are all required for a weight-based design");
            const auto m = lqr::parse_delay_method(method);
            if (!m)
                throw InputError("unknown --method '" + method + "'");
            const lqr::LqrDesignVars vars{{*q1, *q2, *q3}, *r, integral_order, derivative_order};
            if (!vars.within_bounds())
                throw InputError("design variables outside [0,100]^3 x (0,100] x [0,2]^2");
            return lqr::design_from_vars(plant, vars, *m);
        }
        if (!gains)
            throw InputError("controller missing: give --Kp/--Ki/--Kd or the LQR weights");
        lqr::FopidController c{kp.value_or(0.0), ki.value_or(0.0), kd.value_or(0.0), integral_order,
                               derivative_order};
        c.validate();
        return c;
    }
};

void add_plant(CLI::App* app, PlantArgs& p) {
    app->add_option("--K", p.gain, "process gain")->capture_default_str();
    app->add_option("--L", p.delay, "time delay [s]")->capture_default_str();
    app->add_option("--T", p.time_constant, "time constant")->capture_default_str();
    app->add_option("--alpha", p.order, "fractional order of the process, (0, 2)")->capture_default_str();
}

void add_sim(CLI::App* app, SimArgs& s) {
    app->add_option("--sim-method", s.method, "oustaloup | gl")->capture_default_str();
    app->add_option("--approx-order", s.approx_order, "Oustaloup order N (2N+1 pole/zero pairs)")
        ->capture_default_str();
    app->add_option("--band-low", s.band_low, "Oustaloup lower frequency [rad/s]")->capture_default_str();
    app->add_option("--band-high", s.band_high, "Oustaloup upper frequency [rad/s]")->capture_default_str();
}

void add_scenario(CLI::App* app, ScenarioArgs& s) {
    app->add_option("--setpoint", s.scenario.setpoint)->capture_default_str();
    app->add_option("--horizon", s.scenario.horizon, "simulated time [s]")->capture_default_str();
    app->add_option("--step", s.scenario.step, "sample time [s]")->capture_default_str();
    app->add_option("--disturbance", s.scenario.disturbance_magnitude, "input-additive load step")
        ->capture_default_str();
    app->add_option("--disturbance-time", s.scenario.disturbance_time)->capture_default_str();
}

void add_controller(CLI::App* app, ControllerArgs& c) {
    app->add_option("--Kp", c.kp);
    app->add_option("--Ki", c.ki);
    app->add_option("--Kd", c.kd);
    app->add_option("--Q1", c.q1);
    app->add_option("--Q2", c.q2);
    app->add_option("--Q3", c.q3);
    app->add_option("--R", c.r);
    app->add_option("--lambda", c.integral_order, "integral order")->capture_default_str();
    app->add_option("--mu", c.derivative_order, "derivative order")->capture_default_str();
    app->add_option("--method", c.method, "delay handling for weight-based designs: he | cai | delay_free")
        ->capture_default_str();
}

std::vector<double> parse_grid(const std::string& text, const char* name) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (item.empty())
            continue;
        try {
            out.push_back(csv::parse_number(item));
        } catch (const std::invalid_argument&) {
            throw InputError(std::string("bad value in ") + name + ": '" + item + "'");
        }
    }
    if (out.empty())
        throw InputError(std::string(name) + " is empty");
    return out;
}

fs::path output_dir(const std::string& flag) {
    fs::path dir;
    if (!flag.empty())
        dir = flag;
    else if (const char* env = std::getenv(kOutputDirEnv); env && *env)
        dir = env;
    else
        dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot write " + path.string());
    return f;
}

void write_plot(const fs::path& script, const std::string& data, const std::string& title,
                const std::vector<std::pair<int, std::string>>& series, bool logx = false) {
    auto f = open_out(script);
    f << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set title '" << title << "'\n"
      << "set grid\n";
    if (logx)
        f << "set logscale x\n";
    f << "plot ";
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i)
            f << ", ";
        f << "'" << data << "' using 1:" << series[i].first << " with lines title '" << series[i].second << "'";
    }
    f << "\npause -1\n";
}

// Phase with the delay contribution kept continuous.
double phase_deg(const lqr::NioptdPlant& p, double omega) {
    const std::complex<double> s_alpha = std::polar(std::pow(omega, p.order), p.order * std::numbers::pi / 2.0);
    double ph = -std::arg(p.time_constant * s_alpha + 1.0) - omega * p.delay;
    if (p.gain < 0.0)
        ph -= std::numbers::pi;
    return ph * 180.0 / std::numbers::pi;
}

struct Context {
    std::ostream& out;
    std::ostream& err;
};

// ---------------------------------------------------------------------------

struct StepCmd {
    PlantArgs plant;
    SimArgs sim;
    double horizon = 20.0;
    double step = 0.01;
    bool bode = false;
    int bode_points = 200;
    double omega_low = 1e-3;
    double omega_high = 1e3;
    bool plot = false;
    std::string out;

    void attach(CLI::App* app) {
        add_plant(app, plant);
        add_sim(app, sim);
        app->add_option("--horizon", horizon, "simulated time [s]")->capture_default_str();
        app->add_option("--step", step, "sample time [s]")->capture_default_str();
        app->add_flag("--bode", bode, "also write bode.csv");
        app->add_option("--bode-points", bode_points)->capture_default_str();
        app->add_option("--omega-low", omega_low)->capture_default_str();
        app->add_option("--omega-high", omega_high)->capture_default_str();
        app->add_flag("--plot", plot, "write gnuplot scripts next to the CSVs");
        app->add_option("--out", out, "output directory");
    }

    int run(Context& ctx) const {
        const auto p = plant.plant();
        p.validate();
        const auto dir = output_dir(out);
        const auto res = sim::simulate_open_loop_step(p, horizon, step, sim.options());
        {
            auto f = open_out(dir / "step.csv");
            csv::Writer w(f);
            w.header({"t", "y"});
            for (std::size_t k = 0; k < res.t.size(); ++k)
                w.row({res.t[k], res.y[k]});
        }
        ctx.out << "wrote " << (dir / "step.csv").string() << "\n";
        if (plot)
            write_plot(dir / "step.gp", "step.csv", "open-loop step", {{2, "y"}});
        if (bode) {
            if (bode_points < 2 || !(omega_low > 0.0) || !(omega_high > omega_low))
                throw InputError("bode grid needs >= 2 points and 0 < omega-low < omega-high");
            auto f = open_out(dir / "bode.csv");
            csv::Writer w(f);
            w.header({"omega", "magnitude_db", "phase_deg"});
            const double lo = std::log10(omega_low);
            const double hi = std::log10(omega_high);
            for (int i = 0; i < bode_points; ++i) {
                const double omega = std::pow(10.0, lo + (hi - lo) * i / (bode_points - 1));
                const auto g = sim::frequency_response(p, omega);
                w.row({omega, 20.0 * std::log10(std::abs(g)), phase_deg(p, omega)});
            }
            ctx.out << "wrote " << (dir / "bode.csv").string() << "\n";
            if (plot)
                write_plot(dir / "bode.gp", "bode.csv", "Bode", {{2, "magnitude [dB]"}, {3, "phase [deg]"}}, true);
        }
        return kOk;
    }
};

struct SimulateCmd {
    PlantArgs plant;
    SimArgs sim;
    ScenarioArgs scenario{sim::Scenario::figure()};
    ControllerArgs controller;
    bool plot = false;
    std::string out;

    void attach(CLI::App* app) {
        add_plant(app, plant);
        add_sim(app, sim);
        add_scenario(app, scenario);
        add_controller(app, controller);
        app->add_flag("--plot", plot);
        app->add_option("--out", out, "output directory");
    }

    int run(Context& ctx) const {
        const auto p = plant.plant();
        p.validate();
        const auto c = controller.resolve(p);
        const auto dir = output_dir(out);
        const auto res = sim::simulate_closed_loop(p, c, scenario.scenario, sim.options());
        {
            auto f = open_out(dir / "trajectory.csv");
            sim::write_trajectory_csv(f, res);
        }
        if (plot)
            write_plot(dir / "trajectory.gp", "trajectory.csv", "closed loop", {{2, "y"}, {3, "u"}});
        csv::Writer w(ctx.out);
        w.header({"Kp", "Ki", "Kd", "lambda", "mu", "itse", "isdco", "diverged"});
        w.row({c.kp, c.ki, c.kd, c.integral_order, c.derivative_order, res.itse, res.isdco,
               res.diverged ? 1.0 : 0.0});
        return res.diverged ? kNumericalFailure : kOk;
    }
};

struct GainsCmd {
    PlantArgs plant;
    double q1 = 0, q2 = 0, q3 = 0, r = 0;
    std::string method = "all";

    void attach(CLI::App* app) {
        add_plant(app, plant);
        app->add_option("--Q1", q1)->required();
        app->add_option("--Q2", q2)->required();
        app->add_option("--Q3", q3)->required();
        app->add_option("--R", r)->required();
        app->add_option("--method", method, "he | cai | delay_free | all")->capture_default_str();
    }

    int run(Context& ctx) const {
        const auto p = plant.plant();
        p.validate();
        std::vector<lqr::DelayMethod> methods;
        if (method == "all") {
            methods = {lqr::DelayMethod::DelayFree, lqr::DelayMethod::Cai, lqr::DelayMethod::He};
        } else if (auto m = lqr::parse_delay_method(method)) {
            methods = {*m};
        } else {
            throw InputError("unknown --method '" + method + "'");
        }
        const lqr::LqrDesignVars vars{{q1, q2, q3}, r, 1.0, 1.0};
        if (!vars.within_bounds())
            throw InputError("weights must satisfy Q in [0,100], R in (0,100]");
        csv::Writer w(ctx.out);
        w.header({"method", "Kp", "Ki", "Kd", "care_residual"});
        for (auto m : methods) {
            const auto d = lqr::design_gains(p, vars, m);
            ctx.out << lqr::to_string(m) << ',';
            w.row({d.kp(), d.ki(), d.kd(), d.care.residual_norm});
        }
        return kOk;
    }
};

struct RuleCmd {
    double lt_ratio = 1.0;
    double alpha = 1.0;
    double gain = 1.0;

    void attach(CLI::App* app) {
        app->add_option("--LT", lt_ratio, "L/T")->required();
        app->add_option("--alpha", alpha)->required();
        app->add_option("--K", gain)->capture_default_str();
    }

    int run(Context& ctx) const {
        if (!rules::within_fitted_domain(lt_ratio, alpha))
            ctx.err << "warning: (L/T, alpha) = (" << lt_ratio << ", " << alpha
                    << ") is outside the fitted domain [0.25,4] x [0.2,1.8]; extrapolating\n";
        const auto c = rules::eval_tuning_rule(lt_ratio, alpha, gain);
        csv::Writer w(ctx.out);
        w.header({"Kp", "Ki", "Kd", "lambda", "mu"});
        w.row({c.kp, c.ki, c.kd, c.integral_order, c.derivative_order});
        return kOk;
    }
};

struct SweepCmd {
    PlantArgs plant;
    SimArgs sim;
    ScenarioArgs scenario{sim::Scenario::objective()};
    ControllerArgs controller;
    std::string delay_grid;
    std::string time_constant_grid;
    std::string out;

    void attach(CLI::App* app) {
        add_plant(app, plant);
        add_sim(app, sim);
        add_scenario(app, scenario);
        add_controller(app, controller);
        app->add_option("--L-grid", delay_grid, "comma-separated delays (default: nominal L)");
        app->add_option("--T-grid", time_constant_grid, "comma-separated time constants (default: nominal T)");
        app->add_option("--out", out, "output directory");
    }

    int run(Context& ctx) const {
        const auto p = plant.plant();
        p.validate();
        const auto c = controller.resolve(p);
        const auto ls = delay_grid.empty() ? std::vector<double>{p.delay} : parse_grid(delay_grid, "--L-grid");
        const auto ts = time_constant_grid.empty() ? std::vector<double>{p.time_constant}
                                                   : parse_grid(time_constant_grid, "--T-grid");
        const auto dir = output_dir(out);
        const auto cells = sim::robustness_sweep(p, c, ls, ts, scenario.scenario, sim.options());
        auto f = open_out(dir / "sweep.csv");
        sim::write_sweep_csv(f, cells);
        const auto diverged = std::count_if(cells.begin(), cells.end(), [](const auto& x) { return x.diverged; });
        ctx.out << "wrote " << (dir / "sweep.csv").string() << " (" << cells.size() << " cells, " << diverged
                << " diverged)\n";
        return kOk;
    }
};

struct DesignCmd {
    PlantArgs plant;
    SimArgs sim;
    ScenarioArgs scenario{sim::Scenario::objective()};
    moo::MooConfig moo;
    std::string method = "both";
    std::size_t restarts = 1;
    bool early_stop = false;
    bool plot = false;
    std::string out;

    void attach(CLI::App* app) {
        add_plant(app, plant);
        add_sim(app, sim);
        add_scenario(app, scenario);
        app->add_option("--method", method, "he | cai | both")->capture_default_str();
        app->add_option("--population", moo.population)->capture_default_str();
        app->add_option("--generations", moo.generations)->capture_default_str();
        app->add_option("--pareto-fraction", moo.pareto_fraction)->capture_default_str();
        app->add_option("--crossover-fraction", moo.crossover_fraction)->capture_default_str();
        app->add_option("--mutation-scale", moo.mutation_scale)->capture_default_str();
        app->add_option("--seed", moo.seed)->capture_default_str();
        app->add_option("--threads", moo.threads, "0 = all cores")->capture_default_str();
        app->add_option("--restarts", restarts, "independent runs; the best-covering front is kept")
            ->capture_default_str();
        app->add_flag("--early-stop", early_stop, "stop once the front spread settles");
        app->add_flag("--plot", plot);
        app->add_option("--out", out, "output directory");
    }

    int run(Context& ctx) const {
        const auto p = plant.plant();
        p.validate();
        scenario.scenario.validate();
        std::vector<lqr::DelayMethod> methods;
        if (method == "both")
            methods = {lqr::DelayMethod::Cai, lqr::DelayMethod::He};
        else if (auto m = lqr::parse_delay_method(method); m && *m != lqr::DelayMethod::DelayFree)
            methods = {*m};
        else
            throw InputError("unknown --method '" + method + "' (he|cai|both)");
        if (restarts < 1)
            throw InputError("--restarts must be >= 1");
        auto cfg = moo;
        if (early_stop)
            cfg.early_stop = moo::EarlyStop{};
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        const auto opts = sim.options();
        const auto dir = output_dir(out);

        std::vector<moo::ParetoFront> fronts;
        for (auto m : methods) {
            fronts.push_back(moo::run_nsga2_restarts(p, m, cfg, restarts, scenario.scenario, opts));
            const std::string name = "front_" + std::string(lqr::to_string(m)) + ".csv";
            auto f = open_out(dir / name);
            moo::write_front_csv(f, fronts.back());
            ctx.out << "wrote " << (dir / name).string() << " (" << fronts.back().entries.size() << " points)\n";
        }

        {
            auto f = open_out(dir / "median.csv");
            csv::Writer w(f);
            w.header({"method", "J1_itse", "J2_isdco", "Q1", "Q2", "Q3", "R", "lambda", "mu", "Kp", "Ki", "Kd"});
            for (const auto& fr : fronts) {
                if (fr.entries.empty()) {
                    ctx.err << "warning: " << lqr::to_string(fr.method) << " front is empty\n";
                    continue;
                }
                const auto& e = moo::median_solution(fr);
                const auto& v = e.vars;
                f << lqr::to_string(fr.method) << ',';
                w.row({e.objectives.itse, e.objectives.isdco, v.state_weights[0], v.state_weights[1],
                       v.state_weights[2], v.control_weight, v.integral_order, v.derivative_order,
                       e.controller.kp, e.controller.ki, e.controller.kd});
                ctx.out << "median " << lqr::to_string(fr.method) << ": ITSE=" << e.objectives.itse
                        << " ISDCO=" << e.objectives.isdco << " Kp=" << e.controller.kp
                        << " Ki=" << e.controller.ki << " Kd=" << e.controller.kd
                        << " lambda=" << e.controller.integral_order << " mu=" << e.controller.derivative_order
                        << "\n";
            }
        }
        if (fronts.size() == 2 && !fronts[0].entries.empty() && !fronts[1].entries.empty())
            ctx.out << "verdict: " << moo::to_string(moo::compare_fronts(fronts[0], fronts[1])) << "\n";
        if (plot) {
            auto f = open_out(dir / "fronts.gp");
            f << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'ITSE'\n"
              << "set ylabel 'ISDCO'\nset logscale xy\nplot ";
            for (std::size_t i = 0; i < fronts.size(); ++i)
                f << (i ? ", " : "") << "'front_" << lqr::to_string(fronts[i].method)
                  << ".csv' using 1:2 with points title '" << lqr::to_string(fronts[i].method) << "'";
            f << "\npause -1\n";
        }
        return kOk;
    }
};

struct FitCmd {
    std::string data = FOPID_DEFAULT_DATA;
    std::string parameter = "all";
    double outlier_k = 3.0;
    bool keep_outliers = false;

    void attach(CLI::App* app) {
        app->add_option("--data", data, "median-solutions CSV")->capture_default_str();
        app->add_option("--parameter", parameter, "Kp | Ki | Kd | lambda | mu | all")->capture_default_str();
        app->add_option("--outlier-k", outlier_k, "residual threshold in units of sqrt(SSE/n)")
            ->capture_default_str();
        app->add_flag("--keep-outliers", keep_outliers);
    }

    int run(Context& ctx) const {
        const std::vector<rules::Parameter> all{rules::Parameter::Kp, rules::Parameter::Ki, rules::Parameter::Kd,
                                                rules::Parameter::IntegralOrder,
                                                rules::Parameter::DerivativeOrder};
        std::vector<rules::Parameter> chosen;
        for (auto p : all)
            if (parameter == "all" || parameter == rules::to_string(p))
                chosen.push_back(p);
        if (chosen.empty())
            throw InputError("unknown --parameter '" + parameter + "'");
        std::vector<rules::MedianSolution> rows;
        try {
            rows = rules::load_median_solutions(data);
        } catch (const std::exception& e) {
            throw InputError(e.what());
        }
        ctx.out << "parameter,n,outliers_removed,r2,adjusted_r2,rmse,p00,p10,p01,p20,p11,p02,p21,p12,p03,p22,p13,"
                   "p04\n";
        for (auto p : chosen) {
            const auto pts = rules::surface_points(rows, p);
            const auto fit = keep_outliers ? rules::fit_polynomial_surface(pts)
                                           : rules::fit_with_outlier_removal(pts, outlier_k);
            const auto& d = fit.diagnostics;
            ctx.out << rules::to_string(p) << ',' << d.n << ',' << d.outliers_removed << ','
                    << csv::format_number(d.r2) << ',' << csv::format_number(d.adjusted_r2) << ','
                    << csv::format_number(d.rmse);
            for (double c : fit.coefficients)
                ctx.out << ',' << csv::format_number(c);
            ctx.out << '\n';
        }
        return kOk;
    }
};

// Pull "--config PATH" / "--config=PATH" out of args.
std::optional<std::string> take_config(std::vector<std::string>& args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw InputError("--config needs a file");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    return path;
}

} // namespace

std::vector<std::string> config_arguments(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config file " + path);
    std::vector<std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t\r"));
        line.erase(line.find_last_not_of(" \t\r") + 1);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        if (key.rfind("--", 0) == 0)
            key.erase(0, 2);
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    Context ctx{out, err};
    CLI::App app{"LQR-based fractional-order PID design for delayed fractional-order processes", "fopid"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", "fopid 0.1.0");
    app.footer("Global: --config FILE reads key=value lines (flag names without dashes); flags override it.\n"
               "Env: FOPID_OUTPUT_DIR sets the default output directory.");

    StepCmd step;
    SimulateCmd simulate;
    GainsCmd gains;
    RuleCmd rule;
    SweepCmd sweep;
    DesignCmd design;
    FitCmd fit;

    auto* s_step = app.add_subcommand("step", "open-loop step response (and Bode data) of the process");
    step.attach(s_step);
    auto* s_sim = app.add_subcommand("simulate", "closed-loop set-point/disturbance response");
    simulate.attach(s_sim);
    auto* s_gains = app.add_subcommand("gains", "LQR gains for given weights");
    gains.attach(s_gains);
    auto* s_rule = app.add_subcommand("rule", "tuning-rule controller for (L/T, alpha, K)");
    rule.attach(s_rule);
    auto* s_sweep = app.add_subcommand("sweep", "ITSE/ISDCO over a grid of (L, T)");
    sweep.attach(s_sweep);
    auto* s_design = app.add_subcommand("design", "NSGA-II search over the LQR weights and orders");
    design.attach(s_design);
    auto* s_fit = app.add_subcommand("fit", "refit the tuning-rule surface from median solutions");
    fit.attach(s_fit);

    try {
        auto args = raw_args;
        if (const auto cfg = take_config(args)) {
            // Config values go straight after the subcommand so later flags win.
            const auto extra = config_arguments(*cfg);
            auto pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
                return app.get_subcommand_ptr(a) != nullptr;
            });
            if (pos == args.end())
                throw InputError("--config needs a subcommand");
            auto* sub = app.get_subcommand_ptr(*pos).get();
            std::vector<std::string> known;
            for (const auto& e : extra) {
                const auto name = e.substr(0, e.find('='));
                if (sub->get_option_no_throw(name) != nullptr)
                    known.push_back(e);
                else
                    err << "note: config key " << name.substr(2) << " ignored by '" << *pos << "'\n";
            }
            args.insert(pos + 1, known.begin(), known.end());
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);

        if (s_step->parsed())
            return step.run(ctx);
        if (s_sim->parsed())
            return simulate.run(ctx);
        if (s_gains->parsed())
            return gains.run(ctx);
        if (s_rule->parsed())
            return rule.run(ctx);
        if (s_sweep->parsed())
            return sweep.run(ctx);
        if (s_design->parsed())
            return design.run(ctx);
        if (s_fit->parsed())
            return fit.run(ctx);
        return kInvalidInput;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const lqr::DesignError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const matops::CareError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
}

} // namespace fopid::cli
