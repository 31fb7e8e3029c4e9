#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fopid/simkit.hpp"

using namespace fopid;
using namespace fopid::sim;

namespace {

const lqr::NioptdPlant kOscillatory{1.0, 0.5, 2.0, 1.5};
const lqr::NioptdPlant kSluggish{1.0, 0.5, 2.0, 0.5};
const lqr::LqrDesignVars kRowB1{{0.643793, 0.02965, 0.062444}, 0.34342, 1.133782, 0.449655};
const lqr::LqrDesignVars kRowA2{{0.605858, 0.080236, 0.057087}, 0.946696, 0.995725, 0.026867};

lqr::FopidController b1_controller() { return lqr::design_from_vars(kOscillatory, kRowB1, lqr::DelayMethod::He); }
lqr::FopidController a2_controller() { return lqr::design_from_vars(kSluggish, kRowA2, lqr::DelayMethod::Cai); }

SimOptions gl_options() {
    SimOptions o;
    o.method = SimulationMethod::GrunwaldLetnikov;
    return o;
}

void check_error_identity(const SimResult& r, double setpoint) {
    REQUIRE(r.x2.size() == r.y.size());
    for (std::size_t k = 0; k < r.y.size(); ++k)
        REQUIRE(r.x2[k] == setpoint - r.y[k]);
}

} // namespace

TEST_CASE("scenario validation") {
    CHECK(Scenario::objective().disturbance_magnitude == 0.0);
    CHECK(Scenario::figure().disturbance_magnitude == doctest::Approx(0.1));
    CHECK(Scenario{}.sample_count() == 10000);
    Scenario s;
    s.step = 0.03;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.step = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = Scenario{};
    s.horizon = -1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("open-loop step of the integer-order plant matches the first-order closed form") {
    const lqr::NioptdPlant p{1.0, 0.5, 2.0, 1.0};
    const auto r = simulate_open_loop_step(p, 30.0, 0.01);
    REQUIRE(r.t.size() == 3000);
    double worst = 0.0;
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        const double t = r.t[k];
        const double exact = t < 0.5 ? 0.0 : 1.0 - std::exp(-(t - 0.5) / 2.0);
        worst = std::max(worst, std::abs(r.y[k] - exact));
    }
    CHECK(worst <= 1e-3);

    const auto gl = simulate_open_loop_step(p, 30.0, 0.01, gl_options());
    double gl_worst = 0.0;
    for (std::size_t k = 0; k < gl.t.size(); ++k) {
        const double t = gl.t[k];
        const double exact = t < 0.5 ? 0.0 : 1.0 - std::exp(-(t - 0.5) / 2.0);
        gl_worst = std::max(gl_worst, std::abs(gl.y[k] - exact));
    }
    CHECK(gl_worst <= 1e-2);
}

TEST_CASE("open-loop shapes: oscillatory above order one, sluggish below") {
    const auto osc = simulate_open_loop_step(kOscillatory, 60.0, 0.01);
    const double peak = *std::max_element(osc.y.begin(), osc.y.end());
    CHECK(peak > 1.1);
    int crossings = 0;
    for (std::size_t k = 1; k < osc.y.size(); ++k)
        if ((osc.y[k - 1] - 1.0) * (osc.y[k] - 1.0) < 0.0)
            ++crossings;
    CHECK(crossings >= 3);
    CHECK(std::abs(osc.y.back() - 1.0) < 0.05);

    for (const auto& options : {SimOptions{}, gl_options()}) {
        const auto slow = simulate_open_loop_step(kSluggish, 60.0, 0.01, options);
        CHECK(*std::max_element(slow.y.begin(), slow.y.end()) < 1.0);
        for (std::size_t k = 1; k < slow.y.size(); ++k)
            REQUIRE(slow.y[k] >= slow.y[k - 1] - 1e-9);
        CHECK(slow.y.back() > 0.8);
    }
}

TEST_CASE("Oustaloup and GL open-loop responses agree for a fractional plant") {
    const auto a = simulate_open_loop_step(kOscillatory, 20.0, 0.005);
    const auto b = simulate_open_loop_step(kOscillatory, 20.0, 0.005, gl_options());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.y.size(); ++k)
        worst = std::max(worst, std::abs(a.y[k] - b.y[k]));
    CHECK(worst < 0.02);
}

TEST_CASE("open-loop rejects a delay shorter than one step") {
    const lqr::NioptdPlant p{1.0, 0.004, 2.0, 1.0};
    CHECK_THROWS_AS((void)simulate_open_loop_step(p, 1.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS((void)simulate_open_loop_step(kOscillatory, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("frequency response") {
    const auto low = frequency_response(kOscillatory, 1e-9);
    CHECK(std::abs(low) == doctest::Approx(1.0).epsilon(1e-6));
    const lqr::NioptdPlant first{1.0, 0.5, 2.0, 1.0};
    CHECK(std::abs(frequency_response(first, 0.5)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::arg(frequency_response({1.0, 0.0, 2.0, 1.0}, 0.5)) ==
          doctest::Approx(-std::numbers::pi / 4).epsilon(1e-12));

    double peak = 0.0;
    for (double w = 1e-3; w <= 1e3; w *= 1.01)
        peak = std::max(peak, std::abs(frequency_response(kOscillatory, w)));
    CHECK(peak > 1.0);
    CHECK_THROWS_AS((void)frequency_response(kOscillatory, 0.0), std::invalid_argument);
}

TEST_CASE("performance indices") {
    const std::vector<double> zeros(100, 0.0);
    const std::vector<double> ones(100, 1.0);
    auto idx = performance_indices(zeros, ones, 1.0, 0.01, 1.0);
    CHECK(idx.itse == 0.0);
    CHECK(idx.isdco == 0.0);

    // e = 1 on [0, 1): integral of t is 1/2; left sum is 1/2 - h/2
    for (double h : {1e-2, 1e-3, 1e-4}) {
        const auto n = static_cast<std::size_t>(std::llround(2.0 / h));
        std::vector<double> e(n, 0.0);
        std::fill(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(n / 2), 1.0);
        idx = performance_indices(e, zeros, 0.0, h, 2.0);
        CHECK(idx.itse == doctest::Approx(0.5 - h / 2).epsilon(1e-9));
        CHECK(std::abs(idx.itse - 0.5) <= h);
    }

    // truncated at the horizon
    idx = performance_indices(ones, ones, 0.0, 0.01, 0.5);
    CHECK(idx.isdco == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)performance_indices(ones, ones, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("closed loop with no actuation leaves the output at rest") {
    const lqr::FopidController off{0.0, 0.0, 0.0, 1.0, 0.5};
    for (const auto& options : {SimOptions{}, gl_options()}) {
        const auto r = simulate_closed_loop(kOscillatory, off, Scenario::objective(), options);
        CHECK_FALSE(r.diverged);
        CHECK(std::all_of(r.y.begin(), r.y.end(), [](double y) { return y == 0.0; }));
        CHECK(r.itse == doctest::Approx(0.01 * 0.01 * 10000.0 * 9999.0 / 2.0));
        CHECK(r.isdco == doctest::Approx(100.0)); // u_ss = r/K with integral action
        check_error_identity(r, 1.0);
    }
}

TEST_CASE("closed-loop records states and honours the error identity") {
    const auto c = b1_controller();
    const auto r = simulate_closed_loop(kOscillatory, c, Scenario::figure());
    REQUIRE(r.t.size() == 10000);
    CHECK(r.t[1] == doctest::Approx(0.01));
    check_error_identity(r, 1.0);
    for (std::size_t k = 0; k < r.u.size(); k += 37)
        CHECK(r.u[k] == doctest::Approx(c.kp * r.x2[k] + c.ki * r.x1[k] + c.kd * r.x3[k]));
    // delay: nothing reaches the output before L
    for (std::size_t k = 0; k <= 50; ++k)
        CHECK(r.y[k] == 0.0);
    CHECK(r.y[52] != 0.0);
}

TEST_CASE("integral action drives the output to the set-point") {
    for (const auto& [plant, controller] : {std::pair{kOscillatory, b1_controller()},
                                            std::pair{kSluggish, a2_controller()}}) {
        const auto r = simulate_closed_loop(plant, controller, Scenario::objective());
        CHECK_FALSE(r.diverged);
        CHECK(std::abs(r.y.back() - 1.0) <= 0.02);
    }
}

TEST_CASE("load disturbance is rejected and shifts the control level") {
    // the sluggish plant's slow tail keeps u well above its final value for hundreds of seconds
    const auto r = simulate_closed_loop(kOscillatory, b1_controller(), Scenario::figure());
    CHECK(std::abs(r.y[6990] - 1.0) < 0.02);
    const double bump = *std::max_element(r.y.begin() + 7000, r.y.end());
    CHECK(bump > r.y[6990] + 0.005);
    CHECK(std::abs(r.y.back() - 1.0) < 0.02);
    CHECK(r.u.back() == doctest::Approx(0.9).epsilon(0.03));
}

TEST_CASE("reference operating points") {
    const auto b1 = simulate_closed_loop(kOscillatory, b1_controller(), Scenario::objective());
    CHECK(b1.itse == doctest::Approx(0.816633).epsilon(0.2));
    CHECK(b1.isdco == doctest::Approx(8.217709).epsilon(0.2));
    const auto a2 = simulate_closed_loop(kSluggish, a2_controller(), Scenario::objective());
    CHECK(a2.itse == doctest::Approx(0.772218).epsilon(0.2));
    CHECK(a2.isdco == doctest::Approx(8.874867).epsilon(0.2));
}

TEST_CASE("Oustaloup and GL closed loops agree") {
    const auto c = b1_controller();
    const auto a = simulate_closed_loop(kOscillatory, c, Scenario::objective());
    const auto b = simulate_closed_loop(kOscillatory, c, Scenario::objective(), gl_options());
    CHECK(a.itse == doctest::Approx(b.itse).epsilon(0.05));
    CHECK(a.isdco == doctest::Approx(b.isdco).epsilon(0.1));
}

TEST_CASE("halving the step barely moves ITSE") {
    const auto c = b1_controller();
    auto s = Scenario::objective();
    const double coarse = simulate_closed_loop(kOscillatory, c, s).itse;
    s.step = 0.005;
    const double fine = simulate_closed_loop(kOscillatory, c, s).itse;
    CHECK(std::abs(fine - coarse) < 0.02 * coarse);
}

TEST_CASE("delay-free loop: proportional control of a first-order plant") {
    const lqr::NioptdPlant p{1.0, 0.0, 1.0, 1.0};
    const lqr::FopidController c{3.0, 0.0, 0.0, 1.0, 1.0};
    for (const auto& options : {SimOptions{}, gl_options()}) {
        const auto r = simulate_closed_loop(p, c, Scenario::objective(), options);
        double worst = 0.0;
        for (std::size_t k = 0; k < 1000; ++k) {
            const double exact = 0.75 * (1.0 - std::exp(-4.0 * r.t[k]));
            worst = std::max(worst, std::abs(r.y[k] - exact));
        }
        CHECK(worst < 0.03);
        check_error_identity(r, 1.0);
    }
}

TEST_CASE("divergent loops are truncated and penalised") {
    const lqr::FopidController wild{40.0, 10.0, 5.0, 1.0, 1.0};
    const auto r = simulate_closed_loop(kOscillatory, wild, Scenario::objective());
    CHECK(r.diverged);
    CHECK(r.itse == kPenalty);
    CHECK(r.isdco == kPenalty);
    CHECK(r.y.size() < 10000);
    CHECK(std::all_of(r.y.begin(), r.y.end(), [](double y) { return std::abs(y) <= 1e3; }));
}

TEST_CASE("design objectives encode failures as penalties") {
    const auto ok = evaluate_design_objectives(kOscillatory, kRowB1, lqr::DelayMethod::He);
    CHECK_FALSE(ok.penalized());
    CHECK(ok.itse == doctest::Approx(0.816633).epsilon(0.2));

    auto bad = kRowB1;
    bad.control_weight = 0.0;
    auto pen = evaluate_design_objectives(kOscillatory, bad, lqr::DelayMethod::He);
    CHECK(pen.itse == kPenalty);
    CHECK(pen.isdco == kPenalty);

    bad.control_weight = -1.0;
    CHECK(evaluate_design_objectives(kOscillatory, bad, lqr::DelayMethod::Cai).penalized());

    // all-zero Q: CARE has no stabilising solution
    bad = kRowB1;
    bad.state_weights = {0.0, 0.0, 0.0};
    pen = evaluate_design_objectives(kOscillatory, bad, lqr::DelayMethod::He);
    CHECK(pen.itse == kPenalty);
    CHECK(pen.isdco == kPenalty);

    // aggressive weights on the oscillatory plant destabilise the delayed loop
    const lqr::LqrDesignVars aggressive{{100.0, 100.0, 100.0}, 0.001, 2.0, 2.0};
    pen = evaluate_design_objectives(kOscillatory, aggressive, lqr::DelayMethod::He);
    CHECK(pen.itse == kPenalty);
    CHECK(pen.isdco == kPenalty);
}

TEST_CASE("robustness sweep") {
    const auto c = b1_controller();
    const std::vector<double> ls{0.4, 0.5, 0.6};
    const std::vector<double> ts{1.6, 2.0, 2.4};
    const auto cells = robustness_sweep(kOscillatory, c, ls, ts);
    REQUIRE(cells.size() == 9);
    CHECK(cells[1].delay == 0.4);
    CHECK(cells[1].time_constant == 2.0);
    CHECK(cells[3].delay == 0.5);
    for (const auto& cell : cells) {
        CHECK_FALSE(cell.diverged);
        CHECK(std::isfinite(cell.itse));
        CHECK(cell.itse < kPenalty);
    }
    const auto nominal = simulate_closed_loop(kOscillatory, c, Scenario::objective());
    CHECK(cells[4].itse == nominal.itse);
    CHECK(cells[4].isdco == nominal.isdco);

    const std::vector<double> bad{-0.1};
    CHECK_THROWS_AS((void)robustness_sweep(kOscillatory, c, bad, ts), std::invalid_argument);
    const std::vector<double> bad_t{0.0};
    CHECK_THROWS_AS((void)robustness_sweep(kOscillatory, c, ls, bad_t), std::invalid_argument);
}

TEST_CASE("oscillatory loop degrades faster under delay growth than the sluggish one") {
    const auto relative_growth = [](const lqr::NioptdPlant& p, const lqr::FopidController& c) {
        const std::vector<double> ls{p.delay, p.delay * 1.4};
        const std::vector<double> ts{p.time_constant};
        const auto cells = robustness_sweep(p, c, ls, ts);
        return cells[1].itse / cells[0].itse;
    };
    CHECK(relative_growth(kOscillatory, b1_controller()) > relative_growth(kSluggish, a2_controller()));
}

TEST_CASE("CSV writers") {
    SimResult r;
    r.t = {0.0, 0.5};
    r.y = {0.0, 0.25};
    r.u = {1.0, 2.0};
    r.x1 = {0.0, 0.1};
    r.x2 = {1.0, 0.75};
    r.x3 = {0.0, -1.5};
    std::ostringstream out;
    write_trajectory_csv(out, r);
    CHECK(out.str() == "t,y,u,x1,x2,x3\n0,0,1,0,1,0\n0.5,0.25,2,0.1,0.75,-1.5\n");

    const std::vector<SweepCell> cells{{0.5, 2.0, 0.75, 8.25, false}};
    std::ostringstream sweep;
    write_sweep_csv(sweep, cells);
    CHECK(sweep.str() == "L,T,itse,isdco,diverged\n0.5,2,0.75,8.25,0\n");
}
