#include "fopid/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "fopid/csv.hpp"
#include "fopid/matops.hpp"

namespace fopid::sim {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// y = offset + slope * w for the plant, or out = offset + slope * e for an operator.
struct Affine {
    double offset = 0.0;
    double slope = 0.0;
};

std::size_t delay_samples(double delay, double step) {
    return static_cast<std::size_t>(std::llround(delay / step));
}

// ---------------------------------------------------------------------------
// State-space (Oustaloup) realisations
// ---------------------------------------------------------------------------

// Plant K/(T s^α + 1) as (1/T) s^-α in negative feedback, discretised by exact ZOH.
class ZohPlant {
public:
    ZohPlant(const lqr::NioptdPlant& plant, double step, const SimOptions& opt) {
        const auto op = fracnum::realize_power(-plant.order, opt.band, opt.approx_order);
        const auto& h = op.proper;
        const double inv_t = 1.0 / plant.time_constant;
        const double s = 1.0 / (1.0 + h.d * inv_t);
        const Eigen::Index n = h.states();

        c_ = (s * inv_t) * h.c;
        d_ = s * inv_t * h.d * plant.gain;
        const MatrixXd a = h.a - h.b * c_;
        const MatrixXd b = h.b * (plant.gain * (1.0 - s * h.d * inv_t));

        MatrixXd aug = MatrixXd::Zero(n + 1, n + 1);
        aug.topLeftCorner(n, n) = a * step;
        aug.topRightCorner(n, 1) = b * step;
        const MatrixXd e = matops::expm(aug);
        ad_ = e.topLeftCorner(n, n);
        bd_ = e.topRightCorner(n, 1);
        x_ = VectorXd::Zero(n);
        tmp_ = VectorXd::Zero(n);
    }

    [[nodiscard]] Affine affine() const { return {c_.dot(x_), d_}; }

    void advance(double w, double /*y*/) {
        tmp_.noalias() = ad_ * x_;
        x_ = tmp_ + bd_ * w;
    }

private:
    MatrixXd ad_;
    VectorXd bd_;
    RowVectorXd c_;
    double d_ = 0.0;
    VectorXd x_;
    VectorXd tmp_;
};

// s^γ driven by a zero-order-held input; reports the average of its continuous
// output over each step. Integer derivative orders become differences of the
// step-end values, which is the exact step average of the derivative.
class AveragedOperator {
public:
    AveragedOperator(double order, double step, const SimOptions& opt) : step_(step) {
        const auto op = fracnum::realize_power(order, opt.band, opt.approx_order);
        derivative_count_ = op.derivative_count;
        const auto& ss = op.proper;
        const Eigen::Index n = ss.states();

        MatrixXd aug = MatrixXd::Zero(2 * n + 1, 2 * n + 1);
        aug.block(0, 0, n, n) = ss.a * step;
        aug.block(0, n, n, n) = MatrixXd::Identity(n, n) * step;
        aug.block(n, 2 * n, n, 1) = ss.b * step;
        const MatrixXd e = matops::expm(aug);
        const MatrixXd gamma1 = e.block(0, n, n, n);  // ∫_0^h e^{As} ds
        const VectorXd gamma2 = e.block(0, 2 * n, n, 1); // ∫_0^h (h - s) e^{As} ds B

        ad_ = e.block(0, 0, n, n);
        bd_ = gamma1 * ss.b;
        c_avg_ = (ss.c * gamma1) / step;
        d_avg_ = n > 0 ? (ss.c * gamma2)(0, 0) / step + ss.d : ss.d;
        c_end_ = n > 0 ? RowVectorXd(ss.c * ad_) : RowVectorXd(0);
        d_end_ = n > 0 ? (ss.c * bd_)(0, 0) + ss.d : ss.d;
        x_ = VectorXd::Zero(n);
        tmp_ = VectorXd::Zero(n);
        previous_.assign(static_cast<std::size_t>(derivative_count_), 0.0);
    }

    [[nodiscard]] Affine affine() const {
        if (derivative_count_ == 0)
            return {x_.size() > 0 ? c_avg_.dot(x_) : 0.0, d_avg_};
        Affine cur{x_.size() > 0 ? c_end_.dot(x_) : 0.0, d_end_};
        for (int i = 0; i < derivative_count_; ++i)
            cur = {(cur.offset - previous_[static_cast<std::size_t>(i)]) / step_, cur.slope / step_};
        return cur;
    }

    // Returns the output for this step and advances the state.
    double commit(double input) {
        const Affine a = affine();
        const double out = a.offset + a.slope * input;
        if (derivative_count_ > 0) {
            double value = (x_.size() > 0 ? c_end_.dot(x_) : 0.0) + d_end_ * input;
            for (int i = 0; i < derivative_count_; ++i) {
                auto& prev = previous_[static_cast<std::size_t>(i)];
                const double next = (value - prev) / step_;
                prev = value;
                value = next;
            }
        }
        if (x_.size() > 0) {
            tmp_.noalias() = ad_ * x_;
            x_ = tmp_ + bd_ * input;
        }
        return out;
    }

private:
    double step_;
    int derivative_count_ = 0;
    MatrixXd ad_;
    VectorXd bd_;
    RowVectorXd c_avg_;
    double d_avg_ = 1.0;
    RowVectorXd c_end_;
    double d_end_ = 1.0;
    VectorXd x_;
    VectorXd tmp_;
    std::vector<double> previous_;
};

// ---------------------------------------------------------------------------
// Grünwald–Letnikov realisations
// ---------------------------------------------------------------------------

// T D^α y + y = K w solved for y_k at every step.
class GlPlant {
public:
    GlPlant(const lqr::NioptdPlant& plant, double step, std::size_t capacity, const SimOptions& opt)
        : gain_(plant.gain), lag_(plant.time_constant), op_(plant.order, step, capacity, opt.gl_memory) {}

    [[nodiscard]] Affine affine() const {
        const double denom = lag_ * op_.lead_weight() + 1.0;
        return {-lag_ * op_.history_term() / denom, gain_ / denom};
    }

    void advance(double /*w*/, double y) { op_.push(y); }

private:
    double gain_;
    double lag_;
    fracnum::GlOperator op_;
};

class GlControllerOperator {
public:
    GlControllerOperator(double order, double step, std::size_t capacity, const SimOptions& opt)
        : op_(order, step, capacity, opt.gl_memory) {}

    [[nodiscard]] Affine affine() const { return {op_.history_term(), op_.lead_weight()}; }
    double commit(double input) { return op_.push(input); }

private:
    fracnum::GlOperator op_;
};

// ---------------------------------------------------------------------------

struct LoopSetup {
    double setpoint;
    double step;
    std::size_t samples;
    std::size_t delay;
    std::size_t disturbance_start;
    double disturbance;
};

template <class Plant, class Operator>
SimResult run_loop(Plant& plant, Operator& integral, Operator& derivative, const lqr::FopidController& ctl,
                   const LoopSetup& setup) {
    SimResult res;
    const std::size_t n = setup.samples;
    for (auto* v : {&res.t, &res.y, &res.u, &res.x1, &res.x2, &res.x3})
        v->reserve(n);

    const double r = setup.setpoint;
    const double limit = kDivergenceFactor * std::max(1.0, std::abs(r));

    for (std::size_t k = 0; k < n; ++k) {
        const double dist = k >= setup.disturbance_start ? setup.disturbance : 0.0;
        const Affine p = plant.affine();
        double w = 0.0;
        double y = 0.0;
        if (setup.delay > 0) {
            w = (k >= setup.delay ? res.u[k - setup.delay] : 0.0) + dist;
            y = p.offset + p.slope * w;
        } else {
            // u_k depends on y_k through e_k; solve the scalar loop equation.
            const Affine ia = integral.affine();
            const Affine da = derivative.affine();
            const double u0 = ctl.ki * ia.offset + ctl.kd * da.offset;
            const double ug = ctl.kp + ctl.ki * ia.slope + ctl.kd * da.slope;
            y = (p.offset + p.slope * (u0 + ug * r + dist)) / (1.0 + p.slope * ug);
        }
        const double e = r - y;
        const double x1 = integral.commit(e);
        const double x3 = derivative.commit(e);
        const double u = ctl.kp * e + ctl.ki * x1 + ctl.kd * x3;
        if (setup.delay == 0)
            w = u + dist;

        if (!std::isfinite(y) || !std::isfinite(u) || std::abs(y) > limit) {
            res.diverged = true;
            break;
        }
        res.t.push_back(static_cast<double>(k) * setup.step);
        res.y.push_back(y);
        res.u.push_back(u);
        res.x1.push_back(x1);
        res.x2.push_back(e);
        res.x3.push_back(x3);
        plant.advance(w, y);
    }
    return res;
}

template <class Plant>
SimResult run_open_loop(Plant& plant, std::size_t samples, std::size_t delay, double step) {
    SimResult res;
    res.t.reserve(samples);
    res.y.reserve(samples);
    res.u.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const double w = k >= delay ? 1.0 : 0.0;
        const Affine p = plant.affine();
        const double y = p.offset + p.slope * w;
        if (!std::isfinite(y)) {
            res.diverged = true;
            break;
        }
        res.t.push_back(static_cast<double>(k) * step);
        res.y.push_back(y);
        res.u.push_back(1.0);
        plant.advance(w, y);
    }
    return res;
}

} // namespace

Scenario Scenario::objective() noexcept {
    Scenario s;
    s.disturbance_magnitude = 0.0;
    return s;
}

Scenario Scenario::figure() noexcept { return Scenario{}; }

void Scenario::validate() const {
    if (!(step > 0.0) || !std::isfinite(step))
        throw std::invalid_argument("scenario step must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("scenario horizon must be positive");
    const double ratio = horizon / step;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio))
        throw std::invalid_argument("scenario horizon must be an integer multiple of the step");
    if (!std::isfinite(setpoint) || !std::isfinite(disturbance_magnitude) || !std::isfinite(disturbance_time))
        throw std::invalid_argument("scenario fields must be finite");
}

std::size_t Scenario::sample_count() const {
    return static_cast<std::size_t>(std::llround(horizon / step));
}

SimResult simulate_open_loop_step(const lqr::NioptdPlant& plant, double horizon, double step,
                                  const SimOptions& options) {
    plant.validate();
    if (!(step > 0.0) || !(horizon > 0.0))
        throw std::invalid_argument("open-loop step: horizon and step must be positive");
    if (plant.delay > 0.0 && plant.delay < step)
        throw std::invalid_argument("open-loop step: delay must be zero or at least one step");
    const auto samples = static_cast<std::size_t>(std::llround(horizon / step));
    const auto delay = delay_samples(plant.delay, step);

    if (options.method == SimulationMethod::GrunwaldLetnikov) {
        GlPlant p(plant, step, samples, options);
        return run_open_loop(p, samples, delay, step);
    }
    ZohPlant p(plant, step, options);
    return run_open_loop(p, samples, delay, step);
}

std::complex<double> frequency_response(const lqr::NioptdPlant& plant, double omega) {
    plant.validate();
    if (!(omega > 0.0))
        throw std::invalid_argument("frequency must be positive");
    const std::complex<double> s_alpha = std::polar(std::pow(omega, plant.order),
                                                    plant.order * std::numbers::pi / 2.0);
    const std::complex<double> delay = std::polar(1.0, -omega * plant.delay);
    return plant.gain * delay / (plant.time_constant * s_alpha + 1.0);
}

PerformanceIndices performance_indices(std::span<const double> error, std::span<const double> control,
                                       double u_ss, double step, double horizon) {
    if (!(step > 0.0))
        throw std::invalid_argument("performance indices: step must be positive");
    const auto limit = static_cast<std::size_t>(std::llround(horizon / step));
    PerformanceIndices out;
    const std::size_t ne = std::min(error.size(), limit);
    for (std::size_t k = 0; k < ne; ++k) {
        const double t = static_cast<double>(k) * step;
        out.itse += t * error[k] * error[k];
    }
    const std::size_t nu = std::min(control.size(), limit);
    for (std::size_t k = 0; k < nu; ++k) {
        const double dev = control[k] - u_ss;
        out.isdco += dev * dev;
    }
    out.itse *= step;
    out.isdco *= step;
    return out;
}

SimResult simulate_closed_loop(const lqr::NioptdPlant& plant, const lqr::FopidController& controller,
                               const Scenario& scenario, const SimOptions& options) {
    plant.validate();
    controller.validate();
    scenario.validate();

    LoopSetup setup;
    setup.setpoint = scenario.setpoint;
    setup.step = scenario.step;
    setup.samples = scenario.sample_count();
    setup.delay = delay_samples(plant.delay, scenario.step);
    setup.disturbance = scenario.disturbance_magnitude;
    setup.disturbance_start = scenario.disturbance_magnitude == 0.0
                                  ? setup.samples
                                  : static_cast<std::size_t>(
                                        std::ceil(scenario.disturbance_time / scenario.step - 1e-9));

    SimResult res;
    if (options.method == SimulationMethod::GrunwaldLetnikov) {
        GlPlant p(plant, scenario.step, setup.samples, options);
        GlControllerOperator integral(-controller.integral_order, scenario.step, setup.samples, options);
        GlControllerOperator derivative(controller.derivative_order, scenario.step, setup.samples, options);
        res = run_loop(p, integral, derivative, controller, setup);
    } else {
        ZohPlant p(plant, scenario.step, options);
        AveragedOperator integral(-controller.integral_order, scenario.step, options);
        AveragedOperator derivative(controller.derivative_order, scenario.step, options);
        res = run_loop(p, integral, derivative, controller, setup);
    }

    if (res.diverged) {
        res.itse = kPenalty;
        res.isdco = kPenalty;
        return res;
    }
    const double u_ss = controller.integral_order > 0.0 ? scenario.setpoint / plant.gain
                                                        : (res.u.empty() ? 0.0 : res.u.back());
    const auto idx = performance_indices(res.x2, res.u, u_ss, scenario.step, scenario.horizon);
    res.itse = idx.itse;
    res.isdco = idx.isdco;
    if (!std::isfinite(res.itse) || !std::isfinite(res.isdco)) {
        res.diverged = true;
        res.itse = kPenalty;
        res.isdco = kPenalty;
    }
    return res;
}

ObjectivePair evaluate_design_objectives(const lqr::NioptdPlant& plant, const lqr::LqrDesignVars& vars,
                                         lqr::DelayMethod method, const Scenario& scenario,
                                         const SimOptions& options) {
    if (!vars.within_bounds())
        return {};
    try {
        const auto controller = lqr::design_from_vars(plant, vars, method);
        const auto res = simulate_closed_loop(plant, controller, scenario, options);
        if (res.diverged)
            return {};
        return {std::min(res.itse, kPenalty), std::min(res.isdco, kPenalty)};
    } catch (const std::exception&) {
        return {};
    }
}

std::vector<SweepCell> robustness_sweep(const lqr::NioptdPlant& nominal, const lqr::FopidController& controller,
                                        std::span<const double> delay_grid,
                                        std::span<const double> time_constant_grid, const Scenario& scenario,
                                        const SimOptions& options) {
    nominal.validate();
    for (double l : delay_grid)
        if (!(l >= 0.0))
            throw std::invalid_argument("sweep delays must be >= 0");
    for (double t : time_constant_grid)
        if (!(t > 0.0))
            throw std::invalid_argument("sweep time constants must be > 0");

    std::vector<SweepCell> cells;
    cells.reserve(delay_grid.size() * time_constant_grid.size());
    for (double l : delay_grid) {
        for (double t : time_constant_grid) {
            auto plant = nominal;
            plant.delay = l;
            plant.time_constant = t;
            SweepCell cell{l, t, kPenalty, kPenalty, true};
            try {
                const auto res = simulate_closed_loop(plant, controller, scenario, options);
                cell.itse = res.itse;
                cell.isdco = res.isdco;
                cell.diverged = res.diverged;
            } catch (const std::exception&) {
                // recorded as diverged; the sweep continues
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

void write_trajectory_csv(std::ostream& out, const SimResult& result) {
    csv::Writer w(out);
    w.header({"t", "y", "u", "x1", "x2", "x3"});
    const auto at = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; };
    for (std::size_t k = 0; k < result.t.size(); ++k)
        w.row({result.t[k], at(result.y, k), at(result.u, k), at(result.x1, k), at(result.x2, k), at(result.x3, k)});
}

void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells) {
    csv::Writer w(out);
    w.header({"L", "T", "itse", "isdco", "diverged"});
    for (const auto& c : cells)
        w.row({c.delay, c.time_constant, c.itse, c.isdco, c.diverged ? 1.0 : 0.0});
}

} // namespace fopid::sim
