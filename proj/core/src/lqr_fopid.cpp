#include "fopid/lqr_fopid.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

namespace fopid::lqr {

namespace {

constexpr double kWeightMax = 100.0;
constexpr double kOrderMax = 2.0;

bool in_closed(double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; }

matops::CareSolution solve(const Eigen::Matrix3d& a, const Eigen::Vector3d& b,
                           const std::array<double, 3>& state_weights, double control_weight) {
    if (!(control_weight > 0.0) || !std::isfinite(control_weight))
        throw DesignError("control weight R must be positive");
    matops::CareProblem prob{a, b, state_weight_matrix(state_weights),
                             Eigen::MatrixXd::Constant(1, 1, control_weight)};
    try {
        return matops::solve_care(prob);
    } catch (const matops::CareError& err) {
        throw DesignError(err.what());
    }
}

} // namespace

void NioptdPlant::validate() const {
    if (!std::isfinite(gain) || gain == 0.0)
        throw std::invalid_argument("plant gain K must be finite and nonzero");
    if (!std::isfinite(delay) || delay < 0.0)
        throw std::invalid_argument("plant delay L must be >= 0");
    if (!std::isfinite(time_constant) || !(time_constant > 0.0))
        throw std::invalid_argument("plant time constant T must be > 0");
    if (!std::isfinite(order) || !(order > 0.0 && order < 2.0))
        throw std::invalid_argument("plant order alpha must lie in (0, 2)");
}

void FopidController::validate() const {
    if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd))
        throw std::invalid_argument("controller gains must be finite");
    if (!in_closed(integral_order, 0.0, kOrderMax) || !in_closed(derivative_order, 0.0, kOrderMax))
        throw std::invalid_argument("controller orders must lie in [0, 2]");
}

std::array<double, LqrDesignVars::kDimension> LqrDesignVars::to_array() const noexcept {
    return {state_weights[0], state_weights[1], state_weights[2], control_weight, integral_order,
            derivative_order};
}

LqrDesignVars LqrDesignVars::from_array(const std::array<double, kDimension>& v) noexcept {
    return LqrDesignVars{{v[0], v[1], v[2]}, v[3], v[4], v[5]};
}

bool LqrDesignVars::within_bounds() const noexcept {
    for (double q : state_weights)
        if (!in_closed(q, 0.0, kWeightMax))
            return false;
    return in_closed(control_weight, 0.0, kWeightMax) && control_weight > 0.0 &&
           in_closed(integral_order, 0.0, kOrderMax) && in_closed(derivative_order, 0.0, kOrderMax);
}

std::string_view to_string(DelayMethod method) noexcept {
    switch (method) {
    case DelayMethod::DelayFree: return "delay_free";
    case DelayMethod::Cai: return "cai";
    case DelayMethod::He: return "he";
    }
    return "unknown";
}

std::optional<DelayMethod> parse_delay_method(std::string_view text) noexcept {
    std::string lower;
    for (char c : text)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "cai")
        return DelayMethod::Cai;
    if (lower == "he")
        return DelayMethod::He;
    if (lower == "delay_free" || lower == "delayfree" || lower == "free" || lower == "none")
        return DelayMethod::DelayFree;
    return std::nullopt;
}

StateSpaceMatrices build_state_space(const NioptdPlant& plant) {
    plant.validate();
    StateSpaceMatrices ss;
    ss.a << 0.0, 1.0, 0.0,
            0.0, 0.0, 1.0,
            0.0, -1.0 / plant.time_constant, 0.0;
    ss.b << 0.0, 0.0, -plant.gain / plant.time_constant;
    return ss;
}

FopidController GainDesign::controller(double integral_order, double derivative_order) const noexcept {
    return FopidController{kp(), ki(), kd(), integral_order, derivative_order};
}

Eigen::Matrix3d state_weight_matrix(const std::array<double, 3>& diagonal) {
    return Eigen::Vector3d(diagonal[0], diagonal[1], diagonal[2]).asDiagonal();
}

GainDesign gains_delay_free(const NioptdPlant& plant, const std::array<double, 3>& state_weights,
                            double control_weight) {
    const auto ss = build_state_space(plant);
    GainDesign out;
    out.care = solve(ss.a, ss.b, state_weights, control_weight);
    out.feedback = out.care.gain.row(0);
    return out;
}

GainDesign gains_cai(const NioptdPlant& plant, const std::array<double, 3>& state_weights,
                     double control_weight) {
    const auto ss = build_state_space(plant);
    const Eigen::Matrix3d shift = matops::expm(-ss.a * plant.delay);
    const Eigen::Vector3d b_delay = shift * ss.b;
    GainDesign out;
    out.care = solve(ss.a, b_delay, state_weights, control_weight);
    out.feedback = out.care.gain.row(0);
    return out;
}

GainDesign gains_he(const NioptdPlant& plant, const std::array<double, 3>& state_weights,
                    double control_weight) {
    const auto ss = build_state_space(plant);
    GainDesign out;
    out.care = solve(ss.a, ss.b, state_weights, control_weight);
    const Eigen::RowVector3d f = out.care.gain.row(0);
    const Eigen::Matrix3d closed = ss.a - ss.b * f;
    out.feedback = f * matops::expm(closed * plant.delay);
    return out;
}

GainDesign design_gains(const NioptdPlant& plant, const LqrDesignVars& vars, DelayMethod method) {
    switch (method) {
    case DelayMethod::DelayFree: return gains_delay_free(plant, vars.state_weights, vars.control_weight);
    case DelayMethod::Cai: return gains_cai(plant, vars.state_weights, vars.control_weight);
    case DelayMethod::He: return gains_he(plant, vars.state_weights, vars.control_weight);
    }
    throw std::invalid_argument("unknown delay method");
}

FopidController design_from_vars(const NioptdPlant& plant, const LqrDesignVars& vars, DelayMethod method) {
    if (!vars.within_bounds())
        throw DesignError("design variables outside the search bounds");
    const auto design = design_gains(plant, vars, method);
    if (!design.feedback.allFinite())
        throw DesignError("non-finite feedback gains");
    return design.controller(vars.integral_order, vars.derivative_order);
}

double matignon_margin(const Eigen::MatrixXd& closed_loop, double commensurate_order) {
    if (!(commensurate_order > 0.0 && commensurate_order <= 1.0))
        throw std::invalid_argument("commensurate order must lie in (0, 1]");
    if (closed_loop.rows() != closed_loop.cols())
        throw std::invalid_argument("matignon_margin: matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> es(closed_loop, false);
    const double sector = commensurate_order * std::numbers::pi / 2.0;
    const double zero_tol = 1e-12 * std::max(1.0, closed_loop.norm());
    double margin = INFINITY;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const auto lambda = es.eigenvalues()(i);
        if (std::abs(lambda) <= zero_tol)
            continue;
        margin = std::min(margin, std::abs(std::arg(lambda)) - sector);
    }
    return margin;
}

} // namespace fopid::lqr
