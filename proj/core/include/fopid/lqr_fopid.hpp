#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "fopid/matops.hpp"

// ============================================================================
// LQR-based FOPID design for delayed fractional-order processes
// ============================================================================
// The loop error and its fractional differintegrals form the state
//   x = [I^λ e, e, D^μ e]
// of an incommensurate fractional state space D^q x = A x + B u(t - L).
// Solving the LQR problem for (A, B, Q, R) yields F = R^-1 B^T P = [-Ki, -Kp, -Kd],
// so the state feedback u = -F x is a PI^λ D^μ law. Delay is handled either by
// fusing e^{-AL} into B (Cai) or by the steady-state gain F e^{(A-BF)L} (He).

namespace fopid::lqr {

// K e^{-Ls} / (T s^α + 1)
struct NioptdPlant {
    double gain = 1.0;          // K, dc gain
    double delay = 0.0;         // L >= 0, seconds
    double time_constant = 1.0; // T > 0
    double order = 1.0;         // α in (0, 2)

    // Throws std::invalid_argument when the invariants do not hold.
    void validate() const;

    [[nodiscard]] bool is_sluggish() const noexcept { return order < 1.0; }
    [[nodiscard]] bool is_oscillatory() const noexcept { return order > 1.0; }
};

// u = Kp e + Ki I^λ e + Kd D^μ e
struct FopidController {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double integral_order = 1.0;   // λ in [0, 2]
    double derivative_order = 1.0; // μ in [0, 2]

    void validate() const;
};

// NSGA-II decision vector.
struct LqrDesignVars {
    std::array<double, 3> state_weights{}; // Q1, Q2, Q3 in [0, 100]
    double control_weight = 1.0;           // R in (0, 100]
    double integral_order = 1.0;           // λ in [0, 2]
    double derivative_order = 1.0;         // μ in [0, 2]

    static constexpr std::size_t kDimension = 6;

    [[nodiscard]] std::array<double, kDimension> to_array() const noexcept;
    [[nodiscard]] static LqrDesignVars from_array(const std::array<double, kDimension>& v) noexcept;

    // Bounds check including R > 0; returns false instead of throwing so the
    // optimizer can map violations to penalties.
    [[nodiscard]] bool within_bounds() const noexcept;
};

enum class DelayMethod { DelayFree, Cai, He };

[[nodiscard]] std::string_view to_string(DelayMethod method) noexcept;
[[nodiscard]] std::optional<DelayMethod> parse_delay_method(std::string_view text) noexcept;

struct StateSpaceMatrices {
    Eigen::Matrix3d a;
    Eigen::Vector3d b;
};

// A = [[0,1,0],[0,0,1],[0,-1/T,0]], B = [0,0,-K/T]^T
[[nodiscard]] StateSpaceMatrices build_state_space(const NioptdPlant& plant);

// Effective 1x3 feedback row G with u = -G x, and the Riccati solution behind it.
// Element order follows the state vector, so G = [-Ki, -Kp, -Kd].
struct GainDesign {
    Eigen::RowVector3d feedback;
    matops::CareSolution care;

    [[nodiscard]] double kp() const noexcept { return -feedback(1); }
    [[nodiscard]] double ki() const noexcept { return -feedback(0); }
    [[nodiscard]] double kd() const noexcept { return -feedback(2); }

    [[nodiscard]] FopidController controller(double integral_order, double derivative_order) const noexcept;
};

// Errors raised while turning weights into gains. Wraps CARE failures.
class DesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] Eigen::Matrix3d state_weight_matrix(const std::array<double, 3>& diagonal);

// F = R^-1 B^T P for the delay-free CARE.
[[nodiscard]] GainDesign gains_delay_free(const NioptdPlant& plant,
                                          const std::array<double, 3>& state_weights,
                                          double control_weight);

// Cai: CARE with B replaced by e^{-AL} B; F̄ = R^-1 (e^{-AL}B)^T P̄.
[[nodiscard]] GainDesign gains_cai(const NioptdPlant& plant,
                                   const std::array<double, 3>& state_weights,
                                   double control_weight);

// He: G = F e^{(A - BF) L} with F from the delay-free CARE. `care` holds that solution.
[[nodiscard]] GainDesign gains_he(const NioptdPlant& plant,
                                  const std::array<double, 3>& state_weights,
                                  double control_weight);

[[nodiscard]] GainDesign design_gains(const NioptdPlant& plant, const LqrDesignVars& vars, DelayMethod method);

// Throws DesignError when the vars are out of bounds or the CARE fails.
[[nodiscard]] FopidController design_from_vars(const NioptdPlant& plant, const LqrDesignVars& vars,
                                               DelayMethod method);

// min over nonzero eigenvalues of |arg λ| - q π/2 for a commensurate order q in (0, 1].
// Positive means stable by the Matignon sector criterion. Returns +inf when all
// eigenvalues are zero. Throws std::invalid_argument for q outside (0, 1].
[[nodiscard]] double matignon_margin(const Eigen::MatrixXd& closed_loop, double commensurate_order);

} // namespace fopid::lqr
