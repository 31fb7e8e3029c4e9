#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

// ============================================================================
// Fractional differintegration
// ============================================================================
// Grünwald–Letnikov (GL) convolution under zero initial conditions, where it
// coincides with the Caputo operator, plus the Oustaloup recursive
// approximation of s^γ as a stable rational filter.

namespace fopid::fracnum {

// GL binomial weights c_0..c_{count-1} for order γ:
//   c_0 = 1, c_j = c_{j-1} * (1 - (γ + 1) / j)
// Positive γ differentiates, negative γ integrates.
[[nodiscard]] std::vector<double> gl_coefficients(double order, std::size_t count);

struct GlKernel {
    double order = 0.0;
    double step = 0.0;
    std::vector<double> coeffs;

    // Throws std::invalid_argument for step <= 0 or memory_length == 0.
    static GlKernel make(double order, double step, std::size_t memory_length);

    [[nodiscard]] std::size_t memory_length() const noexcept { return coeffs.size(); }
    [[nodiscard]] double scale() const noexcept; // step^(-order)
};

// output[k] = h^(-γ) * Σ_{j=0..min(k, memory-1)} c_j f[k-j]
// An empty `memory` means full history.
[[nodiscard]] std::vector<double> gl_differintegral(std::span<const double> samples,
                                                    double order,
                                                    double step,
                                                    std::optional<std::size_t> memory = std::nullopt);

// Streaming form of gl_differintegral, used by the GL simulation path.
class GlOperator {
public:
    GlOperator(double order, double step, std::size_t capacity,
               std::optional<std::size_t> memory = std::nullopt);

    // Value of the operator at the next sample if `value` were pushed,
    // without modifying the history.
    [[nodiscard]] double peek(double value) const noexcept;
    // Σ_{j>=1} c_j f[k-j] scaled by h^(-γ): the history contribution for the next sample.
    [[nodiscard]] double history_term() const noexcept;
    [[nodiscard]] double lead_weight() const noexcept { return scale_; } // h^(-γ) c_0

    double push(double value);

    [[nodiscard]] std::size_t size() const noexcept { return history_.size(); }

private:
    std::vector<double> coeffs_;
    std::vector<double> history_;
    double scale_;
};

// Γ(p+1)/Γ(p+1-γ) * t^(p-γ): the exact differintegral of t^p.
// Throws std::domain_error when p - γ <= -1 and std::invalid_argument for t < 0.
[[nodiscard]] double analytic_power_differintegral(double power, double order, double t);

struct FrequencyBand {
    double low = 1e-3;  // rad/s
    double high = 1e3;  // rad/s
};

// H(s) = gain * Π (s - zeros[i]) / (s - poles[i])
struct RationalFilter {
    std::vector<double> zeros;
    std::vector<double> poles;
    double gain = 1.0;
    FrequencyBand band;
    int approx_order = 0;

    [[nodiscard]] std::complex<double> response(double omega) const;
};

// Recursive Oustaloup approximation of s^γ for γ in (-1, 1) \ {0}; 2N+1 zero/pole
// pairs spread geometrically over the band. Throws std::invalid_argument otherwise.
[[nodiscard]] RationalFilter oustaloup_approximation(double order,
                                                     FrequencyBand band = {},
                                                     int approx_order = 5);

// SISO continuous-time realisation.
struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b; // n x 1
    Eigen::MatrixXd c; // 1 x n
    double d = 0.0;

    [[nodiscard]] Eigen::Index states() const noexcept { return a.rows(); }
    [[nodiscard]] std::complex<double> response(double omega) const;

    static StateSpace identity();
    static StateSpace integrator();
};

// Cascade of first-order sections; lower-triangular state matrix.
[[nodiscard]] StateSpace realize(const RationalFilter& filter);

// `second` fed by the output of `first`.
[[nodiscard]] StateSpace series(const StateSpace& first, const StateSpace& second);

// s^γ split as s^m * s^f with m the integer part (toward zero) and f in (-1, 1).
// Negative m becomes |m| exact integrators inside `proper`; positive m is
// reported in `derivative_count` because s^m is not proper.
struct OperatorRealization {
    StateSpace proper;
    int derivative_count = 0;
};

[[nodiscard]] OperatorRealization realize_power(double order, FrequencyBand band = {}, int approx_order = 5);

} // namespace fopid::fracnum
