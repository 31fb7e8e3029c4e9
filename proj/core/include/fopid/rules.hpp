#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "fopid/lqr_fopid.hpp"

// Polynomial tuning surface in x = L/T and a = α:
//   f(x, a) = p00 + p10 x + p01 a + p20 x^2 + p11 x a + p02 a^2
//           + p21 x^2 a + p12 x a^2 + p03 a^3 + p22 x^2 a^2 + p13 x a^3 + p04 a^4
// Gains are f/K; the orders are f itself.
namespace fopid::rules {

inline constexpr std::size_t kTermCount = 12;

// Coefficients in the order p00, p10, p01, p20, p11, p02, p21, p12, p03, p22, p13, p04.
using Coefficients = std::array<double, kTermCount>;

[[nodiscard]] Coefficients basis(double lt_ratio, double alpha) noexcept;
[[nodiscard]] double evaluate(const Coefficients& c, double lt_ratio, double alpha) noexcept;

struct TuningRule {
    Coefficients kp{};
    Coefficients ki{};
    Coefficients kd{};
    Coefficients integral_order{};
    Coefficients derivative_order{};

    // Built-in reference surface.
    static const TuningRule& published();
};

inline constexpr double kMinLtRatio = 0.25;
inline constexpr double kMaxLtRatio = 4.0;
inline constexpr double kMinAlpha = 0.2;
inline constexpr double kMaxAlpha = 1.8;

[[nodiscard]] bool within_fitted_domain(double lt_ratio, double alpha) noexcept;

// Throws std::invalid_argument for K == 0 or non-finite input. Out-of-domain points
// are evaluated anyway; callers may check within_fitted_domain.
[[nodiscard]] lqr::FopidController eval_tuning_rule(double lt_ratio, double alpha, double gain,
                                                    const TuningRule& rule = TuningRule::published());

struct SurfacePoint {
    double lt_ratio = 0.0;
    double alpha = 0.0;
    double value = 0.0;
};

struct FitDiagnostics {
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    double rmse = 0.0; // sqrt(SSE / (n - 12))
    std::size_t n = 0;
    std::size_t outliers_removed = 0;
};

struct SurfaceFit {
    Coefficients coefficients{};
    FitDiagnostics diagnostics;
    std::vector<std::size_t> removed; // indices into the input points
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 1 - (1 - r2)(n - 1)/(n - predictors - 1)
[[nodiscard]] double adjusted_r2(double r2, std::size_t n, std::size_t predictors = kTermCount - 1);

// Least squares over the 12-term basis. Throws FitError for fewer than 13 points or
// a rank-deficient design.
[[nodiscard]] SurfaceFit fit_polynomial_surface(std::span<const SurfacePoint> points);

// Indices whose |residual| exceeds k * sqrt(SSE/n) under `coefficients`, worst first.
[[nodiscard]] std::vector<std::size_t> detect_outliers(std::span<const SurfacePoint> points,
                                                       const Coefficients& coefficients, double k = 3.0);

// Fit, flag, drop the single worst flagged point (if any) and refit.
[[nodiscard]] SurfaceFit fit_with_outlier_removal(std::span<const SurfacePoint> points, double k = 3.0);

struct MedianSolution {
    lqr::FopidController controller;
    double lt_ratio = 0.0;
    double alpha = 0.0;
};

enum class Parameter { Kp, Ki, Kd, IntegralOrder, DerivativeOrder };

[[nodiscard]] std::string_view to_string(Parameter p) noexcept;
[[nodiscard]] double parameter_value(const lqr::FopidController& c, Parameter p) noexcept;
[[nodiscard]] const Coefficients& rule_coefficients(const TuningRule& rule, Parameter p) noexcept;
[[nodiscard]] double published_rmse(Parameter p) noexcept;

// CSV columns Kp,Ki,Kd,lambda,mu,L_over_T,alpha.
[[nodiscard]] std::vector<MedianSolution> read_median_solutions(std::istream& in);
[[nodiscard]] std::vector<MedianSolution> load_median_solutions(const std::filesystem::path& path);

[[nodiscard]] std::vector<SurfacePoint> surface_points(std::span<const MedianSolution> data, Parameter p);

} // namespace fopid::rules
