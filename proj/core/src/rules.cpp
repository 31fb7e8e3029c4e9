#include "fopid/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "fopid/csv.hpp"

namespace fopid::rules {

Coefficients basis(double x, double a) noexcept {
    const double x2 = x * x;
    const double a2 = a * a;
    return {1.0, x, a, x2, x * a, a2, x2 * a, x * a2, a2 * a, x2 * a2, x * a2 * a, a2 * a2};
}

double evaluate(const Coefficients& c, double lt_ratio, double alpha) noexcept {
    const auto b = basis(lt_ratio, alpha);
    return std::inner_product(c.begin(), c.end(), b.begin(), 0.0);
}

const TuningRule& TuningRule::published() {
    static const TuningRule rule{
        {0.4225, -0.3738, -0.8846, 0.08037, 2.079, 0.05753, -0.4099, -1.245, 0.935, 0.1884, 0.1266, -0.3623},
        {0.001375, 1.002, 0.7251, -0.2251, -1.216, -1.36, 0.3161, 0.09725, 1.389, -0.07726, 0.07146, -0.4156},
        {3.39, -3.976, -8.749, 0.8184, 7.177, 12.95, -1.484, -3.758, -7.427, 0.6184, 0.3642, 1.508},
        {0.5972, -0.1805, -0.3615, 0.04781, -0.3342, 2.808, 0.08372, 0.03983, -2.304, -0.05261, 0.08205, 0.5399},
        {0.06535, 0.1732, -0.2331, 0.1506, -0.2898, 0.3122, 0.3712, 0.01343, -0.05011, -0.1479, 0.04369,
         -0.01218},
    };
    return rule;
}

bool within_fitted_domain(double lt_ratio, double alpha) noexcept {
    return lt_ratio >= kMinLtRatio && lt_ratio <= kMaxLtRatio && alpha >= kMinAlpha && alpha <= kMaxAlpha;
}

lqr::FopidController eval_tuning_rule(double lt_ratio, double alpha, double gain, const TuningRule& rule) {
    if (!std::isfinite(gain) || gain == 0.0)
        throw std::invalid_argument("tuning rule: process gain K must be finite and nonzero");
    if (!std::isfinite(lt_ratio) || !std::isfinite(alpha))
        throw std::invalid_argument("tuning rule: L/T and alpha must be finite");
    lqr::FopidController c;
    c.kp = evaluate(rule.kp, lt_ratio, alpha) / gain;
    c.ki = evaluate(rule.ki, lt_ratio, alpha) / gain;
    c.kd = evaluate(rule.kd, lt_ratio, alpha) / gain;
    c.integral_order = evaluate(rule.integral_order, lt_ratio, alpha);
    c.derivative_order = evaluate(rule.derivative_order, lt_ratio, alpha);
    return c;
}

double adjusted_r2(double r2, std::size_t n, std::size_t predictors) {
    if (n <= predictors + 1)
        throw std::invalid_argument("adjusted_r2: need n > predictors + 1");
    return 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - predictors - 1);
}

namespace {

Eigen::MatrixXd design_matrix(std::span<const SurfacePoint> points) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(kTermCount));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto b = basis(points[i].lt_ratio, points[i].alpha);
        for (std::size_t j = 0; j < kTermCount; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b[j];
    }
    return x;
}

double sse_of(std::span<const SurfacePoint> points, const Coefficients& c) {
    double sse = 0.0;
    for (const auto& p : points) {
        const double r = p.value - evaluate(c, p.lt_ratio, p.alpha);
        sse += r * r;
    }
    return sse;
}

} // namespace

SurfaceFit fit_polynomial_surface(std::span<const SurfacePoint> points) {
    const std::size_t n = points.size();
    if (n <= kTermCount)
        throw FitError("surface fit needs at least " + std::to_string(kTermCount + 1) + " points, got " +
                       std::to_string(n));
    for (const auto& p : points)
        if (!std::isfinite(p.lt_ratio) || !std::isfinite(p.alpha) || !std::isfinite(p.value))
            throw FitError("surface fit: non-finite data point");

    const Eigen::MatrixXd x = design_matrix(points);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        y(static_cast<Eigen::Index>(i)) = points[i].value;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-12);
    if (qr.rank() < static_cast<Eigen::Index>(kTermCount))
        throw FitError("surface fit: design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                       " of " + std::to_string(kTermCount) + ")");
    const Eigen::VectorXd sol = qr.solve(y);

    SurfaceFit fit;
    for (std::size_t j = 0; j < kTermCount; ++j)
        fit.coefficients[j] = sol(static_cast<Eigen::Index>(j));

    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    const double sse = sse_of(points, fit.coefficients);
    auto& d = fit.diagnostics;
    d.n = n;
    d.r2 = sst > 0.0 ? 1.0 - sse / sst : 1.0;
    d.adjusted_r2 = adjusted_r2(d.r2, n);
    d.rmse = std::sqrt(sse / static_cast<double>(n - kTermCount));
    return fit;
}

std::vector<std::size_t> detect_outliers(std::span<const SurfacePoint> points, const Coefficients& coefficients,
                                         double k) {
    std::vector<std::size_t> out;
    if (points.empty())
        return out;
    const double scale = std::sqrt(sse_of(points, coefficients) / static_cast<double>(points.size()));
    if (!(scale > 0.0))
        return out;
    std::vector<double> res(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        res[i] = std::abs(points[i].value - evaluate(coefficients, points[i].lt_ratio, points[i].alpha));
        if (res[i] > k * scale)
            out.push_back(i);
    }
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return res[a] > res[b]; });
    return out;
}

SurfaceFit fit_with_outlier_removal(std::span<const SurfacePoint> points, double k) {
    auto fit = fit_polynomial_surface(points);
    const auto flagged = detect_outliers(points, fit.coefficients, k);
    if (flagged.empty())
        return fit;
    std::vector<SurfacePoint> kept;
    kept.reserve(points.size() - 1);
    for (std::size_t i = 0; i < points.size(); ++i)
        if (i != flagged.front())
            kept.push_back(points[i]);
    auto refit = fit_polynomial_surface(kept);
    refit.diagnostics.outliers_removed = 1;
    refit.removed = {flagged.front()};
    return refit;
}

std::string_view to_string(Parameter p) noexcept {
    switch (p) {
    case Parameter::Kp: return "Kp";
    case Parameter::Ki: return "Ki";
    case Parameter::Kd: return "Kd";
    case Parameter::IntegralOrder: return "lambda";
    case Parameter::DerivativeOrder: return "mu";
    }
    return "?";
}

double parameter_value(const lqr::FopidController& c, Parameter p) noexcept {
    switch (p) {
    case Parameter::Kp: return c.kp;
    case Parameter::Ki: return c.ki;
    case Parameter::Kd: return c.kd;
    case Parameter::IntegralOrder: return c.integral_order;
    case Parameter::DerivativeOrder: return c.derivative_order;
    }
    return 0.0;
}

const Coefficients& rule_coefficients(const TuningRule& rule, Parameter p) noexcept {
    switch (p) {
    case Parameter::Kp: return rule.kp;
    case Parameter::Ki: return rule.ki;
    case Parameter::Kd: return rule.kd;
    case Parameter::IntegralOrder: return rule.integral_order;
    case Parameter::DerivativeOrder: return rule.derivative_order;
    }
    return rule.kp;
}

double published_rmse(Parameter p) noexcept {
    switch (p) {
    case Parameter::Kp: return 0.104;
    case Parameter::Ki: return 0.06512;
    case Parameter::Kd: return 0.09768;
    case Parameter::IntegralOrder: return 0.05212;
    case Parameter::DerivativeOrder: return 0.1268;
    }
    return 0.0;
}

std::vector<MedianSolution> read_median_solutions(std::istream& in) {
    const auto table = csv::read(in);
    const auto kp = table.column("Kp");
    const auto ki = table.column("Ki");
    const auto kd = table.column("Kd");
    const auto lam = table.column("lambda");
    const auto mu = table.column("mu");
    const auto lt = table.column("L_over_T");
    const auto al = table.column("alpha");
    std::vector<MedianSolution> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        MedianSolution m;
        m.controller = {csv::parse_number(row[kp]), csv::parse_number(row[ki]), csv::parse_number(row[kd]),
                        csv::parse_number(row[lam]), csv::parse_number(row[mu])};
        m.lt_ratio = csv::parse_number(row[lt]);
        m.alpha = csv::parse_number(row[al]);
        out.push_back(m);
    }
    return out;
}

std::vector<MedianSolution> load_median_solutions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_median_solutions(in);
}

std::vector<SurfacePoint> surface_points(std::span<const MedianSolution> data, Parameter p) {
    std::vector<SurfacePoint> pts;
    pts.reserve(data.size());
    for (const auto& m : data)
        pts.push_back({m.lt_ratio, m.alpha, parameter_value(m.controller, p)});
    return pts;
}

} // namespace fopid::rules
