#include "fopid/fracnum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fopid::fracnum {

namespace {

constexpr double kIntegerTolerance = 1e-12;

void require_finite(double value, const char* what) {
    if (!std::isfinite(value))
        throw std::invalid_argument(std::string(what) + " must be finite");
}

} // namespace

std::vector<double> gl_coefficients(double order, std::size_t count) {
    require_finite(order, "GL order");
    std::vector<double> c(count);
    if (count == 0)
        return c;
    c[0] = 1.0;
    for (std::size_t j = 1; j < count; ++j)
        c[j] = c[j - 1] * (1.0 - (order + 1.0) / static_cast<double>(j));
    return c;
}

GlKernel GlKernel::make(double order, double step, std::size_t memory_length) {
    if (!(step > 0.0))
        throw std::invalid_argument("GL step must be positive");
    if (memory_length == 0)
        throw std::invalid_argument("GL memory length must be at least 1");
    return GlKernel{order, step, gl_coefficients(order, memory_length)};
}

double GlKernel::scale() const noexcept { return std::pow(step, -order); }

std::vector<double> gl_differintegral(std::span<const double> samples,
                                      double order,
                                      double step,
                                      std::optional<std::size_t> memory) {
    if (!(step > 0.0))
        throw std::invalid_argument("GL step must be positive");
    if (memory && *memory == 0)
        throw std::invalid_argument("GL memory length must be at least 1");

    const std::size_t n = samples.size();
    std::vector<double> out(n, 0.0);
    if (n == 0)
        return out;
    if (order == 0.0) {
        out.assign(samples.begin(), samples.end());
        return out;
    }

    const std::size_t mem = memory ? std::min(*memory, n) : n;
    const auto kernel = GlKernel::make(order, step, mem);
    const double scale = kernel.scale();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t taps = std::min(k + 1, mem);
        double acc = 0.0;
        for (std::size_t j = 0; j < taps; ++j)
            acc += kernel.coeffs[j] * samples[k - j];
        out[k] = scale * acc;
    }
    return out;
}

GlOperator::GlOperator(double order, double step, std::size_t capacity,
                       std::optional<std::size_t> memory) {
    if (!(step > 0.0))
        throw std::invalid_argument("GL step must be positive");
    const std::size_t mem = memory ? std::max<std::size_t>(1, std::min(*memory, capacity))
                                   : std::max<std::size_t>(1, capacity);
    coeffs_ = gl_coefficients(order, mem);
    scale_ = std::pow(step, -order);
    history_.reserve(capacity);
}

double GlOperator::history_term() const noexcept {
    // Next sample index k = history_.size(); taps j = 1..min(k, mem-1)
    const std::size_t k = history_.size();
    const std::size_t taps = std::min(k, coeffs_.size() - 1);
    double acc = 0.0;
    for (std::size_t j = 1; j <= taps; ++j)
        acc += coeffs_[j] * history_[k - j];
    return scale_ * acc;
}

double GlOperator::peek(double value) const noexcept { return scale_ * value + history_term(); }

double GlOperator::push(double value) {
    const double out = peek(value);
    history_.push_back(value);
    return out;
}

double analytic_power_differintegral(double power, double order, double t) {
    if (power < 0.0)
        throw std::invalid_argument("power must be non-negative");
    if (t < 0.0)
        throw std::invalid_argument("t must be non-negative");
    const double exponent = power - order;
    if (!(exponent > -1.0))
        throw std::domain_error("differintegral of t^p is not integrable for p - order <= -1");
    const double factor = std::tgamma(power + 1.0) / std::tgamma(exponent + 1.0);
    if (t == 0.0)
        return exponent == 0.0 ? factor : (exponent > 0.0 ? 0.0 : INFINITY);
    return factor * std::pow(t, exponent);
}

std::complex<double> RationalFilter::response(double omega) const {
    const std::complex<double> s(0.0, omega);
    std::complex<double> h(gain, 0.0);
    for (std::size_t i = 0; i < zeros.size(); ++i)
        h *= (s - zeros[i]) / (s - poles[i]);
    return h;
}

RationalFilter oustaloup_approximation(double order, FrequencyBand band, int approx_order) {
    if (!std::isfinite(order) || !(order > -1.0 && order < 1.0) || order == 0.0)
        throw std::invalid_argument("Oustaloup order must lie in (-1, 1) and be nonzero");
    if (!(band.low > 0.0) || !(band.high > band.low))
        throw std::invalid_argument("Oustaloup band requires 0 < low < high");
    if (approx_order < 1)
        throw std::invalid_argument("Oustaloup approximation order must be >= 1");

    RationalFilter f;
    f.band = band;
    f.approx_order = approx_order;
    f.gain = std::pow(band.high, order);

    const double ratio = band.high / band.low;
    const double denom = 2.0 * approx_order + 1.0;
    for (int k = -approx_order; k <= approx_order; ++k) {
        const double base = k + approx_order + 0.5;
        f.zeros.push_back(-band.low * std::pow(ratio, (base - 0.5 * order) / denom));
        f.poles.push_back(-band.low * std::pow(ratio, (base + 0.5 * order) / denom));
    }
    return f;
}

std::complex<double> StateSpace::response(double omega) const {
    const std::complex<double> s(0.0, omega);
    if (a.rows() == 0)
        return {d, 0.0};
    const Eigen::Index n = a.rows();
    Eigen::MatrixXcd m = s * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>();
    Eigen::VectorXcd x = m.partialPivLu().solve(b.cast<std::complex<double>>());
    return (c.cast<std::complex<double>>() * x)(0, 0) + d;
}

StateSpace StateSpace::identity() {
    return StateSpace{Eigen::MatrixXd(0, 0), Eigen::MatrixXd(0, 1), Eigen::MatrixXd(1, 0), 1.0};
}

StateSpace StateSpace::integrator() {
    return StateSpace{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1),
                      Eigen::MatrixXd::Ones(1, 1), 0.0};
}

StateSpace realize(const RationalFilter& filter) {
    const auto n = static_cast<Eigen::Index>(filter.poles.size());
    StateSpace ss;
    ss.a = Eigen::MatrixXd::Zero(n, n);
    ss.b = Eigen::MatrixXd::Constant(n, 1, filter.gain);
    ss.c = Eigen::MatrixXd::Zero(1, n);
    ss.d = filter.gain;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double residue = filter.poles[i] - filter.zeros[i];
        ss.a(i, i) = filter.poles[i];
        for (Eigen::Index k = i + 1; k < n; ++k)
            ss.a(k, i) = residue;
        ss.c(0, i) = residue;
    }
    return ss;
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
    const Eigen::Index n1 = first.states();
    const Eigen::Index n2 = second.states();
    StateSpace out;
    out.a = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    out.b = Eigen::MatrixXd::Zero(n1 + n2, 1);
    out.c = Eigen::MatrixXd::Zero(1, n1 + n2);
    if (n1 > 0) {
        out.a.topLeftCorner(n1, n1) = first.a;
        out.b.topRows(n1) = first.b;
    }
    if (n2 > 0) {
        out.a.bottomRightCorner(n2, n2) = second.a;
        if (n1 > 0)
            out.a.bottomLeftCorner(n2, n1) = second.b * first.c;
        out.b.bottomRows(n2) = second.b * first.d;
        out.c.rightCols(n2) = second.c;
    }
    if (n1 > 0)
        out.c.leftCols(n1) = second.d * first.c;
    out.d = second.d * first.d;
    return out;
}

OperatorRealization realize_power(double order, FrequencyBand band, int approx_order) {
    if (!std::isfinite(order))
        throw std::invalid_argument("operator order must be finite");
    const double whole = std::trunc(order);
    double frac = order - whole;
    int integer_part = static_cast<int>(whole);
    if (std::abs(frac) < kIntegerTolerance)
        frac = 0.0;
    if (std::abs(1.0 - std::abs(frac)) < kIntegerTolerance) {
        integer_part += frac > 0 ? 1 : -1;
        frac = 0.0;
    }

    OperatorRealization out;
    out.proper = frac == 0.0 ? StateSpace::identity()
                             : realize(oustaloup_approximation(frac, band, approx_order));
    for (int i = 0; i < -integer_part; ++i)
        out.proper = series(out.proper, StateSpace::integrator());
    out.derivative_count = std::max(integer_part, 0);
    return out;
}

} // namespace fopid::fracnum
