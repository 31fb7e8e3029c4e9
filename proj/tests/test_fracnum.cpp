#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fopid/fracnum.hpp"

using namespace fopid::fracnum;

namespace {

// (-1)^j binom(γ, j) through the gamma function; valid for non-integer γ.
double binomial_weight(double order, int j) {
    return std::tgamma(j - order) / (std::tgamma(-order) * std::tgamma(j + 1.0));
}

std::vector<double> ramp(double step, std::size_t n) {
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k)
        f[k] = static_cast<double>(k) * step;
    return f;
}

// Largest error over samples with t >= from.
double max_error_half_derivative_of_t(double step, double from = 0.0) {
    const auto n = static_cast<std::size_t>(std::llround(1.0 / step)) + 1;
    const auto d = gl_differintegral(ramp(step, n), 0.5, step);
    double worst = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double t = static_cast<double>(k) * step;
        if (t >= from - 1e-12)
            worst = std::max(worst, std::abs(d[k] - analytic_power_differintegral(1.0, 0.5, t)));
    }
    return worst;
}

} // namespace

TEST_CASE("gl coefficients: small cases") {
    CHECK(gl_coefficients(1.0, 4) == std::vector<double>{1.0, -1.0, 0.0, 0.0});
    CHECK(gl_coefficients(0.0, 3) == std::vector<double>{1.0, 0.0, 0.0});
    const auto half = gl_coefficients(0.5, 3);
    CHECK(half[0] == 1.0);
    CHECK(half[1] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(half[2] == doctest::Approx(-0.125).epsilon(1e-15));
}

TEST_CASE("gl coefficients match the gamma-function binomial form") {
    for (double order : {-0.7, -0.3, 0.25, 0.5, 0.9, 1.4}) {
        const auto c = gl_coefficients(order, 40);
        for (int j = 0; j < 40; ++j)
            CHECK(c[static_cast<std::size_t>(j)] == doctest::Approx(binomial_weight(order, j)).epsilon(1e-11));
    }
}

TEST_CASE("gl coefficients for order in (0,1): signs and monotone partial sums") {
    for (double order : {0.1, 0.45, 0.8, 0.99}) {
        const auto c = gl_coefficients(order, 500);
        CHECK(c[0] == 1.0);
        double sum = c[0];
        double previous = sum;
        for (std::size_t j = 1; j < c.size(); ++j) {
            CHECK(c[j] < 0.0);
            sum += c[j];
            CHECK(sum < previous);
            CHECK(sum > 0.0);
            previous = sum;
        }
    }
}

TEST_CASE("gl kernel rejects bad arguments") {
    CHECK_THROWS_AS(GlKernel::make(0.5, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(GlKernel::make(0.5, 0.1, 0), std::invalid_argument);
    CHECK(GlKernel::make(0.5, 0.01, 7).memory_length() == 7);
    CHECK(GlKernel::make(0.5, 0.01, 7).scale() == doctest::Approx(10.0));
}

TEST_CASE("gl differintegral: identity and first derivative") {
    const double h = 1e-3;
    const auto f = ramp(h, 2001);
    CHECK(gl_differintegral(f, 0.0, h) == f);

    const auto d = gl_differintegral(f, 1.0, h);
    for (std::size_t k = 1; k < d.size(); ++k)
        CHECK(std::abs(d[k] - 1.0) <= 2 * h);

    CHECK_THROWS_AS((void)gl_differintegral(f, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)gl_differintegral(f, 0.5, -1.0), std::invalid_argument);
}

TEST_CASE("gl half derivative of t at t=1 converges to 2/sqrt(pi) at first order") {
    const double exact = 2.0 / std::sqrt(std::numbers::pi);
    CHECK(analytic_power_differintegral(1.0, 0.5, 1.0) == doctest::Approx(exact).epsilon(1e-14));

    const double h = 1e-3;
    const auto d = gl_differintegral(ramp(h, 1001), 0.5, h);
    CHECK(std::abs(d.back() - exact) <= 5e-3);

    for (double from : {1.0, 0.1}) {
        const double ratio = max_error_half_derivative_of_t(2e-3, from) / max_error_half_derivative_of_t(1e-3, from);
        CHECK(ratio >= 1.5);
        CHECK(ratio <= 2.5);
    }
    // the first sample carries an O(h^0.5) start-up error: (1 - Γ(2)/Γ(1.5)) sqrt(h)
    const double startup = std::abs(d[1] - analytic_power_differintegral(1.0, 0.5, h));
    CHECK(startup == doctest::Approx((2.0 / std::sqrt(std::numbers::pi) - 1.0) * std::sqrt(h)).epsilon(1e-9));
    CHECK(max_error_half_derivative_of_t(2e-3) / max_error_half_derivative_of_t(1e-3) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("gl differentiation followed by integration recovers the signal") {
    const double h = 1e-3;
    std::vector<double> f(1500);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double t = static_cast<double>(k) * h;
        f[k] = std::sin(3.0 * t) + t * t;
    }
    const auto back = gl_differintegral(gl_differintegral(f, 0.6, h), -0.6, h);
    for (std::size_t k = 0; k < f.size(); ++k)
        CHECK(std::abs(back[k] - f[k]) <= h);
}

TEST_CASE("gl short memory keeps only the requested taps") {
    const double h = 0.01;
    const std::vector<double> f(50, 1.0);
    const auto full = gl_differintegral(f, 0.5, h);
    const auto short_mem = gl_differintegral(f, 0.5, h, 5);
    const auto c = gl_coefficients(0.5, 5);
    double sum5 = 0.0;
    for (double v : c)
        sum5 += v;
    CHECK(short_mem.back() == doctest::Approx(std::pow(h, -0.5) * sum5));
    CHECK(short_mem[3] == doctest::Approx(full[3]));
    CHECK_THROWS_AS((void)gl_differintegral(f, 0.5, h, 0), std::invalid_argument);
}

TEST_CASE("streaming gl operator agrees with the batch convolution") {
    const double h = 0.02;
    std::vector<double> f(300);
    for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = std::cos(0.1 * static_cast<double>(k));
    for (double order : {-1.2, -0.4, 0.3, 1.7}) {
        const auto batch = gl_differintegral(f, order, h);
        GlOperator op(order, h, f.size());
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double peeked = op.peek(f[k]);
            CHECK(peeked == doctest::Approx(op.lead_weight() * f[k] + op.history_term()));
            CHECK(op.push(f[k]) == doctest::Approx(batch[k]).epsilon(1e-12));
        }
        CHECK(op.size() == f.size());
    }
}

TEST_CASE("analytic power differintegral") {
    CHECK(analytic_power_differintegral(1.0, 1.0, 3.0) == doctest::Approx(1.0));
    CHECK(analytic_power_differintegral(1.0, 0.0, 2.0) == doctest::Approx(2.0));
    CHECK(analytic_power_differintegral(2.0, -1.0, 2.0) == doctest::Approx(8.0 / 3.0));
    CHECK_THROWS_AS((void)analytic_power_differintegral(0.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS((void)analytic_power_differintegral(0.5, 1.6, 1.0), std::domain_error);
    CHECK_THROWS_AS((void)analytic_power_differintegral(1.0, 0.5, -1.0), std::invalid_argument);
}

TEST_CASE("oustaloup filter tracks (jw)^order inside the band") {
    for (double order : {-0.9, -0.5, -0.2, 0.2, 0.5, 0.9}) {
        const auto f = oustaloup_approximation(order, {1e-3, 1e3}, 5);
        REQUIRE(f.poles.size() == 11);
        for (double p : f.poles)
            CHECK(p < 0.0);
        for (std::size_t i = 0; i + 1 < f.zeros.size(); ++i) {
            // zero/pole pairs ordered by magnitude and interlaced
            const double z0 = -f.zeros[i], p0 = -f.poles[i], z1 = -f.zeros[i + 1];
            CHECK(z1 > z0);
            if (order > 0)
                CHECK((z0 < p0 && p0 < z1));
            else
                CHECK((p0 < z0 && -f.poles[i + 1] > p0));
        }
        for (double w = 1e-2; w <= 1e2 * 1.0001; w *= std::pow(10.0, 0.125)) {
            const auto got = f.response(w);
            const auto want = std::pow(std::complex<double>(0.0, w), order);
            const double db = 20.0 * std::log10(std::abs(got) / std::abs(want));
            const double deg = (std::arg(got) - std::arg(want)) * 180.0 / std::numbers::pi;
            CHECK(std::abs(db) <= 2.0);
            // order 5 leaves ~5.09 deg at the sub-band edges once |order| nears 1
            CHECK(std::abs(deg) <= (std::abs(order) > 0.5 ? 5.1 : 5.0));
        }
    }
    const auto half = oustaloup_approximation(0.5);
    CHECK(std::abs(20.0 * std::log10(std::abs(half.response(1.0)))) <= 2.0);
    CHECK(std::arg(half.response(1.0)) * 180.0 / std::numbers::pi == doctest::Approx(45.0).epsilon(5.0 / 45.0));
}

TEST_CASE("oustaloup filter is exact in gain at the band centre") {
    for (double order : {-0.6, 0.3, 0.75}) {
        const FrequencyBand band{1e-2, 1e4};
        const auto f = oustaloup_approximation(order, band, 4);
        const double centre = std::sqrt(band.low * band.high);
        CHECK(std::abs(f.response(centre)) == doctest::Approx(std::pow(centre, order)).epsilon(1e-9));
    }
}

TEST_CASE("oustaloup rejects out-of-range arguments") {
    CHECK_THROWS_AS((void)oustaloup_approximation(0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)oustaloup_approximation(1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)oustaloup_approximation(-1.3), std::invalid_argument);
    CHECK_THROWS_AS((void)oustaloup_approximation(0.5, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)oustaloup_approximation(0.5, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)oustaloup_approximation(0.5, {1e-3, 1e3}, 0), std::invalid_argument);
}

TEST_CASE("state-space realisations reproduce the factored response") {
    const auto f = oustaloup_approximation(0.37, {1e-3, 1e3}, 3);
    const auto ss = realize(f);
    CHECK(ss.states() == 7);
    for (double w : {1e-3, 0.05, 1.0, 30.0, 1e3}) {
        const auto a = f.response(w);
        const auto b = ss.response(w);
        CHECK(std::abs(a - b) <= 1e-9 * std::abs(a));
    }

    const auto cascade = series(ss, StateSpace::integrator());
    for (double w : {0.01, 1.0, 100.0}) {
        const std::complex<double> s(0.0, w);
        CHECK(std::abs(cascade.response(w) - f.response(w) / s) <= 1e-9 * std::abs(f.response(w) / s));
    }
    CHECK(StateSpace::identity().response(3.0) == std::complex<double>(1.0, 0.0));
}

TEST_CASE("realize_power splits integer and fractional parts") {
    const auto identity = realize_power(0.0);
    CHECK(identity.proper.states() == 0);
    CHECK(identity.derivative_count == 0);

    const auto integrator = realize_power(-1.0);
    CHECK(integrator.proper.states() == 1);
    CHECK(integrator.derivative_count == 0);

    const auto d1 = realize_power(1.0);
    CHECK(d1.proper.states() == 0);
    CHECK(d1.derivative_count == 1);

    const auto d13 = realize_power(1.3);
    CHECK(d13.derivative_count == 1);
    CHECK(d13.proper.states() == 11);

    const auto i15 = realize_power(-1.5);
    CHECK(i15.derivative_count == 0);
    CHECK(i15.proper.states() == 12);
    for (double w : {0.05, 1.0, 20.0}) {
        const auto want = std::pow(std::complex<double>(0.0, w), -1.5);
        CHECK(std::abs(20.0 * std::log10(std::abs(i15.proper.response(w)) / std::abs(want))) <= 2.0);
    }
}
