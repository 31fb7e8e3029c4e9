#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fopid/matops.hpp"
#include "oracles.hpp"

using namespace fopid::matops;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(std::mt19937_64& rng, int n, double target_norm) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = g(rng);
    return m * (target_norm / m.norm());
}

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

} // namespace

TEST_CASE("expm: closed forms") {
    CHECK(expm(MatrixXd::Zero(3, 3)).isApprox(MatrixXd::Identity(3, 3), 0.0));

    MatrixXd n(3, 3);
    n << 0, 2, -1,
         0, 0, 3,
         0, 0, 0;
    const MatrixXd exact = MatrixXd::Identity(3, 3) + n + 0.5 * n * n;
    CHECK((expm(n) - exact).cwiseAbs().maxCoeff() <= 1e-15);

    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -2.0;
    const MatrixXd ed = expm(d);
    CHECK(ed(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(ed(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(ed(0, 1) == 0.0);

    MatrixXd rot(2, 2);
    const double theta = 2.5;
    rot << 0, -theta, theta, 0;
    const MatrixXd er = expm(rot);
    CHECK(er(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-13));
    CHECK(er(1, 0) == doctest::Approx(std::sin(theta)).epsilon(1e-13));
}

TEST_CASE("expm matches the truncated series oracle") {
    std::mt19937_64 rng(20240501);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 6;
        const MatrixXd m = random_matrix(rng, n, 0.05 + 4.95 * (trial % 10) / 9.0);
        const MatrixXd want = oracle::taylor_expm(m);
        CHECK((expm(m) - want).norm() <= 1e-10 * want.norm());
    }
}

TEST_CASE("expm of a large-norm matrix agrees with its eigen-decomposition") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        MatrixXd m = random_matrix(rng, 4, 10.0);
        m = (0.5 * (m + m.transpose())).eval(); // symmetric: orthogonal eigenvectors
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
        const MatrixXd want =
            es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
        CHECK((expm(m) - want).norm() <= 1e-10 * want.norm());
    }
}

TEST_CASE("expm(M) expm(-M) = I") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const MatrixXd m = random_matrix(rng, 1 + trial % 5, 5.0 * (trial + 1) / 50.0);
        const MatrixXd prod = expm(m) * expm(-m);
        CHECK((prod - MatrixXd::Identity(m.rows(), m.cols())).norm() <= 1e-9);
    }
}

TEST_CASE("expm rejects bad input") {
    CHECK_THROWS_AS((void)expm(MatrixXd::Zero(2, 3)), std::invalid_argument);
    MatrixXd bad = MatrixXd::Zero(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)expm(bad), std::invalid_argument);
    CHECK(expm(MatrixXd(0, 0)).size() == 0);
}

TEST_CASE("spectral abscissa") {
    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = -1;
    d(1, 1) = -2;
    CHECK(spectral_abscissa(d) == doctest::Approx(-1.0));
    MatrixXd rot(2, 2);
    rot << 0, 1, -1, 0;
    CHECK(std::abs(spectral_abscissa(rot)) <= 1e-14);
    MatrixXd a(3, 3);
    a << 0, 1, 0, 0, 0, 1, 0, -0.5, 0;
    CHECK(std::abs(spectral_abscissa(a)) <= 1e-12);
}

TEST_CASE("stabilizability by PBH") {
    MatrixXd a(3, 3);
    a << 0, 1, 0, 0, 0, 1, 0, -0.5, 0;
    MatrixXd b(3, 1);
    b << 0, 0, -0.5;
    CHECK(is_stabilizable(a, b));

    MatrixXd unstable = MatrixXd::Zero(2, 2);
    unstable(0, 0) = 1.0;
    unstable(1, 1) = 2.0;
    MatrixXd b1(2, 1);
    b1 << 1, 0;
    CHECK_FALSE(is_stabilizable(unstable, b1));

    MatrixXd mixed = MatrixXd::Zero(2, 2);
    mixed(0, 0) = 1.0;
    mixed(1, 1) = -3.0;
    CHECK(is_stabilizable(mixed, b1));
}

TEST_CASE("CARE: scalar problems solved by hand") {
    // a = 0, b = 1, q = 1, r = 1: -P^2 + 1 = 0
    auto s = solve_care({scalar(0), scalar(1), scalar(1), scalar(1)});
    CHECK(s.p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.gain(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // a = -1, b = 1, q = 3, r = 1: -2P - P^2 + 3 = 0
    s = solve_care({scalar(-1), scalar(1), scalar(3), scalar(1)});
    CHECK(s.p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // general scalar: P = r (a + sqrt(a^2 + b^2 q / r)) / b^2
    for (double a : {-2.0, 0.5, 3.0})
        for (double q : {0.0, 0.2, 5.0}) {
            if (q == 0.0 && a < 0.0)
                continue; // P = 0 is stabilising there; covered below
            const double b = 1.5, r = 0.7;
            const double p = r * (a + std::sqrt(a * a + b * b * q / r)) / (b * b);
            s = solve_care({scalar(a), scalar(b), scalar(q), scalar(r)});
            CHECK(s.p(0, 0) == doctest::Approx(p).epsilon(1e-10));
        }
    s = solve_care({scalar(-2), scalar(1), scalar(0), scalar(1)});
    CHECK(std::abs(s.p(0, 0)) <= 1e-12);
}

TEST_CASE("CARE agrees with the sign-function oracle on random systems") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 6;
        const int m = 1 + trial % 2;
        const auto sys = oracle::random_stabilizable(rng, n, m, trial % 3 == 0);
        const CareProblem prob{sys.a, sys.b, sys.q, sys.r};
        const auto sol = solve_care(prob);
        const MatrixXd want = oracle::care_by_sign_function(sys.a, sys.b, sys.q, sys.r);
        CHECK((sol.p - want).norm() <= 1e-7 * std::max(1.0, want.norm()));
        CHECK(sol.residual_norm <= 1e-8 * std::max(1.0, sys.q.norm()));
        CHECK((sol.p - sol.p.transpose()).norm() <= 1e-10 * sol.p.norm());
        CHECK(spectral_abscissa(sys.a - sys.b * sol.gain) < 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(sol.p).eigenvalues().minCoeff() >= -1e-10 * sol.p.norm());
    }
}

TEST_CASE("CARE on the fractional PID state-space template") {
    MatrixXd a(3, 3);
    a << 0, 1, 0, 0, 0, 1, 0, -0.5, 0;
    MatrixXd b(3, 1);
    b << 0, 0, -0.5;
    const MatrixXd q = Eigen::Vector3d(0.643793, 0.02965, 0.062444).asDiagonal();
    const auto sol = solve_care({a, b, q, scalar(0.34342)});
    const MatrixXd want = oracle::care_by_sign_function(a, b, q, scalar(0.34342));
    CHECK((sol.p - want).norm() <= 1e-9 * want.norm());
    CHECK(sol.residual_norm <= 1e-8);
    // gain row = R^-1 B^T P
    const MatrixXd g = (b.transpose() * sol.p) / 0.34342;
    CHECK((g - sol.gain).norm() <= 1e-12 * g.norm());
}

TEST_CASE("CARE solution is continuous in Q") {
    std::mt19937_64 rng(42);
    const auto sys = oracle::random_stabilizable(rng, 4, 1, false);
    const auto p0 = solve_care({sys.a, sys.b, sys.q, sys.r}).p;
    // P(Q + eps I) - P(Q) is first order in eps: the slope settles as eps shrinks
    std::vector<double> slope;
    for (double eps : {1e-2, 1e-4, 1e-6}) {
        const MatrixXd q = sys.q + eps * MatrixXd::Identity(4, 4);
        slope.push_back((solve_care({sys.a, sys.b, q, sys.r}).p - p0).norm() / eps);
    }
    CHECK(std::isfinite(slope.back()));
    CHECK(slope[1] == doctest::Approx(slope[2]).epsilon(1e-2));
    CHECK(slope[0] == doctest::Approx(slope[2]).epsilon(0.1));
}

TEST_CASE("CARE failures are distinguishable") {
    const auto kind_of = [](const CareProblem& p) {
        try {
            (void)solve_care(p);
        } catch (const CareError& e) {
            return e.kind();
        }
        FAIL("expected CareError");
        return CareError::Kind::NotConverged;
    };

    MatrixXd unstable = MatrixXd::Zero(2, 2);
    unstable(0, 0) = 1.0;
    unstable(1, 1) = 2.0;
    MatrixXd b(2, 1);
    b << 1, 0;
    CHECK(kind_of({unstable, b, MatrixXd::Identity(2, 2), scalar(1)}) == CareError::Kind::NotStabilizable);

    // Undetectable imaginary-axis modes: Hamiltonian eigenvalues on the axis.
    MatrixXd rot(2, 2);
    rot << 0, 1, -1, 0;
    MatrixXd b2(2, 1);
    b2 << 0, 1;
    CHECK(kind_of({rot, b2, MatrixXd::Zero(2, 2), scalar(1)}) == CareError::Kind::NoStabilizingSolution);

    CHECK(kind_of({unstable, b, MatrixXd::Identity(2, 2), scalar(0)}) == CareError::Kind::InvalidInput);
    CHECK(kind_of({unstable, b, MatrixXd::Identity(3, 3), scalar(1)}) == CareError::Kind::InvalidInput);
    MatrixXd qbad = MatrixXd::Identity(2, 2);
    qbad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK(kind_of({unstable, b, qbad, scalar(1)}) == CareError::Kind::InvalidInput);
}

TEST_CASE("Lyapunov solver") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 5; ++n) {
        MatrixXd a = random_matrix(rng, n, 2.0);
        a -= (spectral_abscissa(a) + 0.5) * MatrixXd::Identity(n, n);
        const MatrixXd c = MatrixXd::Identity(n, n);
        const MatrixXd x = solve_lyapunov(a, c);
        CHECK((a.transpose() * x + x * a + c).norm() <= 1e-10);
        CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(x).eigenvalues().minCoeff() > 0.0);
    }
}
