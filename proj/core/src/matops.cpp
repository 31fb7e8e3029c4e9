#include "fopid/matops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

namespace fopid::matops {

namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Padé numerator coefficients b_0..b_m for degrees 3, 5, 7, 9, 13.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                           30270240.0,    2162160.0,    110880.0,     3960.0,
                                           90.0,          1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// 1-norm thresholds below which the degree-m approximant is accurate to unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
Matrix pade_low(const Matrix& a, const std::array<double, N>& b) {
    const Eigen::Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    Matrix power = ident; // A^(2k)
    Matrix u_inner = Matrix::Zero(n, n);
    Matrix v = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < N; k += 2) {
        v += b[k] * power;
        u_inner += b[k + 1] * power;
        power = power * a2;
    }
    const Matrix u = a * u_inner;
    return (v - u).partialPivLu().solve(v + u);
}

Matrix pade13(const Matrix& a) {
    const auto& b = kPade13;
    const Eigen::Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                          b[3] * a2 + b[1] * ident);
    const Matrix v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

double one_norm(const Matrix& m) {
    if (m.size() == 0)
        return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

// Swap adjacent diagonal entries k, k+1 of an upper-triangular Schur factor.
void swap_schur_pair(ComplexMatrix& t, ComplexMatrix& q, Eigen::Index k) {
    const Complex t11 = t(k, k);
    const Complex t22 = t(k + 1, k + 1);
    Eigen::Vector2cd x(t(k, k + 1), t22 - t11);
    const double nx = x.norm();
    if (nx == 0.0)
        return;
    x /= nx;
    Eigen::Matrix2cd z;
    z << x(0), -std::conj(x(1)), x(1), std::conj(x(0));
    t.middleCols(k, 2) = t.middleCols(k, 2) * z;
    t.middleRows(k, 2) = z.adjoint() * t.middleRows(k, 2);
    q.middleCols(k, 2) = q.middleCols(k, 2) * z;
    t(k + 1, k) = Complex(0.0, 0.0);
    t(k, k) = t22;
    t(k + 1, k + 1) = t11;
}

Matrix newton_kleinman_step(const CareProblem& prob, const Matrix& p, const Eigen::LLT<Matrix>& r_llt) {
    const Matrix k = r_llt.solve(prob.b.transpose() * p);
    const Matrix ac = prob.a - prob.b * k;
    const Matrix rhs = prob.q + k.transpose() * prob.r * k;
    Matrix next = solve_lyapunov(ac, rhs);
    return 0.5 * (next + next.transpose());
}

void validate(const CareProblem& prob) {
    const auto n = prob.a.rows();
    const auto m = prob.b.cols();
    if (prob.a.cols() != n || prob.b.rows() != n || prob.q.rows() != n || prob.q.cols() != n ||
        prob.r.rows() != m || prob.r.cols() != m || n == 0 || m == 0)
        throw CareError(CareError::Kind::InvalidInput, "CARE: inconsistent matrix dimensions");
    if (!all_finite(prob.a) || !all_finite(prob.b) || !all_finite(prob.q) || !all_finite(prob.r))
        throw CareError(CareError::Kind::InvalidInput, "CARE: non-finite entries");

    const double qn = std::max(1.0, prob.q.norm());
    if ((prob.q - prob.q.transpose()).norm() > 1e-10 * qn)
        throw CareError(CareError::Kind::InvalidInput, "CARE: Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> qeig(prob.q, Eigen::EigenvaluesOnly);
    if (qeig.eigenvalues().minCoeff() < -1e-12 * qn)
        throw CareError(CareError::Kind::InvalidInput, "CARE: Q must be positive semi-definite");

    const double rn = std::max(1.0, prob.r.norm());
    if ((prob.r - prob.r.transpose()).norm() > 1e-10 * rn)
        throw CareError(CareError::Kind::InvalidInput, "CARE: R must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> reig(prob.r, Eigen::EigenvaluesOnly);
    if (!(reig.eigenvalues().minCoeff() > 0.0))
        throw CareError(CareError::Kind::InvalidInput, "CARE: R must be positive definite");
}

} // namespace

Matrix expm(const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("expm: matrix must be square");
    if (!all_finite(m))
        throw std::invalid_argument("expm: non-finite entries");
    const Eigen::Index n = m.rows();
    if (n == 0)
        return m;

    const double norm = one_norm(m);
    if (norm <= kTheta3)
        return pade_low(m, kPade3);
    if (norm <= kTheta5)
        return pade_low(m, kPade5);
    if (norm <= kTheta7)
        return pade_low(m, kPade7);
    if (norm <= kTheta9)
        return pade_low(m, kPade9);

    int squarings = 0;
    if (norm > kTheta13)
        squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
    Matrix r = pade13(m / std::ldexp(1.0, squarings));
    for (int i = 0; i < squarings; ++i)
        r = r * r;
    return r;
}

double spectral_abscissa(const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("spectral_abscissa: matrix must be square");
    if (m.rows() == 0)
        return -INFINITY;
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

bool is_stabilizable(const Matrix& a, const Matrix& b, double rel_tol) {
    const Eigen::Index n = a.rows();
    Matrix ab(n, n + b.cols());
    ab << a, b;
    const double scale = std::max(1.0, ab.norm());

    Eigen::EigenSolver<Matrix> es(a, false);
    const Eigen::VectorXcd lambdas = es.eigenvalues();
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const Complex lambda = lambdas(i);
        if (lambda.real() < -rel_tol * scale)
            continue;
        ComplexMatrix pbh(n, n + b.cols());
        pbh.leftCols(n) = a.cast<Complex>() - lambda * ComplexMatrix::Identity(n, n);
        pbh.rightCols(b.cols()) = b.cast<Complex>();
        Eigen::JacobiSVD<ComplexMatrix> svd(pbh);
        if (svd.singularValues()(n - 1) <= rel_tol * scale)
            return false;
    }
    return true;
}

double care_residual(const CareProblem& prob, const Matrix& p) {
    const Matrix g = prob.b * prob.r.llt().solve(prob.b.transpose());
    return (prob.a.transpose() * p + p * prob.a - p * g * p + prob.q).norm();
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
    const Eigen::Index n = a.rows();
    const Eigen::Index nn = n * n;
    // vec(A^T X + X A) = (I ⊗ A^T + A^T ⊗ I) vec(X), column-major vec
    Matrix kron = Matrix::Zero(nn, nn);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = j * n + i;
            for (Eigen::Index k = 0; k < n; ++k) {
                kron(row, j * n + k) += a(k, i); // (A^T X)_{ij} = Σ_k A_{ki} X_{kj}
                kron(row, k * n + i) += a(k, j); // (X A)_{ij}  = Σ_k X_{ik} A_{kj}
            }
        }
    }
    Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(c.data(), nn);
    Eigen::VectorXd x = kron.fullPivLu().solve(rhs);
    return Eigen::Map<Matrix>(x.data(), n, n);
}

CareSolution solve_care(const CareProblem& prob) {
    validate(prob);
    const Eigen::Index n = prob.a.rows();

    if (!is_stabilizable(prob.a, prob.b))
        throw CareError(CareError::Kind::NotStabilizable, "CARE: (A, B) is not stabilizable");

    const Eigen::LLT<Matrix> r_llt(prob.r);
    const Matrix g = prob.b * r_llt.solve(prob.b.transpose());

    Matrix ham(2 * n, 2 * n);
    ham << prob.a, -g, -prob.q, -prob.a.transpose();

    Eigen::ComplexSchur<ComplexMatrix> schur(ham.cast<Complex>());
    if (schur.info() != Eigen::Success)
        throw CareError(CareError::Kind::NotConverged, "CARE: Schur decomposition failed");
    ComplexMatrix t = schur.matrixT();
    ComplexMatrix u = schur.matrixU();

    const double imag_axis_tol = 1e-9 * std::max(1.0, ham.norm());
    Eigen::Index stable = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const double re = t(i, i).real();
        if (std::abs(re) <= imag_axis_tol)
            throw CareError(CareError::Kind::NoStabilizingSolution,
                            "CARE: Hamiltonian has eigenvalues on the imaginary axis");
        if (re < 0.0)
            ++stable;
    }
    if (stable != n)
        throw CareError(CareError::Kind::NoStabilizingSolution, "CARE: stable subspace has wrong dimension");

    // Bubble stable eigenvalues to the leading block.
    for (Eigen::Index target = 0; target < n; ++target) {
        Eigen::Index pos = target;
        while (pos < 2 * n && t(pos, pos).real() >= 0.0)
            ++pos;
        for (Eigen::Index k = pos; k > target; --k)
            swap_schur_pair(t, u, k - 1);
    }

    const ComplexMatrix u11 = u.topLeftCorner(n, n);
    const ComplexMatrix u21 = u.bottomLeftCorner(n, n);
    Eigen::FullPivLU<ComplexMatrix> lu(u11);
    if (!lu.isInvertible())
        throw CareError(CareError::Kind::NoStabilizingSolution, "CARE: stable subspace is not a graph");
    // P = U21 U11^-1  <=>  U11^T P^T = U21^T
    const ComplexMatrix p_complex = u11.transpose().fullPivLu().solve(u21.transpose()).transpose();
    Matrix p = p_complex.real();
    p = (0.5 * (p + p.transpose())).eval();

    const double tol = 1e-8 * std::max(1.0, prob.q.norm());
    double residual = care_residual(prob, p);
    for (int iter = 0; iter < 8 && residual > 1e-3 * tol; ++iter) {
        const Matrix k = r_llt.solve(prob.b.transpose() * p);
        if (spectral_abscissa(prob.a - prob.b * k) >= 0.0)
            break;
        const Matrix next = newton_kleinman_step(prob, p, r_llt);
        if (!next.allFinite())
            break;
        const double next_residual = care_residual(prob, next);
        if (!(next_residual < residual))
            break;
        p = next;
        residual = next_residual;
    }

    CareSolution sol;
    sol.p = p;
    sol.gain = r_llt.solve(prob.b.transpose() * p);
    sol.residual_norm = residual;

    if (!(residual <= tol))
        throw CareError(CareError::Kind::NotConverged, "CARE: residual above tolerance");
    if (!(spectral_abscissa(prob.a - prob.b * sol.gain) < 0.0))
        throw CareError(CareError::Kind::NoStabilizingSolution, "CARE: closed loop is not Hurwitz");
    Eigen::SelfAdjointEigenSolver<Matrix> peig(p, Eigen::EigenvaluesOnly);
    if (peig.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, p.norm()))
        throw CareError(CareError::Kind::NoStabilizingSolution, "CARE: solution is not positive semi-definite");
    return sol;
}

} // namespace fopid::matops
