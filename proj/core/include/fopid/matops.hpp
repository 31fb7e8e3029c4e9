#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fopid::matops {

using Matrix = Eigen::MatrixXd;

// Matrix exponential by Padé scaling and squaring (degree 3..13 chosen from the
// 1-norm). Throws std::invalid_argument for non-square or non-finite input.
[[nodiscard]] Matrix expm(const Matrix& m);

// Largest real part over the eigenvalues of a square matrix.
[[nodiscard]] double spectral_abscissa(const Matrix& m);

// PBH test: every eigenvalue λ of A with Re(λ) >= 0 must leave [A - λI, B] full
// row rank. Rank uses the relative threshold rel_tol * ||[A B]||.
[[nodiscard]] bool is_stabilizable(const Matrix& a, const Matrix& b, double rel_tol = 1e-10);

struct CareProblem {
    Matrix a; // n x n
    Matrix b; // n x m
    Matrix q; // n x n, symmetric PSD
    Matrix r; // m x m, symmetric PD
};

struct CareSolution {
    Matrix p;    // stabilising Riccati solution
    Matrix gain; // R^-1 B^T P, m x n
    double residual_norm = 0.0;
};

class CareError : public std::runtime_error {
public:
    enum class Kind { InvalidInput, NotStabilizable, NoStabilizingSolution, NotConverged };

    CareError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// ||A^T P + P A - P B R^-1 B^T P + Q||_F
[[nodiscard]] double care_residual(const CareProblem& prob, const Matrix& p);

// Stabilising solution of A^T P + P A - P B R^-1 B^T P + Q = 0.
// Ordered Schur decomposition of the Hamiltonian, then Newton–Kleinman polishing.
// Guarantees on success:
//   residual <= 1e-8 * max(1, ||Q||_F), P symmetric PSD, A - B*gain Hurwitz.
// Throws CareError otherwise.
[[nodiscard]] CareSolution solve_care(const CareProblem& prob);

// Solves A^T X + X A = -C for X (Kronecker form; intended for small n).
[[nodiscard]] Matrix solve_lyapunov(const Matrix& a, const Matrix& c);

} // namespace fopid::matops
