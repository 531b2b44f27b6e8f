#pragma once

#include <initializer_list>
#include <limits>
#include <vector>

namespace vecbeck {

inline constexpr double tol_svd = 1e-12;
inline constexpr double tol_cert = 1e-8;
inline constexpr double p_inf = std::numeric_limits<double>::infinity();

// Hard cap on cell matrix dimensions; kernels use fixed stack buffers.
inline constexpr int max_cell_dim = 16;

// Small dense real matrix, row-major.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int m, int n);
    Matrix(int m, int n, std::initializer_list<double> entries);

    static Matrix identity(int n);
    static Matrix diag(std::initializer_list<double> d);

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    Matrix transposed() const;
    double frobenius() const;
};

Matrix operator*(const Matrix& A, const Matrix& B);
Matrix operator+(const Matrix& A, const Matrix& B);
Matrix operator-(const Matrix& A, const Matrix& B);
Matrix operator*(double c, const Matrix& A);

// A = U diag(sigma) V^T with U m-by-k, V n-by-k, k = min(m,n);
// sigma nonincreasing and nonnegative, frames orthonormal.
struct SvdDecomposition {
    Matrix U;
    Matrix V;
    std::vector<double> sigma;
};

// S = V diag(lambda) V^T, lambda nonincreasing (signed).
struct SymEig {
    Matrix V;
    std::vector<double> lambda;
};

struct EqualityCertificate {
    bool accept = false;
    double residual_symmetry = 0.0;
    double residual_psd = 0.0;
    double residual_isometry_or_power = 0.0;
    double residual_norm_bound = 0.0;
    double scaling_c = 0.0;  // populated by the (p,q) certificate only
    double tol = 0.0;
};

double conjugate_exponent(double p);

SvdDecomposition svd(const Matrix& A);
SymEig sym_eig(const Matrix& S);

Matrix abs_matrix(const Matrix& A);
double schatten_norm(const Matrix& A, double p);
double pairing(const Matrix& A, const Matrix& B);
double holder_slack(const Matrix& A, const Matrix& B, double p);
Matrix dual_witness(const Matrix& A, double p);

EqualityCertificate certify_equality_q1(const Matrix& A, const Matrix& B, double tol = tol_cert);
EqualityCertificate certify_equality_pq(const Matrix& A, const Matrix& B, double p, double tol = tol_cert);

Matrix prox_schatten1(const Matrix& A, double t);
Matrix project_spectral_ball(const Matrix& A);
Matrix psd_power(const Matrix& S, double r);

// Raw-cell kernels for per-cell loops over fields. A is row-major m-by-n
// with m,n <= max_cell_dim. In-place variants overwrite A.
void cell_svd(int m, int n, const double* A, double* U, double* sigma, double* V);
void cell_singular_values(int m, int n, const double* A, double* sigma);
double cell_op_norm(int m, int n, const double* A);
double cell_nuclear_norm(int m, int n, const double* A);
void cell_prox_nuclear(int m, int n, double* A, double t);
void cell_project_op_ball(int m, int n, double* A);
void cell_prox_qpower(int m, int n, double* A, double t, double q);

}  // namespace vecbeck
