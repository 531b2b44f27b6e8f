#include "vecbeck/schatten.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vecbeck {

namespace {

constexpr int max_dim = max_cell_dim;
constexpr int max_sq = max_dim * max_dim;

void check_dims(int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("matrix dimensions must be positive");
    if (m > max_dim || n > max_dim) throw std::invalid_argument("matrix dimension exceeds cell cap");
}

void check_finite(int m, int n, const double* a) {
    for (int i = 0; i < m * n; ++i)
        if (!std::isfinite(a[i])) throw std::invalid_argument("non-finite matrix entry");
}

// One-sided Jacobi on the columns of W (m-by-n, m >= n): returns column
// norms in sigma and accumulates the right rotations into V (n-by-n).
// Invariant: W_in * V = W_out with orthogonal W_out columns.
void jacobi_columns(int m, int n, double* W, double* V) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V[i * n + j] = (i == j) ? 1.0 : 0.0;
    const double conv = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int r = 0; r < m; ++r) {
                    const double wi = W[r * n + i], wj = W[r * n + j];
                    alpha += wi * wi;
                    beta += wj * wj;
                    gamma += wi * wj;
                }
                if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) continue;
                const double denom = std::sqrt(alpha * beta);
                off = std::max(off, std::fabs(gamma) / denom);
                if (std::fabs(gamma) <= conv * denom) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int r = 0; r < m; ++r) {
                    const double wi = W[r * n + i], wj = W[r * n + j];
                    W[r * n + i] = c * wi - s * wj;
                    W[r * n + j] = s * wi + c * wj;
                }
                for (int r = 0; r < n; ++r) {
                    const double vi = V[r * n + i], vj = V[r * n + j];
                    V[r * n + i] = c * vi - s * vj;
                    V[r * n + j] = s * vi + c * vj;
                }
            }
        }
        if (off <= conv) break;
    }
}

// Thin SVD for m >= n. U: m-by-n, V: n-by-n, sigma: n, nonincreasing.
void svd_tall(int m, int n, const double* A, double* U, double* sigma, double* V) {
    double W[max_sq];
    double R[max_sq];
    std::copy(A, A + m * n, W);
    jacobi_columns(m, n, W, R);

    double norms[max_dim];
    int order[max_dim];
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += W[r * n + i] * W[r * n + i];
        norms[i] = std::sqrt(s);
        order[i] = i;
    }
    std::stable_sort(order, order + n, [&](int a, int b) { return norms[a] > norms[b]; });

    const double smax = norms[order[0]];
    const double drop = smax * 1e-15 * std::max(m, n);
    int filled = 0;
    for (int k = 0; k < n; ++k) {
        const int i = order[k];
        sigma[k] = norms[i];
        for (int r = 0; r < n; ++r) V[r * n + k] = R[r * n + i];
        if (norms[i] > drop && norms[i] > 0.0) {
            for (int r = 0; r < m; ++r) U[r * n + k] = W[r * n + i] / norms[i];
            ++filled;
        } else {
            sigma[k] = norms[i];  // keep the tiny value, only the frame needs completion
            for (int r = 0; r < m; ++r) U[r * n + k] = 0.0;
        }
    }
    // Complete U columns beyond the numerical rank by Gram-Schmidt over the
    // standard basis, scanned in index order for determinism.
    for (int k = filled; k < n; ++k) {
        int chosen = -1;
        double cand[max_dim];
        for (int e = 0; e < m && chosen < 0; ++e) {
            for (int r = 0; r < m; ++r) cand[r] = (r == e) ? 1.0 : 0.0;
            for (int j = 0; j < k; ++j) {
                double dot = 0.0;
                for (int r = 0; r < m; ++r) dot += cand[r] * U[r * n + j];
                for (int r = 0; r < m; ++r) cand[r] -= dot * U[r * n + j];
            }
            double nrm = 0.0;
            for (int r = 0; r < m; ++r) nrm += cand[r] * cand[r];
            nrm = std::sqrt(nrm);
            if (nrm > 0.5) {
                for (int r = 0; r < m; ++r) U[r * n + k] = cand[r] / nrm;
                chosen = e;
            }
        }
        if (chosen < 0) throw std::logic_error("svd: frame completion failed");
    }
}

double vec_norm(int m, const double* v) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

// Scalar prox of t*|x|^q on x >= 0: root of x + t*q*x^(q-1) = a in [0,a].
double qpower_shrink(double a, double t, double q) {
    if (a <= 0.0 || t == 0.0) return std::max(a, 0.0);
    if (q == 2.0) return a / (1.0 + 2.0 * t);
    double lo = 0.0, hi = a;
    double x = a / (1.0 + 2.0 * t);
    if (x <= 0.0) x = 0.5 * a;
    const double tol = 1e-12 * std::max(1.0, a);
    for (int it = 0; it < 200; ++it) {
        const double g = x + t * q * std::pow(x, q - 1.0) - a;
        if (std::fabs(g) <= tol) return x;
        if (g > 0.0) hi = x;
        else lo = x;
        const double dg = 1.0 + t * q * (q - 1.0) * std::pow(x, q - 2.0);
        double xn = x - g / dg;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return x;
}

void require_conjugate_ok(double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("exponent must satisfy p >= 1");
}

}  // namespace

Matrix::Matrix(int m, int n) : rows(m), cols(n), a(static_cast<size_t>(m) * n, 0.0) {
    if (m < 1 || n < 1) throw std::invalid_argument("matrix dimensions must be positive");
}

Matrix::Matrix(int m, int n, std::initializer_list<double> entries) : Matrix(m, n) {
    if (static_cast<size_t>(m) * n != entries.size())
        throw std::invalid_argument("entry count does not match dimensions");
    std::copy(entries.begin(), entries.end(), a.begin());
}

Matrix Matrix::identity(int n) {
    Matrix I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

Matrix Matrix::diag(std::initializer_list<double> d) {
    Matrix D(static_cast<int>(d.size()), static_cast<int>(d.size()));
    int i = 0;
    for (double v : d) D(i, i) = v, ++i;
    return D;
}

Matrix Matrix::transposed() const {
    Matrix T(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) T(j, i) = (*this)(i, j);
    return T;
}

double Matrix::frobenius() const {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

Matrix operator*(const Matrix& A, const Matrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matrix product shape mismatch");
    Matrix C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

Matrix operator+(const Matrix& A, const Matrix& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw std::invalid_argument("matrix sum shape mismatch");
    Matrix C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
    return C;
}

Matrix operator-(const Matrix& A, const Matrix& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw std::invalid_argument("matrix difference shape mismatch");
    Matrix C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
    return C;
}

Matrix operator*(double c, const Matrix& A) {
    Matrix C = A;
    for (double& v : C.a) v *= c;
    return C;
}

double conjugate_exponent(double p) {
    require_conjugate_ok(p);
    if (p == 1.0) return p_inf;
    if (p == p_inf) return 1.0;
    return p / (p - 1.0);
}

void cell_svd(int m, int n, const double* A, double* U, double* sigma, double* V) {
    check_dims(m, n);
    if (n == 1) {
        const double s = vec_norm(m, A);
        sigma[0] = s;
        V[0] = 1.0;
        if (s > 0.0)
            for (int r = 0; r < m; ++r) U[r] = A[r] / s;
        else {
            for (int r = 0; r < m; ++r) U[r] = 0.0;
            U[0] = 1.0;
        }
        return;
    }
    if (m >= n) {
        svd_tall(m, n, A, U, sigma, V);
        return;
    }
    double At[max_sq];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) At[j * m + i] = A[i * n + j];
    // A^T = V sigma U^T with swapped roles
    svd_tall(n, m, At, V, sigma, U);
}

void cell_singular_values(int m, int n, const double* A, double* sigma) {
    double U[max_sq], V[max_sq];
    cell_svd(m, n, A, U, sigma, V);
}

double cell_op_norm(int m, int n, const double* A) {
    if (m == 1 || n == 1) return vec_norm(m * n, A);
    double sigma[max_dim];
    cell_singular_values(m, n, A, sigma);
    return sigma[0];
}

double cell_nuclear_norm(int m, int n, const double* A) {
    if (m == 1 || n == 1) return vec_norm(m * n, A);
    double sigma[max_dim];
    cell_singular_values(m, n, A, sigma);
    const int k = std::min(m, n);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += sigma[i];
    return s;
}

void cell_prox_nuclear(int m, int n, double* A, double t) {
    if (t < 0.0) throw std::invalid_argument("prox parameter must be nonnegative");
    if (t == 0.0) return;
    if (m == 1 || n == 1) {
        const double s = vec_norm(m * n, A);
        const double f = s > t ? (1.0 - t / s) : 0.0;
        for (int i = 0; i < m * n; ++i) A[i] *= f;
        return;
    }
    double U[max_sq], V[max_sq], sigma[max_dim];
    cell_svd(m, n, A, U, sigma, V);
    const int k = std::min(m, n);
    for (int i = 0; i < k; ++i) sigma[i] = std::max(sigma[i] - t, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int r = 0; r < k; ++r) s += U[i * k + r] * sigma[r] * V[j * k + r];
            A[i * n + j] = s;
        }
}

void cell_project_op_ball(int m, int n, double* A) {
    if (m == 1 || n == 1) {
        const double s = vec_norm(m * n, A);
        if (s <= 1.0) return;
        for (int i = 0; i < m * n; ++i) A[i] /= s;
        return;
    }
    double U[max_sq], V[max_sq], sigma[max_dim];
    cell_svd(m, n, A, U, sigma, V);
    const int k = std::min(m, n);
    if (sigma[0] <= 1.0) return;
    for (int i = 0; i < k; ++i) sigma[i] = std::min(sigma[i], 1.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int r = 0; r < k; ++r) s += U[i * k + r] * sigma[r] * V[j * k + r];
            A[i * n + j] = s;
        }
}

void cell_prox_qpower(int m, int n, double* A, double t, double q) {
    if (t < 0.0) throw std::invalid_argument("prox parameter must be nonnegative");
    if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("q must lie in (1,inf)");
    if (t == 0.0) return;
    if (m == 1 || n == 1) {
        const double s = vec_norm(m * n, A);
        if (s == 0.0) return;
        const double x = qpower_shrink(s, t, q);
        const double f = x / s;
        for (int i = 0; i < m * n; ++i) A[i] *= f;
        return;
    }
    double U[max_sq], V[max_sq], sigma[max_dim];
    cell_svd(m, n, A, U, sigma, V);
    const int k = std::min(m, n);
    for (int i = 0; i < k; ++i) sigma[i] = qpower_shrink(sigma[i], t, q);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int r = 0; r < k; ++r) s += U[i * k + r] * sigma[r] * V[j * k + r];
            A[i * n + j] = s;
        }
}

SvdDecomposition svd(const Matrix& A) {
    check_dims(A.rows, A.cols);
    check_finite(A.rows, A.cols, A.a.data());
    const int k = std::min(A.rows, A.cols);
    SvdDecomposition out;
    out.U = Matrix(A.rows, k);
    out.V = Matrix(A.cols, k);
    out.sigma.resize(k);
    cell_svd(A.rows, A.cols, A.a.data(), out.U.a.data(), out.sigma.data(), out.V.a.data());
    return out;
}

SymEig sym_eig(const Matrix& S) {
    if (S.rows != S.cols) throw std::invalid_argument("sym_eig requires a square matrix");
    check_dims(S.rows, S.cols);
    check_finite(S.rows, S.cols, S.a.data());
    const int n = S.rows;
    double M[max_sq], V[max_sq];
    std::copy(S.a.begin(), S.a.end(), M);
    // symmetrize so accumulated rotations stay exactly two-sided
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (M[i * n + j] + M[j * n + i]);
            M[i * n + j] = M[j * n + i] = v;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V[i * n + j] = (i == j) ? 1.0 : 0.0;

    double fro = 0.0;
    for (int i = 0; i < n * n; ++i) fro += M[i] * M[i];
    const double thr = 1e-15 * std::sqrt(fro);
    if (thr > 0.0) {
        for (int sweep = 0; sweep < 60; ++sweep) {
            double off = 0.0;
            for (int p = 0; p < n - 1; ++p) {
                for (int q = p + 1; q < n; ++q) {
                    const double apq = M[p * n + q];
                    off = std::max(off, std::fabs(apq));
                    if (std::fabs(apq) <= thr) continue;
                    const double app = M[p * n + p], aqq = M[q * n + q];
                    const double zeta = (aqq - app) / (2.0 * apq);
                    const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = c * t;
                    for (int r = 0; r < n; ++r) {
                        if (r == p || r == q) continue;
                        const double mrp = M[r * n + p], mrq = M[r * n + q];
                        M[r * n + p] = M[p * n + r] = c * mrp - s * mrq;
                        M[r * n + q] = M[q * n + r] = s * mrp + c * mrq;
                    }
                    M[p * n + p] = app - t * apq;
                    M[q * n + q] = aqq + t * apq;
                    M[p * n + q] = M[q * n + p] = 0.0;
                    for (int r = 0; r < n; ++r) {
                        const double vrp = V[r * n + p], vrq = V[r * n + q];
                        V[r * n + p] = c * vrp - s * vrq;
                        V[r * n + q] = s * vrp + c * vrq;
                    }
                }
            }
            if (off <= thr) break;
        }
    }
    int order[max_dim];
    std::iota(order, order + n, 0);
    std::stable_sort(order, order + n, [&](int a, int b) { return M[a * n + a] > M[b * n + b]; });
    SymEig out;
    out.V = Matrix(n, n);
    out.lambda.resize(n);
    for (int k = 0; k < n; ++k) {
        out.lambda[k] = M[order[k] * n + order[k]];
        for (int r = 0; r < n; ++r) out.V(r, k) = V[r * n + order[k]];
    }
    return out;
}

Matrix abs_matrix(const Matrix& A) {
    const SvdDecomposition d = svd(A);
    const int n = A.cols, k = static_cast<int>(d.sigma.size());
    Matrix R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int r = 0; r < k; ++r) s += d.V(i, r) * d.sigma[r] * d.V(j, r);
            R(i, j) = s;
        }
    return R;
}

double schatten_norm(const Matrix& A, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("schatten_norm requires p >= 1");
    check_dims(A.rows, A.cols);
    check_finite(A.rows, A.cols, A.a.data());
    double sigma[max_dim];
    cell_singular_values(A.rows, A.cols, A.a.data(), sigma);
    const int k = std::min(A.rows, A.cols);
    if (p == p_inf) return sigma[0];
    if (p == 1.0) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += sigma[i];
        return s;
    }
    // scale by the largest singular value to dodge overflow in powers
    const double top = sigma[0];
    if (top == 0.0) return 0.0;
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += std::pow(sigma[i] / top, p);
    return top * std::pow(s, 1.0 / p);
}

double pairing(const Matrix& A, const Matrix& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw std::invalid_argument("pairing shape mismatch");
    long double s = 0.0L;
    for (size_t i = 0; i < A.a.size(); ++i) s += static_cast<long double>(A.a[i]) * B.a[i];
    return static_cast<double>(s);
}

double holder_slack(const Matrix& A, const Matrix& B, double p) {
    const double q = conjugate_exponent(p);
    return schatten_norm(A, p) * schatten_norm(B, q) - std::fabs(pairing(A, B));
}

Matrix dual_witness(const Matrix& A, double p) {
    require_conjugate_ok(p);
    const SvdDecomposition d = svd(A);
    const int k = static_cast<int>(d.sigma.size());
    const double top = d.sigma[0];
    if (top <= 0.0) throw std::invalid_argument("dual_witness: zero matrix");
    const double cut = top * 1e-13;
    Matrix B(A.rows, A.cols);
    auto add_rank1 = [&](int r, double w) {
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) B(i, j) += w * d.U(i, r) * d.V(j, r);
    };
    if (p == p_inf) {
        add_rank1(0, 1.0);
    } else if (p == 1.0) {
        for (int r = 0; r < k; ++r)
            if (d.sigma[r] > cut) add_rank1(r, 1.0);
    } else {
        // b_r = sigma_r^(p-1), so pairing(A,B) = ||A||_p^p exactly
        for (int r = 0; r < k; ++r)
            if (d.sigma[r] > cut) add_rank1(r, std::pow(d.sigma[r], p - 1.0));
    }
    return B;
}

EqualityCertificate certify_equality_q1(const Matrix& A, const Matrix& B, double tol) {
    if (A.rows != B.rows || A.cols != B.cols) throw std::invalid_argument("certificate shape mismatch");
    EqualityCertificate cert;
    cert.tol = tol;
    const double nA1 = schatten_norm(A, 1.0);
    const double nBinf = schatten_norm(B, p_inf);
    cert.residual_norm_bound = std::max(0.0, nBinf - 1.0);

    const double scale = std::max(nA1, 1e-300);
    const Matrix C = B.transposed() * A;
    cert.residual_symmetry = (C - C.transposed()).frobenius() / scale;
    Matrix Csym = C;
    for (int i = 0; i < C.rows; ++i)
        for (int j = 0; j < C.cols; ++j) Csym(i, j) = 0.5 * (C(i, j) + C(j, i));
    const SymEig eig = sym_eig(Csym);
    cert.residual_psd = std::max(0.0, -eig.lambda.back()) / scale;

    const Matrix AtA = A.transposed() * A;
    const Matrix AtB = A.transposed() * B;
    cert.residual_isometry_or_power =
        (AtB * AtB.transposed() - AtA).frobenius() / std::max(scale * scale, 1e-300);

    cert.accept = cert.residual_symmetry <= tol && cert.residual_psd <= tol &&
                  cert.residual_isometry_or_power <= tol && cert.residual_norm_bound <= tol;
    return cert;
}

EqualityCertificate certify_equality_pq(const Matrix& A_in, const Matrix& B_in, double p, double tol) {
    if (A_in.rows != B_in.rows || A_in.cols != B_in.cols)
        throw std::invalid_argument("certificate shape mismatch");
    if (!(p > 1.0) || p == p_inf) throw std::invalid_argument("certify_equality_pq requires p in (1,inf)");
    const bool flip = A_in.rows > A_in.cols;
    const Matrix A = flip ? A_in.transposed() : A_in;
    const Matrix B = flip ? B_in.transposed() : B_in;
    const double q = conjugate_exponent(p);
    const double np = schatten_norm(A, p);
    const double nq = schatten_norm(B, q);
    if (np == 0.0 || nq == 0.0) throw std::invalid_argument("certify_equality_pq: zero matrix");

    EqualityCertificate cert;
    cert.tol = tol;
    cert.scaling_c = std::pow(std::pow(nq, q) / std::pow(np, p), 1.0 / (p * q));

    const double denom = np * nq;
    const Matrix N1 = (1.0 / denom) * (A.transposed() * B);
    const Matrix N2 = N1.transposed();
    const Matrix N3 = (1.0 / std::pow(np, p)) * psd_power(A.transposed() * A, p / 2.0);
    const Matrix N4 = (1.0 / std::pow(nq, q)) * psd_power(B.transposed() * B, q / 2.0);

    cert.residual_symmetry = (N1 - N2).frobenius();
    Matrix sym = N1;
    for (int i = 0; i < sym.rows; ++i)
        for (int j = 0; j < sym.cols; ++j) sym(i, j) = 0.5 * (N1(i, j) + N1(j, i));
    cert.residual_psd = std::max(0.0, -sym_eig(sym).lambda.back());
    cert.residual_isometry_or_power =
        std::max({(N1 - N3).frobenius(), (N1 - N4).frobenius(), (N3 - N4).frobenius()});
    cert.residual_norm_bound = 0.0;

    cert.accept = cert.residual_symmetry <= tol && cert.residual_psd <= tol &&
                  cert.residual_isometry_or_power <= tol;
    return cert;
}

Matrix prox_schatten1(const Matrix& A, double t) {
    if (t < 0.0) throw std::invalid_argument("prox_schatten1 requires t >= 0");
    check_finite(A.rows, A.cols, A.a.data());
    Matrix R = A;
    cell_prox_nuclear(A.rows, A.cols, R.a.data(), t);
    return R;
}

Matrix project_spectral_ball(const Matrix& A) {
    check_finite(A.rows, A.cols, A.a.data());
    Matrix R = A;
    cell_project_op_ball(A.rows, A.cols, R.a.data());
    return R;
}

Matrix psd_power(const Matrix& S, double r) {
    if (S.rows != S.cols) throw std::invalid_argument("psd_power requires a square matrix");
    const double fro = S.frobenius();
    double asym = 0.0;
    for (int i = 0; i < S.rows; ++i)
        for (int j = 0; j < S.cols; ++j) asym = std::max(asym, std::fabs(S(i, j) - S(j, i)));
    if (asym > tol_cert * (1.0 + fro)) throw std::invalid_argument("psd_power requires a symmetric matrix");
    const SymEig eig = sym_eig(S);
    const int n = S.rows;
    const double lmax = std::max(eig.lambda.front(), 0.0);
    if (eig.lambda.back() < -tol_cert * (1.0 + lmax))
        throw std::invalid_argument("psd_power requires positive semidefinite input");
    // 0^r := 0 for every r, so powers act on the numerical range only
    const double rank_cut = lmax * tol_svd;
    double powed[max_dim];
    for (int i = 0; i < n; ++i) {
        const double l = eig.lambda[i];
        powed[i] = (l <= rank_cut) ? 0.0 : std::pow(l, r);
    }
    Matrix R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += eig.V(i, k) * powed[k] * eig.V(j, k);
            R(i, j) = s;
        }
    return R;
}

}  // namespace vecbeck
